//! Part-of-speech tags and noun/verb phrase heads for feature extraction.
//!
//! Two backends: precomputed annotations read from a file (typically parser
//! output), and a builtin rule-based tagger plus shallow chunker. The builtin
//! tagger uses a closed-class lexicon, a small open-class lexicon and suffix
//! rules; the chunker finds `DT? JJ* NN+` noun phrases (head = last noun) and
//! runs of `MD/TO/VB*` verb groups (head = last verb).

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::corpus::{tokenize, Sentence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenAnnotations {
    pub pos: Vec<String>,
    /// Sorted token indices.
    pub np_heads: Vec<usize>,
    /// Sorted token indices.
    pub vp_heads: Vec<usize>,
}

impl TokenAnnotations {
    pub fn check(&self, sentence: &Sentence) -> Result<()> {
        if self.pos.len() != sentence.len() {
            return Err(Error::AnnotationArity {
                tags: self.pos.len(),
                tokens: sentence.len(),
            });
        }
        Ok(())
    }
}

/// Largest head strictly before `edit_start`.
pub fn nearest_head_left(heads: &[usize], edit_start: usize) -> Option<usize> {
    let idx = heads.partition_point(|&h| h < edit_start);
    idx.checked_sub(1).map(|i| heads[i])
}

/// Smallest head at or after `edit_end`.
pub fn nearest_head_right(heads: &[usize], edit_end: usize) -> Option<usize> {
    let idx = heads.partition_point(|&h| h < edit_end);
    heads.get(idx).copied()
}

#[derive(Debug, Clone)]
pub enum AnnotationProvider {
    Builtin,
    /// Annotations keyed by the sentence text. With `fallback`, sentences
    /// missing from the file are annotated by the builtin backend instead of
    /// failing.
    File {
        table: HashMap<String, TokenAnnotations>,
        fallback: bool,
    },
}

impl AnnotationProvider {
    pub fn from_file_text(text: &str, fallback: bool) -> Result<AnnotationProvider> {
        Ok(AnnotationProvider::File {
            table: parse_annotation_file(text)?,
            fallback,
        })
    }

    pub fn annotate(&self, sentence: &Sentence) -> Result<TokenAnnotations> {
        match self {
            AnnotationProvider::Builtin => Ok(annotate_builtin(sentence)),
            AnnotationProvider::File { table, fallback } => match table.get(&sentence.text()) {
                Some(a) => Ok(a.clone()),
                None if *fallback => Ok(annotate_builtin(sentence)),
                None => Err(Error::MissingAnnotation(sentence.text())),
            },
        }
    }
}

pub fn annotate_builtin(sentence: &Sentence) -> TokenAnnotations {
    let words: Vec<&str> = sentence.tokens().iter().map(|t| t.as_str()).collect();
    let pos = tag(&words);
    let (np_heads, vp_heads) = chunk_heads(&pos);
    TokenAnnotations {
        pos,
        np_heads,
        vp_heads,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Entry {
    Tag(&'static str),
    Noun,
    Verb,
    /// Both a noun and a base verb ("walk", "train"); resolved from context.
    NounVerb,
}

const CLOSED_CLASS: &[(&str, &[&str])] = &[
    ("DT", &["the", "a", "an", "this", "that", "these", "those", "every", "each", "some", "any", "no", "all", "both", "another"]),
    ("PRP$", &["his", "her", "its", "their", "my", "your", "our"]),
    ("PRP", &["he", "she", "it", "they", "we", "i", "you", "him", "them", "us", "me", "one"]),
    ("IN", &["in", "on", "at", "into", "of", "with", "from", "by", "for", "near", "under", "over", "about", "after", "before", "during", "through", "behind", "between", "without", "unlike", "onto", "across", "like"]),
    ("TO", &["to"]),
    ("CC", &["and", "or", "but"]),
    ("MD", &["can", "could", "will", "would", "shall", "should", "may", "might", "must"]),
    ("VBZ", &["is", "has", "does"]),
    ("VBP", &["are", "am", "have", "do"]),
    ("VBD", &["was", "were", "had", "did"]),
    ("VB", &["be"]),
    ("VBN", &["been", "done"]),
    ("VBG", &["being"]),
    ("WP", &["who", "what"]),
    ("WDT", &["which"]),
    ("RB", &["not", "very", "also", "never", "often", "always", "too", "as", "result", "quickly", "slowly", "here", "there"]),
    ("JJ", &["big", "small", "old", "new", "young", "red", "green", "blue", "happy", "sad", "quiet", "loud", "good", "bad", "huge", "little", "long", "short", "tall", "hot", "cold", "lonely", "proper", "necessary", "real", "high", "prone", "interpersonal", "venetian", "carved", "brown", "white", "black", "busy", "lazy"]),
    (".", &[".", "?", "!"]),
    (",", &[","]),
    (":", &[":", ";", "--"]),
];

const IRREGULAR_PAST: &[&str] = &[
    "sat", "ate", "saw", "ran", "found", "went", "came", "took", "made", "got", "gave", "knew",
    "thought", "told", "felt", "left", "kept", "held", "brought", "bought", "caught", "taught",
    "sold", "stood", "wrote", "spoke", "broke", "chose", "drove", "rode", "flew", "grew", "threw",
    "drew", "began", "sang", "drank", "swam", "won", "hid", "fell", "slept", "met", "sent", "spent",
    "forgot", "lost", "paid", "said", "heard",
];

const IRREGULAR_PARTICIPLE: &[&str] = &[
    "eaten", "seen", "gone", "taken", "given", "known", "written", "spoken", "broken", "chosen",
    "driven", "flown", "grown", "thrown", "drawn", "begun", "sung", "drunk", "swum", "hidden",
    "fallen", "forgotten", "ridden",
];

const BASE_VERBS: &[&str] = &[
    "sit", "eat", "see", "run", "go", "come", "take", "make", "get", "give", "know", "think",
    "tell", "feel", "leave", "keep", "hold", "bring", "buy", "catch", "teach", "sell", "stand",
    "write", "speak", "break", "choose", "drive", "ride", "fly", "grow", "throw", "draw", "begin",
    "sing", "swim", "win", "hide", "fall", "sleep", "meet", "wait", "like", "want", "need", "live",
    "carry", "find", "open", "close", "jump", "talk", "study", "crash", "die", "send", "spend",
    "forget", "practise", "chase", "climb", "read", "listen", "arrive", "enjoy", "clean", "cook",
    "wash", "push", "pull", "seem", "lose", "pay", "say", "hear", "lie",
];

const NOUN_VERBS: &[&str] = &[
    "walk", "work", "play", "love", "help", "look", "call", "watch", "visit", "drink", "train",
    "fish", "water", "dance", "smile", "rest",
];

const NOUNS: &[&str] = &[
    "cat", "dog", "man", "woman", "boy", "girl", "bird", "teacher", "student", "apple", "house",
    "garden", "table", "book", "car", "mouse", "park", "bar", "gun", "pocket", "friend", "number",
    "bowl", "glass", "salad", "passenger", "people", "person", "skin", "pigment", "proportion",
    "sunburn", "albinism", "part", "skill", "relation", "life", "time", "lot", "tree", "river",
    "room", "door", "window", "chair", "box", "horse", "child", "letter", "city", "school", "ball",
    "bed", "cake", "bread", "milk", "road", "hill", "farmer", "baker", "doctor", "idea", "story",
    "bench", "shop", "owl", "egg", "umbrella", "orange", "island", "elephant",
];

fn lexicon() -> &'static HashMap<&'static str, Entry> {
    static LEXICON: OnceLock<HashMap<&'static str, Entry>> = OnceLock::new();
    LEXICON.get_or_init(|| {
        let mut map = HashMap::new();
        for w in NOUNS {
            map.insert(*w, Entry::Noun);
        }
        for w in BASE_VERBS {
            map.insert(*w, Entry::Verb);
        }
        for w in NOUN_VERBS {
            map.insert(*w, Entry::NounVerb);
        }
        for w in IRREGULAR_PAST {
            map.insert(*w, Entry::Tag("VBD"));
        }
        for w in IRREGULAR_PARTICIPLE {
            map.insert(*w, Entry::Tag("VBN"));
        }
        for (tag, words) in CLOSED_CLASS {
            for w in *words {
                map.insert(*w, Entry::Tag(tag));
            }
        }
        // irregular plurals
        for (w, t) in [("men", "NNS"), ("women", "NNS"), ("children", "NNS"), ("mice", "NNS"), ("people", "NNS")] {
            map.insert(w, Entry::Tag(t));
        }
        map
    })
}

fn is_noun_stem(word: &str) -> bool {
    matches!(lexicon().get(word), Some(Entry::Noun | Entry::NounVerb))
}

fn is_verb_stem(word: &str) -> bool {
    matches!(lexicon().get(word), Some(Entry::Verb | Entry::NounVerb))
}

/// Candidate stems for an inflected form ending in `suffix`.
fn stems(word: &str, suffix: &str) -> Vec<String> {
    let Some(base) = word.strip_suffix(suffix) else {
        return Vec::new();
    };
    if base.is_empty() {
        return Vec::new();
    }
    let mut out = vec![base.to_string(), format!("{base}e")];
    match suffix {
        "es" => {}
        "ies" | "ied" => out.push(format!("{base}y")),
        _ => {}
    }
    let bytes = base.as_bytes();
    // doubled consonant: running -> run, stopped -> stop
    if bytes.len() >= 2 && bytes[bytes.len() - 1] == bytes[bytes.len() - 2] {
        out.push(base[..base.len() - 1].to_string());
    }
    out
}

fn any_stem(word: &str, suffixes: &[&str], pred: fn(&str) -> bool) -> bool {
    suffixes
        .iter()
        .any(|suf| stems(word, suf).iter().any(|s| pred(s)))
}

fn nominal_context(prev: Option<&str>) -> bool {
    matches!(prev, Some("DT" | "JJ" | "PRP$" | "IN" | "CD" | "POS" | "TO"))
}

fn subject_context(prev: Option<&str>) -> bool {
    matches!(prev, Some("NN" | "NNS" | "NNP" | "NNPS" | "PRP" | "WP" | "WDT"))
}

fn tag_word(word: &str, index: usize, prev: Option<&str>) -> String {
    let lower = word.to_lowercase();
    let w = lower.as_str();

    if let Some(entry) = lexicon().get(w) {
        return match entry {
            Entry::Tag(t) => t.to_string(),
            Entry::Noun => "NN".into(),
            Entry::Verb => {
                if matches!(prev, Some("NNS" | "PRP")) {
                    "VBP".into()
                } else {
                    "VB".into()
                }
            }
            Entry::NounVerb => {
                if nominal_context(prev) {
                    "NN".into()
                } else if matches!(prev, Some("NNS" | "PRP")) {
                    "VBP".into()
                } else {
                    "VB".into()
                }
            }
        };
    }

    if w.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') && w.chars().any(|c| c.is_ascii_digit()) {
        return "CD".into();
    }
    if !w.chars().any(char::is_alphanumeric) {
        return ":".into();
    }

    let plural_noun = any_stem(w, &["s", "es", "ies"], is_noun_stem);
    let third_person = any_stem(w, &["s", "es", "ies"], is_verb_stem);
    if plural_noun || third_person {
        return match (plural_noun, third_person) {
            (true, false) => "NNS".into(),
            (false, true) => "VBZ".into(),
            _ if nominal_context(prev) => "NNS".into(),
            _ => "VBZ".into(),
        };
    }
    if any_stem(w, &["ed", "d", "ied"], is_verb_stem) {
        return "VBD".into();
    }
    if any_stem(w, &["ing"], is_verb_stem) {
        return "VBG".into();
    }

    if index > 0 && word.chars().next().is_some_and(char::is_uppercase) {
        return "NNP".into();
    }
    if w.ends_with("ing") {
        return "VBG".into();
    }
    if w.ends_with("ed") {
        return "VBD".into();
    }
    if w.ends_with("ly") {
        return "RB".into();
    }
    for suf in ["ful", "ous", "ive", "able", "ible", "al", "ic", "less"] {
        if w.len() > suf.len() + 2 && w.ends_with(suf) {
            return "JJ".into();
        }
    }
    for suf in ["tion", "sion", "ness", "ment", "ity", "ship"] {
        if w.ends_with(suf) {
            return "NN".into();
        }
    }
    if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") {
        return if subject_context(prev) { "VBZ".into() } else { "NNS".into() };
    }
    "NN".into()
}

pub fn tag(words: &[&str]) -> Vec<String> {
    let mut tags: Vec<String> = Vec::with_capacity(words.len());
    for (i, w) in words.iter().enumerate() {
        let prev = tags.last().map(String::as_str);
        let t = tag_word(w, i, prev);
        tags.push(t);
    }
    tags
}

fn is_noun(tag: &str) -> bool {
    tag.starts_with("NN")
}

fn is_verb(tag: &str) -> bool {
    tag.starts_with("VB")
}

/// Noun-phrase and verb-phrase heads from a tag sequence.
pub fn chunk_heads(tags: &[String]) -> (Vec<usize>, Vec<usize>) {
    let mut np = Vec::new();
    let mut vp = Vec::new();
    let n = tags.len();

    let mut i = 0;
    while i < n {
        let t = tags[i].as_str();
        if t == "PRP" {
            np.push(i);
            i += 1;
            continue;
        }
        let mut j = i;
        if matches!(t, "DT" | "PRP$" | "CD") {
            j += 1;
        }
        while j < n && tags[j] == "JJ" {
            j += 1;
        }
        let noun_start = j;
        while j < n && is_noun(&tags[j]) {
            j += 1;
        }
        if j > noun_start {
            np.push(j - 1);
            i = j;
        } else {
            i += 1;
        }
    }

    let mut i = 0;
    while i < n {
        if matches!(tags[i].as_str(), "MD" | "TO") || is_verb(&tags[i]) {
            let mut j = i;
            let mut head = None;
            while j < n && (matches!(tags[j].as_str(), "MD" | "TO") || is_verb(&tags[j])) {
                if is_verb(&tags[j]) {
                    head = Some(j);
                }
                j += 1;
            }
            vp.extend(head);
            i = j;
        } else {
            i += 1;
        }
    }
    (np, vp)
}

fn parse_heads(field: &str, prefix: &str, line_no: usize) -> Result<Vec<usize>> {
    let body = field
        .strip_prefix(prefix)
        .ok_or_else(|| Error::parse(line_no, format!("expected {prefix}<indices>, found {field:?}")))?;
    let mut heads: Vec<usize> = body
        .split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| Error::parse(line_no, format!("bad head index {p:?}")))
        })
        .collect::<Result<_>>()?;
    heads.sort_unstable();
    heads.dedup();
    Ok(heads)
}

/// Parses three-line blocks (tokens, tags, `NP:i,j VP:k`) separated by blank lines.
pub fn parse_annotation_file(text: &str) -> Result<HashMap<String, TokenAnnotations>> {
    let mut table = HashMap::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if !line.trim().is_empty() {
            block.push((i + 1, line));
            if i + 1 < lines.len() {
                continue;
            }
        }
        if block.is_empty() {
            continue;
        }
        if block.len() != 3 {
            return Err(Error::parse(block[0].0, format!("annotation block has {} lines, expected 3", block.len())));
        }
        let tokens = tokenize(block[0].1);
        let pos: Vec<String> = block[1].1.split_whitespace().map(str::to_string).collect();
        if pos.len() != tokens.len() {
            return Err(Error::parse(
                block[1].0,
                format!("{} tags for {} tokens", pos.len(), tokens.len()),
            ));
        }
        let mut fields = block[2].1.split_whitespace();
        let (np_field, vp_field) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(Error::parse(block[2].0, "expected NP:<...> VP:<...>")),
        };
        let np_heads = parse_heads(np_field, "NP:", block[2].0)?;
        let vp_heads = parse_heads(vp_field, "VP:", block[2].0)?;
        if np_heads.iter().chain(&vp_heads).any(|&h| h >= tokens.len()) {
            return Err(Error::parse(block[2].0, "head index out of bounds"));
        }
        let key = crate::corpus::join_tokens(&tokens);
        table.insert(
            key,
            TokenAnnotations {
                pos,
                np_heads,
                vp_heads,
            },
        );
        block.clear();
    }
    Ok(table)
}

pub fn serialize_annotations(entries: &[(Sentence, TokenAnnotations)]) -> String {
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    entries
        .iter()
        .map(|(s, a)| {
            format!(
                "{}\n{}\nNP:{} VP:{}\n",
                s.text(),
                a.pos.join(" "),
                join(&a.np_heads),
                join(&a.vp_heads)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builtin(text: &str) -> TokenAnnotations {
        AnnotationProvider::Builtin
            .annotate(&Sentence::from(text))
            .unwrap()
    }

    #[test]
    fn feature_example_heads() {
        let a = builtin("the cat waits on the dog and eats a mouse .");
        assert_eq!(a.pos, vec!["DT", "NN", "VBZ", "IN", "DT", "NN", "CC", "VBZ", "DT", "NN", "."]);
        assert_eq!(a.np_heads, vec![1, 5, 9]);
        assert_eq!(a.vp_heads, vec![2, 7]);
        let hyp = builtin("the cat sat on the dog and eats a mouse .");
        assert_eq!(hyp.pos[2], "VBD");
    }

    #[test]
    fn empty_sentence() {
        assert_eq!(builtin(""), TokenAnnotations::default());
    }

    #[test]
    fn lone_base_verb() {
        let a = builtin("run");
        assert_eq!(a.pos, vec!["VB"]);
        assert_eq!(a.vp_heads, vec![0]);
        assert!(a.np_heads.is_empty());
    }

    #[test]
    fn verb_group_head_is_last_verb() {
        let a = builtin("all passengers were died .");
        assert_eq!(a.pos, vec!["DT", "NNS", "VBD", "VBD", "."]);
        assert_eq!(a.np_heads, vec![1]);
        assert_eq!(a.vp_heads, vec![3]);
    }

    #[test]
    fn plural_noun_versus_third_person() {
        let a = builtin("the cats walk to the parks");
        assert_eq!(a.pos, vec!["DT", "NNS", "VBP", "TO", "DT", "NNS"]);
        let b = builtin("the girl walks");
        assert_eq!(b.pos[2], "VBZ");
        let c = builtin("a long walk");
        assert_eq!(c.pos[2], "NN");
    }

    #[test]
    fn nearest_left() {
        assert_eq!(nearest_head_left(&[1, 5], 2), Some(1));
        assert_eq!(nearest_head_left(&[], 2), None);
        assert_eq!(nearest_head_left(&[1, 5], 1), None);
        assert_eq!(nearest_head_left(&[1, 5], 9), Some(5));
    }

    #[test]
    fn nearest_right() {
        assert_eq!(nearest_head_right(&[1, 5], 3), Some(5));
        assert_eq!(nearest_head_right(&[5], 6), None);
        assert_eq!(nearest_head_right(&[5], 5), Some(5));
    }

    #[test]
    fn file_backend_round_trip_and_miss() {
        let s = Sentence::from("the cat waits .");
        let a = annotate_builtin(&s);
        let text = serialize_annotations(&[(s.clone(), a.clone()), (Sentence::from("run"), annotate_builtin(&Sentence::from("run")))]);
        let provider = AnnotationProvider::from_file_text(&text, false).unwrap();
        assert_eq!(provider.annotate(&s).unwrap(), a);
        let miss = Sentence::from("never seen");
        assert!(matches!(provider.annotate(&miss), Err(Error::MissingAnnotation(_))));
        let lenient = AnnotationProvider::from_file_text(&text, true).unwrap();
        assert_eq!(lenient.annotate(&miss).unwrap(), annotate_builtin(&miss));
    }

    #[test]
    fn file_backend_rejects_bad_arity() {
        assert!(parse_annotation_file("a b\nDT\nNP: VP:\n").is_err());
        assert!(parse_annotation_file("a b\nDT NN\nNP:5 VP:\n").is_err());
        assert!(parse_annotation_file("a b\nDT NN\n").is_err());
    }
}
