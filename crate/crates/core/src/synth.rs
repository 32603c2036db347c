//! Seeded generator of small synthetic learner corpora: a closed-vocabulary
//! grammar, error injection with gold annotations, and a simulated upstream
//! corrector that emits ranked n-best lists with decoder features.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annotate::tag;
use crate::corpus::{
    AnnotatedSentence, Dataset, DecoderFeatures, GoldEdit, NBestEntry, NBestList, Sentence, Token,
};
use crate::decision::LogLinearWeights;
use crate::edit::{apply_edits, Edit};
use crate::error::{Error, Result};

// base, third person, past, -ing, preposition ("" for transitive verbs)
const VERBS: &[(&str, &str, &str, &str, &str)] = &[
    ("see", "sees", "saw", "seeing", ""),
    ("want", "wants", "wanted", "wanting", ""),
    ("find", "finds", "found", "finding", ""),
    ("carry", "carries", "carried", "carrying", ""),
    ("chase", "chases", "chased", "chasing", ""),
    ("eat", "eats", "ate", "eating", ""),
    ("hold", "holds", "held", "holding", ""),
    ("clean", "cleans", "cleaned", "cleaning", ""),
    ("wash", "washes", "washed", "washing", ""),
    ("push", "pushes", "pushed", "pushing", ""),
    ("catch", "catches", "caught", "catching", ""),
    ("buy", "buys", "bought", "buying", ""),
    ("draw", "draws", "drew", "drawing", ""),
    ("need", "needs", "needed", "needing", ""),
    ("wait", "waits", "waited", "waiting", "for"),
    ("live", "lives", "lived", "living", "in"),
    ("sleep", "sleeps", "slept", "sleeping", "in"),
    ("jump", "jumps", "jumped", "jumping", "over"),
    ("run", "runs", "ran", "running", "to"),
    ("sit", "sits", "sat", "sitting", "on"),
    ("arrive", "arrives", "arrived", "arriving", "at"),
    ("listen", "listens", "listened", "listening", "to"),
    ("swim", "swims", "swam", "swimming", "in"),
    ("go", "goes", "went", "going", "to"),
];

// singular, plural, animate
const NOUNS: &[(&str, &str, bool)] = &[
    ("cat", "cats", true),
    ("dog", "dogs", true),
    ("boy", "boys", true),
    ("girl", "girls", true),
    ("bird", "birds", true),
    ("teacher", "teachers", true),
    ("student", "students", true),
    ("farmer", "farmers", true),
    ("baker", "bakers", true),
    ("doctor", "doctors", true),
    ("horse", "horses", true),
    ("owl", "owls", true),
    ("elephant", "elephants", true),
    ("friend", "friends", true),
    ("apple", "apples", false),
    ("egg", "eggs", false),
    ("orange", "oranges", false),
    ("umbrella", "umbrellas", false),
    ("book", "books", false),
    ("letter", "letters", false),
    ("cake", "cakes", false),
    ("ball", "balls", false),
    ("box", "boxes", false),
    ("house", "houses", false),
    ("garden", "gardens", false),
    ("park", "parks", false),
    ("school", "schools", false),
    ("river", "rivers", false),
    ("shop", "shops", false),
    ("table", "tables", false),
    ("tree", "trees", false),
    ("room", "rooms", false),
    ("bench", "benches", false),
    ("island", "islands", false),
    ("hill", "hills", false),
    ("city", "cities", false),
];

const ADJECTIVES: &[&str] = &[
    "big", "small", "old", "young", "happy", "lazy", "busy", "little", "red", "tall", "quiet", "brown",
];

const PREPOSITIONS: &[&str] = &["in", "on", "at", "for", "to", "over", "with", "from"];

const SINGULAR_DETS: &[&str] = &["the", "the", "the", "a", "a", "this", "his", "her", "my"];
const PLURAL_DETS: &[&str] = &["the", "the", "these", "some", "my", "their"];

fn vowel_initial(word: &str) -> bool {
    word.starts_with(['a', 'e', 'i', 'o', 'u'])
}

fn indefinite(next: &str) -> &'static str {
    if vowel_initial(next) {
        "an"
    } else {
        "a"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorType {
    /// Subject-verb agreement.
    Sva,
    /// "a" versus "an".
    ArtForm,
    /// A dropped determiner; the gold edit is an insertion.
    ArtMissing,
    /// Wrong verb form or tense.
    Vform,
    /// Wrong preposition.
    Prep,
}

impl ErrorType {
    pub const ALL: [ErrorType; 5] = [
        ErrorType::Sva,
        ErrorType::ArtForm,
        ErrorType::ArtMissing,
        ErrorType::Vform,
        ErrorType::Prep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorType::Sva => "SVA",
            ErrorType::ArtForm => "ArtForm",
            ErrorType::ArtMissing => "ArtMissing",
            ErrorType::Vform => "Vform",
            ErrorType::Prep => "Prep",
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<ErrorType> {
        ErrorType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown error type {s:?}")))
    }
}

/// One error type and the chance it is injected into a sentence (at most once).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRule {
    pub error_type: ErrorType,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    pub rules: Vec<ErrorRule>,
    pub seed: u64,
}

impl ErrorModel {
    pub fn new(rules: Vec<ErrorRule>, seed: u64) -> Result<ErrorModel> {
        if let Some(r) = rules.iter().find(|r| !(0.0..=1.0).contains(&r.probability)) {
            return Err(Error::Config(format!("probability of {} outside [0, 1]", r.error_type)));
        }
        Ok(ErrorModel { rules, seed })
    }

    /// Every rule at the same probability.
    pub fn uniform(probability: f64, seed: u64) -> Result<ErrorModel> {
        ErrorModel::new(
            ErrorType::ALL
                .into_iter()
                .map(|error_type| ErrorRule { error_type, probability })
                .collect(),
            seed,
        )
    }

    pub fn standard(seed: u64) -> ErrorModel {
        let p = |t, probability| ErrorRule { error_type: t, probability };
        ErrorModel {
            rules: vec![
                p(ErrorType::Sva, 0.25),
                p(ErrorType::ArtForm, 0.3),
                p(ErrorType::ArtMissing, 0.15),
                p(ErrorType::Vform, 0.15),
                p(ErrorType::Prep, 0.2),
            ],
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tense {
    Present,
    Past,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Det,
    Adj,
    Noun,
    Pron,
    Verb { verb: usize, tense: Tense, third: bool },
    Prep,
    Conj,
    Punct,
}

type Draft = Vec<(&'static str, Role)>;

struct Grammar {
    nouns: usize,
    verbs: usize,
}

impl Grammar {
    fn new(size: usize) -> Grammar {
        Grammar {
            nouns: size.clamp(4, NOUNS.len()),
            verbs: size.clamp(4, VERBS.len()),
        }
    }

    fn noun_phrase(&self, rng: &mut ChaCha8Rng, out: &mut Draft, subject: bool, plural: bool) {
        if subject && rng.gen_bool(0.12) {
            let p = if plural { "they" } else { *["he", "she"].choose(rng).unwrap() };
            out.push((p, Role::Pron));
            return;
        }
        let candidates: Vec<usize> = (0..self.nouns).filter(|&i| !subject || NOUNS[i].2).collect();
        let noun = NOUNS[*candidates.choose(rng).unwrap()];
        let word = if plural { noun.1 } else { noun.0 };
        let adj = rng.gen_bool(0.3).then(|| *ADJECTIVES.choose(rng).unwrap());
        let next = adj.unwrap_or(word);
        let det = if plural {
            *PLURAL_DETS.choose(rng).unwrap()
        } else {
            match *SINGULAR_DETS.choose(rng).unwrap() {
                "a" => indefinite(next),
                d => d,
            }
        };
        out.push((det, Role::Det));
        if let Some(a) = adj {
            out.push((a, Role::Adj));
        }
        out.push((word, Role::Noun));
    }

    fn verb_phrase(&self, rng: &mut ChaCha8Rng, out: &mut Draft, tense: Tense, third: bool) {
        let verb = rng.gen_range(0..self.verbs);
        let (base, third_form, past, _, prep) = VERBS[verb];
        let form = match (tense, third) {
            (Tense::Past, _) => past,
            (Tense::Present, true) => third_form,
            (Tense::Present, false) => base,
        };
        out.push((form, Role::Verb { verb, tense, third }));
        if !prep.is_empty() {
            out.push((prep, Role::Prep));
        }
        let plural = rng.gen_bool(0.3);
        self.noun_phrase(rng, out, false, plural);
    }

    fn sentence(&self, rng: &mut ChaCha8Rng) -> Draft {
        let mut out = Vec::new();
        let plural = rng.gen_bool(0.4);
        self.noun_phrase(rng, &mut out, true, plural);
        let tense = if rng.gen_bool(0.8) { Tense::Present } else { Tense::Past };
        self.verb_phrase(rng, &mut out, tense, !plural);
        if rng.gen_bool(0.25) {
            out.push(("and", Role::Conj));
            self.verb_phrase(rng, &mut out, tense, !plural);
        }
        out.push((".", Role::Punct));
        out
    }
}

fn sentence_of(words: &[&str]) -> Sentence {
    Sentence::new(words.iter().map(|w| Token::new(*w).expect("lexicon token")).collect())
}

fn sentence_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `count` grammatical sentences from the grammar.
pub fn generate_clean(grammar_size: usize, count: usize, seed: u64) -> Vec<Sentence> {
    let grammar = Grammar::new(grammar_size);
    (0..count)
        .map(|i| {
            let draft = grammar.sentence(&mut sentence_rng(seed, i));
            sentence_of(&draft.iter().map(|(w, _)| *w).collect::<Vec<_>>())
        })
        .collect()
}

/// A corruption of one clean token: `None` deletes it.
struct Corruption {
    at: usize,
    replacement: Option<&'static str>,
    error_type: ErrorType,
}

fn corrupt_at(draft: &Draft, t: ErrorType, i: usize, rng: &mut ChaCha8Rng) -> Option<Option<&'static str>> {
    let (word, role) = draft[i];
    match (t, role) {
        (ErrorType::Sva, Role::Verb { verb, tense: Tense::Present, third }) => {
            let v = VERBS[verb];
            Some(Some(if third { v.0 } else { v.1 }))
        }
        (ErrorType::ArtForm, Role::Det) if word == "a" || word == "an" => Some(Some(if word == "a" { "an" } else { "a" })),
        (ErrorType::ArtMissing, Role::Det) if matches!(word, "the" | "a" | "an") => Some(None),
        (ErrorType::Vform, Role::Verb { verb, tense, .. }) => {
            let v = VERBS[verb];
            let options = match tense {
                Tense::Present => [v.2, v.3],
                Tense::Past => [v.0, v.3],
            };
            Some(Some(*options.choose(rng).unwrap()))
        }
        (ErrorType::Prep, Role::Prep) => {
            let others: Vec<&str> = PREPOSITIONS.iter().copied().filter(|p| *p != word).collect();
            Some(Some(*others.choose(rng).unwrap()))
        }
        _ => None,
    }
}

fn eligible(draft: &Draft, t: ErrorType, i: usize) -> bool {
    let (word, role) = draft[i];
    match (t, role) {
        (ErrorType::Sva, Role::Verb { tense, .. }) => tense == Tense::Present,
        (ErrorType::ArtForm, Role::Det) => word == "a" || word == "an",
        (ErrorType::ArtMissing, Role::Det) => matches!(word, "the" | "a" | "an"),
        (ErrorType::Vform, Role::Verb { .. }) => true,
        (ErrorType::Prep, Role::Prep) => true,
        _ => false,
    }
}

fn inject(draft: &Draft, em: &ErrorModel, rng: &mut ChaCha8Rng) -> Vec<Corruption> {
    let mut used: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for rule in &em.rules {
        if !rng.gen_bool(rule.probability) {
            continue;
        }
        let sites: Vec<usize> = (0..draft.len())
            .filter(|&i| eligible(draft, rule.error_type, i) && used.iter().all(|&u| u.abs_diff(i) > 1))
            .collect();
        let Some(&at) = sites.choose(rng) else { continue };
        if let Some(replacement) = corrupt_at(draft, rule.error_type, at, rng) {
            used.push(at);
            out.push(Corruption {
                at,
                replacement,
                error_type: rule.error_type,
            });
        }
    }
    out.sort_by_key(|c| c.at);
    out
}

fn tokens(words: &[&str]) -> Vec<Token> {
    words.iter().map(|w| Token::new(*w).expect("lexicon token")).collect()
}

/// Error-injected sources with gold edits (annotator 0) restoring the clean
/// sentences, plus the clean sentences themselves.
pub fn generate_corpus(grammar_size: usize, sentence_count: usize, em: &ErrorModel) -> Result<(Dataset, Vec<Sentence>)> {
    if sentence_count == 0 || grammar_size == 0 {
        return Err(Error::Config("grammar size and sentence count must be at least 1".into()));
    }
    let grammar = Grammar::new(grammar_size);
    let mut sentences = Vec::with_capacity(sentence_count);
    let mut clean = Vec::with_capacity(sentence_count);
    for index in 0..sentence_count {
        let mut rng = sentence_rng(em.seed, index);
        let draft = grammar.sentence(&mut rng);
        let corruptions = inject(&draft, em, &mut rng);
        let mut words = Vec::with_capacity(draft.len());
        let mut gold = Vec::new();
        let mut next = corruptions.iter().peekable();
        for (i, (word, _)) in draft.iter().enumerate() {
            match next.next_if(|c| c.at == i) {
                Some(c) => {
                    let start = words.len();
                    words.extend(c.replacement);
                    gold.push(GoldEdit::new(start, words.len(), tokens(&[word]), c.error_type.name(), 0));
                }
                None => words.push(*word),
            }
        }
        sentences.push(AnnotatedSentence::new(sentence_of(&words), gold, index)?);
        clean.push(sentence_of(&draft.iter().map(|(w, _)| *w).collect::<Vec<_>>()));
    }
    Ok((Dataset { sentences }, clean))
}

/// Stand-in for an upstream corrector. For every gold error it proposes the
/// true fix with `fix_probability`; a proposed fix is disfavoured by the
/// decoder with probability `hesitancy`, so it only surfaces below rank 1.
/// It also proposes wrong fixes and spurious edits on correct tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCorrector {
    pub fix_probability: BTreeMap<ErrorType, f64>,
    pub hesitancy: f64,
    /// Expected number of spurious edits per sentence.
    pub noise_rate: f64,
    pub wrong_fix_rate: f64,
    pub n: usize,
    pub seed: u64,
}

impl SimulatedCorrector {
    pub fn new(fix_probability: f64, n: usize, seed: u64) -> SimulatedCorrector {
        SimulatedCorrector {
            fix_probability: ErrorType::ALL.into_iter().map(|t| (t, fix_probability)).collect(),
            hesitancy: 0.4,
            noise_rate: 0.8,
            wrong_fix_rate: 0.3,
            n,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.hesitancy, self.wrong_fix_rate]
            .into_iter()
            .chain(self.fix_probability.values().copied());
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("corrector probability {p} outside [0, 1]")));
            }
        }
        if self.noise_rate < 0.0 || !self.noise_rate.is_finite() {
            return Err(Error::Config("noise rate must be non-negative".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n-best size must be at least 1".into()));
        }
        Ok(())
    }

    /// Weights the simulated decoder ranks with.
    pub fn decoder_weights() -> LogLinearWeights {
        LogLinearWeights {
            decoder: vec![("tm".into(), DECODER_TM), ("lm".into(), DECODER_LM)],
            edit: 0.0,
        }
    }
}

const DECODER_TM: f64 = 1.0;
const DECODER_LM: f64 = 0.5;
const MAX_SITES: usize = 10;

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

struct Candidate {
    edit: Edit,
    tm: f64,
    lm: f64,
}

fn verb_forms(word: &str) -> Option<(usize, usize)> {
    VERBS.iter().enumerate().find_map(|(i, v)| {
        [v.0, v.1, v.2, v.3].iter().position(|f| *f == word).map(|k| (i, k))
    })
}

fn noun_forms(word: &str) -> Option<(&'static str, &'static str)> {
    NOUNS
        .iter()
        .find(|n| n.0 == word || n.1 == word)
        .map(|n| (n.0, n.1))
}

/// A plausible wrong correction at the site of `gold`.
fn wrong_fix(source: &Sentence, gold: &GoldEdit, rng: &mut ChaCha8Rng) -> Option<Vec<String>> {
    let right = gold.replacement.first()?.as_str();
    let next = source.get(gold.end).map(Token::as_str).unwrap_or("");
    let current = source.slice(gold.start, gold.end).first().map(Token::as_str);
    let mut options: Vec<String> = if let Some((v, _)) = verb_forms(right) {
        let f = VERBS[v];
        [f.0, f.1, f.2].iter().map(|s| s.to_string()).collect()
    } else if PREPOSITIONS.contains(&right) {
        PREPOSITIONS.iter().map(|s| s.to_string()).collect()
    } else if matches!(right, "the" | "a" | "an") {
        vec!["the".into(), indefinite(next).into(), "this".into()]
    } else {
        return None;
    };
    options.retain(|o| o != right && Some(o.as_str()) != current);
    options.choose(rng).map(|o| vec![o.clone()])
}

/// A spurious change to a correct token at position `i`.
fn noise_at(words: &[&str], tags: &[String], i: usize, rng: &mut ChaCha8Rng) -> Option<String> {
    let w = words[i];
    let next = words.get(i + 1).copied().unwrap_or("");
    match tags[i].as_str() {
        "DT" if w == "the" => Some(indefinite(next).to_string()),
        "DT" if w == "a" || w == "an" => Some("the".into()),
        "IN" | "TO" => {
            let others: Vec<&str> = PREPOSITIONS.iter().copied().filter(|p| *p != w).collect();
            others.choose(rng).map(|s| s.to_string())
        }
        t if t.starts_with("VB") => {
            let (v, k) = verb_forms(w)?;
            let f = VERBS[v];
            let forms = [f.0, f.1, f.2];
            let others: Vec<&str> = (0..3).filter(|&j| j != k).map(|j| forms[j]).collect();
            others.choose(rng).map(|s| s.to_string())
        }
        "NN" | "NNS" => {
            let (sg, pl) = noun_forms(w)?;
            Some(if w == sg { pl } else { sg }.to_string())
        }
        _ => None,
    }
}

/// Per-site preference split into the two decoder features.
fn candidate(source: &Sentence, start: usize, end: usize, replacement: &[String], preference: f64, rng: &mut ChaCha8Rng) -> Option<Candidate> {
    let edit = Edit::new(source, start, end, tokens(&replacement.iter().map(String::as_str).collect::<Vec<_>>())).ok()?;
    let share = rng.gen_range(0.3..0.7);
    let tm = preference * share;
    Some(Candidate {
        edit,
        tm,
        lm: (preference - tm) / DECODER_LM,
    })
}

/// Ranked hypotheses for one source: subsets of the proposed edits (at most
/// one per site) ordered by the decoder score.
pub fn simulate_nbest(source_id: usize, source: &Sentence, gold: &[GoldEdit], sc: &SimulatedCorrector) -> Result<NBestList> {
    sc.validate()?;
    let mut rng = sentence_rng(sc.seed, source_id);
    let mut sites: Vec<Vec<Candidate>> = Vec::new();
    let mut blocked = vec![false; source.len() + 1];

    for g in gold {
        let lo = g.start.saturating_sub(1);
        for b in &mut blocked[lo..=g.end.min(source.len())] {
            *b = true;
        }
        let error_type: Option<ErrorType> = g.error_type.parse().ok();
        let p = error_type.and_then(|t| sc.fix_probability.get(&t).copied()).unwrap_or(0.0);
        let mut options = Vec::new();
        if rng.gen_bool(p) {
            let preference = if rng.gen_bool(sc.hesitancy) {
                rng.gen_range(-1.2..-0.05)
            } else {
                rng.gen_range(0.1..1.5)
            };
            let rep: Vec<String> = g.replacement.iter().map(|t| t.to_string()).collect();
            options.extend(candidate(source, g.start, g.end, &rep, preference, &mut rng));
        }
        if rng.gen_bool(sc.wrong_fix_rate) {
            if let Some(rep) = wrong_fix(source, g, &mut rng) {
                let preference = rng.gen_range(-1.6..0.4);
                options.extend(candidate(source, g.start, g.end, &rep, preference, &mut rng));
            }
        }
        if !options.is_empty() {
            sites.push(options);
        }
    }

    let words: Vec<&str> = source.tokens().iter().map(Token::as_str).collect();
    let tags = tag(&words);
    let open: Vec<usize> = (0..words.len()).filter(|&i| !blocked[i]).collect();
    let p_noise = if open.is_empty() { 0.0 } else { (sc.noise_rate / open.len() as f64).min(1.0) };
    let mut taken: Vec<usize> = Vec::new();
    for i in open {
        if !rng.gen_bool(p_noise) || taken.iter().any(|&t| t.abs_diff(i) <= 1) {
            continue;
        }
        if let Some(rep) = noise_at(&words, &tags, i, &mut rng) {
            let preference = rng.gen_range(-2.0..0.4);
            if let Some(c) = candidate(source, i, i + 1, &[rep], preference, &mut rng) {
                taken.push(i);
                sites.push(vec![c]);
            }
        }
    }
    sites.truncate(MAX_SITES);

    let tm0: f64 = rng.gen_range(-6.0..-2.0);
    let lm0: f64 = rng.gen_range(-40.0..-15.0);
    // every choice of (nothing | one option) per site, in mixed-radix order
    let radix: Vec<usize> = sites.iter().map(|s| s.len() + 1).collect();
    let total: usize = radix.iter().product();
    let mut hyps: Vec<(f64, usize, Vec<&Candidate>, f64, f64)> = Vec::with_capacity(total);
    for code in 0..total {
        let mut rest = code;
        let mut chosen = Vec::new();
        for (site, r) in sites.iter().zip(&radix) {
            let digit = rest % r;
            rest /= r;
            if digit > 0 {
                chosen.push(&site[digit - 1]);
            }
        }
        let tm = round4(tm0 + chosen.iter().map(|c| c.tm).sum::<f64>());
        let lm = round4(lm0 + chosen.iter().map(|c| c.lm).sum::<f64>());
        let score = round4(DECODER_TM * tm + DECODER_LM * lm);
        hyps.push((score, code, chosen, tm, lm));
    }
    hyps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    hyps.truncate(sc.n);

    let entries = hyps
        .into_iter()
        .enumerate()
        .map(|(rank, (score, _, chosen, tm, lm))| {
            let edits: Vec<Edit> = chosen.iter().map(|c| c.edit.clone()).collect();
            Ok(NBestEntry {
                rank: rank as u32 + 1,
                hypothesis: apply_edits(source, &edits)?,
                features: DecoderFeatures::new(vec![("tm".into(), vec![tm]), ("lm".into(), vec![lm])]),
                decoder_score: score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NBestList {
        source_id,
        source: source.clone(),
        entries,
    })
}

/// N-best lists for every sentence of a dataset, using annotator 0's gold.
pub fn simulate_dataset(dataset: &Dataset, sc: &SimulatedCorrector) -> Result<Vec<NBestList>> {
    dataset
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let gold = s.annotations.values().next().map(Vec::as_slice).unwrap_or(&[]);
            simulate_nbest(i, &s.source, gold, sc)
        })
        .collect()
}

/// Everything a desk-scale experiment needs.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
    pub train_nbest: Vec<NBestList>,
    pub dev_nbest: Vec<NBestList>,
    pub test_nbest: Vec<NBestList>,
    /// Clean training sentences plus extra grammatical text.
    pub lm_corpus: Vec<Sentence>,
    pub decoder_weights: LogLinearWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub grammar_size: usize,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub lm_extra: usize,
    pub nbest: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            grammar_size: 100,
            train: 2000,
            dev: 300,
            test: 300,
            lm_extra: 5000,
            nbest: 5,
        }
    }
}

/// Builds train/dev/test splits with independent seeds derived from `cfg.seed`.
pub fn build_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    let split = |k: u64, count: usize| -> Result<(Dataset, Vec<Sentence>, Vec<NBestList>)> {
        let seed = cfg.seed.wrapping_mul(16).wrapping_add(k);
        let (data, clean) = generate_corpus(cfg.grammar_size, count, &ErrorModel::standard(seed))?;
        let sc = SimulatedCorrector::new(0.8, cfg.nbest, seed.wrapping_add(1000));
        let nbest = simulate_dataset(&data, &sc)?;
        Ok((data, clean, nbest))
    };
    let (train, mut lm_corpus, train_nbest) = split(1, cfg.train)?;
    let (dev, _, dev_nbest) = split(2, cfg.dev)?;
    let (test, _, test_nbest) = split(3, cfg.test)?;
    lm_corpus.extend(generate_clean(cfg.grammar_size, cfg.lm_extra, cfg.seed.wrapping_mul(16).wrapping_add(4)));
    Ok(SynthCorpus {
        train,
        dev,
        test,
        train_nbest,
        dev_nbest,
        test_nbest,
        lm_corpus,
        decoder_weights: SimulatedCorrector::decoder_weights(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::annotate_builtin;
    use crate::corpus::{parse_annotated, parse_nbest, serialize_annotated, serialize_nbest};
    use crate::edit::{edit_equal, extract_edits};

    #[test]
    fn grammar_is_tagged_as_generated() {
        for s in generate_clean(100, 300, 5) {
            let a = annotate_builtin(&s);
            for (tok, t) in s.tokens().iter().zip(&a.pos) {
                let w = tok.as_str();
                let expected_family = if NOUNS.iter().any(|n| n.0 == w) {
                    "NN"
                } else if NOUNS.iter().any(|n| n.1 == w) {
                    "NNS"
                } else if verb_forms(w).is_some() {
                    "VB"
                } else {
                    continue;
                };
                assert!(t.starts_with(expected_family), "{w} tagged {t} in {s}");
            }
            // every noun phrase has a head and every sentence a verb head
            assert!(!a.np_heads.is_empty() && !a.vp_heads.is_empty(), "{s}");
        }
    }

    #[test]
    fn sva_rate_is_binomial() {
        let em = ErrorModel::new(vec![ErrorRule { error_type: ErrorType::Sva, probability: 0.5 }], 42).unwrap();
        let (data, _) = generate_corpus(100, 100, &em).unwrap();
        let with_sva = data
            .sentences
            .iter()
            .filter(|s| s.gold_edits(0).iter().any(|g| g.error_type == "SVA"))
            .count();
        assert!((30..=70).contains(&with_sva), "{with_sva}");
    }

    #[test]
    fn zero_probability_means_no_errors() {
        let (data, clean) = generate_corpus(100, 50, &ErrorModel::uniform(0.0, 1).unwrap()).unwrap();
        assert!(data.sentences.iter().all(|s| s.gold_edits(0).is_empty()));
        assert_eq!(data.sources(), clean);
    }

    #[test]
    fn generation_is_deterministic() {
        let em = ErrorModel::standard(9);
        let a = serialize_annotated(&generate_corpus(50, 80, &em).unwrap().0);
        let b = serialize_annotated(&generate_corpus(50, 80, &em).unwrap().0);
        assert_eq!(a, b);
        assert_eq!(parse_annotated(&a).unwrap(), generate_corpus(50, 80, &em).unwrap().0);
    }

    #[test]
    fn gold_edits_restore_clean_sentences() {
        let (data, clean) = generate_corpus(100, 500, &ErrorModel::uniform(0.5, 3).unwrap()).unwrap();
        for (s, c) in data.sentences.iter().zip(&clean) {
            let gold = s.gold_edits(0);
            let edits: Vec<Edit> = gold
                .iter()
                .map(|g| Edit::new(&s.source, g.start, g.end, g.replacement.clone()).unwrap())
                .collect();
            assert_eq!(&apply_edits(&s.source, &edits).unwrap(), c);
            // and the aligner recovers exactly the gold edits
            let found = extract_edits(&s.source, c);
            assert_eq!(found.len(), gold.len(), "{}", s.source);
            assert!(found.iter().zip(gold).all(|(e, g)| edit_equal(e, g)));
        }
    }

    #[test]
    fn perfect_corrector_returns_reference() {
        let (data, clean) = generate_corpus(100, 60, &ErrorModel::uniform(0.4, 11).unwrap()).unwrap();
        let sc = SimulatedCorrector {
            hesitancy: 0.0,
            noise_rate: 0.0,
            wrong_fix_rate: 0.0,
            ..SimulatedCorrector::new(1.0, 1, 4)
        };
        let lists = simulate_dataset(&data, &sc).unwrap();
        for (l, c) in lists.iter().zip(&clean) {
            assert_eq!(l.entries.len(), 1);
            assert_eq!(&l.best().hypothesis, c);
        }
    }

    #[test]
    fn blind_corrector_changes_nothing() {
        let (data, _) = generate_corpus(100, 40, &ErrorModel::uniform(0.4, 12).unwrap()).unwrap();
        let sc = SimulatedCorrector {
            noise_rate: 0.0,
            wrong_fix_rate: 0.0,
            ..SimulatedCorrector::new(0.0, 5, 4)
        };
        for l in simulate_dataset(&data, &sc).unwrap() {
            assert!(l.entries.iter().all(|e| e.hypothesis == l.source));
        }
    }

    #[test]
    fn lists_are_ranked_and_parse_back() {
        let (data, _) = generate_corpus(100, 100, &ErrorModel::standard(21)).unwrap();
        let sc = SimulatedCorrector::new(0.8, 5, 22);
        let lists = simulate_dataset(&data, &sc).unwrap();
        let mut fix_below_top = false;
        for (l, s) in lists.iter().zip(&data.sentences) {
            assert!(!l.entries.is_empty() && l.entries.len() <= 5);
            for w in l.entries.windows(2) {
                assert!(w[0].decoder_score >= w[1].decoder_score);
            }
            let top = extract_edits(&l.source, &l.best().hypothesis);
            for e in l.entries.iter().skip(1) {
                for edit in extract_edits(&l.source, &e.hypothesis) {
                    let gold = s.gold_edits(0).iter().any(|g| edit_equal(&edit, g));
                    if gold && !top.iter().any(|t| t.key() == edit.key()) {
                        fix_below_top = true;
                    }
                }
            }
        }
        assert!(fix_below_top);
        let text = serialize_nbest(&lists);
        assert_eq!(parse_nbest(&text, &data.sources()).unwrap(), lists);
    }
}
