//! Edit features, gold labelling and the feature dictionary.
//!
//! Every edit yields categorical `template=value` strings and named numerical
//! values, organised in four groups that can be switched off for ablation:
//!
//! | group         | features                                                        |
//! |---------------|-----------------------------------------------------------------|
//! | `smt`         | `rank` of the best hypothesis containing the edit               |
//! | `lexical_pos` | source/hypothesis phrase, their pair, their POS and POS pair     |
//! | `context`     | word before/after paired with each phrase, nearest NP/VP heads   |
//! | `lm`          | ten log10 language-model scores and differences                  |

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::annotate::{nearest_head_left, nearest_head_right, AnnotationProvider, TokenAnnotations};
use crate::corpus::{tokenize, AnnotatedSentence, NBestList, Sentence, Token};
use crate::cw::SparseVector;
use crate::edit::{apply_edits, edit_equal, extract_edits, Edit};
use crate::error::{Error, Result};
use crate::lm::NGramModel;

pub const EMPTY_PHRASE: &str = "<eps>";
pub const BOUNDARY: &str = "NULL";

pub const LM_FEATURES: [&str; 10] = [
    "lm_src_sentence",
    "lm_hyp_sentence",
    "lm_src_phrase",
    "lm_hyp_phrase",
    "lm_before_src",
    "lm_before_hyp",
    "lm_src_after",
    "lm_hyp_after",
    "lm_phrase_diff",
    "lm_sentence_diff",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureGroup {
    Smt,
    LexicalPos,
    Context,
    Lm,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [
        FeatureGroup::Smt,
        FeatureGroup::LexicalPos,
        FeatureGroup::Context,
        FeatureGroup::Lm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Smt => "smt",
            FeatureGroup::LexicalPos => "lexical_pos",
            FeatureGroup::Context => "context",
            FeatureGroup::Lm => "lm",
        }
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown feature group {s:?}")))
    }
}

/// A nonempty set of enabled feature groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureGroups(BTreeSet<FeatureGroup>);

impl FeatureGroups {
    pub fn all() -> FeatureGroups {
        FeatureGroups(FeatureGroup::ALL.into_iter().collect())
    }

    pub fn new(groups: impl IntoIterator<Item = FeatureGroup>) -> Result<FeatureGroups> {
        let set: BTreeSet<_> = groups.into_iter().collect();
        if set.is_empty() {
            return Err(Error::Config("at least one feature group must be enabled".into()));
        }
        Ok(FeatureGroups(set))
    }

    pub fn without(&self, group: FeatureGroup) -> Result<FeatureGroups> {
        FeatureGroups::new(self.0.iter().copied().filter(|&g| g != group))
    }

    pub fn contains(&self, group: FeatureGroup) -> bool {
        self.0.contains(&group)
    }

    pub fn iter(&self) -> impl Iterator<Item = FeatureGroup> + '_ {
        self.0.iter().copied()
    }
}

impl FromStr for FeatureGroups {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let groups = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(FeatureGroup::from_str)
            .collect::<Result<Vec<_>>>()?;
        FeatureGroups::new(groups)
    }
}

impl fmt::Display for FeatureGroups {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|g| g.name()).collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVector {
    pub categorical: BTreeSet<String>,
    pub numerical: BTreeMap<String, f64>,
}

impl FeatureVector {
    fn cat(&mut self, template: &str, value: String) {
        self.categorical.insert(format!("{template}={value}"));
    }

    fn num(&mut self, name: &str, value: f64) {
        self.numerical.insert(name.to_string(), value);
    }
}

fn phrase(tokens: &[Token]) -> String {
    if tokens.is_empty() {
        return EMPTY_PHRASE.to_string();
    }
    tokens
        .iter()
        .map(Token::as_str)
        .collect::<Vec<_>>()
        .join("_")
}

fn pos_phrase(tags: &[String]) -> String {
    if tags.is_empty() {
        EMPTY_PHRASE.to_string()
    } else {
        tags.join("_")
    }
}

/// Per-sentence values shared by all edits of one source.
#[derive(Debug, Clone)]
pub struct SourceInfo {
    pub annotations: TokenAnnotations,
    pub lm_score: f64,
}

/// Feature extraction with a fixed language model, annotation backend and
/// group selection.
#[derive(Debug, Clone, Copy)]
pub struct FeatureExtractor<'a> {
    pub lm: &'a NGramModel,
    pub provider: &'a AnnotationProvider,
    pub groups: &'a FeatureGroups,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(lm: &'a NGramModel, provider: &'a AnnotationProvider, groups: &'a FeatureGroups) -> Self {
        FeatureExtractor { lm, provider, groups }
    }

    pub fn source_info(&self, source: &Sentence) -> Result<SourceInfo> {
        let annotations = self.provider.annotate(source)?;
        annotations.check(source)?;
        Ok(SourceInfo {
            annotations,
            lm_score: self.lm.score_sentence(source),
        })
    }

    /// Features of `edit`, taking its rank from `edit.hyp_rank` (which must be
    /// the best rank among hypotheses containing it).
    pub fn extract(&self, edit: &Edit, source: &Sentence, info: &SourceInfo) -> Result<FeatureVector> {
        let ann = &info.annotations;
        ann.check(source)?;
        let mut v = FeatureVector::default();
        let src = phrase(&edit.source_tokens);
        let hyp = phrase(&edit.replacement);
        let before = edit.start.checked_sub(1).and_then(|i| source.get(i));
        let after = source.get(edit.end);
        let word = |t: Option<&Token>| t.map_or(BOUNDARY.to_string(), |t| t.to_string());

        if self.groups.contains(FeatureGroup::Smt) {
            v.num("rank", edit.hyp_rank as f64);
        }

        let needs_hypothesis =
            self.groups.contains(FeatureGroup::LexicalPos) || self.groups.contains(FeatureGroup::Lm);
        let hypothesis = if needs_hypothesis {
            Some(apply_edits(source, std::slice::from_ref(edit))?)
        } else {
            None
        };

        if self.groups.contains(FeatureGroup::LexicalPos) {
            let hyp_sentence = hypothesis.as_ref().expect("computed above");
            let hyp_ann = self.provider.annotate(hyp_sentence)?;
            hyp_ann.check(hyp_sentence)?;
            let pos_src = pos_phrase(&ann.pos[edit.start..edit.end]);
            let hyp_end = edit.start + edit.replacement.len();
            let pos_hyp = pos_phrase(&hyp_ann.pos[edit.start..hyp_end]);
            v.cat("src_phrase", src.clone());
            v.cat("hyp_phrase", hyp.clone());
            v.cat("src+hyp", format!("{src}+{hyp}"));
            v.cat("pos_src+hyp", format!("{pos_src}+{pos_hyp}"));
            v.cat("pos_src", pos_src);
            v.cat("pos_hyp", pos_hyp);
        }

        if self.groups.contains(FeatureGroup::Context) {
            v.cat("before_src", format!("{}+{src}", word(before)));
            v.cat("before_hyp", format!("{}+{hyp}", word(before)));
            v.cat("after_src", format!("{src}+{}", word(after)));
            v.cat("after_hyp", format!("{hyp}+{}", word(after)));
            let head = |h: Option<usize>| word(h.and_then(|i| source.get(i)));
            let heads = [
                ("npL", head(nearest_head_left(&ann.np_heads, edit.start))),
                ("npR", head(nearest_head_right(&ann.np_heads, edit.end))),
                ("vpL", head(nearest_head_left(&ann.vp_heads, edit.start))),
                ("vpR", head(nearest_head_right(&ann.vp_heads, edit.end))),
            ];
            for (template, h) in heads {
                v.cat(template, format!("{h}+{src}+{hyp}"));
            }
        }

        if self.groups.contains(FeatureGroup::Lm) {
            let lm = self.lm;
            let hyp_sentence = hypothesis.as_ref().expect("computed above");
            let hyp_score = lm.score_sentence(hyp_sentence);
            let src_phrase = lm.score_sequence(&edit.source_tokens, false);
            let hyp_phrase = lm.score_sequence(&edit.replacement, false);
            let with_before = |p: &[Token]| -> f64 {
                let mut seq: Vec<Token> = before.into_iter().cloned().collect();
                seq.extend_from_slice(p);
                lm.score_sequence(&seq, false)
            };
            let with_after = |p: &[Token]| -> f64 {
                let mut seq = p.to_vec();
                seq.extend(after.cloned());
                lm.score_sequence(&seq, false)
            };
            let values = [
                info.lm_score,
                hyp_score,
                src_phrase,
                hyp_phrase,
                with_before(&edit.source_tokens),
                with_before(&edit.replacement),
                with_after(&edit.source_tokens),
                with_after(&edit.replacement),
                hyp_phrase - src_phrase,
                hyp_score - info.lm_score,
            ];
            for (name, value) in LM_FEATURES.iter().zip(values) {
                v.num(name, value);
            }
        }
        Ok(v)
    }
}

/// Lowest rank among the hypotheses of `nbest` that contain `edit`.
pub fn best_rank(edit: &Edit, nbest: &NBestList) -> Option<u32> {
    let key = edit.key();
    nbest
        .entries
        .iter()
        .find(|e| extract_edits(&nbest.source, &e.hypothesis).iter().any(|x| x.key() == key))
        .map(|e| e.rank)
}

/// Features for one edit of `nbest`. Rank comes from the best hypothesis that
/// contains the edit.
pub fn extract_features(
    edit: &Edit,
    nbest: &NBestList,
    annotations: &TokenAnnotations,
    lm: &NGramModel,
    provider: &AnnotationProvider,
    groups: &FeatureGroups,
) -> Result<FeatureVector> {
    let source = &nbest.source;
    annotations.check(source)?;
    let mut edit = edit.clone();
    if let Some(rank) = best_rank(&edit, nbest) {
        edit.hyp_rank = rank;
    }
    let info = SourceInfo {
        annotations: annotations.clone(),
        lm_score: lm.score_sentence(source),
    };
    FeatureExtractor::new(lm, provider, groups).extract(&edit, source, &info)
}

/// Distinct edits of the first `n` hypotheses, deduplicated by span and
/// replacement. Each keeps the best rank it occurs at; order is by first
/// occurrence.
pub fn pool_edits(nbest: &NBestList, n: usize) -> Vec<Edit> {
    let mut seen = HashSet::new();
    let mut pool = Vec::new();
    for entry in nbest.top(n) {
        for e in extract_edits(&nbest.source, &entry.hypothesis) {
            if seen.insert(e.key()) {
                pool.push(e.with_rank(entry.rank));
            }
        }
    }
    pool
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Valid,
    Invalid,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Valid => 1.0,
            Label::Invalid => -1.0,
        }
    }
}

/// True when the edit equals a gold edit of any annotator.
pub fn is_valid(edit: &Edit, gold: &AnnotatedSentence) -> bool {
    gold.annotations
        .values()
        .flatten()
        .any(|g| edit_equal(edit, g))
}

/// Labels every distinct edit across all hypotheses against the pooled gold
/// edits of all annotators.
pub fn label_edits(nbest: &NBestList, gold: &AnnotatedSentence) -> Vec<(Edit, Label)> {
    pool_edits(nbest, nbest.entries.len())
        .into_iter()
        .map(|e| {
            let label = if is_valid(&e, gold) { Label::Valid } else { Label::Invalid };
            (e, label)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub vector: FeatureVector,
    pub label: Label,
    pub sentence_id: usize,
    pub edit: Edit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericStat {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// Categorical feature ids (dense from 0, by first occurrence), then one slot
/// per numerical feature, then a constant bias slot.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDictionary {
    index: HashMap<String, usize>,
    names: Vec<String>,
    numerical: Vec<NumericStat>,
}

impl FeatureDictionary {
    pub fn categorical_len(&self) -> usize {
        self.names.len()
    }

    pub fn numerical(&self) -> &[NumericStat] {
        &self.numerical
    }

    pub fn id(&self, feature: &str) -> Option<usize> {
        self.index.get(feature).copied()
    }

    pub fn bias_index(&self) -> usize {
        self.names.len() + self.numerical.len()
    }

    pub fn dim(&self) -> usize {
        self.bias_index() + 1
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("dict {} {}\n", self.names.len(), self.numerical.len());
        for (id, name) in self.names.iter().enumerate() {
            out.push_str(&format!("c\t{id}\t{name}\n"));
        }
        for s in &self.numerical {
            out.push_str(&format!("n\t{}\t{}\t{}\n", s.name, s.mean, s.std));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<FeatureDictionary> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::EmptyInput("feature dictionary"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "dict" {
            return Err(Error::parse(1, format!("bad dictionary header {header:?}")));
        }
        let mut names = Vec::new();
        let mut numerical = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let f: Vec<&str> = line.split('\t').collect();
            match f.as_slice() {
                ["c", id, name] => {
                    if id.parse::<usize>().ok() != Some(names.len()) {
                        return Err(Error::parse(line_no, "categorical ids must be dense and ordered"));
                    }
                    names.push(name.to_string());
                }
                ["n", name, mean, std] => {
                    let parse = |s: &str| {
                        s.parse::<f64>()
                            .map_err(|_| Error::parse(line_no, format!("bad number {s:?}")))
                    };
                    numerical.push(NumericStat {
                        name: name.to_string(),
                        mean: parse(mean)?,
                        std: parse(std)?,
                    });
                }
                [""] => {}
                _ => return Err(Error::parse(line_no, "bad dictionary line")),
            }
        }
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Ok(FeatureDictionary { index, names, numerical })
    }
}

/// Builds ids for categorical features seen at least `min_count` times and
/// standardization statistics for numerical features.
pub fn build_dictionary(vectors: &[&FeatureVector], min_count: usize) -> Result<FeatureDictionary> {
    if vectors.is_empty() {
        return Err(Error::EmptyInput("training examples"));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    for v in vectors {
        for f in &v.categorical {
            let c = counts.entry(f.as_str()).or_insert_with(|| {
                order.push(f.as_str());
                0
            });
            *c += 1;
        }
    }
    let names: Vec<String> = order
        .into_iter()
        .filter(|f| counts[f] >= min_count.max(1))
        .map(str::to_string)
        .collect();
    let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();

    let mut sums: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for v in vectors {
        for (name, &x) in &v.numerical {
            let e = sums.entry(name.as_str()).or_insert((0.0, 0.0, 0));
            e.0 += x;
            e.2 += 1;
        }
    }
    for v in vectors {
        for (name, &x) in &v.numerical {
            let e = sums.get_mut(name.as_str()).expect("first pass saw every name");
            let mean = e.0 / e.2 as f64;
            e.1 += (x - mean) * (x - mean);
        }
    }
    let numerical = sums
        .into_iter()
        .map(|(name, (sum, sq, n))| {
            let mean = sum / n as f64;
            let std = (sq / n as f64).sqrt();
            NumericStat {
                name: name.to_string(),
                mean,
                std: if std > 1e-12 { std } else { 1.0 },
            }
        })
        .collect();
    Ok(FeatureDictionary { index, names, numerical })
}

/// Maps a feature vector into the dictionary's space. Unknown categorical
/// features are dropped; numerical ones are standardized.
pub fn vectorize(v: &FeatureVector, dict: &FeatureDictionary) -> SparseVector {
    let mut entries: Vec<(usize, f64)> = v
        .categorical
        .iter()
        .filter_map(|f| dict.id(f).map(|id| (id, 1.0)))
        .collect();
    let offset = dict.categorical_len();
    for (j, stat) in dict.numerical.iter().enumerate() {
        if let Some(&x) = v.numerical.get(&stat.name) {
            let z = (x - stat.mean) / stat.std;
            if z.is_finite() {
                entries.push((offset + j, z));
            }
        }
    }
    entries.push((dict.bias_index(), 1.0));
    SparseVector::from_pairs(entries)
}

fn escape(feature: &str) -> String {
    feature.replace('\\', "\\\\").replace(';', "\\;")
}

fn split_escaped(field: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                if let Some(n) = chars.next() {
                    cur.push(n);
                }
            }
            ';' => out.push(std::mem::take(&mut cur)),
            c => cur.push(c),
        }
    }
    if !cur.is_empty() || !out.is_empty() {
        out.push(cur);
    }
    out
}

/// Labeled example file: `label\tsentence\tstart\tend\tsource\treplacement\trank\tcats\tnums`.
pub fn serialize_examples(examples: &[LabeledExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        let cats: Vec<String> = ex.vector.categorical.iter().map(|f| escape(f)).collect();
        let nums: Vec<String> = ex
            .vector
            .numerical
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            u8::from(ex.label == Label::Valid),
            ex.sentence_id,
            ex.edit.start,
            ex.edit.end,
            ex.edit.source_phrase(),
            ex.edit.replacement_phrase(),
            ex.edit.hyp_rank,
            cats.join(";"),
            nums.join(" ")
        ));
    }
    out
}

pub fn parse_examples(text: &str) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 9 {
            return Err(Error::parse(line_no, format!("expected 9 tab-separated fields, found {}", f.len())));
        }
        let int = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::parse(line_no, format!("bad integer {s:?}")))
        };
        let label = match f[0] {
            "1" => Label::Valid,
            "0" => Label::Invalid,
            other => return Err(Error::parse(line_no, format!("bad label {other:?}"))),
        };
        let categorical = split_escaped(f[7]).into_iter().collect();
        let mut numerical = BTreeMap::new();
        for pair in f[8].split_whitespace() {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("bad numeric pair {pair:?}")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad numeric value {v:?}")))?;
            numerical.insert(k.to_string(), v);
        }
        out.push(LabeledExample {
            vector: FeatureVector { categorical, numerical },
            label,
            sentence_id: int(f[1])?,
            edit: Edit {
                start: int(f[2])?,
                end: int(f[3])?,
                source_tokens: tokenize(f[4]),
                replacement: tokenize(f[5]),
                hyp_rank: int(f[6])? as u32,
                score: None,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DecoderFeatures, GoldEdit, NBestEntry};
    use crate::lm::train_lm;

    fn nbest(source: &str, hyps: &[&str]) -> NBestList {
        NBestList {
            source_id: 0,
            source: Sentence::from(source),
            entries: hyps
                .iter()
                .enumerate()
                .map(|(i, h)| NBestEntry {
                    rank: i as u32 + 1,
                    hypothesis: Sentence::from(*h),
                    features: DecoderFeatures::new(vec![("f".into(), vec![0.0])]),
                    decoder_score: 0.0,
                })
                .collect(),
        }
    }

    fn lm() -> NGramModel {
        train_lm(
            &[
                Sentence::from("the cat sat on the dog and eats a mouse ."),
                Sentence::from("the cat waits on the dog ."),
            ],
            3,
        )
        .unwrap()
    }

    fn cats(v: &FeatureVector) -> Vec<&str> {
        v.categorical.iter().map(String::as_str).collect()
    }

    #[test]
    fn feature_table_example() {
        let list = nbest(
            "the cat waits on the dog and eats a mouse .",
            &["the cat sat on the dog and eats a mouse ."],
        );
        let edit = &pool_edits(&list, 1)[0];
        let ann = crate::annotate::annotate_builtin(&list.source);
        let model = lm();
        let v = extract_features(edit, &list, &ann, &model, &AnnotationProvider::Builtin, &FeatureGroups::all()).unwrap();
        let c = cats(&v);
        for expected in [
            "src_phrase=waits",
            "hyp_phrase=sat",
            "src+hyp=waits+sat",
            "pos_src=VBZ",
            "pos_hyp=VBD",
            "pos_src+hyp=VBZ+VBD",
            "before_src=cat+waits",
            "before_hyp=cat+sat",
            "after_src=waits+on",
            "after_hyp=sat+on",
            "npL=cat+waits+sat",
            "npR=dog+waits+sat",
            "vpL=NULL+waits+sat",
            "vpR=eats+waits+sat",
        ] {
            assert!(c.contains(&expected), "missing {expected}: {c:?}");
        }
        assert_eq!(c.len(), 14);
        assert_eq!(v.numerical.len(), 11);
        assert_eq!(v.numerical["rank"], 1.0);
        let diff = v.numerical["lm_phrase_diff"];
        assert!((diff - (v.numerical["lm_hyp_phrase"] - v.numerical["lm_src_phrase"])).abs() < 1e-12);
    }

    #[test]
    fn lm_only_group() {
        let list = nbest("the cat waits .", &["the cat sat ."]);
        let ann = crate::annotate::annotate_builtin(&list.source);
        let groups: FeatureGroups = "lm".parse().unwrap();
        let edit = &pool_edits(&list, 1)[0];
        let v = extract_features(edit, &list, &ann, &lm(), &AnnotationProvider::Builtin, &groups).unwrap();
        assert!(v.categorical.is_empty());
        assert_eq!(v.numerical.len(), 10);
        assert!(v.numerical.values().all(|x| x.is_finite()));
    }

    #[test]
    fn insertion_uses_empty_phrase_sentinel() {
        let list = nbest("the cat is happy .", &["the cat is very happy ."]);
        let ann = crate::annotate::annotate_builtin(&list.source);
        let edit = &pool_edits(&list, 1)[0];
        assert_eq!((edit.start, edit.end), (3, 3));
        let v = extract_features(edit, &list, &ann, &lm(), &AnnotationProvider::Builtin, &FeatureGroups::all()).unwrap();
        let c = cats(&v);
        assert!(c.contains(&"src_phrase=<eps>"));
        assert!(c.contains(&"hyp_phrase=very"));
        assert!(c.contains(&"pos_src=<eps>"));
        assert!(c.contains(&"before_src=is+<eps>"));
        assert_eq!(v.numerical["lm_src_phrase"], 0.0);
    }

    #[test]
    fn annotation_arity_mismatch_errors() {
        let list = nbest("the cat waits .", &["the cat sat ."]);
        let bad = TokenAnnotations {
            pos: vec!["DT".into()],
            ..Default::default()
        };
        let edit = &pool_edits(&list, 1)[0];
        assert!(matches!(
            extract_features(edit, &list, &bad, &lm(), &AnnotationProvider::Builtin, &FeatureGroups::all()),
            Err(Error::AnnotationArity { .. })
        ));
    }

    #[test]
    fn rank_from_best_hypothesis() {
        let list = nbest("a b c d", &["a b c d", "a x c d", "a x c y"]);
        let pool = pool_edits(&list, 3);
        assert_eq!(pool.len(), 2);
        assert_eq!(pool[0].hyp_rank, 2);
        assert_eq!(pool[1].hyp_rank, 3);
        // a rank-3 copy of the edit still reports rank 2
        let late = pool[0].clone().with_rank(3);
        let ann = crate::annotate::annotate_builtin(&list.source);
        let v = extract_features(&late, &list, &ann, &lm(), &AnnotationProvider::Builtin, &FeatureGroups::all()).unwrap();
        assert_eq!(v.numerical["rank"], 2.0);
    }

    #[test]
    fn labels_against_gold() {
        let list = nbest(
            "He carries a gun into his pocket and walk into the bar .",
            &["He carries a gun in his pocket and walking into the bar ."],
        );
        let gold = AnnotatedSentence::new(
            list.source.clone(),
            vec![
                GoldEdit::new(4, 5, tokenize("in"), "Prep", 0),
                GoldEdit::new(8, 9, tokenize("walks"), "SVA", 0),
            ],
            0,
        )
        .unwrap();
        let labels: Vec<Label> = label_edits(&list, &gold).into_iter().map(|(_, l)| l).collect();
        assert_eq!(labels, vec![Label::Valid, Label::Invalid]);

        let none = AnnotatedSentence::error_free(list.source.clone());
        let labels: Vec<Label> = label_edits(&list, &none).into_iter().map(|(_, l)| l).collect();
        assert_eq!(labels, vec![Label::Invalid, Label::Invalid]);
    }

    #[test]
    fn labels_pool_annotators_and_dedupe() {
        let list = nbest("a b c", &["a x c", "a b c", "a x c ."]);
        let gold = AnnotatedSentence::new(
            list.source.clone(),
            vec![GoldEdit::new(3, 3, tokenize("."), "Punct", 1)],
            0,
        )
        .unwrap();
        let labeled = label_edits(&list, &gold);
        assert_eq!(labeled.len(), 2);
        assert_eq!(labeled[0].0.hyp_rank, 1);
        assert_eq!(labeled[0].1, Label::Invalid);
        assert_eq!(labeled[1].0.hyp_rank, 3);
        assert_eq!(labeled[1].1, Label::Valid);
    }

    fn fv(cats: &[&str], nums: &[(&str, f64)]) -> FeatureVector {
        FeatureVector {
            categorical: cats.iter().map(|s| s.to_string()).collect(),
            numerical: nums.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn dictionary_ids_are_dense() {
        let v = fv(&["a=1", "b=2", "c=3"], &[]);
        let d = build_dictionary(&[&v], 1).unwrap();
        let mut ids: Vec<usize> = ["a=1", "b=2", "c=3"].iter().map(|f| d.id(f).unwrap()).collect();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(d.dim(), 4);
        assert!(matches!(build_dictionary(&[], 1), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn constant_numeric_feature_gets_unit_std() {
        let a = fv(&[], &[("x", 3.0)]);
        let b = fv(&[], &[("x", 3.0)]);
        let d = build_dictionary(&[&a, &b], 1).unwrap();
        assert_eq!(d.numerical()[0].std, 1.0);
        assert_eq!(d.numerical()[0].mean, 3.0);
        let x = vectorize(&fv(&[], &[("x", 5.0)]), &d);
        assert_eq!(x.entries(), &[(0, 2.0), (1, 1.0)]);
    }

    #[test]
    fn min_count_drops_singletons() {
        let a = fv(&["common", "rare1"], &[]);
        let b = fv(&["common", "rare2"], &[]);
        let d = build_dictionary(&[&a, &b], 2).unwrap();
        assert_eq!(d.categorical_len(), 1);
        assert_eq!(d.id("common"), Some(0));
        let x = vectorize(&a, &d);
        assert_eq!(x.entries(), &[(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn vectorize_standardizes() {
        let a = fv(&["k"], &[("x", 1.0)]);
        let b = fv(&["k"], &[("x", 3.0)]);
        let d = build_dictionary(&[&a, &b], 1).unwrap();
        // mean 2, population std 1
        let x = vectorize(&fv(&["k", "unknown"], &[("x", 4.5)]), &d);
        assert_eq!(x.entries(), &[(0, 1.0), (1, 2.5), (2, 1.0)]);
    }

    #[test]
    fn dictionary_text_round_trip() {
        let a = fv(&["k=1", "j=2"], &[("x", 1.0), ("y", -2.0)]);
        let b = fv(&["k=1"], &[("x", 3.0), ("y", 0.5)]);
        let d = build_dictionary(&[&a, &b], 1).unwrap();
        assert_eq!(FeatureDictionary::from_text(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn example_file_round_trip() {
        let src = Sentence::from("a b c");
        let ex = LabeledExample {
            vector: fv(&["src_phrase=b", "weird=x;y\\z"], &[("rank", 2.0), ("lm_src_phrase", -1.5)]),
            label: Label::Valid,
            sentence_id: 7,
            edit: Edit::new(&src, 1, 2, tokenize("x y")).unwrap().with_rank(2),
        };
        let text = serialize_examples(std::slice::from_ref(&ex));
        assert_eq!(parse_examples(&text).unwrap(), vec![ex]);
    }

    #[test]
    fn groups_parse_and_ablate() {
        let all = FeatureGroups::all();
        assert_eq!(all.to_string(), "smt,lexical_pos,context,lm");
        let no_lm = all.without(FeatureGroup::Lm).unwrap();
        assert!(!no_lm.contains(FeatureGroup::Lm));
        assert!("".parse::<FeatureGroups>().is_err());
        assert!("bogus".parse::<FeatureGroups>().is_err());
    }
}
