//! Correction strategies over n-best lists: log-linear reranking with an
//! averaged edit-classifier feature, greedy edit selection, and coordinate
//! line search for the log-linear weights.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{AnnotatedSentence, DecoderFeatures, NBestList, Sentence};
use crate::cw::CWModel;
use crate::edit::{apply_edits, extract_edits, overlaps, Edit, EditKey};
use crate::error::{Error, Result};
use crate::eval::{sentence_counts, sum_counts, SentenceCounts};
use crate::features::{vectorize, FeatureDictionary, FeatureExtractor};

/// Name of the weight attached to the averaged classifier score.
pub const EDIT_FEATURE: &str = "edit_classifier_avg";

/// Weights over the decoder feature schema plus the edit-classifier feature.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLinearWeights {
    pub decoder: Vec<(String, f64)>,
    pub edit: f64,
}

impl LogLinearWeights {
    pub fn new(decoder: Vec<(String, f64)>, edit: f64) -> Result<LogLinearWeights> {
        let w = LogLinearWeights { decoder, edit };
        if !w.as_vec().iter().all(|v| v.is_finite()) {
            return Err(Error::Config("weights must be finite".into()));
        }
        Ok(w)
    }

    /// Uniform decoder weights for the schema of `features`.
    pub fn uniform(features: &DecoderFeatures, value: f64, edit: f64) -> LogLinearWeights {
        LogLinearWeights {
            decoder: features.names().into_iter().map(|n| (n, value)).collect(),
            edit,
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.decoder.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn as_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.decoder.iter().map(|(_, w)| *w).collect();
        v.push(self.edit);
        v
    }

    fn with_vec(&self, values: &[f64]) -> LogLinearWeights {
        LogLinearWeights {
            decoder: self
                .decoder
                .iter()
                .zip(values)
                .map(|((n, _), v)| (n.clone(), *v))
                .collect(),
            edit: values[self.decoder.len()],
        }
    }

    pub fn check_schema(&self, features: &DecoderFeatures) -> Result<()> {
        let found = features.names();
        if found.len() != self.decoder.len() || found.iter().zip(&self.decoder).any(|(a, (b, _))| a != b) {
            return Err(Error::SchemaMismatch {
                expected: self.names(),
                found,
            });
        }
        Ok(())
    }

    /// `name=value` lines, the edit feature last.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (n, v) in &self.decoder {
            let _ = writeln!(out, "{n}={v}");
        }
        let _ = writeln!(out, "{EDIT_FEATURE}={}", self.edit);
        out
    }

    pub fn from_text(text: &str) -> Result<LogLinearWeights> {
        let mut decoder = Vec::new();
        let mut edit = 0.0;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected name=value"))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad weight {value:?}")))?;
            let name = name.trim();
            if name == EDIT_FEATURE {
                edit = value;
            } else if decoder.iter().any(|(n, _)| n == name) {
                return Err(Error::parse(i + 1, format!("duplicate weight {name}")));
            } else {
                decoder.push((name.to_string(), value));
            }
        }
        LogLinearWeights::new(decoder, edit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Baseline,
    Rerank,
    Select,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Baseline => "baseline_1best",
            Mode::Rerank => "rerank",
            Mode::Select => "select",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "baseline" | "baseline_1best" => Ok(Mode::Baseline),
            "rerank" => Ok(Mode::Rerank),
            "select" => Ok(Mode::Select),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionConfig {
    pub mode: Mode,
    pub n: usize,
    pub tau: f64,
}

impl DecisionConfig {
    pub fn new(mode: Mode, n: usize, tau: f64) -> Result<DecisionConfig> {
        if n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !tau.is_finite() {
            return Err(Error::Config("tau must be finite".into()));
        }
        Ok(DecisionConfig { mode, n, tau })
    }
}

/// Scores the edits of one n-best list. Every edit passed in carries the best
/// rank it occurs at in `nbest`.
pub trait EditScorer: Sync {
    fn score_edits(&self, nbest: &NBestList, edits: &[Edit]) -> Result<Vec<f64>>;
}

impl<F> EditScorer for F
where
    F: Fn(&Sentence, &Edit) -> f64 + Sync,
{
    fn score_edits(&self, nbest: &NBestList, edits: &[Edit]) -> Result<Vec<f64>> {
        Ok(edits.iter().map(|e| self(&nbest.source, e)).collect())
    }
}

/// Scores edits with a trained classifier: features, then the raw margin.
pub struct ClassifierScorer<'a> {
    pub extractor: FeatureExtractor<'a>,
    pub dictionary: &'a FeatureDictionary,
    pub model: &'a CWModel,
}

impl EditScorer for ClassifierScorer<'_> {
    fn score_edits(&self, nbest: &NBestList, edits: &[Edit]) -> Result<Vec<f64>> {
        if edits.is_empty() {
            return Ok(Vec::new());
        }
        let info = self.extractor.source_info(&nbest.source)?;
        edits
            .iter()
            .map(|e| {
                let v = self.extractor.extract(e, &nbest.source, &info)?;
                Ok(self.model.score(&vectorize(&v, self.dictionary)))
            })
            .collect()
    }
}

/// An n-best list with every distinct edit scored once.
#[derive(Debug, Clone)]
pub struct ScoredList {
    pub nbest: NBestList,
    /// Distinct edits (best rank, score set), in order of first occurrence.
    pub pool: Vec<Edit>,
    /// Per entry, indices into `pool` of that hypothesis' edits.
    pub entry_edits: Vec<Vec<usize>>,
}

impl ScoredList {
    pub fn new(nbest: &NBestList, scorer: &dyn EditScorer) -> Result<ScoredList> {
        let mut index: HashMap<EditKey, usize> = HashMap::new();
        let mut pool: Vec<Edit> = Vec::new();
        let mut entry_edits = Vec::with_capacity(nbest.entries.len());
        for entry in &nbest.entries {
            let mut ids = Vec::new();
            for e in extract_edits(&nbest.source, &entry.hypothesis) {
                let id = *index.entry(e.key()).or_insert_with(|| {
                    pool.push(e.with_rank(entry.rank));
                    pool.len() - 1
                });
                ids.push(id);
            }
            entry_edits.push(ids);
        }
        let scores = scorer.score_edits(nbest, &pool)?;
        if scores.len() != pool.len() {
            return Err(Error::LengthMismatch(pool.len(), scores.len()));
        }
        for (e, s) in pool.iter_mut().zip(scores) {
            e.score = Some(s);
        }
        Ok(ScoredList {
            nbest: nbest.clone(),
            pool,
            entry_edits,
        })
    }

    fn score(&self, id: usize) -> f64 {
        self.pool[id].score.unwrap_or(0.0)
    }

    /// Average classifier score of the edits of entry `i` (0 with no edits).
    pub fn edit_feature(&self, i: usize) -> f64 {
        let ids = &self.entry_edits[i];
        if ids.is_empty() {
            0.0
        } else {
            ids.iter().map(|&id| self.score(id)).sum::<f64>() / ids.len() as f64
        }
    }

    /// Edits of entry `i`, in source order.
    pub fn entry_edits(&self, i: usize) -> Vec<Edit> {
        self.entry_edits[i].iter().map(|&id| self.pool[id].clone()).collect()
    }
}

/// Scores every list, in parallel, keeping input order.
pub fn score_lists(lists: &[NBestList], scorer: &dyn EditScorer) -> Result<Vec<ScoredList>> {
    lists.par_iter().map(|l| ScoredList::new(l, scorer)).collect()
}

/// Averaged classifier score of one hypothesis' edits; 0 when it has none.
pub fn hypothesis_edit_feature(hypothesis: &Sentence, nbest: &NBestList, scorer: &dyn EditScorer) -> Result<f64> {
    let pool = crate::features::pool_edits(nbest, nbest.entries.len());
    let edits = extract_edits(&nbest.source, hypothesis);
    if edits.is_empty() {
        return Ok(0.0);
    }
    let ranked: Vec<Edit> = edits
        .into_iter()
        .map(|e| {
            let rank = pool.iter().find(|p| p.key() == e.key()).map_or(1, |p| p.hyp_rank);
            e.with_rank(rank)
        })
        .collect();
    let scores = scorer.score_edits(nbest, &ranked)?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

fn model_score(values: &[f64], w: &[f64], edit_feature: f64) -> f64 {
    let n = values.len();
    values.iter().zip(w).map(|(h, l)| h * l).sum::<f64>() + w[n] * edit_feature
}

/// Entry indices among the first `n`, with their new scores, best first.
/// Ties keep the original rank order.
pub fn rescore_scored(list: &ScoredList, w: &LogLinearWeights, n: usize) -> Result<Vec<(usize, f64)>> {
    let wv = w.as_vec();
    let count = n.min(list.nbest.entries.len());
    let mut scored = Vec::with_capacity(count);
    for (i, entry) in list.nbest.entries[..count].iter().enumerate() {
        w.check_schema(&entry.features)?;
        scored.push((i, model_score(&entry.features.values(), &wv, list.edit_feature(i))));
    }
    scored.sort_by(|a, b| cmp_desc(a.1, b.1));
    Ok(scored)
}

/// The full list reordered by the log-linear score with the edit feature.
pub fn rescore(nbest: &NBestList, w: &LogLinearWeights, scorer: &dyn EditScorer) -> Result<Vec<crate::corpus::NBestEntry>> {
    let list = ScoredList::new(nbest, scorer)?;
    Ok(rescore_scored(&list, w, nbest.entries.len())?
        .into_iter()
        .map(|(i, _)| nbest.entries[i].clone())
        .collect())
}

/// Descending order that treats -0.0 and 0.0 as equal.
fn cmp_desc(a: f64, b: f64) -> Ordering {
    (b + 0.0).total_cmp(&(a + 0.0))
}

/// Priority order for selection: score desc, then start, hypothesis rank,
/// replacement, end.
pub fn selection_order(a: &Edit, b: &Edit) -> Ordering {
    let sa = a.score.unwrap_or(f64::NEG_INFINITY);
    let sb = b.score.unwrap_or(f64::NEG_INFINITY);
    cmp_desc(sa, sb)
        .then(a.start.cmp(&b.start))
        .then(a.hyp_rank.cmp(&b.hyp_rank))
        .then_with(|| a.replacement.cmp(&b.replacement))
        .then(a.end.cmp(&b.end))
}

/// Greedy non-overlapping selection over scored edits with score ≥ `tau`.
/// Returns the accepted edits sorted by start.
pub fn select_from_pool(pool: &[Edit], tau: f64) -> Vec<Edit> {
    let mut candidates: Vec<&Edit> = pool
        .iter()
        .filter(|e| e.score.is_some_and(|s| s >= tau))
        .collect();
    candidates.sort_by(|a, b| selection_order(a, b));
    let mut accepted: Vec<Edit> = Vec::new();
    for e in candidates {
        if !accepted.iter().any(|a| overlaps(a, e)) {
            accepted.push(e.clone());
        }
    }
    accepted.sort_by_key(|e| (e.start, e.end));
    accepted
}

/// Edit selection over the hypotheses ranked ≤ `n`.
pub fn select_scored(list: &ScoredList, tau: f64, n: usize) -> Vec<Edit> {
    let pool: Vec<Edit> = list
        .pool
        .iter()
        .filter(|e| (e.hyp_rank as usize) <= n)
        .cloned()
        .collect();
    select_from_pool(&pool, tau)
}

pub fn select_edits(nbest: &NBestList, scorer: &dyn EditScorer, tau: f64, n: usize) -> Result<Vec<Edit>> {
    Ok(select_scored(&ScoredList::new(nbest, scorer)?, tau, n))
}

/// Corrected sentence and the system edits behind it.
pub fn correct_scored(list: &ScoredList, cfg: &DecisionConfig, w: &LogLinearWeights) -> Result<(Sentence, Vec<Edit>)> {
    let pick = |i: usize| (list.nbest.entries[i].hypothesis.clone(), list.entry_edits(i));
    match cfg.mode {
        Mode::Baseline => Ok(pick(0)),
        Mode::Rerank => {
            let ranked = rescore_scored(list, w, cfg.n)?;
            Ok(pick(ranked[0].0))
        }
        Mode::Select => {
            let edits = select_scored(list, cfg.tau, cfg.n);
            Ok((apply_edits(&list.nbest.source, &edits)?, edits))
        }
    }
}

pub fn correct(
    nbest: &NBestList,
    cfg: &DecisionConfig,
    w: &LogLinearWeights,
    scorer: &dyn EditScorer,
) -> Result<(Sentence, Vec<Edit>)> {
    correct_scored(&ScoredList::new(nbest, scorer)?, cfg, w)
}

/// Corrects every list in parallel, keeping input order.
pub fn correct_all(lists: &[ScoredList], cfg: &DecisionConfig, w: &LogLinearWeights) -> Result<Vec<(Sentence, Vec<Edit>)>> {
    lists.par_iter().map(|l| correct_scored(l, cfg, w)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneConfig {
    /// Hypotheses considered per list.
    pub n: usize,
    pub max_sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            n: usize::MAX,
            max_sweeps: 10,
            restarts: 3,
            seed: 0,
        }
    }
}

const LINE_POINTS: usize = 51;
const MIN_GAIN: f64 = 1e-6;

/// Per-entry data needed to evaluate a weight vector quickly.
struct TuneEntry {
    values: Vec<f64>,
    edit_feature: f64,
    counts: SentenceCounts,
}

fn corpus_f(data: &[Vec<TuneEntry>], w: &[f64]) -> f64 {
    let chosen: Vec<SentenceCounts> = data
        .iter()
        .map(|entries| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (i, e) in entries.iter().enumerate() {
                let s = model_score(&e.values, w, e.edit_feature);
                if s > best_score {
                    best = i;
                    best_score = s;
                }
            }
            entries[best].counts
        })
        .collect();
    sum_counts(&chosen).f05()
}

/// One coordinate line search run from `start`; returns weights and objective.
fn line_search(data: &[Vec<TuneEntry>], start: Vec<f64>, max_sweeps: usize) -> (Vec<f64>, f64) {
    let mut w = start;
    let mut f = corpus_f(data, &w);
    for _ in 0..max_sweeps {
        let before = f;
        for d in 0..w.len() {
            let c = w[d];
            let values: Vec<(f64, f64)> = (0..LINE_POINTS)
                .into_par_iter()
                .map(|k| {
                    let half = (LINE_POINTS / 2) as f64;
                    let x = c + (k as f64 - half) / half;
                    let mut trial = w.clone();
                    trial[d] = x;
                    (x, corpus_f(data, &trial))
                })
                .collect();
            let max = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
            if max > f {
                let (x, fx) = values.iter().copied().find(|v| v.1 == max).unwrap_or((c, f));
                w[d] = x;
                f = fx;
            }
        }
        if f - before < MIN_GAIN {
            break;
        }
    }
    (w, f)
}

/// Coordinate line search maximizing dev F0.5 of the rescored top-1, run from
/// `init` and from `cfg.restarts` seeded perturbations of it; the best run
/// (earliest on ties) wins.
pub fn tune_weights(
    dev: &[ScoredList],
    gold: &[AnnotatedSentence],
    init: &LogLinearWeights,
    cfg: &TuneConfig,
) -> Result<(LogLinearWeights, f64)> {
    if dev.is_empty() {
        return Err(Error::EmptyInput("tuning set"));
    }
    if dev.len() != gold.len() {
        return Err(Error::LengthMismatch(dev.len(), gold.len()));
    }
    let data: Vec<Vec<TuneEntry>> = dev
        .par_iter()
        .zip(gold)
        .map(|(list, g)| {
            let count = cfg.n.min(list.nbest.entries.len());
            (0..count)
                .map(|i| {
                    let entry = &list.nbest.entries[i];
                    init.check_schema(&entry.features)?;
                    Ok(TuneEntry {
                        values: entry.features.values(),
                        edit_feature: list.edit_feature(i),
                        counts: sentence_counts(g, &list.entry_edits(i)).0,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base = init.as_vec();
    let mut starts = vec![base.clone()];
    for _ in 0..cfg.restarts {
        starts.push(base.iter().map(|v| v + rng.gen_range(-1.0..=1.0)).collect());
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let (w, f) = line_search(&data, start, cfg.max_sweeps);
        if best.as_ref().is_none_or(|b| f > b.1) {
            best = Some((w, f));
        }
    }
    let (w, f) = best.expect("at least one start");
    Ok((init.with_vec(&w), f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, GoldEdit, NBestEntry};
    use crate::edit::spans_overlap;
    use crate::eval::evaluate;
    use proptest::prelude::*;

    fn list(source: &str, hyps: &[(&str, f64)]) -> NBestList {
        NBestList {
            source_id: 0,
            source: Sentence::from(source),
            entries: hyps
                .iter()
                .enumerate()
                .map(|(i, &(h, tm))| NBestEntry {
                    rank: i as u32 + 1,
                    hypothesis: Sentence::from(h),
                    features: DecoderFeatures::new(vec![("tm".into(), vec![tm])]),
                    decoder_score: tm,
                })
                .collect(),
        }
    }

    fn by_replacement(scores: &'static [(&'static str, f64)]) -> impl Fn(&Sentence, &Edit) -> f64 + Sync {
        move |_, e| {
            let r = e.replacement_phrase();
            scores.iter().find(|(k, _)| *k == r).map_or(-1.0, |(_, s)| *s)
        }
    }

    fn weights(tm: f64, edit: f64) -> LogLinearWeights {
        LogLinearWeights::new(vec![("tm".into(), tm)], edit).unwrap()
    }

    #[test]
    fn edit_feature_averages() {
        let l = list("a b c", &[("a x c", 0.0), ("y b z", 0.0), ("a b c", 0.0)]);
        let s = by_replacement(&[("x", 0.7), ("y", 0.4), ("z", -0.2)]);
        assert_eq!(hypothesis_edit_feature(&l.entries[0].hypothesis, &l, &s).unwrap(), 0.7);
        assert!((hypothesis_edit_feature(&l.entries[1].hypothesis, &l, &s).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(hypothesis_edit_feature(&l.entries[2].hypothesis, &l, &s).unwrap(), 0.0);
        let scored = ScoredList::new(&l, &s).unwrap();
        assert!((scored.edit_feature(1) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rescore_orders() {
        let l = list("a b c", &[("a x c", -1.0), ("a y c", -1.0), ("a b c", -3.0)]);
        let s = by_replacement(&[("x", -0.5), ("y", 0.5)]);
        let r = rescore(&l, &weights(1.0, 1.0), &s).unwrap();
        assert_eq!(r[0].hypothesis.text(), "a y c");
        // identity reranking and the all-zero tie rule
        let r = rescore(&l, &weights(1.0, 0.0), &s).unwrap();
        assert_eq!(r.iter().map(|e| e.rank).collect::<Vec<_>>(), vec![1, 2, 3]);
        let r = rescore(&l, &weights(0.0, 0.0), &s).unwrap();
        assert_eq!(r.iter().map(|e| e.rank).collect::<Vec<_>>(), vec![1, 2, 3]);
        // positive rescaling keeps the order
        let a = rescore(&l, &weights(0.3, 2.0), &s).unwrap();
        let b = rescore(&l, &weights(3.0, 20.0), &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rescore_checks_schema() {
        let l = list("a b c", &[("a x c", -1.0)]);
        let w = LogLinearWeights::new(vec![("lm".into(), 1.0)], 0.0).unwrap();
        assert!(rescore(&l, &w, &by_replacement(&[])).is_err());
    }

    fn pooled(items: &[(usize, usize, &str, f64, u32)]) -> Vec<Edit> {
        let src = Sentence::from("t0 t1 t2 t3 t4 t5 t6 t7 t8 t9");
        items
            .iter()
            .map(|&(s, e, r, score, rank)| {
                let mut ed = Edit::new(&src, s, e, tokenize(r)).unwrap().with_rank(rank);
                ed.score = Some(score);
                ed
            })
            .collect()
    }

    #[test]
    fn greedy_example() {
        let pool = pooled(&[(2, 3, "A", 0.9, 1), (2, 4, "B", 0.8, 1), (7, 8, "C", 0.5, 1)]);
        let out = select_from_pool(&pool, 0.0);
        let reps: Vec<String> = out.iter().map(Edit::replacement_phrase).collect();
        assert_eq!(reps, vec!["A", "C"]);
        assert!(select_from_pool(&[], 0.0).is_empty());
    }

    #[test]
    fn selection_uses_lower_ranked_hypotheses() {
        let l = list(
            "people with albinism is prone to sunburn",
            &[("people with albinism is prone to sunburn", -1.0), ("people with albinism are prone to sunburn", -2.0)],
        );
        let s = by_replacement(&[("are", 0.8)]);
        let cfg = DecisionConfig::new(Mode::Select, 5, 0.0).unwrap();
        let (out, edits) = correct(&l, &cfg, &weights(1.0, 0.0), &s).unwrap();
        assert_eq!(out.text(), "people with albinism are prone to sunburn");
        assert_eq!(edits.len(), 1);
        let cfg = DecisionConfig::new(Mode::Select, 1, 0.0).unwrap();
        assert_eq!(correct(&l, &cfg, &weights(1.0, 0.0), &s).unwrap().0, l.source);
    }

    #[test]
    fn selection_builds_new_sentences() {
        let l = list("he go to school yesterday", &[("he went to school yesterday", -1.0), ("he go to the school yesterday", -2.0)]);
        let s = by_replacement(&[("went", 0.5), ("the", 0.3)]);
        let cfg = DecisionConfig::new(Mode::Select, 2, 0.0).unwrap();
        let (out, _) = correct(&l, &cfg, &weights(1.0, 0.0), &s).unwrap();
        assert_eq!(out.text(), "he went to the school yesterday");
        assert!(l.entries.iter().all(|e| e.hypothesis != out));
        // everything under the threshold leaves the source alone
        let cfg = DecisionConfig::new(Mode::Select, 2, 0.9).unwrap();
        assert_eq!(correct(&l, &cfg, &weights(1.0, 0.0), &s).unwrap().0, l.source);
    }

    #[test]
    fn baseline_returns_rank_one() {
        let l = list("friend feel lonely", &[("friends feel lonely", -1.0), ("friend feels lonely", -1.5)]);
        let cfg = DecisionConfig::new(Mode::Baseline, 1, 0.0).unwrap();
        let (out, edits) = correct(&l, &cfg, &weights(1.0, 0.0), &by_replacement(&[])).unwrap();
        assert_eq!(out.text(), "friends feel lonely");
        assert_eq!(edits.len(), 1);
        let rr = DecisionConfig::new(Mode::Rerank, 10, 0.0).unwrap();
        assert_eq!(correct(&l, &rr, &weights(1.0, 0.0), &by_replacement(&[])).unwrap().0, out);
        assert!(DecisionConfig::new(Mode::Select, 0, 0.0).is_err());
    }

    fn tune_set() -> (Vec<ScoredList>, Vec<AnnotatedSentence>) {
        let mut lists = Vec::new();
        let mut gold = Vec::new();
        for i in 0..6 {
            // the decoder prefers the wrong fix; the classifier knows better
            let l = list("he go home", &[("he goes to home", -1.0 - i as f64 * 0.01), ("he goes home", -1.2)]);
            let s = by_replacement(&[("goes to home", -0.6), ("goes", 0.6)]);
            lists.push(ScoredList::new(&l, &s).unwrap());
            let g = GoldEdit::new(1, 2, tokenize("goes"), "SVA", 0);
            gold.push(AnnotatedSentence::new(l.source.clone(), vec![g], i).unwrap());
        }
        (lists, gold)
    }

    #[test]
    fn tuning_improves_and_is_deterministic() {
        let (lists, gold) = tune_set();
        let init = weights(1.0, 0.0);
        let base = corpus_eval(&lists, &gold, &init);
        let cfg = TuneConfig { seed: 3, ..Default::default() };
        let (w, f) = tune_weights(&lists, &gold, &init, &cfg).unwrap();
        assert!(f > base);
        assert_eq!(f, 1.0);
        assert_eq!(corpus_eval(&lists, &gold, &w), f);
        assert_eq!(tune_weights(&lists, &gold, &init, &cfg).unwrap().0, w);
        assert!(tune_weights(&[], &[], &init, &cfg).is_err());
    }

    fn corpus_eval(lists: &[ScoredList], gold: &[AnnotatedSentence], w: &LogLinearWeights) -> f64 {
        let cfg = DecisionConfig::new(Mode::Rerank, usize::MAX, 0.0).unwrap();
        let out = correct_all(lists, &cfg, w).unwrap();
        let edits: Vec<Vec<Edit>> = out.into_iter().map(|(_, e)| e).collect();
        evaluate(gold, &edits).unwrap().f05
    }

    #[test]
    fn weights_file_round_trip() {
        let w = LogLinearWeights::new(vec![("lm".into(), 0.5), ("tm_0".into(), -1.25)], 0.75).unwrap();
        let text = w.to_text();
        assert_eq!(text, "lm=0.5\ntm_0=-1.25\nedit_classifier_avg=0.75\n");
        assert_eq!(LogLinearWeights::from_text(&text).unwrap(), w);
        assert!(LogLinearWeights::from_text("lm=abc").is_err());
        assert!(LogLinearWeights::from_text("lm=1\nlm=2").is_err());
    }

    /// Independent simulation: repeatedly take the highest-priority remaining
    /// edit that fits, until nothing fits.
    fn oracle(pool: &[Edit], tau: f64) -> Vec<Edit> {
        let mut remaining: Vec<Edit> = pool.iter().filter(|e| e.score.unwrap() >= tau).cloned().collect();
        let mut chosen: Vec<Edit> = Vec::new();
        loop {
            let fits: Vec<&Edit> = remaining
                .iter()
                .filter(|e| chosen.iter().all(|c| !spans_overlap(c.span(), e.span())))
                .collect();
            let Some(top) = fits.into_iter().reduce(|a, b| if selection_order(b, a) == Ordering::Less { b } else { a }) else {
                break;
            };
            let top = top.clone();
            remaining.retain(|e| e != &top);
            chosen.push(top);
        }
        chosen.sort_by_key(|e| (e.start, e.end));
        chosen
    }

    fn arb_pool() -> impl Strategy<Value = Vec<Edit>> {
        proptest::collection::vec((0usize..9, 0usize..3, 0usize..3, -4i32..5, 1u32..6), 0..=10).prop_map(|raw| {
            let src = Sentence::from("t0 t1 t2 t3 t4 t5 t6 t7 t8 t9 t10");
            let mut seen = std::collections::HashSet::new();
            let mut out = Vec::new();
            for (s, len, rep, score, rank) in raw {
                let replacement = if rep == 0 && len > 0 { vec![] } else { tokenize(&format!("r{rep}")) };
                let Ok(mut e) = Edit::new(&src, s, s + len, replacement) else { continue };
                if !seen.insert(e.key()) {
                    continue;
                }
                e.hyp_rank = rank;
                e.score = Some(score as f64 / 4.0);
                out.push(e);
            }
            out
        })
    }

    proptest! {
        #[test]
        fn greedy_matches_oracle(pool in arb_pool(), tau in -1.0f64..1.0) {
            let got = select_from_pool(&pool, tau);
            prop_assert_eq!(&got, &oracle(&pool, tau));
            for (i, a) in got.iter().enumerate() {
                for b in &got[i + 1..] {
                    prop_assert!(!overlaps(a, b));
                }
            }
            for e in pool.iter().filter(|e| e.score.unwrap() >= tau && !got.contains(e)) {
                prop_assert!(got.iter().any(|g| overlaps(g, e) && g.score.unwrap() >= e.score.unwrap()));
            }
        }
    }
}
