//! Precision, recall and F0.5 against multi-annotator gold edits, plus a
//! bootstrap sign test for comparing two systems.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::AnnotatedSentence;
use crate::edit::{edit_equal, spans_overlap, Edit};
use crate::error::{Error, Result};

pub const BETA: f64 = 0.5;

/// `(1+β²)·P·R / (R + β²·P)`, or 0 when the denominator is 0.
pub fn f_beta(p: f64, r: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = r + b2 * p;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / denom
    }
}

/// Match bookkeeping for one sentence against its chosen annotator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SentenceCounts {
    pub matched: usize,
    pub proposed: usize,
    pub gold: usize,
}

impl std::ops::AddAssign for SentenceCounts {
    fn add_assign(&mut self, o: SentenceCounts) {
        self.matched += o.matched;
        self.proposed += o.proposed;
        self.gold += o.gold;
    }
}

impl SentenceCounts {
    pub fn precision(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.matched as f64 / self.proposed as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            1.0
        } else {
            self.matched as f64 / self.gold as f64
        }
    }

    pub fn f05(&self) -> f64 {
        f_beta(self.precision(), self.recall(), BETA)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    pub matched: usize,
    pub proposed: usize,
    pub gold_count: usize,
    pub per_sentence: Vec<SentenceCounts>,
    /// Annotator chosen for each sentence (`None` when the sentence has none).
    pub annotators: Vec<Option<u32>>,
}

impl EvalResult {
    pub fn totals(&self) -> SentenceCounts {
        SentenceCounts {
            matched: self.matched,
            proposed: self.proposed,
            gold: self.gold_count,
        }
    }

    /// Plain-text report block.
    pub fn report(&self) -> String {
        format!(
            "P {:.4}\nR {:.4}\nF0.5 {:.4}\nmatched/proposed/gold {}/{}/{}\n",
            self.precision, self.recall, self.f05, self.matched, self.proposed, self.gold_count
        )
    }

    /// One tab-separated record: P, R, F0.5, matched, proposed, gold.
    pub fn tsv(&self) -> String {
        format!(
            "{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}",
            self.precision, self.recall, self.f05, self.matched, self.proposed, self.gold_count
        )
    }
}

/// Corpus totals of a sequence of per-sentence counts.
pub fn sum_counts<'a>(counts: impl IntoIterator<Item = &'a SentenceCounts>) -> SentenceCounts {
    let mut total = SentenceCounts::default();
    for c in counts {
        total += *c;
    }
    total
}

fn check_edits(index: usize, gold: &AnnotatedSentence, edits: &[Edit]) -> Result<()> {
    let n = gold.source.len();
    for (i, e) in edits.iter().enumerate() {
        if e.start > e.end || e.end > n || gold.source.slice(e.start, e.end) != e.source_tokens.as_slice() {
            return Err(Error::InvalidSpan {
                sentence: index,
                message: format!("system edit {e} does not fit the source"),
            });
        }
        if let Some(other) = edits[..i].iter().find(|o| spans_overlap(o.span(), e.span())) {
            return Err(Error::OverlappingEdits(other.to_string(), e.to_string()));
        }
    }
    Ok(())
}

/// Counts for one sentence, choosing the annotator with the most matches, then
/// the fewest gold edits, then the lowest id.
pub fn sentence_counts(gold: &AnnotatedSentence, edits: &[Edit]) -> (SentenceCounts, Option<u32>) {
    let mut best: Option<(SentenceCounts, u32)> = None;
    for (&ann, gold_edits) in &gold.annotations {
        let matched = edits
            .iter()
            .filter(|e| gold_edits.iter().any(|g| edit_equal(e, g)))
            .count();
        let c = SentenceCounts {
            matched,
            proposed: edits.len(),
            gold: gold_edits.len(),
        };
        let better = match &best {
            None => true,
            Some((b, _)) => c.matched > b.matched || (c.matched == b.matched && c.gold < b.gold),
        };
        if better {
            best = Some((c, ann));
        }
    }
    match best {
        Some((c, ann)) => (c, Some(ann)),
        None => (
            SentenceCounts {
                matched: 0,
                proposed: edits.len(),
                gold: 0,
            },
            None,
        ),
    }
}

/// Scores system edits (one list per gold sentence, in order).
pub fn evaluate(gold: &[AnnotatedSentence], system: &[Vec<Edit>]) -> Result<EvalResult> {
    if gold.len() != system.len() {
        return Err(Error::LengthMismatch(gold.len(), system.len()));
    }
    let mut per_sentence = Vec::with_capacity(gold.len());
    let mut annotators = Vec::with_capacity(gold.len());
    for (i, (g, edits)) in gold.iter().zip(system).enumerate() {
        check_edits(i, g, edits)?;
        let (c, ann) = sentence_counts(g, edits);
        per_sentence.push(c);
        annotators.push(ann);
    }
    let t = sum_counts(&per_sentence);
    Ok(EvalResult {
        precision: t.precision(),
        recall: t.recall(),
        f05: t.f05(),
        matched: t.matched,
        proposed: t.proposed,
        gold_count: t.gold,
        per_sentence,
        annotators,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceResult {
    pub p_value: f64,
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
}

impl SignificanceResult {
    /// "*" when p < 0.01, else "".
    pub fn marker(&self) -> &'static str {
        if self.p_value < 0.01 {
            "*"
        } else {
            ""
        }
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "p {:.4}{}", self.p_value, self.marker());
        let _ = writeln!(out, "wins_a/wins_b/ties {}/{}/{}", self.wins_a, self.wins_b, self.ties);
        out
    }
}

/// One-tailed bootstrap sign test that system A beats system B. Each of
/// `samples` resamples draws sentences with replacement; p is
/// `(#resamples with F_A ≤ F_B + 1) / (samples + 1)`.
pub fn sign_test(a: &[SentenceCounts], b: &[SentenceCounts], samples: usize, seed: u64) -> Result<SignificanceResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("significance test sentences"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut wins_a, mut wins_b, mut ties) = (0, 0, 0);
    for _ in 0..samples {
        let mut ta = SentenceCounts::default();
        let mut tb = SentenceCounts::default();
        for _ in 0..a.len() {
            let i = rng.gen_range(0..a.len());
            ta += a[i];
            tb += b[i];
        }
        let (fa, fb) = (ta.f05(), tb.f05());
        if fa > fb {
            wins_a += 1;
        } else if fb > fa {
            wins_b += 1;
        } else {
            ties += 1;
        }
    }
    Ok(SignificanceResult {
        p_value: (wins_b + ties + 1) as f64 / (samples + 1) as f64,
        wins_a,
        wins_b,
        ties,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, GoldEdit, Sentence};
    use approx::assert_abs_diff_eq;

    fn edit(src: &Sentence, s: usize, e: usize, rep: &str) -> Edit {
        Edit::new(src, s, e, tokenize(rep)).unwrap()
    }

    fn gold(src: &str, edits: &[(usize, usize, &str, u32)]) -> AnnotatedSentence {
        let source = Sentence::from(src);
        let edits = edits
            .iter()
            .map(|&(s, e, r, a)| GoldEdit::new(s, e, tokenize(r), "X", a))
            .collect();
        AnnotatedSentence::new(source, edits, 0).unwrap()
    }

    #[test]
    fn f_beta_values() {
        assert_abs_diff_eq!(f_beta(0.5056, 0.2268, 0.5), 0.4058, epsilon = 5e-4);
        assert_abs_diff_eq!(f_beta(0.5079, 0.2292, 0.5), 0.4085, epsilon = 5e-4);
        assert_abs_diff_eq!(f_beta(0.5035, 0.2384, 0.5), 0.4119, epsilon = 5e-4);
        assert_eq!(f_beta(0.37, 0.37, 0.5), 0.37);
        assert_eq!(f_beta(0.0, 0.0, 0.5), 0.0);
    }

    #[test]
    fn f_beta_is_monotone() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        for &p in &grid {
            for w in grid.windows(2) {
                assert!(f_beta(p, w[1], 0.5) >= f_beta(p, w[0], 0.5));
                assert!(f_beta(w[1], p, 0.5) >= f_beta(w[0], p, 0.5));
            }
        }
    }

    #[test]
    fn perfect_system() {
        let g = gold("we sit on the park", &[(2, 3, "in", 0)]);
        let sys = vec![vec![edit(&g.source, 2, 3, "in")]];
        let r = evaluate(&[g], &sys).unwrap();
        assert_eq!((r.precision, r.recall, r.f05), (1.0, 1.0, 1.0));
    }

    #[test]
    fn half_precision() {
        let g = gold("we sit on the park", &[(2, 3, "in", 0)]);
        let sys = vec![vec![edit(&g.source, 2, 3, "in"), edit(&g.source, 3, 4, "a")]];
        let r = evaluate(&[g], &sys).unwrap();
        assert_eq!(r.precision, 0.5);
        assert_eq!(r.recall, 1.0);
        assert_abs_diff_eq!(r.f05, 0.5556, epsilon = 1e-4);
        assert_eq!(r.report(), "P 0.5000\nR 1.0000\nF0.5 0.5556\nmatched/proposed/gold 1/2/1\n");
    }

    #[test]
    fn picks_best_annotator() {
        let g = gold("he go to school", &[(1, 2, "goes", 0), (1, 2, "went", 1), (3, 4, "the school", 1)]);
        let sys = vec![vec![edit(&g.source, 1, 2, "went")]];
        let r = evaluate(std::slice::from_ref(&g), &sys).unwrap();
        assert_eq!(r.annotators, vec![Some(1)]);
        assert_eq!(r.matched, 1);
        assert_eq!(r.gold_count, 2);

        // no match anywhere: fewer gold edits wins
        let sys = vec![vec![edit(&g.source, 0, 1, "she")]];
        let r = evaluate(&[g], &sys).unwrap();
        assert_eq!(r.annotators, vec![Some(0)]);
        assert_eq!(r.gold_count, 1);
    }

    #[test]
    fn zero_denominators() {
        let g = AnnotatedSentence::error_free(Sentence::from("all is well"));
        let r = evaluate(&[g], &[vec![]]).unwrap();
        assert_eq!((r.precision, r.recall), (1.0, 1.0));
        assert_eq!(r.f05, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let g = gold("a b c", &[]);
        let bad = Edit {
            start: 2,
            end: 4,
            source_tokens: tokenize("c d"),
            replacement: tokenize("x"),
            hyp_rank: 1,
            score: None,
        };
        assert!(evaluate(std::slice::from_ref(&g), &[vec![bad]]).is_err());
        assert!(evaluate(&[g], &[]).is_err());
    }

    #[test]
    fn totals_match_per_sentence() {
        let g1 = gold("he go to school", &[(1, 2, "goes", 0)]);
        let g2 = gold("she like apple", &[(1, 2, "likes", 0), (2, 3, "apples", 0)]);
        let sys = vec![vec![edit(&g1.source, 1, 2, "goes")], vec![edit(&g2.source, 2, 3, "an apple")]];
        let r = evaluate(&[g1, g2], &sys).unwrap();
        let t = sum_counts(&r.per_sentence);
        assert_eq!(t, r.totals());
        assert_eq!(r.f05, f_beta(r.precision, r.recall, 0.5));
    }

    fn counts(m: usize, p: usize, g: usize) -> SentenceCounts {
        SentenceCounts { matched: m, proposed: p, gold: g }
    }

    #[test]
    fn sign_test_dominated_pair() {
        let a = vec![counts(1, 1, 1); 30];
        let b = vec![counts(0, 1, 1); 30];
        let r = sign_test(&a, &b, 100, 1).unwrap();
        assert_abs_diff_eq!(r.p_value, 1.0 / 101.0, epsilon = 1e-12);
        assert_eq!(r.wins_a, 100);
        assert_eq!(r.marker(), "*");
    }

    #[test]
    fn sign_test_identical_and_deterministic() {
        let a: Vec<_> = (0..20).map(|i| counts(i % 2, 1 + i % 3, 1)).collect();
        let r = sign_test(&a, &a, 100, 5).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.ties, 100);
        let b: Vec<_> = (0..20).map(|i| counts((i + 1) % 2, 1, 1)).collect();
        assert_eq!(sign_test(&a, &b, 100, 9).unwrap(), sign_test(&a, &b, 100, 9).unwrap());
        assert!(sign_test(&a, &b[1..], 100, 9).is_err());
    }
}
