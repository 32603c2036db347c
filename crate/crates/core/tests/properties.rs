use proptest::prelude::*;

use gec_core::corpus::{tokenize, AnnotatedSentence, GoldEdit, Sentence, Token};
use gec_core::cw::{CWModel, SparseVector};
use gec_core::edit::{apply_edits, extract_edits, spans_overlap, Edit};
use gec_core::eval::{evaluate, sentence_counts};

fn words() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..=8)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn sentence(w: &[String]) -> Sentence {
    Sentence::new(w.iter().map(|t| Token::new(t.clone()).unwrap()).collect())
}

// plain exhaustive recursion, fine at 8 tokens
fn lcs(a: &[String], b: &[String]) -> usize {
    match (a.split_first(), b.split_first()) {
        (Some((x, ra)), Some((y, rb))) => {
            if x == y {
                1 + lcs(ra, rb)
            } else {
                lcs(ra, b).max(lcs(a, rb))
            }
        }
        _ => 0,
    }
}

proptest! {
    #[test]
    fn extraction_round_trips_and_is_minimal(src in words(), hyp in words()) {
        let (s, h) = (sentence(&src), sentence(&hyp));
        let edits = extract_edits(&s, &h);
        prop_assert_eq!(apply_edits(&s, &edits).unwrap(), h.clone());
        let changed: usize = edits.iter().map(|e| e.source_tokens.len() + e.replacement.len()).sum();
        prop_assert_eq!(changed, src.len() + hyp.len() - 2 * lcs(&src, &hyp));
        for e in &edits {
            prop_assert!(e.source_tokens != e.replacement);
        }
        for w in edits.windows(2) {
            // a matched token always separates two edits
            prop_assert!(w[0].end < w[1].start);
        }
        if src == hyp {
            prop_assert!(edits.is_empty());
        }
    }

    #[test]
    fn applying_any_subset_keeps_the_rest_extractable(src in words(), hyp in words(), mask in any::<u16>()) {
        let (s, h) = (sentence(&src), sentence(&hyp));
        let edits = extract_edits(&s, &h);
        let subset: Vec<Edit> = edits.iter().enumerate().filter(|(i, _)| mask >> (i % 16) & 1 == 1).map(|(_, e)| e.clone()).collect();
        let partial = apply_edits(&s, &subset).unwrap();
        prop_assert_eq!(partial.len() as isize - s.len() as isize,
            subset.iter().map(|e| e.replacement.len() as isize - e.source_tokens.len() as isize).sum::<isize>());
    }

    #[test]
    fn cw_updates_hold_the_constraint(
        steps in proptest::collection::vec(
            (proptest::collection::vec((0usize..12, -3.0f64..3.0), 1..6), any::<bool>()), 1..40),
        eta in 0.55f64..0.99,
    ) {
        let mut m = CWModel::new(12, eta, 1.0);
        for (pairs, pos) in steps {
            let x = SparseVector::from_pairs(pairs);
            let y = if pos { 1.0 } else { -1.0 };
            let before = m.clone();
            let alpha = m.update(&x, y);
            prop_assert!(alpha >= 0.0);
            let touched: Vec<usize> = x.entries().iter().map(|e| e.0).collect();
            for i in 0..12 {
                prop_assert!(m.sigma[i] > 0.0);
                prop_assert!(m.sigma[i] <= before.sigma[i]);
                if !touched.contains(&i) {
                    prop_assert_eq!(m.mu[i].to_bits(), before.mu[i].to_bits());
                    prop_assert_eq!(m.sigma[i].to_bits(), before.sigma[i].to_bits());
                }
            }
            if alpha > 0.0 {
                let v: f64 = x.entries().iter().map(|&(i, xi)| m.sigma[i] * xi * xi).sum();
                prop_assert!((y * x.dot(&m.mu) - m.phi * v).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn eval_is_monotone_in_matches(n_gold in 1usize..5, keep in any::<u8>(), extra in 0usize..3) {
        // gold edits on even positions of a ten-token sentence
        let src = Sentence::from("w0 w1 w2 w3 w4 w5 w6 w7 w8 w9");
        let golds: Vec<GoldEdit> = (0..n_gold).map(|k| GoldEdit::new(2 * k, 2 * k + 1, tokenize("g"), "T", 0)).collect();
        let sent = AnnotatedSentence { source: src.clone(), annotations: [(0, golds.clone())].into_iter().collect() };
        let mut system: Vec<Edit> = golds.iter().enumerate().filter(|(i, _)| keep >> i & 1 == 1)
            .map(|(_, g)| Edit::new(&src, g.start, g.end, g.replacement.clone()).unwrap()).collect();
        for k in 0..extra {
            system.push(Edit::new(&src, 2 * k + 1, 2 * k + 2, tokenize("x")).unwrap());
        }
        system.sort_by_key(|e| e.start);
        let base = evaluate(std::slice::from_ref(&sent), &[system.clone()]).unwrap();
        // adding a correct edit never lowers precision, recall or F0.5
        if let Some(g) = golds.iter().find(|g| !system.iter().any(|e| e.start == g.start)) {
            let mut better = system.clone();
            better.push(Edit::new(&src, g.start, g.end, g.replacement.clone()).unwrap());
            better.sort_by_key(|e| e.start);
            let r = evaluate(std::slice::from_ref(&sent), &[better]).unwrap();
            prop_assert!(r.recall > base.recall);
            prop_assert!(r.precision >= base.precision);
            prop_assert!(r.f05 > base.f05);
        }
        // a wrong edit never raises precision and leaves recall unchanged
        if !system.iter().any(|e| spans_overlap(e.span(), (9, 10))) {
            let mut worse = system.clone();
            worse.push(Edit::new(&src, 9, 10, tokenize("x")).unwrap());
            let r = evaluate(std::slice::from_ref(&sent), &[worse]).unwrap();
            prop_assert!(r.precision <= base.precision);
            prop_assert_eq!(r.recall, base.recall);
        }
        let (c, ann) = sentence_counts(&sent, &system);
        prop_assert_eq!(ann, Some(0));
        prop_assert!(c.matched <= c.proposed.min(c.gold));
    }
}
