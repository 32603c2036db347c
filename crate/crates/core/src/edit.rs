//! Phrase edits between a source sentence and a hypothesis.
//!
//! Edits come from a token-level alignment in which every non-matching token
//! costs one unit per side (a substitution costs as much as a deletion plus an
//! insertion), so the extracted edits touch as few tokens as possible. Among
//! equal-cost alignments the traceback prefers match, then substitution, then
//! deletion, then insertion. Consecutive non-match operations are merged into a
//! single phrase edit.

use std::cmp::Ordering;
use std::fmt;

use crate::corpus::{join_tokens, tokenize, GoldEdit, Sentence, Token};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub source_tokens: Vec<Token>,
    pub replacement: Vec<Token>,
    /// Rank of the (best) hypothesis the edit was taken from.
    pub hyp_rank: u32,
    /// Classifier margin, once scored.
    pub score: Option<f64>,
}

/// Identity of an edit for deduplication: span plus replacement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EditKey {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<Token>,
}

impl Edit {
    /// Builds an edit against `source`, checking the span and rejecting no-ops.
    pub fn new(source: &Sentence, start: usize, end: usize, replacement: Vec<Token>) -> Result<Edit> {
        if start > end || end > source.len() {
            return Err(Error::SourceMismatch {
                edit: format!("({start},{end})"),
                found: format!("sentence of length {}", source.len()),
            });
        }
        let source_tokens = source.slice(start, end).to_vec();
        if source_tokens == replacement {
            return Err(Error::SourceMismatch {
                edit: format!("({start},{end})"),
                found: "no-op edit".into(),
            });
        }
        Ok(Edit {
            start,
            end,
            source_tokens,
            replacement,
            hyp_rank: 1,
            score: None,
        })
    }

    pub fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn key(&self) -> EditKey {
        EditKey {
            start: self.start,
            end: self.end,
            replacement: self.replacement.clone(),
        }
    }

    pub fn with_rank(mut self, rank: u32) -> Edit {
        self.hyp_rank = rank;
        self
    }

    pub fn source_phrase(&self) -> String {
        join_tokens(&self.source_tokens)
    }

    pub fn replacement_phrase(&self) -> String {
        join_tokens(&self.replacement)
    }
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{}){:?}->{:?}",
            self.start,
            self.end,
            self.source_phrase(),
            self.replacement_phrase()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Match,
    Substitute,
    Delete,
    Insert,
}

const SUBSTITUTE_COST: u32 = 2;

fn align(source: &[Token], hyp: &[Token]) -> Vec<Op> {
    let (n, m) = (source.len(), hyp.len());
    let width = m + 1;
    let mut cost = vec![0u32; (n + 1) * width];
    for i in 0..=n {
        for j in 0..=m {
            cost[i * width + j] = match (i, j) {
                (0, _) => j as u32,
                (_, 0) => i as u32,
                _ => {
                    let diag = cost[(i - 1) * width + j - 1]
                        + if source[i - 1] == hyp[j - 1] { 0 } else { SUBSTITUTE_COST };
                    let del = cost[(i - 1) * width + j] + 1;
                    let ins = cost[i * width + j - 1] + 1;
                    diag.min(del).min(ins)
                }
            };
        }
    }

    let mut ops = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        if i > 0 && j > 0 {
            let diag = cost[(i - 1) * width + j - 1];
            if source[i - 1] == hyp[j - 1] && diag == here {
                ops.push(Op::Match);
                i -= 1;
                j -= 1;
                continue;
            }
            if source[i - 1] != hyp[j - 1] && diag + SUBSTITUTE_COST == here {
                ops.push(Op::Substitute);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && cost[(i - 1) * width + j] + 1 == here {
            ops.push(Op::Delete);
            i -= 1;
        } else {
            ops.push(Op::Insert);
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Extracts the phrase edits that turn `source` into `hypothesis`, sorted by
/// span start. All edits get `hyp_rank` 1; callers working with n-best lists
/// set the rank with [`Edit::with_rank`].
pub fn extract_edits(source: &Sentence, hypothesis: &Sentence) -> Vec<Edit> {
    let src = source.tokens();
    let hyp = hypothesis.tokens();
    let mut edits = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut open: Option<(usize, usize)> = None;

    let close = |open: &mut Option<(usize, usize)>, i: usize, j: usize, edits: &mut Vec<Edit>| {
        if let Some((si, sj)) = open.take() {
            edits.push(Edit {
                start: si,
                end: i,
                source_tokens: src[si..i].to_vec(),
                replacement: hyp[sj..j].to_vec(),
                hyp_rank: 1,
                score: None,
            });
        }
    };

    for op in align(src, hyp) {
        match op {
            Op::Match => {
                close(&mut open, i, j, &mut edits);
                i += 1;
                j += 1;
            }
            other => {
                if open.is_none() {
                    open = Some((i, j));
                }
                match other {
                    Op::Substitute => {
                        i += 1;
                        j += 1;
                    }
                    Op::Delete => i += 1,
                    Op::Insert => j += 1,
                    Op::Match => unreachable!(),
                }
            }
        }
    }
    close(&mut open, i, j, &mut edits);
    edits
}

/// Interval overlap with zero-width conventions: two insertions at the same
/// point conflict, and an insertion strictly inside another span conflicts.
pub fn spans_overlap(a: (usize, usize), b: (usize, usize)) -> bool {
    let a_empty = a.0 == a.1;
    let b_empty = b.0 == b.1;
    match (a_empty, b_empty) {
        (true, true) => a.0 == b.0,
        (true, false) => b.0 < a.0 && a.0 < b.1,
        (false, true) => a.0 < b.0 && b.0 < a.1,
        (false, false) => a.0 < b.1 && b.0 < a.1,
    }
}

pub fn overlaps(a: &Edit, b: &Edit) -> bool {
    spans_overlap(a.span(), b.span())
}

/// Strict match between a system edit and a gold edit: same span, same
/// replacement tokens.
pub fn edit_equal(edit: &Edit, gold: &GoldEdit) -> bool {
    edit.start == gold.start && edit.end == gold.end && edit.replacement == gold.replacement
}

fn by_position(a: &&Edit, b: &&Edit) -> Ordering {
    (a.start, a.end).cmp(&(b.start, b.end))
}

/// Applies non-overlapping edits to `source`. The result does not depend on
/// the order of `edits`.
pub fn apply_edits(source: &Sentence, edits: &[Edit]) -> Result<Sentence> {
    for e in edits {
        if e.start > e.end || e.end > source.len() || source.slice(e.start, e.end) != e.source_tokens.as_slice() {
            let found = if e.start <= e.end && e.end <= source.len() {
                join_tokens(source.slice(e.start, e.end))
            } else {
                format!("<out of bounds for length {}>", source.len())
            };
            return Err(Error::SourceMismatch {
                edit: e.to_string(),
                found,
            });
        }
    }
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by(by_position);
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if overlaps(a, b) {
                return Err(Error::OverlappingEdits(a.to_string(), b.to_string()));
            }
        }
    }

    let src = source.tokens();
    let mut out = Vec::with_capacity(src.len());
    let mut cursor = 0;
    for e in sorted {
        out.extend_from_slice(&src[cursor..e.start]);
        out.extend(e.replacement.iter().cloned());
        cursor = e.end;
    }
    out.extend_from_slice(&src[cursor..]);
    Ok(Sentence::new(out))
}

/// Edit list file: `id\tstart\tend\tsource\treplacement\trank\tscore-or-NA`.
pub fn serialize_edit_list(edits: &[(usize, Edit)]) -> String {
    let mut out = String::new();
    for (id, e) in edits {
        let score = match e.score {
            Some(s) => s.to_string(),
            None => "NA".to_string(),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            id,
            e.start,
            e.end,
            e.source_phrase(),
            e.replacement_phrase(),
            e.hyp_rank,
            score
        ));
    }
    out
}

pub fn parse_edit_list(text: &str) -> Result<Vec<(usize, Edit)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(Error::parse(line_no, format!("expected 7 tab-separated fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::parse(line_no, format!("bad {what} {s:?}")))
        };
        let id = num(f[0], "sentence id")?;
        let start = num(f[1], "span start")?;
        let end = num(f[2], "span end")?;
        let hyp_rank = num(f[5], "rank")? as u32;
        let score = match f[6] {
            "NA" => None,
            s => Some(s.parse::<f64>().map_err(|_| Error::parse(line_no, format!("bad score {s:?}")))?),
        };
        let source_tokens = tokenize(f[3]);
        if source_tokens.len() != end.saturating_sub(start) || start > end {
            return Err(Error::parse(line_no, "source phrase length does not match span"));
        }
        out.push((
            id,
            Edit {
                start,
                end,
                source_tokens,
                replacement: tokenize(f[4]),
                hyp_rank,
                score,
            },
        ));
    }
    Ok(out)
}

/// Groups an edit list by sentence id into `count` buckets, sorted by position.
pub fn group_edits(edits: Vec<(usize, Edit)>, count: usize) -> Result<Vec<Vec<Edit>>> {
    let mut grouped = vec![Vec::new(); count];
    for (id, e) in edits {
        let bucket = grouped.get_mut(id).ok_or_else(|| {
            Error::Config(format!("edit for sentence {id} but only {count} sentences"))
        })?;
        bucket.push(e);
    }
    for bucket in &mut grouped {
        bucket.sort_by_key(|e| (e.start, e.end));
    }
    Ok(grouped)
}
