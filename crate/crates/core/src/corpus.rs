//! Tokenized sentences, gold-annotated corpora and n-best hypothesis lists.
//!
//! Annotated corpora use the shared-task `S`/`A` line format:
//!
//! ```text
//! S He carries a gun into his pocket and walk into the bar .
//! A 4 5|||Prep|||in|||REQUIRED|||-NONE-|||0
//! A 8 9|||SVA|||walks|||REQUIRED|||-NONE-|||0
//! ```
//!
//! N-best lists use the Moses-style `id ||| hypothesis ||| features ||| score`
//! layout, with source sentences supplied separately.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::edit::spans_overlap;
use crate::error::{Error, Result};

/// A single whitespace-free token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Token> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(Error::InvalidToken(text));
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<str> for Token {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Token {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Splits on whitespace; never fails because every piece is a valid token.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .map(|t| Token(t.to_string()))
        .collect()
}

pub fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_str());
    }
    out
}

/// An ordered sequence of tokens. Serializes as the tokens joined by single spaces.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence(Vec<Token>);

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Sentence {
        Sentence(tokens)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Token> {
        self.0.get(i)
    }

    /// The tokens in `[start, end)`. Panics when out of bounds.
    pub fn slice(&self, start: usize, end: usize) -> &[Token] {
        &self.0[start..end]
    }

    pub fn text(&self) -> String {
        join_tokens(&self.0)
    }
}

impl From<&str> for Sentence {
    fn from(text: &str) -> Self {
        Sentence(tokenize(text))
    }
}

impl FromStr for Sentence {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(Sentence::from(s))
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// A human correction: replace source tokens `[start, end)` with `replacement`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GoldEdit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<Token>,
    pub error_type: String,
    pub annotator: u32,
}

impl GoldEdit {
    pub fn new(
        start: usize,
        end: usize,
        replacement: Vec<Token>,
        error_type: impl Into<String>,
        annotator: u32,
    ) -> GoldEdit {
        GoldEdit {
            start,
            end,
            replacement,
            error_type: error_type.into(),
            annotator,
        }
    }

    pub fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }
}

impl fmt::Display for GoldEdit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{})->{:?}",
            self.start,
            self.end,
            join_tokens(&self.replacement)
        )
    }
}

/// A source sentence with the gold edits of one or more annotators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub source: Sentence,
    /// Annotator id to that annotator's edits, in file order.
    pub annotations: BTreeMap<u32, Vec<GoldEdit>>,
}

impl AnnotatedSentence {
    /// A sentence with a single annotator (id 0) and no gold edits.
    pub fn error_free(source: Sentence) -> AnnotatedSentence {
        let mut annotations = BTreeMap::new();
        annotations.insert(0, Vec::new());
        AnnotatedSentence {
            source,
            annotations,
        }
    }

    /// Builds a sentence from loose gold edits, grouping them by annotator and
    /// validating spans and overlap. `index` is only used in error messages.
    pub fn new(source: Sentence, edits: Vec<GoldEdit>, index: usize) -> Result<AnnotatedSentence> {
        let mut annotations: BTreeMap<u32, Vec<GoldEdit>> = BTreeMap::new();
        for edit in edits {
            annotations.entry(edit.annotator).or_default().push(edit);
        }
        if annotations.is_empty() {
            annotations.insert(0, Vec::new());
        }
        let sentence = AnnotatedSentence {
            source,
            annotations,
        };
        sentence.validate(index)?;
        Ok(sentence)
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        if self.annotations.is_empty() {
            return Err(Error::InvalidSpan {
                sentence: index,
                message: "no annotator present".into(),
            });
        }
        let len = self.source.len();
        for (&annotator, edits) in &self.annotations {
            for (i, g) in edits.iter().enumerate() {
                if g.annotator != annotator {
                    return Err(Error::InvalidSpan {
                        sentence: index,
                        message: format!("edit {g} filed under annotator {annotator}"),
                    });
                }
                if g.start > g.end || g.end > len {
                    return Err(Error::InvalidSpan {
                        sentence: index,
                        message: format!("span {g} outside sentence of length {len}"),
                    });
                }
                if g.start == g.end && g.replacement.is_empty() {
                    return Err(Error::InvalidSpan {
                        sentence: index,
                        message: format!("no-op gold edit at {}", g.start),
                    });
                }
                for other in &edits[..i] {
                    if spans_overlap(other.span(), g.span()) {
                        return Err(Error::OverlappingGold {
                            sentence: index,
                            annotator,
                            first: other.to_string(),
                            second: g.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn gold_edits(&self, annotator: u32) -> &[GoldEdit] {
        self.annotations
            .get(&annotator)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub sentences: Vec<AnnotatedSentence>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sources(&self) -> Vec<Sentence> {
        self.sentences.iter().map(|s| s.source.clone()).collect()
    }
}

const NOOP_TYPE: &str = "noop";

struct PendingSentence {
    source: Sentence,
    annotations: BTreeMap<u32, Vec<GoldEdit>>,
}

impl PendingSentence {
    fn finish(mut self, index: usize) -> Result<AnnotatedSentence> {
        if self.annotations.is_empty() {
            self.annotations.insert(0, Vec::new());
        }
        let sentence = AnnotatedSentence {
            source: self.source,
            annotations: self.annotations,
        };
        sentence.validate(index)?;
        Ok(sentence)
    }
}

/// Parses an annotated corpus in `S`/`A` format.
///
/// A sentence without `A` lines gets a single annotator 0 with no edits. The
/// shared-task `A -1 -1|||noop|||...` line registers an annotator who made no
/// corrections.
pub fn parse_annotated(text: &str) -> Result<Dataset> {
    let mut sentences = Vec::new();
    let mut pending: Option<PendingSentence> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(p) = pending.take() {
                sentences.push(p.finish(sentences.len())?);
            }
            continue;
        }
        if line == "S" || line.starts_with("S ") {
            if let Some(p) = pending.take() {
                sentences.push(p.finish(sentences.len())?);
            }
            pending = Some(PendingSentence {
                source: Sentence::from(&line[1..]),
                annotations: BTreeMap::new(),
            });
        } else if let Some(body) = line.strip_prefix("A ") {
            let current = pending
                .as_mut()
                .ok_or_else(|| Error::parse(line_no, "A line before any S line"))?;
            let sentence_index = sentences.len();
            match parse_a_line(body, line_no)? {
                ALine::Noop(annotator) => {
                    current.annotations.entry(annotator).or_default();
                }
                ALine::Edit(edit) => {
                    let len = current.source.len();
                    if edit.end > len {
                        return Err(Error::InvalidSpan {
                            sentence: sentence_index,
                            message: format!(
                                "line {line_no}: span ({},{}) outside sentence of length {len}",
                                edit.start, edit.end
                            ),
                        });
                    }
                    current
                        .annotations
                        .entry(edit.annotator)
                        .or_default()
                        .push(edit);
                }
            }
        } else {
            return Err(Error::parse(
                line_no,
                format!("expected an S or A line, found {line:?}"),
            ));
        }
    }
    if let Some(p) = pending.take() {
        sentences.push(p.finish(sentences.len())?);
    }
    Ok(Dataset { sentences })
}

enum ALine {
    Noop(u32),
    Edit(GoldEdit),
}

fn parse_a_line(body: &str, line_no: usize) -> Result<ALine> {
    let fields: Vec<&str> = body.split("|||").collect();
    if fields.len() != 6 {
        return Err(Error::parse(
            line_no,
            format!("expected 6 |||-separated fields, found {}", fields.len()),
        ));
    }
    let annotator: u32 = fields[5]
        .trim()
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad annotator id {:?}", fields[5])))?;
    let mut span = fields[0].split_whitespace();
    let (start, end) = match (span.next(), span.next(), span.next()) {
        (Some(s), Some(e), None) => (s, e),
        _ => {
            return Err(Error::parse(
                line_no,
                format!("bad span {:?}", fields[0]),
            ))
        }
    };
    if start == "-1" && end == "-1" {
        if fields[1].trim() == NOOP_TYPE {
            return Ok(ALine::Noop(annotator));
        }
        return Err(Error::parse(line_no, "span -1 -1 is only allowed on noop lines"));
    }
    let start: usize = start
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad span start {start:?}")))?;
    let end: usize = end
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad span end {end:?}")))?;
    if start > end {
        return Err(Error::parse(line_no, format!("span start {start} > end {end}")));
    }
    let replacement = tokenize(fields[2]);
    if start == end && replacement.is_empty() {
        return Err(Error::parse(line_no, "no-op edit (empty span, empty replacement)"));
    }
    Ok(ALine::Edit(GoldEdit {
        start,
        end,
        replacement,
        error_type: fields[1].to_string(),
        annotator,
    }))
}

pub fn serialize_annotated(dataset: &Dataset) -> String {
    let blocks: Vec<String> = dataset.sentences.iter().map(serialize_block).collect();
    blocks.join("\n")
}

fn serialize_block(sentence: &AnnotatedSentence) -> String {
    let mut out = String::new();
    out.push('S');
    if !sentence.source.is_empty() {
        out.push(' ');
        out.push_str(&sentence.source.text());
    }
    out.push('\n');
    let implicit = sentence.annotations.len() == 1 && sentence.annotations.contains_key(&0);
    for (&annotator, edits) in &sentence.annotations {
        if edits.is_empty() && !implicit {
            out.push_str(&format!(
                "A -1 -1|||{NOOP_TYPE}|||-NONE-|||REQUIRED|||-NONE-|||{annotator}\n"
            ));
        }
        for g in edits {
            out.push_str(&format!(
                "A {} {}|||{}|||{}|||REQUIRED|||-NONE-|||{}\n",
                g.start,
                g.end,
                g.error_type,
                join_tokens(&g.replacement),
                annotator
            ));
        }
    }
    out
}

/// One sentence per line; the inverse of [`serialize_sources`].
pub fn parse_sources(text: &str) -> Vec<Sentence> {
    text.lines().map(Sentence::from).collect()
}

pub fn serialize_sources(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.text());
        out.push('\n');
    }
    out
}

/// Named decoder feature values of one hypothesis, grouped the way the
/// decoder printed them (`lm= -4.2 tm= -1.1 -0.3`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecoderFeatures {
    pub groups: Vec<(String, Vec<f64>)>,
}

impl DecoderFeatures {
    pub fn new(groups: Vec<(String, Vec<f64>)>) -> DecoderFeatures {
        DecoderFeatures { groups }
    }

    /// Flat feature names: the group name for single-valued groups, otherwise
    /// `name_0`, `name_1`, ...
    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (name, values) in &self.groups {
            if values.len() == 1 {
                names.push(name.clone());
            } else {
                names.extend((0..values.len()).map(|i| format!("{name}_{i}")));
            }
        }
        names
    }

    pub fn values(&self) -> Vec<f64> {
        self.groups
            .iter()
            .flat_map(|(_, v)| v.iter().copied())
            .collect()
    }

    fn same_schema(&self, other: &DecoderFeatures) -> bool {
        self.groups.len() == other.groups.len()
            && self
                .groups
                .iter()
                .zip(&other.groups)
                .all(|((a, av), (b, bv))| a == b && av.len() == bv.len())
    }
}

impl fmt::Display for DecoderFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, values)) in self.groups.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{name}=")?;
            for v in values {
                write!(f, " {v}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NBestEntry {
    /// 1 is the decoder's best hypothesis.
    pub rank: u32,
    pub hypothesis: Sentence,
    pub features: DecoderFeatures,
    pub decoder_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NBestList {
    pub source_id: usize,
    pub source: Sentence,
    /// Sorted by rank; ranks are exactly `1..=entries.len()`.
    pub entries: Vec<NBestEntry>,
}

impl NBestList {
    pub fn best(&self) -> &NBestEntry {
        &self.entries[0]
    }

    /// The first `n` entries (all of them when the list is shorter).
    pub fn top(&self, n: usize) -> &[NBestEntry] {
        &self.entries[..n.min(self.entries.len())]
    }
}

/// Parses an n-best file. `sources[i]` is the source sentence of id `i`; every
/// source must receive at least one hypothesis.
pub fn parse_nbest(text: &str, sources: &[Sentence]) -> Result<Vec<NBestList>> {
    let mut lists: Vec<NBestList> = Vec::new();
    let mut schema: Option<(DecoderFeatures, usize)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected 4 |||-separated fields, found {}", fields.len()),
            ));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad source id {:?}", fields[0])))?;
        let hypothesis = Sentence::from(fields[1]);
        let features = parse_feature_field(fields[2], line_no)?;
        let decoder_score: f64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad total score {:?}", fields[3])))?;

        match &schema {
            Some((first, first_line)) if !first.same_schema(&features) => {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "feature schema {:?} differs from {:?} on line {first_line}",
                        features.names(),
                        first.names()
                    ),
                ));
            }
            Some(_) => {}
            None => schema = Some((features.clone(), line_no)),
        }

        let expected_next = lists.len();
        let current = lists.last().map(|l| l.source_id);
        if current != Some(id) {
            if id != expected_next {
                return Err(Error::parse(
                    line_no,
                    format!("source id {id} out of order; expected {expected_next}"),
                ));
            }
            let source = sources.get(id).ok_or_else(|| {
                Error::parse(
                    line_no,
                    format!("source id {id} has no source sentence ({} given)", sources.len()),
                )
            })?;
            lists.push(NBestList {
                source_id: id,
                source: source.clone(),
                entries: Vec::new(),
            });
        }
        let list = lists.last_mut().expect("list pushed above");
        let rank = list.entries.len() as u32 + 1;
        list.entries.push(NBestEntry {
            rank,
            hypothesis,
            features,
            decoder_score,
        });
    }

    if lists.len() != sources.len() {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!(
                "source {} has no hypotheses ({} sources, {} n-best lists)",
                lists.len(),
                sources.len(),
                lists.len()
            ),
        });
    }
    Ok(lists)
}

fn parse_feature_field(field: &str, line_no: usize) -> Result<DecoderFeatures> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for piece in field.split_whitespace() {
        if let Some(name) = piece.strip_suffix('=') {
            if name.is_empty() {
                return Err(Error::parse(line_no, "empty feature name"));
            }
            groups.push((name.to_string(), Vec::new()));
        } else {
            let value: f64 = piece
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad feature value {piece:?}")))?;
            if !value.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite feature value {piece:?}")));
            }
            match groups.last_mut() {
                Some((_, values)) => values.push(value),
                None => {
                    return Err(Error::parse(
                        line_no,
                        format!("feature value {piece:?} before any name"),
                    ))
                }
            }
        }
    }
    if let Some((name, _)) = groups.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::parse(line_no, format!("feature {name:?} has no values")));
    }
    Ok(DecoderFeatures { groups })
}

pub fn serialize_nbest(lists: &[NBestList]) -> String {
    let mut out = String::new();
    for list in lists {
        for e in &list.entries {
            out.push_str(&format!(
                "{} ||| {} ||| {} ||| {}\n",
                list.source_id,
                e.hypothesis.text(),
                e.features,
                e.decoder_score
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROW2: &str = "S He carries a gun into his pocket and walk into the bar .\n\
A 4 5|||Prep|||in|||REQUIRED|||-NONE-|||0\n\
A 8 9|||SVA|||walks|||REQUIRED|||-NONE-|||0\n";

    fn toks(s: &str) -> Vec<Token> {
        tokenize(s)
    }

    #[test]
    fn token_rejects_whitespace_and_empty() {
        assert!(Token::new("").is_err());
        assert!(Token::new("a b").is_err());
        assert!(Token::new("a\tb").is_err());
        assert_eq!(Token::new("ok").unwrap().as_str(), "ok");
    }

    #[test]
    fn parses_two_gold_edits() {
        let d = parse_annotated(ROW2).unwrap();
        assert_eq!(d.len(), 1);
        let s = &d.sentences[0];
        assert_eq!(s.source.len(), 13);
        let gold = s.gold_edits(0);
        assert_eq!(gold.len(), 2);
        assert_eq!((gold[0].start, gold[0].end), (4, 5));
        assert_eq!(gold[0].replacement, toks("in"));
        assert_eq!(gold[0].error_type, "Prep");
        assert_eq!((gold[1].start, gold[1].end), (8, 9));
        assert_eq!(gold[1].replacement, toks("walks"));
    }

    #[test]
    fn parses_deletion() {
        let text = "S The train crashed and all passengers were died .\n\
A 6 7|||Vt||||||REQUIRED|||-NONE-|||0\n";
        let d = parse_annotated(text).unwrap();
        let g = &d.sentences[0].gold_edits(0)[0];
        assert_eq!((g.start, g.end), (6, 7));
        assert!(g.replacement.is_empty());
        assert_eq!(serialize_annotated(&d), text);
    }

    #[test]
    fn sentence_without_a_lines_gets_implicit_annotator() {
        let d = parse_annotated("S A .\n").unwrap();
        let s = &d.sentences[0];
        assert_eq!(s.annotations.len(), 1);
        assert!(s.annotations[&0].is_empty());
        assert_eq!(serialize_annotated(&d), "S A .\n");
    }

    #[test]
    fn empty_dataset_serializes_empty() {
        assert_eq!(serialize_annotated(&Dataset::default()), "");
        assert!(parse_annotated("").unwrap().is_empty());
    }

    #[test]
    fn round_trips_table_row() {
        let d = parse_annotated(ROW2).unwrap();
        assert_eq!(serialize_annotated(&d), ROW2);
    }

    #[test]
    fn two_annotators_round_trip() {
        let source = Sentence::from("a b c");
        let s = AnnotatedSentence::new(
            source,
            vec![
                GoldEdit::new(0, 1, toks("x"), "T", 0),
                GoldEdit::new(1, 2, toks("y"), "T", 1),
                GoldEdit::new(2, 3, vec![], "U", 1),
            ],
            0,
        )
        .unwrap();
        let d = Dataset {
            sentences: vec![s.clone(), AnnotatedSentence::error_free(Sentence::from("d ."))],
        };
        let text = serialize_annotated(&d);
        let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("A ")).collect();
        assert!(lines[0].ends_with("|||0"));
        assert!(lines[1].ends_with("|||1"));
        assert!(lines[2].ends_with("|||1"));
        assert_eq!(parse_annotated(&text).unwrap(), d);
    }

    #[test]
    fn noop_line_registers_annotator() {
        let text = "S a b\nA 0 1|||T|||x|||REQUIRED|||-NONE-|||0\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||1\n";
        let d = parse_annotated(text).unwrap();
        let s = &d.sentences[0];
        assert_eq!(s.annotations.len(), 2);
        assert!(s.annotations[&1].is_empty());
        assert_eq!(serialize_annotated(&d), text);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_annotated("S a b\nA 0 1|||T|||x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_annotated("S a\n\nX junk\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn out_of_bounds_span_names_sentence() {
        let err = parse_annotated("S a\n\nS a b\nA 1 3|||T|||x|||REQUIRED|||-NONE-|||0\n").unwrap_err();
        assert!(matches!(err, Error::InvalidSpan { sentence: 1, .. }), "{err}");
    }

    #[test]
    fn overlapping_gold_edits_rejected() {
        let text = "S a b c\nA 0 2|||T|||x|||REQUIRED|||-NONE-|||0\nA 1 3|||T|||y|||REQUIRED|||-NONE-|||0\n";
        assert!(matches!(
            parse_annotated(text).unwrap_err(),
            Error::OverlappingGold { annotator: 0, .. }
        ));
        // the same spans from different annotators are fine
        let text = "S a b c\nA 0 2|||T|||x|||REQUIRED|||-NONE-|||0\nA 1 3|||T|||y|||REQUIRED|||-NONE-|||1\n";
        assert!(parse_annotated(text).is_ok());
    }

    #[test]
    fn noop_gold_edit_rejected() {
        assert!(parse_annotated("S a b\nA 1 1|||T||||||REQUIRED|||-NONE-|||0\n").is_err());
    }

    #[test]
    fn parses_single_nbest_entry() {
        let sources = vec![Sentence::from("The cat sit .")];
        let lists = parse_nbest("0 ||| The cat sat . ||| lm= -4.2 tm= -1.1 ||| -5.3", &sources).unwrap();
        assert_eq!(lists.len(), 1);
        let l = &lists[0];
        assert_eq!(l.source, sources[0]);
        assert_eq!(l.entries.len(), 1);
        let e = &l.entries[0];
        assert_eq!(e.rank, 1);
        assert_eq!(e.hypothesis.text(), "The cat sat .");
        assert_eq!(e.features.names(), vec!["lm", "tm"]);
        assert_eq!(e.features.values(), vec![-4.2, -1.1]);
        assert_eq!(e.decoder_score, -5.3);
    }

    #[test]
    fn groups_entries_by_source_id() {
        let sources = vec![Sentence::from("a"), Sentence::from("b")];
        let text = "0 ||| a ||| f= 1 ||| 1\n0 ||| c ||| f= 0.5 ||| 0.5\n1 ||| b ||| f= 1 ||| 1\n";
        let lists = parse_nbest(text, &sources).unwrap();
        assert_eq!(lists.len(), 2);
        assert_eq!(lists[0].entries.len(), 2);
        assert_eq!(lists[1].entries.len(), 1);
        assert_eq!(
            lists[0].entries.iter().map(|e| e.rank).collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert_eq!(serialize_nbest(&lists), text);
    }

    #[test]
    fn empty_nbest_input() {
        assert!(parse_nbest("", &[]).unwrap().is_empty());
    }

    #[test]
    fn non_monotone_ids_rejected() {
        let sources = vec![Sentence::from("a"), Sentence::from("b")];
        let text = "0 ||| a ||| f= 1 ||| 1\n1 ||| b ||| f= 1 ||| 1\n0 ||| a ||| f= 1 ||| 1\n";
        assert!(matches!(
            parse_nbest(text, &sources).unwrap_err(),
            Error::Parse { line: 3, .. }
        ));
        let text = "1 ||| b ||| f= 1 ||| 1\n";
        assert!(parse_nbest(text, &sources).is_err());
    }

    #[test]
    fn missing_hypotheses_rejected() {
        let sources = vec![Sentence::from("a"), Sentence::from("b")];
        assert!(parse_nbest("0 ||| a ||| f= 1 ||| 1\n", &sources).is_err());
    }

    #[test]
    fn schema_mismatch_rejected() {
        let sources = vec![Sentence::from("a")];
        let text = "0 ||| a ||| f= 1 g= 2 ||| 1\n0 ||| a ||| f= 1 ||| 1\n";
        assert!(matches!(
            parse_nbest(text, &sources).unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
    }

    #[test]
    fn multi_valued_feature_groups_flatten() {
        let sources = vec![Sentence::from("a")];
        let text = "0 ||| a ||| tm= -1 -2.5 lm= -3 ||| -6.5\n";
        let lists = parse_nbest(text, &sources).unwrap();
        let f = &lists[0].entries[0].features;
        assert_eq!(f.names(), vec!["tm_0", "tm_1", "lm"]);
        assert_eq!(f.values(), vec![-1.0, -2.5, -3.0]);
        assert_eq!(serialize_nbest(&lists), text);
    }
}
