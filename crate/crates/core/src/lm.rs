//! Count-based n-gram language model scored with stupid backoff (log base 10).

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::corpus::{tokenize, Sentence, Token};
use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const DEFAULT_BACKOFF: f64 = 0.4;
pub const DEFAULT_OOV_LOG10: f64 = -7.0;
pub const MAX_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    counts: HashMap<Vec<Token>, u64>,
    /// Unigram mass excluding begin markers.
    total_unigrams: u64,
    backoff: f64,
    oov_log10: f64,
    bos: Token,
    eos: Token,
}

fn marker(text: &str) -> Token {
    Token::new(text).expect("markers are valid tokens")
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::Config(format!("LM order must be in 1..={MAX_ORDER}, got {order}")));
    }
    Ok(())
}

impl NGramModel {
    /// Builds a model from explicit counts. Every n-gram's prefix must be present.
    pub fn from_counts(
        order: usize,
        counts: HashMap<Vec<Token>, u64>,
        backoff: f64,
        oov_log10: f64,
    ) -> Result<NGramModel> {
        check_order(order)?;
        if !(backoff > 0.0 && backoff <= 1.0) {
            return Err(Error::Config(format!("backoff factor must be in (0,1], got {backoff}")));
        }
        if !(oov_log10 < 0.0 && oov_log10.is_finite()) {
            return Err(Error::Config(format!("OOV log10 score must be finite and negative, got {oov_log10}")));
        }
        let bos = marker(BOS);
        for (gram, &count) in &counts {
            if gram.is_empty() || gram.len() > order {
                return Err(Error::Config(format!("n-gram of length {} in an order-{order} model", gram.len())));
            }
            if count == 0 {
                return Err(Error::Config("n-gram counts must be at least 1".into()));
            }
            if gram.len() > 1 && !counts.contains_key(&gram[..gram.len() - 1]) {
                return Err(Error::Config(format!(
                    "n-gram {:?} counted without its prefix",
                    crate::corpus::join_tokens(gram)
                )));
            }
        }
        let total_unigrams = counts
            .iter()
            .filter(|(g, _)| g.len() == 1 && g[0] != bos)
            .map(|(_, c)| c)
            .sum();
        Ok(NGramModel {
            order,
            counts,
            total_unigrams,
            backoff,
            oov_log10,
            bos,
            eos: marker(EOS),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn backoff(&self) -> f64 {
        self.backoff
    }

    pub fn oov_log10(&self) -> f64 {
        self.oov_log10
    }

    pub fn total_unigrams(&self) -> u64 {
        self.total_unigrams
    }

    pub fn with_oov_log10(mut self, oov_log10: f64) -> Result<NGramModel> {
        if !(oov_log10 < 0.0 && oov_log10.is_finite()) {
            return Err(Error::Config(format!("OOV log10 score must be finite and negative, got {oov_log10}")));
        }
        self.oov_log10 = oov_log10;
        Ok(self)
    }

    pub fn count(&self, gram: &[Token]) -> u64 {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    /// Count of a space-separated n-gram.
    pub fn count_str(&self, gram: &str) -> u64 {
        self.count(&tokenize(gram))
    }

    pub fn counts(&self) -> &HashMap<Vec<Token>, u64> {
        &self.counts
    }

    /// Stupid-backoff log10 score of `word` after `context`.
    pub fn log10_score(&self, context: &[Token], word: &Token) -> f64 {
        let unigram = self.count(std::slice::from_ref(word));
        if unigram == 0 || self.total_unigrams == 0 {
            return self.oov_log10;
        }
        let keep = context.len().min(self.order - 1);
        let mut ctx = &context[context.len() - keep..];
        let mut penalty = 0.0;
        let mut gram: Vec<Token> = Vec::with_capacity(self.order);
        while !ctx.is_empty() {
            gram.clear();
            gram.extend_from_slice(ctx);
            gram.push(word.clone());
            let full = self.count(&gram);
            if full > 0 {
                let hist = self.count(ctx);
                if hist > 0 {
                    return penalty + (full as f64 / hist as f64).log10();
                }
            }
            penalty += self.backoff.log10();
            ctx = &ctx[1..];
        }
        penalty + (unigram as f64 / self.total_unigrams as f64).log10()
    }

    /// Sum of per-token scores. With `pad`, the sequence is wrapped in
    /// sentence boundary markers and the end marker is scored too.
    pub fn score_sequence(&self, tokens: &[Token], pad: bool) -> f64 {
        if pad {
            let mut padded = Vec::with_capacity(tokens.len() + self.order);
            padded.extend(std::iter::repeat_n(self.bos.clone(), self.order - 1));
            padded.extend_from_slice(tokens);
            padded.push(self.eos.clone());
            let first = self.order - 1;
            (first..padded.len())
                .map(|p| self.log10_score(&padded[..p], &padded[p]))
                .sum()
        } else {
            (0..tokens.len())
                .map(|p| self.log10_score(&tokens[..p], &tokens[p]))
                .sum()
        }
    }

    pub fn score_sentence(&self, sentence: &Sentence) -> f64 {
        self.score_sequence(sentence.tokens(), true)
    }

    /// Text model file: header line then `count\ttokens` lines ordered by
    /// n-gram length and then lexicographically.
    pub fn to_text(&self) -> String {
        let mut grams: Vec<(&Vec<Token>, &u64)> = self.counts.iter().collect();
        grams.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(b.0)));
        let mut out = format!("order {} backoff {} oov {}\n", self.order, self.backoff, self.oov_log10);
        for (gram, count) in grams {
            let _ = writeln!(out, "{count}\t{}", crate::corpus::join_tokens(gram));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<NGramModel> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::EmptyInput("language model file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != "order" || h[2] != "backoff" || h[4] != "oov" {
            return Err(Error::parse(1, format!("bad LM header {header:?}")));
        }
        let order: usize = h[1].parse().map_err(|_| Error::parse(1, "bad order"))?;
        let backoff: f64 = h[3].parse().map_err(|_| Error::parse(1, "bad backoff"))?;
        let oov: f64 = h[5].parse().map_err(|_| Error::parse(1, "bad oov score"))?;
        let mut counts = HashMap::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            if line.is_empty() {
                continue;
            }
            let (count, gram) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(line_no, "expected count<TAB>tokens"))?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad count {count:?}")))?;
            counts.insert(tokenize(gram), count);
        }
        NGramModel::from_counts(order, counts, backoff, oov)
    }
}

/// Counts all n-grams up to `order` over the padded corpus.
pub fn train_lm(corpus: &[Sentence], order: usize) -> Result<NGramModel> {
    check_order(order)?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput("language model corpus"));
    }
    let bos = marker(BOS);
    let eos = marker(EOS);
    let mut counts: HashMap<Vec<Token>, u64> = HashMap::new();
    let mut padded = Vec::new();
    for sentence in corpus {
        padded.clear();
        padded.extend(std::iter::repeat_n(bos.clone(), order - 1));
        padded.extend_from_slice(sentence.tokens());
        padded.push(eos.clone());
        for end in 1..=padded.len() {
            for k in 1..=order.min(end) {
                let gram = &padded[end - k..end];
                match counts.get_mut(gram) {
                    Some(c) => *c += 1,
                    None => {
                        counts.insert(gram.to_vec(), 1);
                    }
                }
            }
        }
    }
    NGramModel::from_counts(order, counts, DEFAULT_BACKOFF, DEFAULT_OOV_LOG10)
}

/// `log LM(b) - log LM(a)` with sentence padding.
pub fn lm_delta(model: &NGramModel, a: &Sentence, b: &Sentence) -> f64 {
    model.score_sentence(b) - model.score_sentence(a)
}
