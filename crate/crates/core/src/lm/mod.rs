//! Language-model abstraction.
//!
//! Everything downstream (steering, beam search, scoring, evaluation) is
//! generic over [`LanguageModel`]. Two in-process implementations live here:
//! a count-based [`NgramModel`] and a [`UniformModel`]; out-of-process models
//! come in through [`crate::bridge`].

mod ngram;
mod tokenizer;

use std::collections::HashMap;
use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use ngram::NgramModel;
pub use tokenizer::WordTokenizer;

/// Index into a model vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for TokenId {
    fn from(i: usize) -> Self {
        TokenId(i as u32)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Token surfaces and the reverse lookup.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    surfaces: Vec<String>,
    lookup: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Builds a vocabulary from surfaces in id order. When two ids share a
    /// surface, `lookup` resolves to the lower id.
    pub fn new(surfaces: Vec<String>) -> Result<Self> {
        if surfaces.len() < 2 {
            return Err(Error::invalid(format!(
                "vocabulary needs at least 2 tokens, got {}",
                surfaces.len()
            )));
        }
        if surfaces.len() > u32::MAX as usize {
            return Err(Error::invalid("vocabulary too large"));
        }
        let mut lookup = HashMap::with_capacity(surfaces.len());
        for (i, s) in surfaces.iter().enumerate() {
            lookup.entry(s.clone()).or_insert(TokenId::from(i));
        }
        Ok(Self { surfaces, lookup })
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn surface(&self, id: TokenId) -> Option<&str> {
        self.surfaces.get(id.index()).map(String::as_str)
    }

    pub fn lookup(&self, surface: &str) -> Option<TokenId> {
        self.lookup.get(surface).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, &str)> {
        self.surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| (TokenId::from(i), s.as_str()))
    }

    pub fn contains_id(&self, id: TokenId) -> bool {
        id.index() < self.surfaces.len()
    }

    pub fn check_ids(&self, ids: &[TokenId]) -> Result<()> {
        match ids.iter().find(|id| !self.contains_id(**id)) {
            Some(id) => Err(Error::invalid(format!(
                "token id {id} out of range for vocabulary of size {}",
                self.len()
            ))),
            None => Ok(()),
        }
    }
}

/// Unnormalised next-token scores, natural-log scale, one per vocabulary entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(pub Vec<f64>);

impl LogitVector {
    /// Wraps `values`, rejecting non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("logit {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn argmax(&self) -> Option<TokenId> {
        // first maximum wins, i.e. ties go to the lowest id
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.0.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| TokenId::from(i))
    }

    /// `log(sum(exp(l)))`, computed with max subtraction.
    pub fn log_sum_exp(&self) -> f64 {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return max;
        }
        let sum: f64 = self.0.iter().map(|v| (v - max).exp()).sum();
        max + sum.ln()
    }

    /// Log-probability of `id` under the softmax of these logits.
    pub fn log_prob(&self, id: TokenId) -> f64 {
        self.0[id.index()] - self.log_sum_exp()
    }
}

impl Index<TokenId> for LogitVector {
    type Output = f64;

    fn index(&self, id: TokenId) -> &f64 {
        &self.0[id.index()]
    }
}

/// An autoregressive language model as seen by the decoder.
///
/// Implementations must be pure from the caller's point of view: the same
/// context yields the same logits.
pub trait LanguageModel: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    /// Scores for the token following `ctx`. An empty context is allowed.
    fn next_logits(&self, ctx: &[TokenId]) -> Result<LogitVector>;

    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>>;

    fn detokenize(&self, ids: &[TokenId]) -> Result<String>;

    /// Mean negative log-likelihood (nats/token) of `target` following `prefix`.
    fn sequence_nll(&self, prefix: &[TokenId], target: &[TokenId]) -> Result<f64> {
        nll_from_logits(self, prefix, target)
    }

    /// Whether concurrent queries from several workers are allowed.
    fn supports_concurrency(&self) -> bool {
        true
    }

    fn vocab_size(&self) -> usize {
        self.vocab().len()
    }
}

/// Mean NLL computed position by position from [`LanguageModel::next_logits`].
pub fn nll_from_logits<M: LanguageModel + ?Sized>(
    lm: &M,
    prefix: &[TokenId],
    target: &[TokenId],
) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::invalid("target sequence is empty"));
    }
    lm.vocab().check_ids(target)?;
    let mut ctx = Vec::with_capacity(prefix.len() + target.len());
    ctx.extend_from_slice(prefix);
    let mut total = 0.0;
    for &tok in target {
        let logits = lm.next_logits(&ctx)?;
        total -= logits.log_prob(tok);
        ctx.push(tok);
    }
    Ok(total / target.len() as f64)
}

/// Perplexity as `exp` of the mean NLL.
pub fn perplexity<M: LanguageModel + ?Sized>(
    lm: &M,
    prefix: &[TokenId],
    target: &[TokenId],
) -> Result<f64> {
    Ok(lm.sequence_nll(prefix, target)?.exp())
}

/// Every token equally likely, whatever the context.
///
/// Tokens are the given words; tokenization is whitespace splitting with
/// unknown words mapped to id 0.
#[derive(Debug, Clone)]
pub struct UniformModel {
    vocab: Vocabulary,
}

impl UniformModel {
    pub fn new(words: Vec<String>) -> Result<Self> {
        Ok(Self {
            vocab: Vocabulary::new(words)?,
        })
    }

    /// A model over `size` synthetic tokens `t0`, `t1`, ...
    pub fn with_size(size: usize) -> Result<Self> {
        Self::new((0..size).map(|i| format!("t{i}")).collect())
    }
}

impl LanguageModel for UniformModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_logits(&self, ctx: &[TokenId]) -> Result<LogitVector> {
        self.vocab.check_ids(ctx)?;
        Ok(LogitVector(vec![0.0; self.vocab.len()]))
    }

    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>> {
        Ok(text
            .split_whitespace()
            .map(|w| self.vocab.lookup(w).unwrap_or(TokenId(0)))
            .collect())
    }

    fn detokenize(&self, ids: &[TokenId]) -> Result<String> {
        self.vocab.check_ids(ids)?;
        let words: Vec<&str> = ids
            .iter()
            .filter_map(|&id| self.vocab.surface(id))
            .collect();
        Ok(words.join(" "))
    }
}
