//! Count-based n-gram model with add-δ smoothing.
//!
//! For a history `h` of the previous `order - 1` tokens (left-padded with
//! `<s>`), `p(w | h) = (count(h, w) + δ) / (count(h) + δ·|V|)`. Logits are the
//! log-probabilities themselves, so they are already normalised.

use std::collections::HashMap;
use std::path::Path;

use super::tokenizer::{WordTokenizer, BOS, UNK};
use super::{LanguageModel, LogitVector, TokenId, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
struct Continuations {
    total: u64,
    /// sorted by token id
    counts: Vec<(TokenId, u64)>,
}

#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    smoothing: f64,
    vocab: Vocabulary,
    unk: TokenId,
    bos: TokenId,
    table: HashMap<Vec<TokenId>, Continuations>,
    tokenizer: WordTokenizer,
}

impl NgramModel {
    /// Trains on `corpus`. The vocabulary is `<unk>`, `<s>`, then the corpus
    /// tokens by descending frequency (ties in lexical order).
    pub fn train(corpus: &str, order: usize, smoothing: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("n-gram order must be at least 1"));
        }
        if !(smoothing > 0.0 && smoothing.is_finite()) {
            return Err(Error::invalid(format!(
                "smoothing must be positive, got {smoothing}"
            )));
        }
        let tokenizer = WordTokenizer;
        let surfaces = tokenizer.split(corpus);
        if surfaces.is_empty() {
            return Err(Error::invalid("corpus contains no tokens"));
        }

        let mut freq: HashMap<&str, u64> = HashMap::new();
        for s in &surfaces {
            *freq.entry(s).or_default() += 1;
        }
        let mut words: Vec<(&str, u64)> = freq
            .into_iter()
            .filter(|(w, _)| *w != UNK && *w != BOS)
            .collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut names = vec![UNK.to_string(), BOS.to_string()];
        names.extend(words.iter().map(|(w, _)| w.to_string()));
        let vocab = Vocabulary::new(names)?;
        let unk = TokenId(0);
        let bos = TokenId(1);

        let mut stream = vec![bos; order - 1];
        stream.extend(surfaces.iter().map(|s| vocab.lookup(s).unwrap_or(unk)));

        let mut raw: HashMap<Vec<TokenId>, HashMap<TokenId, u64>> = HashMap::new();
        for window in stream.windows(order) {
            let (hist, next) = window.split_at(order - 1);
            *raw.entry(hist.to_vec())
                .or_default()
                .entry(next[0])
                .or_default() += 1;
        }
        let table = raw
            .into_iter()
            .map(|(hist, conts)| {
                let mut counts: Vec<(TokenId, u64)> = conts.into_iter().collect();
                counts.sort_unstable();
                let total = counts.iter().map(|(_, c)| c).sum();
                (hist, Continuations { total, counts })
            })
            .collect();

        Ok(Self {
            order,
            smoothing,
            vocab,
            unk,
            bos,
            table,
            tokenizer,
        })
    }

    pub fn from_file(path: impl AsRef<Path>, order: usize, smoothing: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::train(&text, order, smoothing)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn unk(&self) -> TokenId {
        self.unk
    }

    pub fn bos(&self) -> TokenId {
        self.bos
    }

    fn history(&self, ctx: &[TokenId]) -> Vec<TokenId> {
        let n = self.order - 1;
        let mut hist = Vec::with_capacity(n);
        if ctx.len() < n {
            hist.resize(n - ctx.len(), self.bos);
            hist.extend_from_slice(ctx);
        } else {
            hist.extend_from_slice(&ctx[ctx.len() - n..]);
        }
        hist
    }

    /// Smoothed probability of `next` after `ctx`.
    pub fn prob(&self, ctx: &[TokenId], next: TokenId) -> f64 {
        let v = self.vocab.len() as f64;
        let d = self.smoothing;
        match self.table.get(&self.history(ctx)) {
            Some(c) => {
                let count = c
                    .counts
                    .binary_search_by_key(&next, |(t, _)| *t)
                    .map_or(0, |i| c.counts[i].1);
                (count as f64 + d) / (c.total as f64 + d * v)
            }
            None => 1.0 / v,
        }
    }

    /// Raw count of `next` after the history of `ctx`.
    pub fn count(&self, ctx: &[TokenId], next: TokenId) -> u64 {
        self.table
            .get(&self.history(ctx))
            .and_then(|c| {
                c.counts
                    .binary_search_by_key(&next, |(t, _)| *t)
                    .ok()
                    .map(|i| c.counts[i].1)
            })
            .unwrap_or(0)
    }
}

impl LanguageModel for NgramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_logits(&self, ctx: &[TokenId]) -> Result<LogitVector> {
        self.vocab.check_ids(ctx)?;
        let v = self.vocab.len();
        let d = self.smoothing;
        let logits = match self.table.get(&self.history(ctx)) {
            Some(c) => {
                let denom = (c.total as f64 + d * v as f64).ln();
                let mut out = vec![d.ln() - denom; v];
                for &(t, n) in &c.counts {
                    out[t.index()] = (n as f64 + d).ln() - denom;
                }
                out
            }
            None => vec![-(v as f64).ln(); v],
        };
        Ok(LogitVector(logits))
    }

    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>> {
        Ok(self
            .tokenizer
            .split(text)
            .into_iter()
            .map(|s| self.vocab.lookup(s).unwrap_or(self.unk))
            .collect())
    }

    fn detokenize(&self, ids: &[TokenId]) -> Result<String> {
        self.vocab.check_ids(ids)?;
        Ok(self
            .tokenizer
            .join(ids.iter().filter_map(|&id| self.vocab.surface(id))))
    }
}
