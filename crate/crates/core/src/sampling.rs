//! From logits to a sampled token: guidance, temperature softmax, nucleus
//! filtering and seeded draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::SimilarityTable;
use crate::lm::{LogitVector, TokenId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Stochastic,
    /// Argmax decoding; ignores `top_p` and the seed. Used for exact testing.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub top_p: f64,
    pub temperature: f64,
    pub seed: u64,
    pub mode: SamplingMode,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            top_p: 0.9,
            temperature: 1.0,
            seed: 0,
            mode: SamplingMode::Stochastic,
        }
    }
}

impl SamplingConfig {
    pub fn greedy() -> Self {
        Self {
            mode: SamplingMode::Greedy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::invalid(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// Probabilities over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub probs: Vec<f64>,
}

impl Distribution {
    /// Ids with non-zero probability, ascending.
    pub fn support(&self) -> Vec<TokenId> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| TokenId::from(i))
            .collect()
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn argmax(&self) -> TokenId {
        LogitVector(self.probs.clone())
            .argmax()
            .expect("distribution over an empty vocabulary")
    }
}

/// `l'_i = l_i + λ·sim_i`.
pub fn modify_logits(
    logits: &LogitVector,
    sim: &SimilarityTable,
    lambda: f64,
) -> Result<LogitVector> {
    if logits.len() != sim.len() {
        return Err(Error::invalid(format!(
            "logits have length {} but the similarity table has {}",
            logits.len(),
            sim.len()
        )));
    }
    Ok(LogitVector(
        logits
            .as_slice()
            .iter()
            .zip(&sim.entries)
            .map(|(l, s)| l + lambda * s)
            .collect(),
    ))
}

/// Softmax of `logits / temperature`, with max subtraction.
pub fn softmax(logits: &LogitVector, temperature: f64) -> Distribution {
    let l = logits.as_slice();
    let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = l.iter().map(|v| ((v - max) / temperature).exp()).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Distribution { probs }
}

/// Keeps the shortest prefix of tokens, ordered by descending probability and
/// then ascending id, whose mass reaches `p`, and renormalises over it.
pub fn nucleus_filter(dist: &Distribution, p: f64) -> Distribution {
    if p >= 1.0 {
        return dist.clone();
    }
    let probs = &dist.probs;
    let mut ranked: Vec<(f64, u32)> = probs
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > 0.0)
        .map(|(i, &q)| (q, i as u32))
        .collect();
    let by_rank = |a: &(f64, u32), b: &(f64, u32)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));

    // Grow a sorted head until it holds the nucleus; avoids sorting the
    // whole vocabulary when the mass is concentrated.
    let len = ranked.len();
    let mut head = len.min(256);
    let mut sorted = 0;
    let mut cum = 0.0;
    let keep = loop {
        if head < len {
            ranked[sorted..].select_nth_unstable_by(head - sorted - 1, by_rank);
        }
        ranked[sorted..head].sort_unstable_by(by_rank);
        let cut = ranked[sorted..head].iter().position(|&(q, _)| {
            cum += q;
            cum >= p
        });
        match cut {
            Some(r) => break sorted + r + 1,
            None if head == len => break len,
            None => {
                sorted = head;
                head = (head * 4).min(len);
            }
        }
    };

    let kept = &ranked[..keep];
    let mass: f64 = kept.iter().map(|&(q, _)| q).sum();
    let mut out = vec![0.0; probs.len()];
    for &(q, i) in kept {
        out[i as usize] = q / mass;
    }
    Distribution { probs: out }
}

/// A seeded random stream, one per (step, beam, candidate).
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a seed and a key path into a new seed.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(seed), |h, &p| splitmix(h ^ p))
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Stream for candidate `candidate` of parent `beam` at `step`.
    pub fn derive(seed: u64, step: u64, beam: u64, candidate: u64) -> Self {
        Self::from_seed(mix_seed(seed, &[step, beam, candidate]))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.gen::<f64>()
    }
}

/// Inverse-CDF draw over ascending ids (stochastic) or argmax (greedy).
pub fn sample_token(dist: &Distribution, rng: &mut RngStream, mode: SamplingMode) -> TokenId {
    match mode {
        SamplingMode::Greedy => dist.argmax(),
        SamplingMode::Stochastic => {
            let u = rng.uniform();
            let mut cum = 0.0;
            let mut last = None;
            for (i, &p) in dist.probs.iter().enumerate() {
                if p > 0.0 {
                    cum += p;
                    last = Some(i);
                    if u < cum {
                        return TokenId::from(i);
                    }
                }
            }
            TokenId::from(last.expect("distribution has empty support"))
        }
    }
}

/// The whole pipeline for one position: softmax at `cfg.temperature`, nucleus
/// at `cfg.top_p`, then a draw. Greedy mode takes the argmax of the logits.
pub fn next_token(logits: &LogitVector, cfg: &SamplingConfig, rng: &mut RngStream) -> TokenId {
    match cfg.mode {
        SamplingMode::Greedy => logits.argmax().expect("empty logits"),
        SamplingMode::Stochastic => {
            let dist = nucleus_filter(&softmax(logits, cfg.temperature), cfg.top_p);
            sample_token(&dist, rng, SamplingMode::Stochastic)
        }
    }
}
