//! Chunk scoring: guide-word occurrences, perplexity and the quality score
//! `Q = exp(-(c + α·PP))` for `c > 0`, `exp(-(c* + α·PP))` otherwise.

mod occurrence;
mod stem;

use serde::{Deserialize, Serialize};

use crate::lm::{LanguageModel, TokenId};
use crate::{Error, Result};

pub use occurrence::{
    count_new_occurrences, word_spans, words, OccurrenceScanState, ScanOutcome, StemMatcher,
};
pub use stem::stem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityConfig {
    /// Weight of perplexity against occurrence count.
    pub alpha: f64,
    /// Penalty used in place of `c` when the guide word is absent.
    pub c_star: f64,
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self {
            alpha: 0.001,
            c_star: 2.0,
        }
    }
}

impl QualityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !self.c_star.is_finite() {
            return Err(Error::invalid("c_star must be finite"));
        }
        Ok(())
    }
}

pub fn quality_score(occurrences: u32, perplexity: f64, cfg: &QualityConfig) -> f64 {
    let c = if occurrences > 0 {
        occurrences as f64
    } else {
        cfg.c_star
    };
    (-(c + cfg.alpha * perplexity)).exp()
}

/// One unit of beam expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub tokens: Vec<TokenId>,
    /// Occurrences of the chunk's guide word among its new words.
    pub occurrences: u32,
    pub perplexity: f64,
    pub quality: f64,
    /// Index of the guide word this chunk was steered toward, if any.
    pub guide_index: Option<usize>,
}

/// `exp` of the mean NLL of `chunk` after `prefix` (context plus the beam so far).
pub fn chunk_perplexity<M: LanguageModel + ?Sized>(
    lm: &M,
    prefix: &[TokenId],
    chunk: &[TokenId],
) -> Result<f64> {
    if chunk.is_empty() {
        return Err(Error::invalid("chunk is empty"));
    }
    Ok(lm.sequence_nll(prefix, chunk)?.exp())
}

/// Sum of chunk qualities.
pub fn cumulative_score(chunks: &[Chunk]) -> f64 {
    chunks.iter().map(|c| c.quality).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{NgramModel, UniformModel};
    use proptest::prelude::*;

    const E_INV: f64 = 0.367_879_441_171_442_33;

    #[test]
    fn quality_examples() {
        let cfg = QualityConfig::default();
        let q = quality_score(1, 10.0, &cfg);
        assert!((q - (-1.01f64).exp()).abs() < 1e-15);
        assert!((q - 0.36422).abs() < 1e-5);
        assert_eq!(quality_score(0, 37.0, &cfg), quality_score(2, 37.0, &cfg));
    }

    #[test]
    fn uniform_chunk_perplexity() {
        let lm = UniformModel::with_size(50).unwrap();
        let pp = chunk_perplexity(&lm, &[TokenId(1)], &[TokenId(2), TokenId(3)]).unwrap();
        assert!((pp - 50.0).abs() < 1e-9);
        assert!(chunk_perplexity(&lm, &[], &[]).is_err());
    }

    #[test]
    fn deterministic_continuation_has_unit_perplexity() {
        // with vanishing smoothing, "a" is always followed by "b"
        let lm = NgramModel::train("a b a b a b a b", 2, 1e-12).unwrap();
        let toks = lm.tokenize("a b").unwrap();
        let pp = chunk_perplexity(&lm, &toks[..1], &toks[1..]).unwrap();
        assert!((pp - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cumulative_sums_and_commutes() {
        let chunk = |q| Chunk {
            tokens: vec![],
            occurrences: 0,
            perplexity: 1.0,
            quality: q,
            guide_index: None,
        };
        assert_eq!(cumulative_score(&[chunk(0.3)]), 0.3);
        assert!((cumulative_score(&[chunk(0.3), chunk(0.2)]) - 0.5).abs() < 1e-15);
        assert_eq!(
            cumulative_score(&[chunk(0.3), chunk(0.2)]),
            cumulative_score(&[chunk(0.2), chunk(0.3)])
        );
    }

    proptest! {
        #[test]
        fn quality_is_bounded(c in 0u32..20, pp in 1e-6f64..1e6) {
            let q = quality_score(c, pp, &QualityConfig::default());
            prop_assert!(q > 0.0 || pp > 1e5);
            prop_assert!(q <= E_INV);
        }

        #[test]
        fn one_occurrence_is_preferred(pp in 0.0f64..1e5, m in 2u32..50) {
            let cfg = QualityConfig::default();
            let q1 = quality_score(1, pp, &cfg);
            prop_assert!(q1 > quality_score(0, pp, &cfg));
            prop_assert!(q1 > quality_score(m, pp, &cfg));
        }

        #[test]
        fn quality_decreases(c in 1u32..20, pp in 0.0f64..1e4, dpp in 1e-3f64..1e3) {
            let cfg = QualityConfig::default();
            prop_assert!(quality_score(c, pp, &cfg) > quality_score(c, pp + dpp, &cfg));
            prop_assert!(quality_score(c, pp, &cfg) > quality_score(c + 1, pp, &cfg));
        }

        #[test]
        fn occurrence_outweighs_small_perplexity_change(c in 1u32..10, pp in 0.0f64..5000.0, delta in -999.0f64..999.0) {
            let cfg = QualityConfig::default();
            let pp2 = (pp + delta).max(0.0);
            prop_assert!(quality_score(c, pp, &cfg) > quality_score(c + 1, pp2, &cfg));
        }
    }
}
