//! Directed Beam Search (DBS).
//!
//! A decoding-time method for lexically constrained generation: the logits of
//! any autoregressive language model are nudged toward tokens that are close
//! (in a static word-embedding space) to the current guide word, and a chunked
//! beam search keeps the candidates that contain the guide word while staying
//! fluent.
//!
//! The crate is organised bottom-up:
//!
//! - [`lm`]: the [`LanguageModel`] abstraction and a count-based n-gram model.
//! - [`embeddings`]: GloVe-format loading and per-guide-word similarity tables.
//! - [`sampling`]: logit steering, softmax, nucleus filtering and seeded draws.
//! - [`scoring`]: stemming, occurrence detection, perplexity and quality score.
//! - [`engine`]: the beam search itself.
//! - [`bridge`]: line-delimited JSON protocol for out-of-process models.
//! - [`eval`]: the keyword-to-phrase evaluation harness.

pub mod bridge;
pub mod embeddings;
pub mod engine;
mod error;
pub mod eval;
pub mod lm;
pub mod sampling;
pub mod scoring;

pub use embeddings::{EmbeddingTable, SimilarityCache, SimilarityTable};
pub use engine::{Beam, DirectedBeamSearch, GenerationResult, GuidanceConfig};
pub use error::{Error, Result};
pub use lm::{LanguageModel, LogitVector, NgramModel, TokenId, Vocabulary};
pub use sampling::{SamplingConfig, SamplingMode};
pub use scoring::{Chunk, QualityConfig};
