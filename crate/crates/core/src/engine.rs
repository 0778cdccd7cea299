//! Directed Beam Search.
//!
//! Generation proceeds in chunks of `k` tokens. The first step produces `b`
//! independent chunks from the context; every later step extends each of the
//! `b` beams with `s` candidate chunks and keeps the `b` candidates with the
//! highest cumulative quality.
//!
//! Within a chunk, tokens are drawn one at a time. While the beam's current
//! guide word has not appeared in the chunk, logits are steered toward it;
//! after its first appearance the rest of the chunk is unguided. A chunk that
//! contains the guide word moves its beam on to the next guide word.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingTable, SimilarityCache, SimilarityTable};
use crate::lm::{LanguageModel, TokenId};
use crate::sampling::{modify_logits, next_token, RngStream, SamplingConfig};
use crate::scoring::{
    cumulative_score, quality_score, Chunk, OccurrenceScanState, QualityConfig, StemMatcher,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub guide_words: Vec<String>,
    pub lambda: f64,
    /// Tokens per chunk.
    #[serde(rename = "k")]
    pub chunk_tokens: usize,
    /// Beams kept after each step.
    #[serde(rename = "b")]
    pub beams: usize,
    /// Candidate chunks generated per beam.
    #[serde(rename = "s")]
    pub candidates: usize,
    pub max_tokens: usize,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            guide_words: Vec::new(),
            lambda: 20.0,
            chunk_tokens: 5,
            beams: 7,
            candidates: 10,
            max_tokens: 90,
        }
    }
}

impl GuidanceConfig {
    pub fn with_guides(words: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            guide_words: words.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        for (name, v) in [
            ("k", self.chunk_tokens),
            ("b", self.beams),
            ("s", self.candidates),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        if self.max_tokens < self.chunk_tokens {
            return Err(Error::invalid(format!(
                "max_tokens ({}) must be at least k ({})",
                self.max_tokens, self.chunk_tokens
            )));
        }
        for w in &self.guide_words {
            crate::embeddings::validate_guide_word(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    /// Generated tokens, context excluded.
    pub tokens: Vec<TokenId>,
    pub chunks: Vec<Chunk>,
    pub cumulative_q: f64,
    /// Index of the guide word currently targeted; equals the number found.
    pub guide_index: usize,
    pub guidance_active: bool,
    pub scan_state: OccurrenceScanState,
    /// For each guide word found, the generated-token count at its first match.
    pub guide_hits: Vec<usize>,
}

impl Beam {
    pub fn empty(guides: usize) -> Self {
        Self {
            tokens: Vec::new(),
            chunks: Vec::new(),
            cumulative_q: 0.0,
            guide_index: 0,
            guidance_active: guides > 0,
            scan_state: OccurrenceScanState::default(),
            guide_hits: Vec::new(),
        }
    }
}

/// One candidate considered during a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub parent: usize,
    pub candidate: usize,
    pub occurrences: u32,
    pub perplexity: f64,
    pub quality: f64,
    pub cumulative_q: f64,
    pub guide_index: usize,
    pub survived: bool,
}

pub fn write_trace(records: &[TraceRecord], mut out: impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GenerationResult {
    pub best: Beam,
    pub finals: Vec<Beam>,
    /// Detokenized text of the best beam (generated part only).
    pub text: String,
    /// Guide words reached by the best beam.
    pub satisfied: usize,
    /// Generated-token count at which the best beam found its last guide word,
    /// if it found all of them.
    pub tokens_to_satisfaction: Option<usize>,
    pub trace: Vec<TraceRecord>,
}

struct Guide {
    table: Arc<SimilarityTable>,
    matcher: StemMatcher,
}

/// A configured search over one language model and context.
pub struct DirectedBeamSearch<'a> {
    lm: &'a dyn LanguageModel,
    guides: Vec<Guide>,
    guidance: GuidanceConfig,
    sampling: SamplingConfig,
    quality: QualityConfig,
    context: Vec<TokenId>,
    parallel: bool,
}

impl<'a> DirectedBeamSearch<'a> {
    pub fn new(
        lm: &'a dyn LanguageModel,
        similarities: &SimilarityCache<'_>,
        guidance: GuidanceConfig,
        sampling: SamplingConfig,
        quality: QualityConfig,
        context: &str,
    ) -> Result<Self> {
        guidance.validate()?;
        sampling.validate()?;
        quality.validate()?;
        let context = lm.tokenize(context)?;
        let guides = guidance
            .guide_words
            .iter()
            .map(|w| {
                let table = similarities.get(w)?;
                if table.len() != lm.vocab_size() {
                    return Err(Error::invalid(
                        "similarity table was built for a different vocabulary",
                    ));
                }
                Ok(Guide {
                    table,
                    matcher: StemMatcher::new(w),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lm,
            guides,
            guidance,
            sampling,
            quality,
            context,
            parallel: true,
        })
    }

    /// Expand candidates on the rayon pool when the model allows it (default).
    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    pub fn context(&self) -> &[TokenId] {
        &self.context
    }

    pub fn guidance(&self) -> &GuidanceConfig {
        &self.guidance
    }

    fn chunk_len(&self, generated: usize) -> usize {
        self.guidance
            .chunk_tokens
            .min(self.guidance.max_tokens.saturating_sub(generated))
    }

    /// Extends `parent` by one chunk of `len` tokens.
    pub fn generate_chunk(&self, parent: &Beam, len: usize, rng: &mut RngStream) -> Result<Beam> {
        if len == 0 {
            return Err(Error::invalid("chunk length must be at least 1"));
        }
        let vocab_size = self.lm.vocab_size();
        let mut beam = parent.clone();
        let target = (beam.guide_index < self.guides.len()).then_some(beam.guide_index);
        beam.guidance_active = target.is_some();

        let mut ctx = Vec::with_capacity(self.context.len() + beam.tokens.len() + len);
        ctx.extend_from_slice(&self.context);
        ctx.extend_from_slice(&beam.tokens);
        let start = beam.tokens.len();
        let mut nll = 0.0;
        let mut occurrences = 0u32;
        let mut first_hit = None;

        for _ in 0..len {
            let raw = self.lm.next_logits(&ctx)?;
            if raw.len() != vocab_size {
                return Err(Error::invalid(format!(
                    "model returned {} logits for a vocabulary of {vocab_size}",
                    raw.len()
                )));
            }
            let tok = match target {
                Some(j) if beam.guidance_active => {
                    let steered = modify_logits(&raw, &self.guides[j].table, self.guidance.lambda)?;
                    next_token(&steered, &self.sampling, rng)
                }
                _ => next_token(&raw, &self.sampling, rng),
            };
            nll -= raw.log_prob(tok);
            ctx.push(tok);
            beam.tokens.push(tok);

            if let Some(j) = target {
                let text = self.lm.detokenize(&beam.tokens)?;
                let out = self.guides[j].matcher.count_new(&text, beam.scan_state);
                beam.scan_state = out.state;
                if out.count > 0 {
                    if first_hit.is_none() {
                        first_hit = Some(beam.tokens.len());
                        beam.guidance_active = false;
                    }
                    occurrences += out.count;
                }
            }
        }

        let perplexity = (nll / len as f64).exp();
        beam.chunks.push(Chunk {
            tokens: beam.tokens[start..].to_vec(),
            occurrences,
            perplexity,
            quality: quality_score(occurrences, perplexity, &self.quality),
            guide_index: target,
        });
        beam.cumulative_q = cumulative_score(&beam.chunks);
        if let Some(hit) = first_hit {
            beam.guide_index += 1;
            beam.guide_hits.push(hit);
        }
        beam.guidance_active = beam.guide_index < self.guides.len();
        Ok(beam)
    }

    fn run_jobs(
        &self,
        parents: &[Beam],
        jobs: &[(usize, usize)],
        step: usize,
        len: usize,
    ) -> Result<Vec<Beam>> {
        let seed = self.sampling.seed;
        let one = |&(p, c): &(usize, usize)| {
            let mut rng = RngStream::derive(seed, step as u64, p as u64, c as u64);
            self.generate_chunk(&parents[p], len, &mut rng)
        };
        #[cfg(feature = "parallel")]
        if self.parallel && self.lm.supports_concurrency() && jobs.len() > 1 {
            use rayon::prelude::*;
            return jobs.par_iter().map(one).collect();
        }
        jobs.iter().map(one).collect()
    }

    /// The first step: `b` chunks from the bare context.
    pub fn initial_beams(&self) -> Result<(Vec<Beam>, Vec<TraceRecord>)> {
        let root = [Beam::empty(self.guides.len())];
        let jobs: Vec<(usize, usize)> = (0..self.guidance.beams).map(|i| (i, 0)).collect();
        let len = self.chunk_len(0);
        let seed = self.sampling.seed;
        // every first chunk grows from the same root but owns stream (0, i, 0)
        let one = |&(i, c): &(usize, usize)| {
            let mut rng = RngStream::derive(seed, 0, i as u64, c as u64);
            self.generate_chunk(&root[0], len, &mut rng)
        };
        #[cfg(feature = "parallel")]
        let beams: Vec<Beam> = if self.parallel && self.lm.supports_concurrency() && jobs.len() > 1
        {
            use rayon::prelude::*;
            jobs.par_iter().map(one).collect::<Result<_>>()?
        } else {
            jobs.iter().map(one).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let beams: Vec<Beam> = jobs.iter().map(one).collect::<Result<_>>()?;

        let trace = beams
            .iter()
            .enumerate()
            .map(|(i, b)| trace_record(0, i, 0, b, true))
            .collect();
        Ok((beams, trace))
    }

    /// Extends every beam with `s` candidates and keeps the best `b`.
    ///
    /// Candidates are ranked by cumulative quality, descending; ties go to the
    /// lower (parent, candidate) pair.
    pub fn step(&self, beams: &[Beam], step: usize) -> Result<(Vec<Beam>, Vec<TraceRecord>)> {
        if beams.len() != self.guidance.beams {
            return Err(Error::invalid(format!(
                "step expects {} beams, got {}",
                self.guidance.beams,
                beams.len()
            )));
        }
        let generated = beams[0].tokens.len();
        if beams.iter().any(|b| b.tokens.len() != generated) {
            return Err(Error::invalid("beams have different lengths"));
        }
        let len = self.chunk_len(generated);
        if len == 0 {
            return Err(Error::invalid("token budget already exhausted"));
        }
        let s = self.guidance.candidates;
        let jobs: Vec<(usize, usize)> = (0..beams.len())
            .flat_map(|p| (0..s).map(move |c| (p, c)))
            .collect();
        let candidates = self.run_jobs(beams, &jobs, step, len)?;

        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| {
            candidates[b]
                .cumulative_q
                .total_cmp(&candidates[a].cumulative_q)
                .then(a.cmp(&b))
        });
        let keep = &order[..self.guidance.beams.min(order.len())];
        let mut survived = vec![false; candidates.len()];
        for &i in keep {
            survived[i] = true;
        }
        let trace = jobs
            .iter()
            .zip(&candidates)
            .zip(&survived)
            .map(|((&(p, c), beam), &alive)| trace_record(step, p, c, beam, alive))
            .collect();
        let kept = keep.iter().map(|&i| candidates[i].clone()).collect();
        Ok((kept, trace))
    }

    pub fn run(&self) -> Result<GenerationResult> {
        let (mut beams, mut trace) = self.initial_beams()?;
        let mut step = 1;
        while beams[0].tokens.len() < self.guidance.max_tokens {
            let (next, records) = self.step(&beams, step)?;
            beams = next;
            trace.extend(records);
            step += 1;
        }
        let best_idx = (0..beams.len())
            .reduce(|best, i| {
                if beams[i].cumulative_q > beams[best].cumulative_q {
                    i
                } else {
                    best
                }
            })
            .expect("at least one beam");
        let best = beams[best_idx].clone();
        let n = self.guides.len();
        let tokens_to_satisfaction = if n == 0 {
            Some(0)
        } else if best.guide_index == n {
            best.guide_hits.last().copied()
        } else {
            None
        };
        Ok(GenerationResult {
            text: self.lm.detokenize(&best.tokens)?,
            satisfied: best.guide_index,
            tokens_to_satisfaction,
            best,
            finals: beams,
            trace,
        })
    }
}

fn trace_record(
    step: usize,
    parent: usize,
    candidate: usize,
    beam: &Beam,
    survived: bool,
) -> TraceRecord {
    let last = beam.chunks.last().expect("beam has a chunk");
    TraceRecord {
        step,
        parent,
        candidate,
        occurrences: last.occurrences,
        perplexity: last.perplexity,
        quality: last.quality,
        cumulative_q: beam.cumulative_q,
        guide_index: beam.guide_index,
        survived,
    }
}

/// One-shot generation with a fresh similarity cache.
pub fn generate(
    lm: &dyn LanguageModel,
    embeddings: &EmbeddingTable,
    guidance: GuidanceConfig,
    sampling: SamplingConfig,
    quality: QualityConfig,
    context: &str,
) -> Result<GenerationResult> {
    let cache = SimilarityCache::new(lm.vocab(), embeddings);
    DirectedBeamSearch::new(lm, &cache, guidance, sampling, quality, context)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::synthetic_embeddings;
    use crate::lm::NgramModel;
    use crate::sampling::SamplingMode;
    use crate::scoring::chunk_perplexity;

    const CORPUS: &str = "the cat sat on the mat . the dog sat on the log . \
        a cat and a dog met on the mat . the bird sang . the cat ran .";

    fn setup() -> (NgramModel, EmbeddingTable) {
        let lm = NgramModel::train(CORPUS, 2, 0.1).unwrap();
        let emb = synthetic_embeddings(lm.vocab().iter().map(|(_, s)| s), 16, 1);
        (lm, emb)
    }

    fn search<'a>(
        lm: &'a NgramModel,
        cache: &SimilarityCache<'_>,
        guidance: GuidanceConfig,
        sampling: SamplingConfig,
    ) -> DirectedBeamSearch<'a> {
        DirectedBeamSearch::new(
            lm,
            cache,
            guidance,
            sampling,
            QualityConfig::default(),
            "the",
        )
        .unwrap()
    }

    #[test]
    fn huge_lambda_emits_guide_first_then_unguided() {
        let (lm, emb) = setup();
        let cache = SimilarityCache::new(lm.vocab(), &emb);
        let guidance = GuidanceConfig {
            guide_words: vec!["bird".into()],
            lambda: 1e6,
            chunk_tokens: 4,
            beams: 1,
            candidates: 1,
            max_tokens: 4,
        };
        let dbs = search(&lm, &cache, guidance, SamplingConfig::greedy());
        let beam = dbs
            .generate_chunk(&Beam::empty(1), 4, &mut RngStream::from_seed(0))
            .unwrap();
        let bird = lm.vocab().lookup("bird").unwrap();
        assert_eq!(beam.tokens[0], bird);
        assert_eq!(beam.chunks[0].occurrences, 1);
        assert_eq!(beam.guide_index, 1);
        assert_eq!(beam.guide_hits, vec![1]);
        // the remaining tokens follow the plain greedy path
        let mut ctx = dbs.context().to_vec();
        ctx.push(bird);
        for &t in &beam.tokens[1..] {
            assert_eq!(lm.next_logits(&ctx).unwrap().argmax(), Some(t));
            ctx.push(t);
        }
    }

    #[test]
    fn exhausted_guides_use_c_star() {
        let (lm, emb) = setup();
        let cache = SimilarityCache::new(lm.vocab(), &emb);
        let guidance = GuidanceConfig {
            guide_words: vec!["cat".into()],
            lambda: 20.0,
            chunk_tokens: 3,
            beams: 1,
            candidates: 1,
            max_tokens: 3,
        };
        let dbs = search(&lm, &cache, guidance, SamplingConfig::greedy());
        let mut parent = Beam::empty(1);
        parent.guide_index = 1;
        let beam = dbs
            .generate_chunk(&parent, 3, &mut RngStream::from_seed(0))
            .unwrap();
        let chunk = &beam.chunks[0];
        assert_eq!(chunk.occurrences, 0);
        assert_eq!(chunk.guide_index, None);
        let expected = quality_score(0, chunk.perplexity, &QualityConfig::default());
        assert_eq!(chunk.quality, expected);
        assert!(!beam.guidance_active);
    }

    #[test]
    fn chunk_perplexity_matches_scoring() {
        let (lm, emb) = setup();
        let cache = SimilarityCache::new(lm.vocab(), &emb);
        let guidance = GuidanceConfig {
            guide_words: vec!["dog".into(), "mat".into()],
            lambda: 5.0,
            chunk_tokens: 3,
            beams: 2,
            candidates: 2,
            max_tokens: 9,
        };
        let dbs = search(
            &lm,
            &cache,
            guidance,
            SamplingConfig {
                seed: 4,
                ..Default::default()
            },
        );
        let result = dbs.run().unwrap();
        for beam in &result.finals {
            let mut prefix = dbs.context().to_vec();
            for chunk in &beam.chunks {
                let pp = chunk_perplexity(&lm, &prefix, &chunk.tokens).unwrap();
                assert!((pp - chunk.perplexity).abs() <= 1e-12 * pp);
                prefix.extend(&chunk.tokens);
            }
            assert_eq!(beam.cumulative_q, cumulative_score(&beam.chunks));
        }
    }

    #[test]
    fn budget_is_exact_with_truncated_final_chunk() {
        let (lm, emb) = setup();
        let cache = SimilarityCache::new(lm.vocab(), &emb);
        let guidance = GuidanceConfig {
            guide_words: vec!["dog".into()],
            lambda: 5.0,
            chunk_tokens: 4,
            beams: 3,
            candidates: 2,
            max_tokens: 10,
        };
        let result = search(&lm, &cache, guidance, SamplingConfig::default())
            .run()
            .unwrap();
        assert_eq!(result.finals.len(), 3);
        for b in &result.finals {
            assert_eq!(b.tokens.len(), 10);
            let lens: Vec<usize> = b.chunks.iter().map(|c| c.tokens.len()).collect();
            assert_eq!(lens, vec![4, 4, 2]);
        }
    }

    #[test]
    fn single_chunk_budget_needs_no_step() {
        let (lm, emb) = setup();
        let cache = SimilarityCache::new(lm.vocab(), &emb);
        let guidance = GuidanceConfig {
            guide_words: vec!["dog".into()],
            chunk_tokens: 5,
            max_tokens: 5,
            beams: 3,
            candidates: 4,
            lambda: 3.0,
        };
        let result = search(&lm, &cache, guidance, SamplingConfig::default())
            .run()
            .unwrap();
        assert!(result.trace.iter().all(|r| r.step == 0));
        assert_eq!(result.trace.len(), 3);
        assert!(result.finals.iter().all(|b| b.chunks.len() == 1));
    }

    #[test]
    fn steps_keep_b_best() {
        let (lm, emb) = setup();
        let cache = SimilarityCache::new(lm.vocab(), &emb);
        let guidance = GuidanceConfig {
            guide_words: vec!["bird".into()],
            lambda: 2.0,
            chunk_tokens: 2,
            beams: 2,
            candidates: 3,
            max_tokens: 4,
        };
        let dbs = search(
            &lm,
            &cache,
            guidance,
            SamplingConfig {
                seed: 11,
                ..Default::default()
            },
        );
        let (beams, _) = dbs.initial_beams().unwrap();
        let (kept, trace) = dbs.step(&beams, 1).unwrap();
        assert_eq!(trace.len(), 6);
        assert_eq!(kept.len(), 2);
        let worst_kept = kept
            .iter()
            .map(|b| b.cumulative_q)
            .fold(f64::INFINITY, f64::min);
        for r in trace.iter().filter(|r| !r.survived) {
            assert!(r.cumulative_q <= worst_kept);
        }
        assert!(dbs.step(&beams[..1], 1).is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let (lm, emb) = setup();
        let guidance = GuidanceConfig {
            guide_words: vec!["dog".into(), "bird".into()],
            lambda: 4.0,
            chunk_tokens: 3,
            beams: 3,
            candidates: 3,
            max_tokens: 12,
        };
        let sampling = SamplingConfig {
            seed: 99,
            ..Default::default()
        };
        let a = generate(
            &lm,
            &emb,
            guidance.clone(),
            sampling,
            QualityConfig::default(),
            "the",
        )
        .unwrap();
        let b = generate(
            &lm,
            &emb,
            guidance.clone(),
            sampling,
            QualityConfig::default(),
            "the",
        )
        .unwrap();
        assert_eq!(a.finals, b.finals);
        assert_eq!(a.trace, b.trace);
        let cache = SimilarityCache::new(lm.vocab(), &emb);
        let serial = DirectedBeamSearch::new(
            &lm,
            &cache,
            guidance,
            sampling,
            QualityConfig::default(),
            "the",
        )
        .unwrap()
        .parallel(false)
        .run()
        .unwrap();
        assert_eq!(serial.finals, a.finals);
    }

    #[test]
    fn empty_guides_match_unguided_sampling() {
        let (lm, emb) = setup();
        let guidance = GuidanceConfig {
            guide_words: vec![],
            chunk_tokens: 4,
            beams: 1,
            candidates: 1,
            max_tokens: 12,
            lambda: 20.0,
        };
        let sampling = SamplingConfig {
            seed: 5,
            ..Default::default()
        };
        let r = generate(
            &lm,
            &emb,
            guidance,
            sampling,
            QualityConfig::default(),
            "the",
        )
        .unwrap();
        let mut ctx = lm.tokenize("the").unwrap();
        let mut expected = Vec::new();
        for chunk in 0..3u64 {
            let mut rng = RngStream::derive(5, chunk, 0, 0);
            for _ in 0..4 {
                let t = next_token(&lm.next_logits(&ctx).unwrap(), &sampling, &mut rng);
                ctx.push(t);
                expected.push(t);
            }
        }
        assert_eq!(r.best.tokens, expected);
        assert_eq!(r.tokens_to_satisfaction, Some(0));
    }

    #[test]
    fn guide_index_never_decreases() {
        let (lm, emb) = setup();
        let guidance = GuidanceConfig {
            guide_words: vec!["dog".into(), "bird".into(), "mat".into()],
            lambda: 8.0,
            chunk_tokens: 2,
            beams: 3,
            candidates: 3,
            max_tokens: 16,
        };
        let r = generate(
            &lm,
            &emb,
            guidance,
            SamplingConfig {
                seed: 2,
                ..Default::default()
            },
            QualityConfig::default(),
            "the",
        )
        .unwrap();
        for b in &r.finals {
            let mut last = 0;
            let mut idx = 0;
            for c in &b.chunks {
                if let Some(j) = c.guide_index {
                    assert!(j >= last);
                    last = j;
                }
                if c.occurrences > 0 && c.guide_index.is_some() {
                    idx += 1;
                }
            }
            assert_eq!(idx, b.guide_index);
            assert!(b.guide_index <= 3);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (lm, emb) = setup();
        let cache = SimilarityCache::new(lm.vocab(), &emb);
        for g in [
            GuidanceConfig {
                beams: 0,
                ..Default::default()
            },
            GuidanceConfig {
                max_tokens: 3,
                ..Default::default()
            },
            GuidanceConfig {
                lambda: -1.0,
                ..Default::default()
            },
            GuidanceConfig::with_guides(["two words"]),
        ] {
            let r = DirectedBeamSearch::new(
                &lm,
                &cache,
                g,
                SamplingConfig::default(),
                QualityConfig::default(),
                "the",
            );
            assert!(matches!(r, Err(Error::InvalidInput(_))));
        }
        let bad_sampling = SamplingConfig {
            top_p: 1.5,
            mode: SamplingMode::Stochastic,
            ..Default::default()
        };
        assert!(DirectedBeamSearch::new(
            &lm,
            &cache,
            GuidanceConfig::default(),
            bad_sampling,
            QualityConfig::default(),
            ""
        )
        .is_err());
    }

    #[test]
    fn trace_is_line_delimited_json() {
        let rec = TraceRecord {
            step: 1,
            parent: 0,
            candidate: 2,
            occurrences: 1,
            perplexity: 3.5,
            quality: 0.3,
            cumulative_q: 0.6,
            guide_index: 1,
            survived: true,
        };
        let mut buf = Vec::new();
        write_trace(&[rec.clone(), rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(v["survived"], true);
        assert_eq!(v["candidate"], 2);
    }
}
