//! Browser demo: a bigram model trained on the opening chapters of Moby Dick,
//! steered with stand-in embeddings.
//!
//! The plain Rust API ([`Demo`], [`quality_curve`]) is what the tests use;
//! the `#[wasm_bindgen]` wrappers at the bottom exchange JSON strings with
//! the page.

use dbs_core::embeddings::{synthetic_embeddings, EmbeddingTable};
use dbs_core::sampling::{modify_logits, softmax};
use dbs_core::scoring::{quality_score, word_spans, StemMatcher};
use dbs_core::{
    DirectedBeamSearch, GuidanceConfig, LanguageModel, NgramModel, QualityConfig, Result,
    SamplingConfig, SimilarityCache, TokenId,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

const CORPUS: &str = include_str!("../assets/corpus.txt");
const SMOOTHING: f64 = 1e-4;
const EMBEDDING_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSeries {
    /// Occurrence count `c` the series is drawn for.
    pub occurrences: u32,
    /// `(perplexity, quality)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Quality as a function of perplexity for `c = 0..=3`.
pub fn quality_curve(
    alpha: f64,
    c_star: f64,
    max_perplexity: f64,
    samples: usize,
) -> Result<Vec<CurveSeries>> {
    let cfg = QualityConfig { alpha, c_star };
    cfg.validate()?;
    let samples = samples.max(2);
    let series = (0..=3)
        .map(|c| CurveSeries {
            occurrences: c,
            points: (0..samples)
                .map(|i| {
                    let pp = max_perplexity * i as f64 / (samples - 1) as f64;
                    (pp, quality_score(c, pp, &cfg))
                })
                .collect(),
        })
        .collect();
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenRow {
    pub token: String,
    pub similarity: f64,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringView {
    /// Whether the guide word has an embedding at all.
    pub guide_found: bool,
    /// Most likely next tokens after steering, best first.
    pub rows: Vec<TokenRow>,
    /// Probability mass on tokens matching the guide word, before and after.
    pub guide_mass: (f64, f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct GenerateRequest {
    pub context: String,
    pub keywords: Vec<String>,
    pub lambda: f64,
    pub b: usize,
    pub s: usize,
    pub k: usize,
    pub max_tokens: usize,
    pub top_p: f64,
    pub seed: u64,
}

impl Default for GenerateRequest {
    fn default() -> Self {
        let g = GuidanceConfig::default();
        Self {
            context: "It is".into(),
            keywords: Vec::new(),
            lambda: g.lambda,
            b: g.beams,
            s: g.candidates,
            k: g.chunk_tokens,
            max_tokens: 40,
            top_p: 0.9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub text: String,
    /// Index of the keyword this word matches.
    pub keyword: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateResponse {
    pub text: String,
    pub segments: Vec<Segment>,
    pub satisfied: usize,
    pub cumulative_q: f64,
    pub tokens_to_satisfaction: Option<usize>,
}

pub struct Demo {
    lm: NgramModel,
    embeddings: EmbeddingTable,
}

impl Demo {
    pub fn new(corpus: &str) -> Result<Self> {
        let lm = NgramModel::train(corpus, 2, SMOOTHING)?;
        let embeddings = synthetic_embeddings(lm.vocab().iter().map(|(_, w)| w), EMBEDDING_DIM, 0);
        Ok(Self { lm, embeddings })
    }

    pub fn bundled() -> Result<Self> {
        Self::new(CORPUS)
    }

    pub fn vocab_size(&self) -> usize {
        self.lm.vocab().len()
    }

    pub fn steering_view(
        &self,
        context: &str,
        guide_word: &str,
        lambda: f64,
        top_n: usize,
    ) -> Result<SteeringView> {
        let cache = SimilarityCache::new(self.lm.vocab(), &self.embeddings);
        let sim = cache.get(guide_word)?;
        let ctx = self.lm.tokenize(context)?;
        let logits = self.lm.next_logits(&ctx)?;
        let before = softmax(&logits, 1.0);
        let after = softmax(&modify_logits(&logits, &sim, lambda)?, 1.0);
        let mut order: Vec<usize> = (0..after.probs.len()).collect();
        order.sort_by(|&a, &b| after.probs[b].total_cmp(&after.probs[a]).then(a.cmp(&b)));
        let matcher = StemMatcher::new(guide_word);
        let mut guide_mass = (0.0, 0.0);
        for (id, surface) in self.lm.vocab().iter() {
            if matcher.occurs_in(surface) {
                guide_mass.0 += before.probs[id.index()];
                guide_mass.1 += after.probs[id.index()];
            }
        }
        let rows = order
            .into_iter()
            .take(top_n)
            .map(|i| TokenRow {
                token: self
                    .lm
                    .vocab()
                    .surface(TokenId(i as u32))
                    .unwrap_or_default()
                    .to_owned(),
                similarity: sim.entries[i],
                before: before.probs[i],
                after: after.probs[i],
            })
            .collect();
        Ok(SteeringView {
            guide_found: sim.guide_found,
            rows,
            guide_mass,
        })
    }

    pub fn generate(&self, req: &GenerateRequest) -> Result<GenerateResponse> {
        let guidance = GuidanceConfig {
            guide_words: req
                .keywords
                .iter()
                .map(|w| w.trim().to_owned())
                .filter(|w| !w.is_empty())
                .collect(),
            lambda: req.lambda,
            chunk_tokens: req.k,
            beams: req.b,
            candidates: req.s,
            max_tokens: req.max_tokens,
        };
        guidance.validate()?;
        let sampling = SamplingConfig {
            top_p: req.top_p,
            seed: req.seed,
            ..SamplingConfig::default()
        };
        sampling.validate()?;
        let cache = SimilarityCache::new(self.lm.vocab(), &self.embeddings);
        let keywords = guidance.guide_words.clone();
        let search = DirectedBeamSearch::new(
            &self.lm,
            &cache,
            guidance,
            sampling,
            QualityConfig::default(),
            &req.context,
        )?;
        let result = search.run()?;
        let mut all = search.context().to_vec();
        all.extend_from_slice(&result.best.tokens);
        let text = self.lm.detokenize(&all)?;
        Ok(GenerateResponse {
            segments: segments(&text, &keywords),
            text,
            satisfied: result.satisfied,
            cumulative_q: result.best.cumulative_q,
            tokens_to_satisfaction: result.tokens_to_satisfaction,
        })
    }
}

/// Splits `text` into words and separators, tagging each word that matches a
/// keyword (by stem).
pub fn segments(text: &str, keywords: &[String]) -> Vec<Segment> {
    let matchers: Vec<StemMatcher> = keywords.iter().map(|k| StemMatcher::new(k)).collect();
    let mut out = Vec::new();
    let mut pos = 0;
    for (s, e) in word_spans(text) {
        if s > pos {
            out.push(Segment {
                text: text[pos..s].to_owned(),
                keyword: None,
            });
        }
        let word = &text[s..e];
        out.push(Segment {
            text: word.to_owned(),
            keyword: matchers.iter().position(|m| m.matches(word)),
        });
        pos = e;
    }
    if pos < text.len() {
        out.push(Segment {
            text: text[pos..].to_owned(),
            keyword: None,
        });
    }
    out
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json(v: &impl Serialize) -> std::result::Result<String, JsError> {
    serde_json::to_string(v).map_err(js_err)
}

/// JSON array of `{occurrences, points: [[pp, q], ...]}`.
#[wasm_bindgen(js_name = qualityCurve)]
pub fn quality_curve_json(
    alpha: f64,
    c_star: f64,
    max_perplexity: f64,
    samples: usize,
) -> std::result::Result<String, JsError> {
    to_json(&quality_curve(alpha, c_star, max_perplexity, samples).map_err(js_err)?)
}

#[wasm_bindgen(js_name = Demo)]
pub struct DemoHandle(Demo);

#[wasm_bindgen(js_class = Demo)]
impl DemoHandle {
    /// Trains the bundled model; takes a moment.
    #[wasm_bindgen(constructor)]
    pub fn new() -> std::result::Result<DemoHandle, JsError> {
        Demo::bundled().map(DemoHandle).map_err(js_err)
    }

    #[wasm_bindgen(js_name = vocabSize)]
    pub fn vocab_size(&self) -> usize {
        self.0.vocab_size()
    }

    /// JSON [`SteeringView`].
    pub fn steer(
        &self,
        context: &str,
        guide_word: &str,
        lambda: f64,
        top_n: usize,
    ) -> std::result::Result<String, JsError> {
        to_json(
            &self
                .0
                .steering_view(context, guide_word, lambda, top_n)
                .map_err(js_err)?,
        )
    }

    /// Takes a JSON [`GenerateRequest`] (missing fields get defaults) and
    /// returns a JSON [`GenerateResponse`].
    pub fn generate(&self, request: &str) -> std::result::Result<String, JsError> {
        let req: GenerateRequest = serde_json::from_str(request).map_err(js_err)?;
        to_json(&self.0.generate(&req).map_err(js_err)?)
    }
}
