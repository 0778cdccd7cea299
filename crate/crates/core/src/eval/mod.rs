//! Keyword-to-phrase evaluation.
//!
//! Keyword sets are drawn from a frequency-ranked word list, each set guides
//! one generation from a fixed context, and every run is scored by success
//! rate, evaluator perplexity and success length. [`run_sweep`] repeats this
//! over a hyperparameter grid and aggregates the means per grid point.

mod keywords;
mod metrics;

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::embeddings::{EmbeddingTable, SimilarityCache};
use crate::engine::{DirectedBeamSearch, GuidanceConfig};
use crate::lm::LanguageModel;
use crate::sampling::{mix_seed, SamplingConfig};
use crate::scoring::QualityConfig;
use crate::{Error, Result};

pub use keywords::{
    build_keyword_sets, read_word_list, sample_sets, KeywordSet, DISCARDED, LIST_LEN, SET_SIZE,
};
pub use metrics::{eval_perplexity, prefix_texts, success_length, success_rate};

pub const CSV_HEADER: [&str; 9] = [
    "lambda",
    "b",
    "s",
    "k",
    "set_id",
    "success_rate",
    "perplexity",
    "success_length",
    "seconds",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub success_rate: f64,
    pub perplexity: f64,
    pub success_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub lambdas: Vec<f64>,
    pub beams: Vec<usize>,
    pub candidates: Vec<usize>,
    pub chunk_tokens: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
}

impl SweepGrid {
    /// A grid holding a single point.
    pub fn point(g: &GuidanceConfig, seed: u64) -> Self {
        Self {
            lambdas: vec![g.lambda],
            beams: vec![g.beams],
            candidates: vec![g.candidates],
            chunk_tokens: vec![g.chunk_tokens],
            repetitions: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("lambda", self.lambdas.is_empty()),
            ("b", self.beams.is_empty()),
            ("s", self.candidates.is_empty()),
            ("k", self.chunk_tokens.is_empty()),
        ] {
            if empty {
                return Err(Error::invalid(format!("grid list for {name} is empty")));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        Ok(())
    }

    /// Grid points in lexicographic (lambda, b, s, k) order.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &lambda in &self.lambdas {
            for &b in &self.beams {
                for &s in &self.candidates {
                    for &k in &self.chunk_tokens {
                        out.push(GridPoint { lambda, b, s, k });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub b: usize,
    pub s: usize,
    pub k: usize,
}

/// Settings shared by every run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub context: String,
    pub max_tokens: usize,
    pub sampling: SamplingConfig,
    pub quality: QualityConfig,
    /// Echoed into every record under `config`, next to the run's own settings.
    pub echo: Value,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            context: "It is".into(),
            max_tokens: 90,
            sampling: SamplingConfig::default(),
            quality: QualityConfig::default(),
            echo: Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub lambda: f64,
    pub b: usize,
    pub s: usize,
    pub k: usize,
    pub set_id: usize,
    pub repetition: usize,
    pub seed: u64,
    pub keywords: Vec<String>,
    pub metrics: Option<EvalMetrics>,
    /// Guide words reached by the engine's best beam.
    pub satisfied: Option<usize>,
    pub seconds: f64,
    pub text: Option<String>,
    pub error: Option<String>,
    pub config: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub point: GridPoint,
    pub runs: usize,
    pub failures: usize,
    pub success_rate: f64,
    pub perplexity: f64,
    pub success_length: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResults {
    pub rows: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

/// Seed of one run, derived from the master seed and the run's coordinates.
pub fn run_seed(master: u64, point: usize, set_id: usize, repetition: usize) -> u64 {
    mix_seed(master, &[point as u64, set_id as u64, repetition as u64])
}

/// Generates once and scores the result.
pub fn evaluate_one(
    lm: &dyn LanguageModel,
    similarities: &SimilarityCache<'_>,
    evaluator: &dyn LanguageModel,
    guidance: GuidanceConfig,
    sampling: SamplingConfig,
    quality: QualityConfig,
    context: &str,
) -> Result<(String, EvalMetrics, usize)> {
    let max_tokens = guidance.max_tokens;
    let keywords = guidance.guide_words.clone();
    let search = DirectedBeamSearch::new(lm, similarities, guidance, sampling, quality, context)?;
    let result = search.run()?;
    let prefixes = prefix_texts(lm, &result.best.tokens)?;
    let metrics = EvalMetrics {
        success_rate: success_rate(&result.text, &keywords),
        perplexity: eval_perplexity(evaluator, context, &result.text)?,
        success_length: success_length(&prefixes, &keywords, max_tokens),
    };
    Ok((result.text, metrics, result.satisfied))
}

/// Runs every grid point against every keyword set, `repetitions` times.
///
/// A failed run is recorded with its error and left out of the means.
pub fn run_sweep(
    grid: &SweepGrid,
    sets: &[KeywordSet],
    settings: &SweepSettings,
    lm: &dyn LanguageModel,
    embeddings: &EmbeddingTable,
    evaluator: &dyn LanguageModel,
) -> Result<SweepResults> {
    grid.validate()?;
    settings.sampling.validate()?;
    settings.quality.validate()?;
    let similarities = SimilarityCache::new(lm.vocab(), embeddings);
    let mut results = SweepResults::default();
    for (pi, point) in grid.points().into_iter().enumerate() {
        let first = results.rows.len();
        for (set_id, set) in sets.iter().enumerate() {
            for repetition in 0..grid.repetitions {
                let seed = run_seed(grid.seed, pi, set_id, repetition);
                let guidance = GuidanceConfig {
                    guide_words: set.words.clone(),
                    lambda: point.lambda,
                    chunk_tokens: point.k,
                    beams: point.b,
                    candidates: point.s,
                    max_tokens: settings.max_tokens,
                };
                let sampling = SamplingConfig {
                    seed,
                    ..settings.sampling
                };
                let config = serde_json::json!({
                    "guidance": &guidance,
                    "sampling": &sampling,
                    "quality": &settings.quality,
                    "context": &settings.context,
                    "run": &settings.echo,
                });
                let start = Instant::now();
                let outcome = evaluate_one(
                    lm,
                    &similarities,
                    evaluator,
                    guidance,
                    sampling,
                    settings.quality,
                    &settings.context,
                );
                let seconds = start.elapsed().as_secs_f64();
                let mut row = RunRecord {
                    lambda: point.lambda,
                    b: point.b,
                    s: point.s,
                    k: point.k,
                    set_id,
                    repetition,
                    seed,
                    keywords: set.words.clone(),
                    metrics: None,
                    satisfied: None,
                    seconds,
                    text: None,
                    error: None,
                    config,
                };
                match outcome {
                    Ok((text, metrics, satisfied)) => {
                        row.text = Some(text);
                        row.metrics = Some(metrics);
                        row.satisfied = Some(satisfied);
                    }
                    Err(e) => {
                        log::warn!("run failed (point {pi}, set {set_id}): {e}");
                        row.error = Some(e.to_string());
                    }
                }
                results.rows.push(row);
            }
        }
        results
            .aggregates
            .push(aggregate(point, &results.rows[first..]));
    }
    Ok(results)
}

/// Means over the successful rows (NaN when there are none).
pub fn aggregate(point: GridPoint, rows: &[RunRecord]) -> Aggregate {
    let ok: Vec<&EvalMetrics> = rows.iter().filter_map(|r| r.metrics.as_ref()).collect();
    let n = ok.len() as f64;
    let mean = |f: &dyn Fn(&EvalMetrics) -> f64| ok.iter().map(|m| f(m)).sum::<f64>() / n;
    Aggregate {
        point,
        runs: rows.len(),
        failures: rows.len() - ok.len(),
        success_rate: mean(&|m| m.success_rate),
        perplexity: mean(&|m| m.perplexity),
        success_length: mean(&|m| m.success_length as f64),
        seconds: rows
            .iter()
            .filter(|r| r.metrics.is_some())
            .map(|r| r.seconds)
            .sum::<f64>()
            / n,
    }
}

/// Writes one line per run followed by one `set_id = mean` line per grid point.
pub fn write_csv(results: &SweepResults, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
    for r in &results.rows {
        let m = r.metrics.as_ref();
        w.write_record([
            r.lambda.to_string(),
            r.b.to_string(),
            r.s.to_string(),
            r.k.to_string(),
            r.set_id.to_string(),
            opt(m.map(|m| m.success_rate)),
            opt(m.map(|m| m.perplexity)),
            m.map_or_else(String::new, |m| m.success_length.to_string()),
            r.seconds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    for a in &results.aggregates {
        w.write_record([
            a.point.lambda.to_string(),
            a.point.b.to_string(),
            a.point.s.to_string(),
            a.point.k.to_string(),
            "mean".to_string(),
            a.success_rate.to_string(),
            a.perplexity.to_string(),
            a.success_length.to_string(),
            a.seconds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl(rows: &[RunRecord], mut out: impl Write) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::synthetic_embeddings;
    use crate::lm::NgramModel;

    const CORPUS: &str = "it is a cat . it is a dog . the cat sat on the mat . \
        the dog ran to the park . a bird sang in the tree . it is late .";

    fn fixture() -> (NgramModel, EmbeddingTable) {
        let lm = NgramModel::train(CORPUS, 2, 0.05).unwrap();
        let emb = synthetic_embeddings(lm.vocab().iter().map(|(_, s)| s), 16, 3);
        (lm, emb)
    }

    fn sets() -> Vec<KeywordSet> {
        vec![
            KeywordSet {
                words: vec!["dog".into(), "park".into()],
                indices: vec![0, 1],
            },
            KeywordSet {
                words: vec!["bird".into(), "tree".into()],
                indices: vec![2, 3],
            },
        ]
    }

    fn settings() -> SweepSettings {
        SweepSettings {
            max_tokens: 12,
            ..Default::default()
        }
    }

    fn small_grid() -> SweepGrid {
        SweepGrid {
            lambdas: vec![10.0],
            beams: vec![2],
            candidates: vec![2],
            chunk_tokens: vec![3],
            repetitions: 1,
            seed: 1,
        }
    }

    #[test]
    fn one_point_two_sets() {
        let (lm, emb) = fixture();
        let res = run_sweep(&small_grid(), &sets(), &settings(), &lm, &emb, &lm).unwrap();
        assert_eq!(res.rows.len(), 2);
        assert_eq!(res.aggregates.len(), 1);
        let mut csv = Vec::new();
        write_csv(&res, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 4);
        assert!(lines[3].split(',').nth(4) == Some("mean"));
    }

    #[test]
    fn aggregates_are_exact_means() {
        let (lm, emb) = fixture();
        let grid = SweepGrid {
            lambdas: vec![0.0, 10.0],
            repetitions: 2,
            ..small_grid()
        };
        let res = run_sweep(&grid, &sets(), &settings(), &lm, &emb, &lm).unwrap();
        assert_eq!(res.rows.len(), 8);
        for (i, a) in res.aggregates.iter().enumerate() {
            let rows = &res.rows[i * 4..(i + 1) * 4];
            assert!(rows.iter().all(|r| r.lambda == a.point.lambda));
            let m: Vec<_> = rows.iter().map(|r| r.metrics.unwrap()).collect();
            let sr = m.iter().map(|m| m.success_rate).sum::<f64>() / 4.0;
            assert_eq!(a.success_rate, sr);
            let sl = m.iter().map(|m| m.success_length as f64).sum::<f64>() / 4.0;
            assert_eq!(a.success_length, sl);
            assert_eq!(a.failures, 0);
        }
    }

    #[test]
    fn metrics_agree_with_engine() {
        let (lm, emb) = fixture();
        let res = run_sweep(&small_grid(), &sets(), &settings(), &lm, &emb, &lm).unwrap();
        for r in &res.rows {
            let m = r.metrics.unwrap();
            let satisfied = r.satisfied.unwrap() as f64 / r.keywords.len() as f64;
            assert!(satisfied <= m.success_rate);
            assert!(m.success_length <= 12);
            if m.success_rate < 1.0 {
                assert_eq!(m.success_length, 12);
            }
        }
    }

    #[test]
    fn sweeps_are_deterministic() {
        let (lm, emb) = fixture();
        let a = run_sweep(&small_grid(), &sets(), &settings(), &lm, &emb, &lm).unwrap();
        let b = run_sweep(&small_grid(), &sets(), &settings(), &lm, &emb, &lm).unwrap();
        let strip = |rows: &[RunRecord]| {
            rows.iter()
                .map(|r| RunRecord {
                    seconds: 0.0,
                    ..r.clone()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a.rows), strip(&b.rows));
    }

    #[test]
    fn failures_are_recorded_and_skipped() {
        let (lm, emb) = fixture();
        let mut bad = sets();
        bad[1].words = vec!["two words".into()];
        let res = run_sweep(&small_grid(), &bad, &settings(), &lm, &emb, &lm).unwrap();
        assert!(res.rows[1].error.is_some());
        assert_eq!(res.aggregates[0].failures, 1);
        assert_eq!(
            res.aggregates[0].success_rate,
            res.rows[0].metrics.unwrap().success_rate
        );
        let mut out = Vec::new();
        write_jsonl(&res.rows, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
    }

    #[test]
    fn empty_grid_lists_are_rejected() {
        let (lm, emb) = fixture();
        let grid = SweepGrid {
            beams: vec![],
            ..small_grid()
        };
        assert!(matches!(
            run_sweep(&grid, &sets(), &settings(), &lm, &emb, &lm),
            Err(Error::InvalidInput(_))
        ));
    }
}
