//! Static word embeddings and per-guide-word similarity tables.
//!
//! The steering signal for token `t` and guide word `w` is
//! `max(0, cos(γ(t), γ(w)))²`, where `γ` is the embedding of the token's
//! normalised surface. Tokens without an embedding get the zero vector and
//! therefore a similarity of 0.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use flate2::read::GzDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lm::Vocabulary;
use crate::{Error, Result};

pub const DEFAULT_DIM: usize = 300;

/// Word → vector map with a fixed dimension. Keys are lowercased.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
    skipped: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
            skipped: 0,
        }
    }

    /// Inserts `vector` under the lowercased `word`.
    pub fn insert(&mut self, word: &str, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector for {word:?} has length {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("vector for {word:?} is not finite")));
        }
        self.vectors.insert(word.to_lowercase(), vector);
        Ok(())
    }

    /// Reads GloVe text format: `word v1 ... v_dim` per line. Paths ending in
    /// `.gz` are decompressed.
    pub fn load(path: impl AsRef<Path>, dim: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        if path.extension().is_some_and(|e| e == "gz") {
            Self::from_reader(BufReader::new(GzDecoder::new(file)), dim)
        } else {
            Self::from_reader(BufReader::new(file), dim)
        }
    }

    /// Like [`load`](Self::load), taking the dimension from the first line.
    pub fn load_inferred(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        let first = if path.extension().is_some_and(|e| e == "gz") {
            first_line(BufReader::new(GzDecoder::new(file)))?
        } else {
            first_line(BufReader::new(file))?
        };
        let dim = first.trim_end().split(' ').count().saturating_sub(1);
        Self::load(path, dim)
    }

    /// Parses GloVe text format from `reader`. Lines with the wrong number of
    /// values or unparsable numbers are skipped and counted in
    /// [`skipped_lines`](Self::skipped_lines).
    pub fn from_reader(reader: impl BufRead, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        let mut table = Self::new(dim);
        let mut values = Vec::with_capacity(dim);
        for line in reader.lines() {
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().unwrap_or_default();
            values.clear();
            let mut ok = !word.is_empty();
            for p in parts {
                match p.parse::<f32>() {
                    Ok(v) if v.is_finite() => values.push(v),
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && values.len() == dim {
                table.vectors.insert(word.to_lowercase(), values.clone());
            } else {
                table.skipped += 1;
            }
        }
        if table.skipped > 0 {
            log::warn!("skipped {} malformed embedding lines", table.skipped);
        }
        if table.vectors.is_empty() {
            return Err(Error::invalid("embedding source has no well-formed lines"));
        }
        Ok(table)
    }

    /// Writes the table in GloVe text format, words sorted.
    pub fn write_text(&self, mut out: impl Write) -> std::io::Result<()> {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        for w in words {
            write!(out, "{w}")?;
            for v in &self.vectors[w] {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn skipped_lines(&self) -> usize {
        self.skipped
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Embedding of an LM token surface, or `None` when it has none.
    pub fn lookup_surface(&self, surface: &str) -> Option<&[f32]> {
        let key = normalize_surface(surface);
        if key.is_empty() {
            return None;
        }
        self.get(&key)
    }

    /// Embedding of an LM token surface; missing tokens get the zero vector.
    pub fn token_embedding(&self, surface: &str) -> Vec<f32> {
        self.lookup_surface(surface)
            .map(<[f32]>::to_vec)
            .unwrap_or_else(|| vec![0.0; self.dim])
    }
}

/// Markers that subword vocabularies put in front of word-initial tokens.
const BOUNDARY_MARKERS: [&str; 2] = ["\u{120}", "\u{2581}"];

/// Strips whitespace and a leading word-boundary marker, then lowercases.
///
/// The `##` continuation prefix of WordPiece vocabularies is deliberately
/// *not* stripped: `##ing` is a word fragment and has no embedding.
fn first_line(reader: impl BufRead) -> Result<String> {
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            return Ok(line);
        }
    }
    Ok(String::new())
}

pub fn normalize_surface(surface: &str) -> String {
    let mut s = surface.trim();
    for m in BOUNDARY_MARKERS {
        if let Some(rest) = s.strip_prefix(m) {
            s = rest;
            break;
        }
    }
    s.trim().to_lowercase()
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let mut dot = 0.0f64;
    let mut nu = 0.0f64;
    let mut nv = 0.0f64;
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Clip-then-square map applied to raw cosines.
#[inline]
pub fn steering_weight(cos: f64) -> f64 {
    let c = cos.max(0.0);
    c * c
}

/// Per-token steering weights for one guide word.
#[derive(Debug, Clone)]
pub struct SimilarityTable {
    pub guide_word: String,
    pub entries: Vec<f64>,
    /// False when the guide word had no embedding (all entries are 0).
    pub guide_found: bool,
}

impl SimilarityTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Rejects empty and multi-word guide words.
pub fn validate_guide_word(word: &str) -> Result<&str> {
    let w = word.trim();
    if w.is_empty() {
        return Err(Error::invalid("guide word is empty"));
    }
    if w.split_whitespace().nth(1).is_some() {
        return Err(Error::invalid(format!(
            "guide word {word:?} contains whitespace; only single words are supported"
        )));
    }
    Ok(w)
}

pub fn build_similarity_table(
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    guide_word: &str,
) -> Result<SimilarityTable> {
    let word = validate_guide_word(guide_word)?;
    let key = word.to_lowercase();
    let Some(guide) = table.get(&key) else {
        log::warn!("guide word {word:?} has no embedding; it will receive no steering");
        return Ok(SimilarityTable {
            guide_word: word.to_string(),
            entries: vec![0.0; vocab.len()],
            guide_found: false,
        });
    };
    let entries = vocab
        .iter()
        .map(|(_, surface)| match table.lookup_surface(surface) {
            Some(v) => cosine(v, guide).map(steering_weight),
            None => Ok(0.0),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SimilarityTable {
        guide_word: word.to_string(),
        entries,
        guide_found: true,
    })
}

/// Similarity tables computed once per guide word and shared afterwards.
pub struct SimilarityCache<'a> {
    vocab: &'a Vocabulary,
    table: &'a EmbeddingTable,
    cache: Mutex<HashMap<String, Arc<SimilarityTable>>>,
}

impl<'a> SimilarityCache<'a> {
    pub fn new(vocab: &'a Vocabulary, table: &'a EmbeddingTable) -> Self {
        Self {
            vocab,
            table,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, guide_word: &str) -> Result<Arc<SimilarityTable>> {
        let key = validate_guide_word(guide_word)?.to_lowercase();
        if let Some(t) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let built = Arc::new(build_similarity_table(self.vocab, self.table, &key)?);
        let mut cache = self.cache.lock().expect("cache poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(built)))
    }

    pub fn embeddings(&self) -> &EmbeddingTable {
        self.table
    }
}

/// Deterministic stand-in embeddings for when no pretrained table is at hand.
///
/// Each word gets `normalize(g(stem) + 0.5·g(word))`, where `g` is a Gaussian
/// vector seeded from the string. Unrelated words are nearly orthogonal;
/// words sharing a stem have cosine ≈ 0.8. This carries no semantics beyond
/// inflection, which is enough to exercise steering on a toy model.
pub fn synthetic_embeddings<'a>(
    words: impl IntoIterator<Item = &'a str>,
    dim: usize,
    seed: u64,
) -> EmbeddingTable {
    let mut table = EmbeddingTable::new(dim);
    for w in words {
        let key = w.to_lowercase();
        if key.is_empty()
            || !key.chars().all(char::is_alphabetic)
            || table.vectors.contains_key(&key)
        {
            continue;
        }
        let stem = crate::scoring::stem(&key);
        let a = gaussian_vector(&stem, dim, seed ^ 0x5354_454d);
        let b = gaussian_vector(&key, dim, seed);
        let mut v: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + 0.5 * y).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        table
            .vectors
            .insert(key, v.into_iter().map(|x| x as f32).collect());
    }
    table
}

fn gaussian_vector(key: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    (0..dim)
        .map(|_| {
            // Box-Muller
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen::<f64>();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}
