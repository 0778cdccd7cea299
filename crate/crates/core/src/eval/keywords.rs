use std::collections::HashSet;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SET_SIZE: usize = 5;
/// Leading (most frequent) entries of the word list that are never used.
pub const DISCARDED: usize = 500;
/// Entries of the word list taken into account.
pub const LIST_LEN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub words: Vec<String>,
    /// Zero-based positions of `words` in the source list.
    pub indices: Vec<usize>,
}

/// Reads a list with one entry per line, skipping blank lines.
pub fn read_word_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

/// Keyword sets for the keyword-to-phrase protocol.
///
/// Of the first 1000 entries of `words`, the first 500 are dropped, then stop
/// words (case-insensitive). Each set is 5 distinct words; sets are drawn
/// independently, so a word can appear in several sets.
pub fn build_keyword_sets(
    words: &[String],
    stopwords: &[String],
    count: usize,
    seed: u64,
) -> Result<Vec<KeywordSet>> {
    if words.len() < LIST_LEN {
        return Err(Error::invalid(format!(
            "word list needs at least {LIST_LEN} entries, got {}",
            words.len()
        )));
    }
    let stop: HashSet<String> = stopwords.iter().map(|w| w.trim().to_lowercase()).collect();
    let pool: Vec<(usize, &str)> = words[..LIST_LEN]
        .iter()
        .enumerate()
        .skip(DISCARDED)
        .map(|(i, w)| (i, w.trim()))
        .filter(|(_, w)| !stop.contains(&w.to_lowercase()))
        .collect();
    sample_sets(&pool, SET_SIZE, count, seed)
}

/// Draws `count` sets of `size` distinct pool entries.
pub fn sample_sets(
    pool: &[(usize, &str)],
    size: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<KeywordSet>> {
    if size == 0 {
        return Err(Error::invalid("keyword sets must not be empty"));
    }
    if pool.len() < size {
        return Err(Error::invalid(format!(
            "only {} candidate words for sets of {size}",
            pool.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let picks = index::sample(&mut rng, pool.len(), size);
            let (indices, words) = picks
                .iter()
                .map(|p| (pool[p].0, pool[p].1.to_owned()))
                .unzip();
            KeywordSet { words, indices }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn sets_come_from_second_half_without_stop_words() {
        let words = list(1200);
        let stop: Vec<String> = (500..900).map(|i| format!("W{i}")).collect();
        let sets = build_keyword_sets(&words, &stop, 50, 0).unwrap();
        assert_eq!(sets.len(), 50);
        for s in &sets {
            assert_eq!(s.words.len(), 5);
            let distinct: HashSet<_> = s.indices.iter().collect();
            assert_eq!(distinct.len(), 5);
            for (&i, w) in s.indices.iter().zip(&s.words) {
                assert!((900..1000).contains(&i), "{i}");
                assert_eq!(&words[i], w);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let words = list(1000);
        let a = build_keyword_sets(&words, &[], 10, 7).unwrap();
        assert_eq!(a, build_keyword_sets(&words, &[], 10, 7).unwrap());
        assert_ne!(a, build_keyword_sets(&words, &[], 10, 8).unwrap());
        assert_eq!(build_keyword_sets(&words, &[], 1, 7).unwrap().len(), 1);
    }

    #[test]
    fn short_list_is_rejected() {
        assert!(matches!(
            build_keyword_sets(&list(400), &[], 50, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn tiny_pool_is_rejected() {
        let pool = [(0, "a"), (1, "b")];
        assert!(sample_sets(&pool, 3, 1, 0).is_err());
        assert!(sample_sets(&pool, 0, 1, 0).is_err());
    }
}
