//! Layered settings: command-line flags, then a `key = value` config file,
//! then `DBS_SEED` (seed only), then built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "corpus",
    "order",
    "smoothing",
    "bridge",
    "bridge_timeout_ms",
    "bridge_retries",
    "embeddings",
    "context",
    "keywords",
    "lambda",
    "b",
    "s",
    "k",
    "max_tokens",
    "top_p",
    "temperature",
    "seed",
    "alpha",
    "c_star",
    "greedy",
    "words",
    "stopwords",
    "sets",
    "out_dir",
    "evaluator_corpus",
    "evaluator_bridge",
    "in_vocab_only",
    "lambdas",
    "bs",
    "ss",
    "ks",
    "repeat",
    "trace",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected key = value", n + 1))
            })?;
            let key = normalize(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "config line {}: unknown key {key:?}",
                    n + 1
                )));
            }
            values.insert(key, v.trim().to_owned());
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the config file's, else `None`.
    pub fn layer<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Config(format!("config key {key}: {e}")))
            })
            .transpose()
    }

    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.layer(flag, key)?.unwrap_or(default))
    }

    /// Seed: flag, config file, `DBS_SEED`, then 0.
    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = self.layer(flag, "seed")? {
            return Ok(s);
        }
        match std::env::var("DBS_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|e| CliError::Config(format!("DBS_SEED: {e}"))),
            Err(_) => Ok(0),
        }
    }
}

/// Parses a comma-separated list; an empty string gives an empty list.
pub fn parse_list<T>(text: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| CliError::Config(format!("{what}: {s:?}: {e}")))
        })
        .collect()
}
