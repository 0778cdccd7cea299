#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::thread;

use dbs_core::lm::{LanguageModel, LogitVector, TokenId, Vocabulary};
use dbs_core::Result;
use serde_json::Value;

/// Word-level model whose logits are a fixed pseudo-random function of the
/// whole context.
pub struct TableModel {
    vocab: Vocabulary,
    salt: u64,
}

impl TableModel {
    pub fn new(words: &[&str], salt: u64) -> Self {
        Self {
            vocab: Vocabulary::new(words.iter().map(|w| w.to_string()).collect()).unwrap(),
            salt,
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl LanguageModel for TableModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_logits(&self, ctx: &[TokenId]) -> Result<LogitVector> {
        let h = ctx.iter().fold(mix(self.salt), |h, t| mix(h ^ t.0 as u64));
        Ok(LogitVector(
            (0..self.vocab.len() as u64)
                .map(|i| {
                    let r = mix(h ^ (i << 32));
                    (r >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
                })
                .collect(),
        ))
    }

    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>> {
        Ok(text
            .split_whitespace()
            .map(|w| self.vocab.lookup(w).unwrap_or(TokenId(0)))
            .collect())
    }

    fn detokenize(&self, ids: &[TokenId]) -> Result<String> {
        self.vocab.check_ids(ids)?;
        Ok(ids
            .iter()
            .map(|&i| self.vocab.surface(i).unwrap())
            .collect::<Vec<_>>()
            .join(" "))
    }
}

pub const WORDS: [&str; 20] = [
    "the", "a", "cat", "dog", "sat", "ran", "on", "mat", "park", "bird", "sang", "tree", "and",
    "big", "small", "red", "blue", "house", "river", ".",
];

/// Serves a single TCP connection with `handler`, which maps each request to
/// the raw lines to send back (possibly none).
pub fn mock_server<F>(handler: F) -> String
where
    F: FnMut(&Value) -> Vec<String> + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let mut handler = handler;
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        stream.set_nodelay(true).unwrap();
        let mut out = stream.try_clone().unwrap();
        for line in BufReader::new(stream).lines() {
            let Ok(line) = line else { return };
            let req: Value = serde_json::from_str(&line).unwrap();
            for reply in handler(&req) {
                if out.write_all(format!("{reply}\n").as_bytes()).is_err() {
                    return;
                }
            }
        }
    });
    addr
}

/// Handshake and vocabulary replies for a server with `words`.
pub fn basic_reply(req: &Value, words: &[&str]) -> Option<String> {
    let id = &req["id"];
    match req["op"].as_str()? {
        "hello" => {
            Some(serde_json::json!({"id": id, "version": 1, "vocab_size": words.len()}).to_string())
        }
        "vocab" => Some(serde_json::json!({"id": id, "tokens": words}).to_string()),
        _ => None,
    }
}

/// Serves `lm` on an ephemeral port for any number of connections.
pub fn spawn_server<M: LanguageModel + 'static>(lm: M) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    thread::spawn(move || dbs_core::bridge::serve_tcp(&lm, &listener));
    addr
}
