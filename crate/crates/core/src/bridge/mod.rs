//! Out-of-process language models.
//!
//! A model server speaks protocol v1: line-delimited JSON over a child
//! process's stdin/stdout or a TCP stream. [`connect`] returns a
//! [`BridgedModel`] implementing [`LanguageModel`](crate::LanguageModel) by
//! delegation; [`serve`] exposes any in-process model the same way.
//!
//! ```text
//! → {"op":"hello","id":0,"version":1}          ← {"id":0,"version":1,"vocab_size":N}
//! → {"op":"vocab","id":i}                      ← {"id":i,"tokens":[...N strings...]}
//! → {"op":"tokenize","id":i,"text":T}          ← {"id":i,"ids":[...]}
//! → {"op":"detokenize","id":i,"ids":[...]}     ← {"id":i,"text":T}
//! → {"op":"logits","id":i,"ids":[...]}         ← {"id":i,"logits":[...N floats...]}
//! → {"op":"nll","id":i,"prefix":[..],"target":[..]}  ← {"id":i,"nll":x}
//!                                              ← {"id":i,"error":"message"}
//! ```
//!
//! `nll` is the mean negative log-likelihood per target token, in nats. The
//! `vocab` and `nll` ops are optional for servers; the client falls back to
//! per-token `detokenize` and to local computation from logits.

mod client;
mod protocol;
mod server;

pub use client::{connect, BridgedModel, Endpoint, Transport};
pub use protocol::{ProtocolError, Request, PROTOCOL_VERSION};
pub use server::{handle_line, serve, serve_connection, serve_tcp};
