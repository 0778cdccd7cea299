use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};

use serde_json::{json, Value};

use super::protocol::{Request, PROTOCOL_VERSION};
use crate::lm::{LanguageModel, TokenId};
use crate::Result;

/// Answers one request line. Never fails: problems become error records.
pub fn handle_line<M: LanguageModel + ?Sized>(lm: &M, line: &str) -> Value {
    let req: Request = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => {
            let id = serde_json::from_str::<Value>(line)
                .ok()
                .and_then(|v| v.get("id").cloned())
                .unwrap_or(Value::Null);
            return json!({ "id": id, "error": format!("bad request: {e}") });
        }
    };
    let id = req.id();
    let reply = match req {
        Request::Hello { version, .. } => {
            if version != PROTOCOL_VERSION {
                log::warn!("client speaks protocol {version}");
            }
            Ok(json!({ "id": id, "version": PROTOCOL_VERSION, "vocab_size": lm.vocab_size() }))
        }
        Request::Vocab { .. } => {
            let tokens: Vec<&str> = lm.vocab().iter().map(|(_, s)| s).collect();
            Ok(json!({ "id": id, "tokens": tokens }))
        }
        Request::Tokenize { text, .. } => lm
            .tokenize(&text)
            .map(|ids| json!({ "id": id, "ids": ids })),
        Request::Detokenize { ids, .. } => lm
            .detokenize(&to_tokens(&ids))
            .map(|text| json!({ "id": id, "text": text })),
        Request::Logits { ids, .. } => {
            let ctx = to_tokens(&ids);
            lm.vocab()
                .check_ids(&ctx)
                .and_then(|_| lm.next_logits(&ctx))
                .map(|l| json!({ "id": id, "logits": l.0 }))
        }
        Request::Nll { prefix, target, .. } => {
            let prefix = to_tokens(&prefix);
            lm.vocab()
                .check_ids(&prefix)
                .and_then(|_| lm.sequence_nll(&prefix, &to_tokens(&target)))
                .map(|nll| json!({ "id": id, "nll": nll }))
        }
    };
    reply.unwrap_or_else(|e| json!({ "id": id, "error": e.to_string() }))
}

fn to_tokens(ids: &[u32]) -> Vec<TokenId> {
    ids.iter().map(|&i| TokenId(i)).collect()
}

/// Serves requests line by line until `input` is exhausted.
pub fn serve<M: LanguageModel + ?Sized>(
    lm: &M,
    input: impl BufRead,
    output: impl Write,
) -> Result<()> {
    let mut output = BufWriter::new(output);
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = handle_line(lm, line.trim());
        serde_json::to_writer(&mut output, &reply).map_err(std::io::Error::from)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

pub fn serve_connection<M: LanguageModel + ?Sized>(lm: &M, stream: TcpStream) -> Result<()> {
    stream.set_nodelay(true)?;
    let reader = BufReader::new(stream.try_clone()?);
    serve(lm, reader, stream)
}

/// Accepts connections forever, one thread per connection.
pub fn serve_tcp<M: LanguageModel + ?Sized>(lm: &M, listener: &TcpListener) -> Result<()> {
    std::thread::scope(|scope| {
        for stream in listener.incoming() {
            let stream = stream?;
            let peer = stream.peer_addr().ok();
            scope.spawn(move || {
                if let Err(e) = serve_connection(lm, stream) {
                    log::warn!("connection {peer:?} ended: {e}");
                }
            });
        }
        Ok(())
    })
}
