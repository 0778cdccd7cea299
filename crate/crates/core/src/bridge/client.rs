use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::Value;

use super::protocol::{
    get_f64, get_floats, get_ids, get_str, get_strings, get_u64, parse_response, ProtocolError,
    Request, PROTOCOL_VERSION,
};
use crate::lm::{nll_from_logits, LanguageModel, LogitVector, TokenId, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    /// Spawn a child process and talk over its stdin/stdout.
    Stdio { program: String, args: Vec<String> },
    /// `host:port`.
    Tcp(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub transport: Transport,
    pub timeout: Duration,
    /// Extra attempts after a request times out.
    pub max_retries: u32,
}

impl Endpoint {
    pub fn new(transport: Transport) -> Self {
        Self {
            transport,
            timeout: Duration::from_secs(30),
            max_retries: 2,
        }
    }

    pub fn tcp(addr: impl Into<String>) -> Self {
        Self::new(Transport::Tcp(addr.into()))
    }

    /// Parses `tcp:HOST:PORT` or `stdio:COMMAND [ARGS...]`.
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(addr) = spec.strip_prefix("tcp:") {
            if addr
                .rsplit_once(':')
                .is_none_or(|(h, p)| h.is_empty() || p.parse::<u16>().is_err())
            {
                return Err(Error::invalid(format!(
                    "expected tcp:HOST:PORT, got {spec:?}"
                )));
            }
            return Ok(Self::tcp(addr));
        }
        if let Some(cmd) = spec.strip_prefix("stdio:") {
            let mut parts = cmd.split_whitespace().map(str::to_owned);
            let program = parts
                .next()
                .ok_or_else(|| Error::invalid("stdio endpoint needs a command"))?;
            return Ok(Self::new(Transport::Stdio {
                program,
                args: parts.collect(),
            }));
        }
        Err(Error::invalid(format!(
            "endpoint must start with tcp: or stdio:, got {spec:?}"
        )))
    }

    pub fn validate(&self) -> Result<()> {
        if self.timeout.is_zero() {
            return Err(Error::invalid("bridge timeout must be positive"));
        }
        Ok(())
    }
}

struct Connection {
    writer: Option<Box<dyn Write + Send>>,
    lines: Receiver<io::Result<String>>,
    next_id: u64,
    timeout: Duration,
    max_retries: u32,
    child: Option<Child>,
}

fn spawn_reader(reader: impl io::Read + Send + 'static) -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = BufReader::new(reader);
        loop {
            let mut line = String::new();
            match reader.read_line(&mut line) {
                Ok(0) => {
                    let _ = tx.send(Err(io::Error::new(
                        io::ErrorKind::UnexpectedEof,
                        "server closed the connection",
                    )));
                    return;
                }
                Ok(_) => {
                    if tx.send(Ok(line)).is_err() {
                        return;
                    }
                }
                Err(e) => {
                    let _ = tx.send(Err(e));
                    return;
                }
            }
        }
    });
    rx
}

fn connection_error(e: impl std::fmt::Display) -> Error {
    Error::Connection(e.to_string())
}

impl Connection {
    fn open(endpoint: &Endpoint) -> Result<Self> {
        endpoint.validate()?;
        let (writer, lines, child): (Box<dyn Write + Send>, _, _) = match &endpoint.transport {
            Transport::Tcp(addr) => {
                let addrs: Vec<_> = addr
                    .to_socket_addrs()
                    .map_err(|e| connection_error(format!("{addr}: {e}")))?
                    .collect();
                let mut last = None;
                let mut stream = None;
                for a in addrs {
                    match TcpStream::connect_timeout(&a, endpoint.timeout) {
                        Ok(s) => {
                            stream = Some(s);
                            break;
                        }
                        Err(e) => last = Some(e),
                    }
                }
                let stream = stream.ok_or_else(|| {
                    connection_error(format!(
                        "{addr}: {}",
                        last.map_or("no address".to_owned(), |e| e.to_string())
                    ))
                })?;
                stream.set_nodelay(true).ok();
                let read_half = stream.try_clone().map_err(connection_error)?;
                (Box::new(stream), spawn_reader(read_half), None)
            }
            Transport::Stdio { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| connection_error(format!("cannot start {program}: {e}")))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                (Box::new(stdin), spawn_reader(stdout), Some(child))
            }
        };
        Ok(Self {
            writer: Some(writer),
            lines,
            next_id: 0,
            timeout: endpoint.timeout,
            max_retries: endpoint.max_retries,
            child,
        })
    }

    fn send(&mut self, req: &Request) -> Result<()> {
        let w = self.writer.as_mut().expect("writer open");
        w.write_all(req.to_line().as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| connection_error(format!("write failed: {e}")))
    }

    /// Sends a request, retrying with a fresh id on timeout, and returns the
    /// response carrying the matching id. Responses to earlier ids are dropped.
    fn call(&mut self, build: impl Fn(u64) -> Request) -> Result<Value> {
        let mut last_id = 0;
        for _ in 0..=self.max_retries {
            let id = self.next_id;
            self.next_id += 1;
            last_id = id;
            self.send(&build(id))?;
            let deadline = Instant::now() + self.timeout;
            loop {
                let remaining = deadline.saturating_duration_since(Instant::now());
                match self.lines.recv_timeout(remaining) {
                    Ok(Ok(line)) => {
                        if line.trim().is_empty() {
                            continue;
                        }
                        let v = parse_response(line.trim_end())?;
                        match v.get("id") {
                            Some(Value::Number(n)) if n.as_u64() == Some(id) => {
                                return check_remote(v, id);
                            }
                            Some(Value::Number(n)) if n.as_u64().is_some_and(|r| r < id) => {
                                log::debug!("dropping stale response {n}");
                            }
                            None | Some(Value::Null) if v.get("error").is_some() => {
                                return check_remote(v, id);
                            }
                            other => {
                                return Err(ProtocolError::Malformed(format!(
                                    "unexpected response id {other:?} for request {id}"
                                ))
                                .into())
                            }
                        }
                    }
                    Ok(Err(e)) => return Err(connection_error(e)),
                    Err(RecvTimeoutError::Timeout) => {
                        log::warn!("request {id} timed out");
                        break;
                    }
                    Err(RecvTimeoutError::Disconnected) => {
                        return Err(connection_error("reader stopped"))
                    }
                }
            }
        }
        Err(ProtocolError::Timeout {
            id: last_id,
            ms: self.timeout.as_millis() as u64,
        }
        .into())
    }
}

fn check_remote(v: Value, id: u64) -> Result<Value> {
    if let Some(err) = v.get("error") {
        let message = err.as_str().map_or_else(|| err.to_string(), str::to_owned);
        return Err(ProtocolError::Remote { id, message }.into());
    }
    Ok(v)
}

impl Drop for Connection {
    fn drop(&mut self) {
        self.writer.take();
        if let Some(mut child) = self.child.take() {
            // closing stdin asks the server to stop; give it a moment first
            let deadline = Instant::now() + Duration::from_millis(500);
            while Instant::now() < deadline {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// A language model served by another process.
///
/// Requests are serialized over a single connection, so the engine runs its
/// candidates sequentially against it.
pub struct BridgedModel {
    conn: Mutex<Connection>,
    vocab: Vocabulary,
    remote_nll: AtomicBool,
}

/// Opens a connection and performs the hello handshake and vocabulary fetch.
pub fn connect(endpoint: &Endpoint) -> Result<BridgedModel> {
    let mut conn = Connection::open(endpoint)?;
    let hello = conn
        .call(|id| Request::Hello {
            id,
            version: PROTOCOL_VERSION,
        })
        .map_err(|e| match e {
            Error::Protocol(ProtocolError::Timeout { ms, .. }) => {
                Error::Connection(format!("handshake timed out after {ms} ms"))
            }
            other => other,
        })?;
    let version = get_u64(&hello, "version")?;
    if version != PROTOCOL_VERSION as u64 {
        return Err(ProtocolError::VersionMismatch {
            expected: PROTOCOL_VERSION,
            got: version,
        }
        .into());
    }
    let size = get_u64(&hello, "vocab_size")? as usize;
    if size == 0 {
        return Err(ProtocolError::EmptyVocabulary.into());
    }

    let tokens = match conn.call(|id| Request::Vocab { id }) {
        Ok(v) => get_strings(&v, "tokens")?,
        Err(Error::Protocol(ProtocolError::Remote { message, .. })) => {
            log::info!("server has no vocab op ({message}); fetching surfaces one by one");
            (0..size as u32)
                .map(|i| {
                    let v = conn.call(|id| Request::Detokenize { id, ids: vec![i] })?;
                    Ok(get_str(&v, "text")?.to_owned())
                })
                .collect::<Result<Vec<_>>>()?
        }
        Err(e) => return Err(e),
    };
    if tokens.len() != size {
        return Err(ProtocolError::Malformed(format!(
            "vocab has {} tokens, handshake said {size}",
            tokens.len()
        ))
        .into());
    }
    let vocab = Vocabulary::new(tokens).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    Ok(BridgedModel {
        conn: Mutex::new(conn),
        vocab,
        remote_nll: AtomicBool::new(true),
    })
}

impl BridgedModel {
    fn call(&self, build: impl Fn(u64) -> Request) -> Result<Value> {
        let mut conn = self
            .conn
            .lock()
            .map_err(|_| Error::Connection("connection poisoned".into()))?;
        conn.call(build)
    }

    fn check_ids(&self, ids: &[u32]) -> Result<()> {
        if let Some(bad) = ids.iter().find(|&&i| i as usize >= self.vocab.len()) {
            return Err(ProtocolError::Malformed(format!(
                "server returned token id {bad} outside a vocabulary of {}",
                self.vocab.len()
            ))
            .into());
        }
        Ok(())
    }
}

fn raw(ids: &[TokenId]) -> Vec<u32> {
    ids.iter().map(|t| t.0).collect()
}

impl LanguageModel for BridgedModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_logits(&self, ctx: &[TokenId]) -> Result<LogitVector> {
        let ids = raw(ctx);
        let v = self.call(|id| Request::Logits {
            id,
            ids: ids.clone(),
        })?;
        let logits = get_floats(&v, "logits")?;
        if logits.len() != self.vocab.len() {
            return Err(ProtocolError::WrongLength {
                expected: self.vocab.len(),
                got: logits.len(),
            }
            .into());
        }
        Ok(LogitVector(logits))
    }

    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>> {
        let v = self.call(|id| Request::Tokenize {
            id,
            text: text.to_owned(),
        })?;
        let ids = get_ids(&v, "ids")?;
        self.check_ids(&ids)?;
        Ok(ids.into_iter().map(TokenId).collect())
    }

    fn detokenize(&self, ids: &[TokenId]) -> Result<String> {
        self.vocab.check_ids(ids)?;
        let ids = raw(ids);
        let v = self.call(|id| Request::Detokenize {
            id,
            ids: ids.clone(),
        })?;
        Ok(get_str(&v, "text")?.to_owned())
    }

    fn sequence_nll(&self, prefix: &[TokenId], target: &[TokenId]) -> Result<f64> {
        if target.is_empty() {
            return Err(Error::invalid("target sequence is empty"));
        }
        self.vocab.check_ids(target)?;
        if self.remote_nll.load(Ordering::Relaxed) {
            let (p, t) = (raw(prefix), raw(target));
            match self.call(|id| Request::Nll {
                id,
                prefix: p.clone(),
                target: t.clone(),
            }) {
                Ok(v) => return Ok(get_f64(&v, "nll")?),
                Err(Error::Protocol(ProtocolError::Remote { message, .. })) => {
                    log::info!("server declined nll ({message}); computing locally");
                    self.remote_nll.store(false, Ordering::Relaxed);
                }
                Err(e) => return Err(e),
            }
        }
        nll_from_logits(self, prefix, target)
    }

    fn supports_concurrency(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_endpoints() {
        assert_eq!(
            Endpoint::parse("tcp:localhost:9000").unwrap().transport,
            Transport::Tcp("localhost:9000".into())
        );
        assert_eq!(
            Endpoint::parse("stdio:python3 adapter.py --stdio")
                .unwrap()
                .transport,
            Transport::Stdio {
                program: "python3".into(),
                args: vec!["adapter.py".into(), "--stdio".into()]
            }
        );
        for bad in [
            "tcp:nohost",
            "tcp::80",
            "tcp:h:notaport",
            "stdio:",
            "http://x",
        ] {
            assert!(Endpoint::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn zero_timeout_is_invalid() {
        let mut e = Endpoint::tcp("127.0.0.1:1");
        e.timeout = Duration::ZERO;
        assert!(matches!(connect(&e), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn missing_program_is_a_connection_error() {
        let e = Endpoint::parse("stdio:/nonexistent/model-server").unwrap();
        assert!(matches!(connect(&e), Err(Error::Connection(_))));
    }
}
