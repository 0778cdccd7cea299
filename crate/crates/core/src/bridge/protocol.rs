use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("expected {expected} logits, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
    #[error("protocol version mismatch: client speaks {expected}, server {got}")]
    VersionMismatch { expected: u32, got: u64 },
    #[error("server reported an empty vocabulary")]
    EmptyVocabulary,
    #[error("request {id} timed out after {ms} ms")]
    Timeout { id: u64, ms: u64 },
    #[error("server error on request {id}: {message}")]
    Remote { id: u64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Request {
    Hello {
        id: u64,
        version: u32,
    },
    Vocab {
        id: u64,
    },
    Tokenize {
        id: u64,
        text: String,
    },
    Detokenize {
        id: u64,
        ids: Vec<u32>,
    },
    Logits {
        id: u64,
        ids: Vec<u32>,
    },
    Nll {
        id: u64,
        prefix: Vec<u32>,
        target: Vec<u32>,
    },
}

impl Request {
    pub fn id(&self) -> u64 {
        match self {
            Request::Hello { id, .. }
            | Request::Vocab { id }
            | Request::Tokenize { id, .. }
            | Request::Detokenize { id, .. }
            | Request::Logits { id, .. }
            | Request::Nll { id, .. } => *id,
        }
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("requests serialize");
        s.push('\n');
        s
    }
}

/// Parses one response line.
///
/// `NaN` and `Infinity` are not JSON, but some runtimes emit them anyway; they
/// are read as `null` so the field check can report them as non-finite.
pub(crate) fn parse_response(line: &str) -> Result<Value, ProtocolError> {
    let value = match serde_json::from_str::<Value>(line) {
        Ok(v) => v,
        Err(e) => {
            let patched = line
                .replace("-Infinity", "null")
                .replace("Infinity", "null")
                .replace("NaN", "null");
            serde_json::from_str::<Value>(&patched)
                .map_err(|_| ProtocolError::Malformed(format!("{e}: {}", truncate(line))))?
        }
    };
    if !value.is_object() {
        return Err(ProtocolError::Malformed(format!(
            "expected an object: {}",
            truncate(line)
        )));
    }
    Ok(value)
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(120) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn field<'v>(v: &'v Value, name: &'static str) -> Result<&'v Value, ProtocolError> {
    v.get(name)
        .ok_or_else(|| ProtocolError::Malformed(format!("missing field `{name}`")))
}

pub(crate) fn get_u64(v: &Value, name: &'static str) -> Result<u64, ProtocolError> {
    field(v, name)?
        .as_u64()
        .ok_or_else(|| ProtocolError::Malformed(format!("`{name}` is not a non-negative integer")))
}

pub(crate) fn get_str<'v>(v: &'v Value, name: &'static str) -> Result<&'v str, ProtocolError> {
    field(v, name)?
        .as_str()
        .ok_or_else(|| ProtocolError::Malformed(format!("`{name}` is not a string")))
}

pub(crate) fn get_f64(v: &Value, name: &'static str) -> Result<f64, ProtocolError> {
    match field(v, name)? {
        Value::Null => Err(ProtocolError::NonFinite(name)),
        Value::Number(n) => n
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or(ProtocolError::NonFinite(name)),
        _ => Err(ProtocolError::Malformed(format!(
            "`{name}` is not a number"
        ))),
    }
}

pub(crate) fn get_floats(v: &Value, name: &'static str) -> Result<Vec<f64>, ProtocolError> {
    let arr = field(v, name)?
        .as_array()
        .ok_or_else(|| ProtocolError::Malformed(format!("`{name}` is not an array")))?;
    arr.iter()
        .map(|x| match x {
            Value::Null => Err(ProtocolError::NonFinite(name)),
            Value::Number(n) => n
                .as_f64()
                .filter(|f| f.is_finite())
                .ok_or(ProtocolError::NonFinite(name)),
            _ => Err(ProtocolError::Malformed(format!(
                "`{name}` holds a non-number"
            ))),
        })
        .collect()
}

pub(crate) fn get_ids(v: &Value, name: &'static str) -> Result<Vec<u32>, ProtocolError> {
    let arr = field(v, name)?
        .as_array()
        .ok_or_else(|| ProtocolError::Malformed(format!("`{name}` is not an array")))?;
    arr.iter()
        .map(|x| {
            x.as_u64()
                .and_then(|i| u32::try_from(i).ok())
                .ok_or_else(|| ProtocolError::Malformed(format!("`{name}` holds an invalid id")))
        })
        .collect()
}

pub(crate) fn get_strings(v: &Value, name: &'static str) -> Result<Vec<String>, ProtocolError> {
    let arr = field(v, name)?
        .as_array()
        .ok_or_else(|| ProtocolError::Malformed(format!("`{name}` is not an array")))?;
    arr.iter()
        .map(|x| {
            x.as_str()
                .map(str::to_owned)
                .ok_or_else(|| ProtocolError::Malformed(format!("`{name}` holds a non-string")))
        })
        .collect()
}
