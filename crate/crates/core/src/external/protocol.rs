//! Line-delimited JSON wire protocol spoken with external testers.
//!
//! ```text
//! -> {"hello":1}
//! <- {"hello":1}
//! -> {"id":7,"op":"partial_match","pattern_b64":"YSs=","input_b64":"YmFh","timeout_ms":2000}
//! <- {"id":7,"status":"ok","matched":true,"span":[1,3],"captures":[],"elapsed_us":12}
//! ```
//!
//! Offsets count Unicode scalar values. Group 0 is carried by `span`, and
//! `captures` lists groups 1..=n with explicit nulls for unset groups.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hello {
    pub hello: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: i64,
    pub op: String,
    pub pattern_b64: String,
    pub input_b64: String,
    pub timeout_ms: u64,
}

impl Request {
    pub fn partial_match(id: i64, pattern: &str, input: &str, timeout_ms: u64) -> Request {
        Request {
            id,
            op: "partial_match".into(),
            pattern_b64: STANDARD.encode(pattern),
            input_b64: STANDARD.encode(input),
            timeout_ms,
        }
    }

    /// The decoded pattern and input.
    pub fn decode(&self) -> Result<(String, String), ProtocolError> {
        Ok((
            decode_text(&self.pattern_b64)?,
            decode_text(&self.input_b64)?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    SyntaxError,
    Timeout,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub id: i64,
    pub status: Status,
    #[serde(default)]
    pub matched: bool,
    #[serde(default)]
    pub span: Option<[usize; 2]>,
    #[serde(default)]
    pub captures: Vec<Option<[usize; 2]>>,
    #[serde(default)]
    pub elapsed_us: u64,
}

impl Response {
    pub fn status_only(id: i64, status: Status) -> Response {
        Response {
            id,
            status,
            matched: false,
            span: None,
            captures: Vec::new(),
            elapsed_us: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad base64: {0}")]
    Base64(#[from] base64::DecodeError),
    #[error("payload is not UTF-8")]
    Utf8,
}

fn decode_text(b64: &str) -> Result<String, ProtocolError> {
    String::from_utf8(STANDARD.decode(b64)?).map_err(|_| ProtocolError::Utf8)
}

/// One protocol line, without the trailing newline.
pub fn encode<T: Serialize>(message: &T) -> String {
    serde_json::to_string(message).expect("protocol messages serialize")
}

pub fn decode<'a, T: Deserialize<'a>>(line: &'a str) -> Result<T, ProtocolError> {
    Ok(serde_json::from_str(line.trim_end())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_encoding() {
        let r = Request::partial_match(7, "a+", "baa", 2000);
        assert_eq!(
            encode(&r),
            r#"{"id":7,"op":"partial_match","pattern_b64":"YSs=","input_b64":"YmFh","timeout_ms":2000}"#
        );
        let resp = Response {
            id: 7,
            status: Status::Ok,
            matched: true,
            span: Some([1, 3]),
            captures: vec![Some([1, 2]), None],
            elapsed_us: 12,
        };
        assert_eq!(
            encode(&resp),
            r#"{"id":7,"status":"ok","matched":true,"span":[1,3],"captures":[[1,2],null],"elapsed_us":12}"#
        );
        assert_eq!(encode(&Hello { hello: 1 }), r#"{"hello":1}"#);
    }

    #[test]
    fn round_trips() {
        for (p, i) in [("(a)\n", "é\r\n\u{0}x"), ("", ""), ("\\Ab\\Z", "b")] {
            let r = Request::partial_match(-3, p, i, 1);
            let back: Request = decode(&encode(&r)).unwrap();
            assert_eq!(back, r);
            assert_eq!(back.decode().unwrap(), (p.to_string(), i.to_string()));
        }
        let minimal: Response = decode(r#"{"id":-1,"status":"error"}"#).unwrap();
        assert_eq!(minimal, Response::status_only(-1, Status::Error));
        assert!(decode::<Response>("{\"id\":1}").is_err());
    }
}
