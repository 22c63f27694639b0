use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::TaskKind;

pub const PROTOCOL_VERSION: u32 = 1;

/// One planner query. On the wire it is a single JSON object; over stdio
/// it is followed by exactly one `\n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerRequest {
    pub protocol_version: u32,
    pub episode_id: String,
    pub step_index: u32,
    pub task_kind: TaskKind,
    pub task_instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_category: Option<String>,
    /// Base64 PNG of the current observation; empty when the planner
    /// declared it does not need images.
    #[serde(default)]
    pub image_png_base64: String,
    #[serde(default)]
    pub meta: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplar_prefix: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerResponse {
    pub protocol_version: u32,
    pub raw_text: String,
}

impl PlannerResponse {
    pub fn new(raw_text: impl Into<String>) -> Self {
        Self { protocol_version: PROTOCOL_VERSION, raw_text: raw_text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("missing protocol_version")]
    MissingVersion,
    #[error("unsupported protocol_version {0}")]
    Version(u64),
}

/// Serializes a request as one line, newline included.
pub fn encode_request(req: &PlannerRequest) -> String {
    let mut s = serde_json::to_string(req).expect("request serializes");
    s.push('\n');
    s
}

pub fn encode_response(resp: &PlannerResponse) -> String {
    let mut s = serde_json::to_string(resp).expect("response serializes");
    s.push('\n');
    s
}

fn check_version(v: &Value) -> Result<(), ProtocolError> {
    match v.get("protocol_version") {
        None | Some(Value::Null) => Err(ProtocolError::MissingVersion),
        Some(n) => match n.as_u64() {
            Some(n) if n == PROTOCOL_VERSION as u64 => Ok(()),
            Some(n) => Err(ProtocolError::Version(n)),
            None => Err(ProtocolError::Malformed("protocol_version is not an integer".into())),
        },
    }
}

pub fn decode_response(line: &str) -> Result<PlannerResponse, ProtocolError> {
    let v: Value = serde_json::from_str(line.trim_end()).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    check_version(&v)?;
    serde_json::from_value(v).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

pub fn decode_request(line: &str) -> Result<PlannerRequest, ProtocolError> {
    let v: Value = serde_json::from_str(line.trim_end()).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    check_version(&v)?;
    serde_json::from_value(v).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_mandatory() {
        assert_eq!(decode_response(r#"{"raw_text": "x"}"#), Err(ProtocolError::MissingVersion));
        assert_eq!(decode_response(r#"{"protocol_version": 9, "raw_text": "x"}"#), Err(ProtocolError::Version(9)));
        assert_eq!(decode_response("{\"protocol_version\":1,\"raw_text\":\"x\"}\n").unwrap().raw_text, "x");
        assert!(matches!(decode_response("nope"), Err(ProtocolError::Malformed(_))));
    }

    #[test]
    fn request_is_one_line() {
        let req = PlannerRequest {
            protocol_version: PROTOCOL_VERSION,
            episode_id: "e".into(),
            step_index: 0,
            task_kind: TaskKind::Nav,
            task_instruction: "line one\nline two".into(),
            target_category: Some("bed".into()),
            image_png_base64: String::new(),
            meta: Value::Null,
            exemplar_prefix: None,
        };
        let line = encode_request(&req);
        assert_eq!(line.matches('\n').count(), 1);
        assert!(line.ends_with('\n'));
        assert_eq!(decode_request(&line).unwrap(), req);
    }
}
