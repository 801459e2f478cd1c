//! Newline-delimited JSON messages exchanged between device and server.
//!
//! A device sends one [`AlertPayload`] per line; the server answers each
//! line with one [`ServerMessage`] line. Numbers are written in shortest
//! round-trip decimal form, so decoding restores every `f64` bit for bit.
//!
//! ```text
//! {"type":"alert","version":1,"device_id":"dev-1","detected_at":12340,
//!  "fall_kind":"FALL","detector":"three_phase","sample_rate_hz":50.0,
//!  "samples":[[0.1,9.79,0.3,1.5,-2.0,0.0], ... 200 entries ...]}\n
//! ```
//! (shown wrapped; on the wire it is a single line).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{ActivityLabel, FallKind};
use crate::falldetect::DetectorId;
use crate::priorfall::{WindowPrediction, SNAPSHOT_LEN};

pub const WIRE_VERSION: u64 = 1;
pub const SUPPORTED_VERSIONS: &[u64] = &[WIRE_VERSION];
pub const MAX_DEVICE_ID_LEN: usize = 64;

/// Longest decimal rendering of an `f64` (e.g. `-1.2345678901234567e-308`).
const MAX_NUMBER_CHARS: usize = 24;

/// Upper bound on an encoded payload, terminator included: the fixed keys
/// and punctuation, the longest device id and detector, and 200 samples of
/// six maximal numbers.
pub const MAX_PAYLOAD_BYTES: usize = {
    let sample = 2 + 6 * MAX_NUMBER_CHARS + 5;
    let samples = 2 + SNAPSHOT_LEN * sample + (SNAPSHOT_LEN - 1);
    let header = 160 + MAX_DEVICE_ID_LEN + 2 * MAX_NUMBER_CHARS;
    header + samples + 1
};

/// Any line longer than this is rejected before parsing.
pub const MAX_FRAME_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WireError {
    #[error("frame error: {0}")]
    Frame(String),
    #[error("unsupported wire version {found} (supported: {})", fmt_versions(supported))]
    Version { found: u64, supported: Vec<u64> },
    #[error("invalid message: {0}")]
    Validation(String),
}

fn fmt_versions(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(", ")
}

impl WireError {
    pub fn kind(&self) -> &'static str {
        match self {
            WireError::Frame(_) => "frame",
            WireError::Version { .. } => "version",
            WireError::Validation(_) => "validation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "alert")]
pub struct AlertPayload {
    pub version: u64,
    pub device_id: String,
    /// Device clock in milliseconds since replay start.
    pub detected_at: u64,
    pub fall_kind: FallKind,
    pub detector: DetectorId,
    pub sample_rate_hz: f64,
    /// `ax, ay, az` (m/s²), `gx, gy, gz` (°/s), oldest first.
    pub samples: Vec<[f64; 6]>,
}

fn valid_device_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= MAX_DEVICE_ID_LEN
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

impl AlertPayload {
    pub fn validate(&self) -> Result<(), WireError> {
        if !SUPPORTED_VERSIONS.contains(&self.version) {
            return Err(WireError::Version {
                found: self.version,
                supported: SUPPORTED_VERSIONS.to_vec(),
            });
        }
        if !valid_device_id(&self.device_id) {
            return Err(WireError::Validation(format!(
                "device_id must be 1-{MAX_DEVICE_ID_LEN} characters of [A-Za-z0-9._-], got {:?}",
                self.device_id
            )));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(WireError::Validation(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if self.samples.len() != SNAPSHOT_LEN {
            return Err(WireError::Validation(format!(
                "expected {SNAPSHOT_LEN} samples, got {}",
                self.samples.len()
            )));
        }
        if self.samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(WireError::Validation("samples must be finite numbers".into()));
        }
        Ok(())
    }
}

const PAYLOAD_FIELDS: &[&str] = &[
    "type",
    "version",
    "device_id",
    "detected_at",
    "fall_kind",
    "detector",
    "sample_rate_hz",
    "samples",
];

/// One payload line, terminator included.
pub fn encode_payload(p: &AlertPayload) -> Result<Vec<u8>, WireError> {
    p.validate()?;
    let mut out = serde_json::to_vec(p).map_err(|e| WireError::Validation(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Splits off the first newline-terminated line.
pub fn split_frame(bytes: &[u8]) -> Result<(&[u8], &[u8]), WireError> {
    match bytes.iter().position(|b| *b == b'\n') {
        Some(i) if i + 1 > MAX_FRAME_BYTES => Err(WireError::Frame(format!(
            "message of {} bytes exceeds {MAX_FRAME_BYTES}",
            i + 1
        ))),
        Some(i) => Ok((&bytes[..i], &bytes[i + 1..])),
        None if bytes.len() > MAX_FRAME_BYTES => Err(WireError::Frame(format!(
            "unterminated message exceeds {MAX_FRAME_BYTES} bytes"
        ))),
        None => Err(WireError::Frame("truncated message: no line terminator".into())),
    }
}

/// Parses exactly one payload; the bytes after its line are returned.
pub fn decode_payload(bytes: &[u8]) -> Result<(AlertPayload, &[u8]), WireError> {
    let (line, rest) = split_frame(bytes)?;
    let value: serde_json::Value =
        serde_json::from_slice(line).map_err(|e| WireError::Frame(format!("not a JSON line: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| WireError::Frame("message is not a JSON object".into()))?;
    match obj.get("type").and_then(|t| t.as_str()) {
        Some("alert") => {}
        Some(other) => return Err(WireError::Validation(format!("unexpected message type {other:?}"))),
        None => return Err(WireError::Validation("missing message type".into())),
    }
    let version = obj
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| WireError::Validation("missing or non-integer version".into()))?;
    if !SUPPORTED_VERSIONS.contains(&version) {
        return Err(WireError::Version {
            found: version,
            supported: SUPPORTED_VERSIONS.to_vec(),
        });
    }
    if let Some(k) = obj.keys().find(|k| !PAYLOAD_FIELDS.contains(&k.as_str())) {
        return Err(WireError::Validation(format!("unknown field {k:?}")));
    }
    // Re-parse from the text so floats keep their exact decimal form.
    let payload: AlertPayload = serde_json::from_slice(line).map_err(|e| WireError::Validation(e.to_string()))?;
    payload.validate()?;
    Ok((payload, rest))
}

/// Hex SHA-256 of a wire message.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertResponse {
    pub version: u64,
    pub device_id: String,
    pub detected_at: u64,
    /// SHA-256 of the payload line the response answers.
    pub payload_sha256: String,
    pub prior_activity: ActivityLabel,
    pub vote_counts: BTreeMap<ActivityLabel, usize>,
    pub window_predictions: Vec<WindowPrediction>,
    /// Server wall clock, milliseconds since the Unix epoch.
    pub served_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Response(AlertResponse),
    Error { kind: String, message: String },
}

impl ServerMessage {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec(self).expect("server messages always serialize");
        out.push(b'\n');
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<(ServerMessage, &[u8]), WireError> {
        let (line, rest) = split_frame(bytes)?;
        let msg = serde_json::from_slice(line).map_err(|e| WireError::Frame(format!("bad server message: {e}")))?;
        Ok((msg, rest))
    }

    pub fn from_error(e: &crate::Error) -> Self {
        let kind = match e {
            crate::Error::Wire(w) => w.kind(),
            _ => "internal",
        };
        ServerMessage::Error {
            kind: kind.to_string(),
            message: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn payload() -> AlertPayload {
        AlertPayload {
            version: 1,
            device_id: "dev-01".into(),
            detected_at: 4180,
            fall_kind: FallKind::Fall,
            detector: DetectorId::ThreePhase,
            sample_rate_hz: 50.0,
            samples: (0..200)
                .map(|i| {
                    let x = i as f64;
                    [0.1 * x, 9.8 - x * 1e-3, -0.0, 1.0 / 3.0, -2000.0, 1e-300]
                })
                .collect(),
        }
    }

    #[test]
    fn round_trip_and_remainder() {
        let p = payload();
        let mut bytes = encode_payload(&p).unwrap();
        assert!(bytes.len() <= MAX_PAYLOAD_BYTES);
        bytes.extend_from_slice(b"tail");
        let (q, rest) = decode_payload(&bytes).unwrap();
        assert_eq!(rest, b"tail");
        for (a, b) in p.samples.iter().flatten().zip(q.samples.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(p, q);
    }

    #[test]
    fn size_bound_holds_for_widest_fields() {
        let mut p = payload();
        p.device_id = "x".repeat(MAX_DEVICE_ID_LEN);
        p.detected_at = u64::MAX;
        p.fall_kind = FallKind::FallKneesFirst;
        p.sample_rate_hz = 1.2345678901234567e-300;
        p.samples = vec![[-1.2345678901234567e-300; 6]; SNAPSHOT_LEN];
        assert!(encode_payload(&p).unwrap().len() <= MAX_PAYLOAD_BYTES);
    }

    #[test]
    fn wrong_count_refused() {
        let mut p = payload();
        p.samples.pop();
        assert!(matches!(encode_payload(&p), Err(WireError::Validation(_))));
    }

    #[test]
    fn truncated_is_frame_error() {
        let bytes = encode_payload(&payload()).unwrap();
        assert!(matches!(
            decode_payload(&bytes[..bytes.len() - 1]),
            Err(WireError::Frame(_))
        ));
        assert!(matches!(decode_payload(&bytes[..100]), Err(WireError::Frame(_))));
    }

    #[test]
    fn version_error_names_supported() {
        let text = String::from_utf8(encode_payload(&payload()).unwrap()).unwrap();
        let bad = text.replace("\"version\":1", "\"version\":999");
        let err = decode_payload(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, WireError::Version { found: 999, .. }));
        assert!(err.to_string().contains("supported: 1"));
    }

    #[test]
    fn server_message_round_trip() {
        let m = ServerMessage::Error {
            kind: "frame".into(),
            message: "x".into(),
        };
        let bytes = m.encode();
        let (back, rest) = ServerMessage::decode(&bytes).unwrap();
        assert_eq!(back, m);
        assert!(rest.is_empty());
    }
}
