//! Line-delimited JSON wire protocol between the toolkit and a model host.
//!
//! ```text
//! {"id":1,"op":"topology"}
//!   -> {"id":1,"layers":12,"heads_per_layer":12,"protocol":1}
//! {"id":2,"op":"evaluate","mask":[1,0,...],"paradigm":"uid","split":"dev"}
//!   -> {"id":2,"accuracy":0.91,"n":100}
//! any failure
//!   -> {"id":2,"error":"message"}
//! ```

use serde::{Deserialize, Serialize};

use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::model::GateMask;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum RequestBody {
    Topology,
    Evaluate {
        mask: GateMask,
        paradigm: String,
        split: Split,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    #[serde(flatten)]
    pub body: RequestBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyResponse {
    pub id: u64,
    pub layers: usize,
    pub heads_per_layer: usize,
    pub protocol: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub id: u64,
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub id: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Topology(TopologyResponse),
    Evaluate(EvaluateResponse),
    Error(ErrorResponse),
}

impl Response {
    pub fn id(&self) -> u64 {
        match self {
            Response::Topology(r) => r.id,
            Response::Evaluate(r) => r.id,
            Response::Error(r) => r.id,
        }
    }

    /// One line of wire text, without the trailing newline.
    pub fn encode(&self) -> String {
        let encoded = match self {
            Response::Topology(r) => serde_json::to_string(r),
            Response::Evaluate(r) => serde_json::to_string(r),
            Response::Error(r) => serde_json::to_string(r),
        };
        encoded.expect("response types always serialize")
    }

    pub fn decode(line: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::Protocol(format!("malformed response `{line}`: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Protocol(format!("response is not an object: `{line}`")))?;
        let parsed = if obj.contains_key("error") {
            serde_json::from_value(value).map(Response::Error)
        } else if obj.contains_key("accuracy") {
            serde_json::from_value(value).map(Response::Evaluate)
        } else if obj.contains_key("layers") {
            serde_json::from_value(value).map(Response::Topology)
        } else {
            return Err(Error::Protocol(format!("unrecognized response `{line}`")));
        };
        parsed.map_err(|e| Error::Protocol(format!("malformed response `{line}`: {e}")))
    }
}

impl Request {
    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("requests always serialize")
    }

    pub fn decode(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::Protocol(format!("malformed request `{line}`: {e}")))
    }
}

/// Best-effort id of a line that failed to parse as a request.
pub fn salvage_id(line: &str) -> u64 {
    serde_json::from_str::<serde_json::Value>(line)
        .ok()
        .and_then(|v| v.get("id").and_then(serde_json::Value::as_u64))
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requests_encode_bit_exactly() {
        let r = Request { id: 7, body: RequestBody::Topology };
        assert_eq!(r.encode(), r#"{"id":7,"op":"topology"}"#);
        let r = Request {
            id: 8,
            body: RequestBody::Evaluate {
                mask: GateMask::from_ints(&[1, 0, 1]).unwrap(),
                paradigm: "anaphor_gender_agreement".into(),
                split: Split::Attribution,
            },
        };
        assert_eq!(
            r.encode(),
            r#"{"id":8,"op":"evaluate","mask":[1,0,1],"paradigm":"anaphor_gender_agreement","split":"attribution"}"#
        );
        assert_eq!(Request::decode(&r.encode()).unwrap(), r);
    }

    #[test]
    fn responses_encode_bit_exactly() {
        let t = Response::Topology(TopologyResponse { id: 1, layers: 12, heads_per_layer: 12, protocol: 1, max_in_flight: None });
        assert_eq!(t.encode(), r#"{"id":1,"layers":12,"heads_per_layer":12,"protocol":1}"#);
        let e = Response::Evaluate(EvaluateResponse { id: 2, accuracy: 0.91, n: 100 });
        assert_eq!(e.encode(), r#"{"id":2,"accuracy":0.91,"n":100}"#);
        let x = Response::Error(ErrorResponse { id: 3, error: "boom".into() });
        assert_eq!(x.encode(), r#"{"id":3,"error":"boom"}"#);
        for r in [t, e, x] {
            assert_eq!(Response::decode(&r.encode()).unwrap(), r);
        }
    }

    #[test]
    fn malformed_lines_are_protocol_errors() {
        assert!(matches!(Response::decode("{oops"), Err(Error::Protocol(_))));
        assert!(matches!(Response::decode(r#"{"id":1}"#), Err(Error::Protocol(_))));
        assert!(matches!(Request::decode(r#"{"id":1,"op":"fly"}"#), Err(Error::Protocol(_))));
        assert_eq!(salvage_id(r#"{"id":9,"op":"fly"}"#), 9);
        assert_eq!(salvage_id("garbage"), 0);
    }
}
