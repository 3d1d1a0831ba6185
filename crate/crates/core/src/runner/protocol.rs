//! Wire protocol spoken between the engine and assessment tools.
//!
//! Version 1: the engine writes one request line to the tool's standard
//! input and reads newline-delimited JSON events from its standard output.
//! The first event must be `hello` carrying the negotiated protocol
//! version, the last must be `done`. Any non-JSON line is a protocol
//! violation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

/// The single request line the engine sends to a tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRequest {
    pub protocol_version: u32,
    pub run_id: String,
    pub metrics_requested: Vec<String>,
    pub subject: String,
    pub params: BTreeMap<String, String>,
}

/// Per-instance result attached to an evidence event. The instance id is
/// opaque; its granularity (sample, slice, …) is the tool's business.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceValue {
    pub instance_id: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneStatus {
    Ok,
    Failed,
}

/// One event on a tool's output stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ToolEvent {
    Hello {
        protocol_version: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        tool_id: Option<String>,
    },
    Evidence {
        metric_id: String,
        value: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        instances: Option<Vec<InstanceValue>>,
    },
    Log {
        message: String,
    },
    Done {
        status: DoneStatus,
    },
}

impl ToolEvent {
    pub fn is_evidence(&self) -> bool {
        matches!(self, ToolEvent::Evidence { .. })
    }
}
