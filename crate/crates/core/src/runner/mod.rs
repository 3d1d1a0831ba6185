//! Tool execution and evidence normalization.
//!
//! Assessment tools are external processes speaking a newline-delimited
//! JSON event protocol over standard input/output. The runner spawns
//! them, enforces the protocol and a per-invocation timeout, normalizes
//! whatever comes back into uniform evidence records, and proposes
//! user-validated mappings for emitted metric identifiers it does not
//! recognize.

mod exec;
mod mapping;
mod normalize;
mod protocol;

pub use exec::{build_argv, run_tool, RunFailure, ToolRun};
pub use mapping::{propose_mappings, MappingBasis, MappingError, MappingProposal, MappingTable};
pub use normalize::{normalize_events, PlannedTarget, RunContext};
pub use protocol::{DoneStatus, InstanceValue, RunRequest, ToolEvent, PROTOCOL_VERSION};
