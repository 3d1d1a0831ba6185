//! Assessment-sandbox engine.
//!
//! Turns layered compliance specifications into executed assessment runs
//! with auditable, machine-readable outputs:
//!
//! - [`dsl`] — specification language: parse, validate, format, hash,
//!   and merge sector extensions over a horizontal core.
//! - [`ontology`] — reference ontology of metrics with consistency
//!   checking and requirement-hierarchy resolution.
//! - [`registry`] — assessment-tool cards, catalogue loading, and
//!   deterministic tool-to-metric planning.
//! - [`runner`] — external tool execution over a line-delimited event
//!   protocol, evidence normalization, and metric-id mapping proposals.
//! - [`evidence`] / [`report`] — append-only hash-chained evidence log
//!   and per-run assessment reports with requirement verdicts.
//! - [`aggregate`] — meso-level aggregation of many reports into group
//!   statistics, coverage gaps, and comparability findings.
//! - [`pipeline`] / [`cli`] — the `aits` command-line workflows.

// error enums carry full diagnostic context and travel cold paths only
#![allow(clippy::result_large_err)]

pub mod aggregate;
pub mod canonical;
pub mod cli;
pub mod config;
pub mod dsl;
pub mod evidence;
pub mod ontology;
pub mod pipeline;
pub mod registry;
pub mod report;
pub mod runner;
