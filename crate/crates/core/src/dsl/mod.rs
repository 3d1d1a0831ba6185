//! The sandbox-specification DSL: parsing, validation, canonical
//! formatting, hashing and piggyback merging.
//!
//! A `.aits` file holds one `sandbox` block (the horizontal core); a
//! `.aitsx` file holds one or more `extension` blocks that anchor to a
//! named core version and may only add requirements or tighten existing
//! thresholds. All operations are pure functions over immutable trees.

mod ast;
mod error;
mod format;
mod lexer;
mod merge;
mod parser;

pub use ast::{
    is_ident, is_qualified_id, Comparator, MetricBinding, Requirement, RiskClass, SandboxSpec,
    SpecExtension, SpecVersion, Threshold, ThresholdError,
};
pub use error::{DslError, MergeError, ParseError};
pub use format::{format_effective, format_extension, format_spec, effective_spec_hash, spec_hash};
pub use merge::{merge, EffectiveBinding, EffectiveRequirement, EffectiveSpec, Origin};
pub use parser::{parse_extension, parse_extensions, parse_spec};

impl EffectiveRequirement {
    /// Flattened view of an effective requirement carrying the effective
    /// thresholds, as it appears in the canonical text.
    pub fn as_requirement(&self) -> Requirement {
        Requirement {
            id: self.id.clone(),
            label: self.label.clone(),
            bindings: self
                .bindings
                .iter()
                .map(|b| MetricBinding {
                    metric_id: b.metric_id.clone(),
                    comparator: b.comparator,
                    threshold: b.threshold.clone(),
                })
                .collect(),
            unbound: self.unbound,
        }
    }
}
