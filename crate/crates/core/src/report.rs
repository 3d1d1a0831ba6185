//! Canonical per-run assessment reports.
//!
//! A report condenses one run into per-requirement verdicts: `pass` when
//! every binding has satisfying evidence, `fail` when at least one binding
//! is violated, `unassessed` otherwise. Thresholds are inclusive, and
//! when several measurements exist for one binding the worst observed
//! value decides — a conservative reading. Everything in the report is
//! sorted, so the bytes (and the report hash) do not depend on the order
//! tools happened to finish in.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::content_hash_excluding;
use crate::dsl::{effective_spec_hash, Comparator, EffectiveSpec};
use crate::evidence::{EvidenceRecord, RecordStatus};
use crate::ontology::Ontology;
use crate::registry::{AssessmentPlan, Gap};

pub const REPORT_VERSION: u32 = 1;

/// Which compliance pathway produced this run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Scenario {
    SelfAssessment,
    RegulatorySandbox,
    NotifiedBody,
}

/// Development runs produce preliminary learning signals; assessment runs
/// produce conformity evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum RunMode {
    Development,
    Assessment,
}

/// Where in the learning pipeline an artifact sits. Single-run reports
/// are always micro; aggregation produces meso signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Micro,
    Meso,
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Unassessed,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unassessed => "unassessed",
        }
    }
}

/// One binding's outcome. `definition_id` is empty when the ontology does
/// not know the metric. `observed`/`satisfied` are absent without
/// measured evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingResult {
    pub metric_id: String,
    pub definition_id: String,
    pub comparator: Comparator,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub satisfied: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementVerdict {
    pub requirement_id: String,
    pub verdict: Verdict,
    pub bindings: Vec<BindingResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ToolProvenance {
    pub tool_id: String,
    pub tool_version: String,
}

/// Machine-readable result of one assessment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub report_version: u32,
    pub scenario: Scenario,
    pub mode: RunMode,
    pub level: Level,
    /// Development-mode outputs are preliminary learning signals, not
    /// grounds for sanctions.
    pub preliminary: bool,
    pub spec_hash: String,
    pub applied_extensions: Vec<String>,
    pub verdicts: Vec<RequirementVerdict>,
    pub gaps: Vec<Gap>,
    pub tools: Vec<ToolProvenance>,
    /// Unmapped evidence is counted but never influences verdicts until a
    /// mapping is approved.
    pub unmapped_evidence: u64,
    /// Content hash of this report with the `report_hash` field omitted.
    pub report_hash: String,
}

impl AssessmentReport {
    pub fn compute_hash(&self) -> Result<String, ReportError> {
        Ok(content_hash_excluding(self, "report_hash")?)
    }

    /// True iff the stored hash matches the content.
    pub fn verify(&self) -> bool {
        self.compute_hash().map(|h| h == self.report_hash).unwrap_or(false)
    }

    pub fn any_fail(&self) -> bool {
        self.verdicts.iter().any(|v| v.verdict == Verdict::Fail)
    }

    pub fn any_unassessed(&self) -> bool {
        self.verdicts.iter().any(|v| v.verdict == Verdict::Unassessed)
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("record {seq} belongs to spec {found}, report covers {expected}")]
    ForeignSpecHash { seq: u64, expected: String, found: String },
    #[error(transparent)]
    Canonical(#[from] crate::canonical::CanonicalError),
}

/// Build the report for one run from the effective spec, the plan and the
/// run's evidence records.
pub fn build_report(
    eff: &EffectiveSpec,
    ontology: &Ontology,
    plan: &AssessmentPlan,
    records: &[EvidenceRecord],
    scenario: Scenario,
    mode: RunMode,
) -> Result<AssessmentReport, ReportError> {
    let spec_hash = effective_spec_hash(eff);
    for record in records {
        if record.spec_hash != spec_hash {
            return Err(ReportError::ForeignSpecHash {
                seq: record.seq,
                expected: spec_hash,
                found: record.spec_hash.clone(),
            });
        }
    }

    // all measured values per (requirement, metric)
    let mut observed: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for record in records {
        if record.status != RecordStatus::Measured {
            continue;
        }
        if let (Some(req), Some(value)) = (&record.requirement_id, record.value) {
            observed.entry((req.clone(), record.metric_id.clone())).or_default().push(value);
        }
    }

    let mut verdicts = Vec::new();
    let mut sorted_requirements: Vec<_> = eff.requirements.iter().collect();
    sorted_requirements.sort_by(|a, b| a.id.cmp(&b.id));
    for req in sorted_requirements {
        let mut bindings = Vec::new();
        let mut sorted_bindings: Vec<_> = req.bindings.iter().collect();
        sorted_bindings.sort_by(|a, b| a.metric_id.cmp(&b.metric_id));
        for binding in sorted_bindings {
            let worst = observed
                .get(&(req.id.clone(), binding.metric_id.clone()))
                .map(|values| {
                    values[1..]
                        .iter()
                        .fold(values[0], |acc, &v| binding.comparator.worst(acc, v))
                });
            bindings.push(BindingResult {
                metric_id: binding.metric_id.clone(),
                definition_id: ontology
                    .definition_of(&binding.metric_id)
                    .unwrap_or_default()
                    .to_string(),
                comparator: binding.comparator,
                threshold: binding.threshold.value(),
                observed: worst,
                satisfied: worst.map(|v| binding.comparator.satisfied(v, binding.threshold.value())),
            });
        }

        // unbound requirements have nothing to satisfy, which is a gap,
        // not a pass
        let verdict = if bindings.is_empty() {
            Verdict::Unassessed
        } else if bindings.iter().any(|b| b.satisfied == Some(false)) {
            Verdict::Fail
        } else if bindings.iter().all(|b| b.satisfied == Some(true)) {
            Verdict::Pass
        } else {
            Verdict::Unassessed
        };

        verdicts.push(RequirementVerdict { requirement_id: req.id.clone(), verdict, bindings });
    }

    let mut gaps = plan.gaps.clone();
    gaps.sort();

    let tools: BTreeSet<ToolProvenance> = records
        .iter()
        .map(|r| ToolProvenance { tool_id: r.tool_id.clone(), tool_version: r.tool_version.clone() })
        .collect();

    let unmapped_evidence =
        records.iter().filter(|r| r.status == RecordStatus::Unmapped).count() as u64;

    let mut report = AssessmentReport {
        report_version: REPORT_VERSION,
        scenario,
        mode,
        level: Level::Micro,
        preliminary: mode == RunMode::Development,
        spec_hash,
        applied_extensions: eff.applied_extensions.clone(),
        verdicts,
        gaps,
        tools: tools.into_iter().collect(),
        unmapped_evidence,
        report_hash: String::new(),
    };
    report.report_hash = report.compute_hash()?;
    Ok(report)
}
