//! Meso-level aggregation of assessment reports.
//!
//! Many micro-level reports fold into one signal: per-binding statistics
//! grouped by (requirement, metric, definition), coverage gaps, and
//! comparability findings. Grouping always keys on the definition id —
//! one metric name carrying two definitions is never averaged together.
//! Under the `strict` policy that situation aborts aggregation; under
//! `partition` the populations stay separate and the clash is reported.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::content_hash_excluding;
use crate::report::{AssessmentReport, Level, Verdict};

pub const DEFAULT_GAP_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum AggregationPolicy {
    /// Incomparable definitions abort aggregation.
    Strict,
    /// Incomparable definitions stay in separate groups and are reported.
    Partition,
}

/// Statistics over every observation of one (requirement, metric,
/// definition) group across the input reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGroup {
    pub requirement_id: String,
    pub metric_id: String,
    pub definition_id: String,
    pub n: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGap {
    pub requirement_id: String,
    pub unassessed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incomparability {
    pub metric_id: String,
    pub definition_ids: Vec<String>,
}

/// The aggregated meso-level signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSignal {
    pub level: Level,
    pub report_count: u64,
    pub groups: Vec<MetricGroup>,
    pub coverage_gaps: Vec<CoverageGap>,
    pub incomparabilities: Vec<Incomparability>,
    /// Content hash of this signal with the `signal_hash` field omitted.
    pub signal_hash: String,
}

impl AggregateSignal {
    pub fn verify(&self) -> bool {
        content_hash_excluding(self, "signal_hash")
            .map(|h| h == self.signal_hash)
            .unwrap_or(false)
    }
}

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("no reports to aggregate")]
    Empty,
    #[error("report {index} is corrupted: stored report_hash does not match content")]
    Corrupted { index: usize },
    #[error("metric `{metric_id}` appears with {} definitions: {}", .definition_ids.len(), .definition_ids.join(", "))]
    Incomparable { metric_id: String, definition_ids: Vec<String> },
    #[error(transparent)]
    Canonical(#[from] crate::canonical::CanonicalError),
}

/// Aggregate verified reports into one signal.
pub fn aggregate_reports(
    reports: &[AssessmentReport],
    policy: AggregationPolicy,
    gap_threshold: f64,
) -> Result<AggregateSignal, AggregateError> {
    if reports.is_empty() {
        return Err(AggregateError::Empty);
    }
    for (index, report) in reports.iter().enumerate() {
        if !report.verify() {
            return Err(AggregateError::Corrupted { index });
        }
    }

    // every definition id seen per metric, observed or not
    let mut definitions_seen: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    // observations per (requirement, metric, definition)
    let mut observations: BTreeMap<(String, String, String), Vec<(f64, bool)>> = BTreeMap::new();

    for report in reports {
        for verdict in &report.verdicts {
            for binding in &verdict.bindings {
                definitions_seen
                    .entry(binding.metric_id.clone())
                    .or_default()
                    .insert(binding.definition_id.clone());
                if let (Some(observed), Some(satisfied)) = (binding.observed, binding.satisfied) {
                    observations
                        .entry((
                            verdict.requirement_id.clone(),
                            binding.metric_id.clone(),
                            binding.definition_id.clone(),
                        ))
                        .or_default()
                        .push((observed, satisfied));
                }
            }
        }
    }

    let incomparabilities: Vec<Incomparability> = definitions_seen
        .iter()
        .filter(|(_, defs)| defs.len() > 1)
        .map(|(metric_id, defs)| Incomparability {
            metric_id: metric_id.clone(),
            definition_ids: defs.iter().cloned().collect(),
        })
        .collect();

    if policy == AggregationPolicy::Strict {
        if let Some(clash) = incomparabilities.first() {
            return Err(AggregateError::Incomparable {
                metric_id: clash.metric_id.clone(),
                definition_ids: clash.definition_ids.clone(),
            });
        }
    }

    let groups: Vec<MetricGroup> = observations
        .into_iter()
        .map(|((requirement_id, metric_id, definition_id), mut values)| {
            // a fixed summation order keeps the mean bit-identical under
            // any permutation of the input reports
            values.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let n = values.len() as u64;
            let min = values.first().unwrap().0;
            let max = values.last().unwrap().0;
            let mean = neumaier_sum(values.iter().map(|(v, _)| *v)) / n as f64;
            let satisfied = values.iter().filter(|(_, s)| *s).count();
            MetricGroup {
                requirement_id,
                metric_id,
                definition_id,
                n,
                mean,
                min,
                max,
                pass_rate: satisfied as f64 / n as f64,
            }
        })
        .collect();

    let mut signal = AggregateSignal {
        level: Level::Meso,
        report_count: reports.len() as u64,
        groups,
        coverage_gaps: detect_gaps(reports, gap_threshold),
        incomparabilities,
        signal_hash: String::new(),
    };
    signal.signal_hash = content_hash_excluding(&signal, "signal_hash")?;
    Ok(signal)
}

/// Requirements whose unassessed fraction strictly exceeds the threshold,
/// sorted by descending fraction, then id. The fraction is relative to
/// the reports that contain the requirement at all.
pub fn detect_gaps(reports: &[AssessmentReport], threshold: f64) -> Vec<CoverageGap> {
    let mut counts: BTreeMap<String, (u64, u64)> = BTreeMap::new(); // (present, unassessed)
    for report in reports {
        for verdict in &report.verdicts {
            let entry = counts.entry(verdict.requirement_id.clone()).or_default();
            entry.0 += 1;
            if verdict.verdict == Verdict::Unassessed {
                entry.1 += 1;
            }
        }
    }
    let mut gaps: Vec<CoverageGap> = counts
        .into_iter()
        .filter_map(|(requirement_id, (present, unassessed))| {
            let fraction = unassessed as f64 / present as f64;
            (fraction > threshold).then_some(CoverageGap { requirement_id, unassessed_fraction: fraction })
        })
        .collect();
    gaps.sort_by(|a, b| {
        b.unassessed_fraction
            .total_cmp(&a.unassessed_fraction)
            .then_with(|| a.requirement_id.cmp(&b.requirement_id))
    });
    gaps
}

/// Compensated (Neumaier) summation.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}
