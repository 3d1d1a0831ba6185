//! Evidence normalization: tool events in, uniform records out.
//!
//! Every evidence event yields exactly one record: `measured` when the
//! metric (directly or through an approved mapping) is in the plan slice,
//! `unmapped` otherwise with the emitted identifier kept verbatim. Every
//! planned metric without an event yields exactly one record: `missing`
//! when the invocation finished cleanly, `error` when it failed. Together
//! that conserves both the event stream and the plan slice.

use std::collections::{BTreeMap, BTreeSet};

use super::exec::ToolRun;
use super::mapping::MappingTable;
use super::protocol::ToolEvent;
use crate::evidence::{EvidenceRecord, RecordStatus};

/// Provenance shared by all records of one invocation.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub run_id: String,
    pub spec_hash: String,
    pub tool_id: String,
    pub tool_version: String,
    pub timestamp: String,
}

/// One planned (requirement, metric) target handed to a tool.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PlannedTarget {
    pub requirement_id: String,
    pub metric_id: String,
    pub definition_id: String,
}

/// Normalize one invocation's events against its plan slice. Records come
/// out with `seq`, `prev_hash` and `hash` unset; sealing them is the
/// evidence log's job.
pub fn normalize_events(
    run: &ToolRun,
    slice: &[PlannedTarget],
    mappings: &MappingTable,
    ctx: &RunContext,
) -> Vec<EvidenceRecord> {
    let mut by_metric: BTreeMap<&str, Vec<&PlannedTarget>> = BTreeMap::new();
    for target in slice {
        by_metric.entry(target.metric_id.as_str()).or_default().push(target);
    }

    let blank = |status: RecordStatus, metric_id: String| EvidenceRecord {
        seq: 0,
        prev_hash: String::new(),
        run_id: ctx.run_id.clone(),
        spec_hash: ctx.spec_hash.clone(),
        requirement_id: None,
        metric_id,
        definition_id: None,
        tool_id: ctx.tool_id.clone(),
        tool_version: ctx.tool_version.clone(),
        status,
        value: None,
        instances: None,
        timestamp: ctx.timestamp.clone(),
        hash: String::new(),
    };

    let mut records = Vec::new();
    let mut metrics_with_events: BTreeSet<String> = BTreeSet::new();

    for event in &run.events {
        let ToolEvent::Evidence { metric_id, value, instances } = event else {
            continue;
        };
        // an approved, user-validated mapping may identify the emitted id
        let planned_id = if by_metric.contains_key(metric_id.as_str()) {
            Some(metric_id.clone())
        } else {
            mappings
                .approved_target(metric_id)
                .filter(|mapped| by_metric.contains_key(*mapped))
                .map(str::to_string)
        };

        match planned_id {
            Some(planned) => {
                metrics_with_events.insert(planned.clone());
                for target in &by_metric[planned.as_str()] {
                    let mut record = blank(RecordStatus::Measured, planned.clone());
                    record.requirement_id = Some(target.requirement_id.clone());
                    record.definition_id = Some(target.definition_id.clone());
                    record.value = Some(*value);
                    record.instances = instances.clone();
                    records.push(record);
                }
            }
            None => {
                // keep the emitted identifier verbatim; mapping it to a
                // known metric is a human decision, never a silent one
                let mut record = blank(RecordStatus::Unmapped, metric_id.clone());
                record.value = Some(*value);
                record.instances = instances.clone();
                records.push(record);
            }
        }
    }

    let absent_status =
        if run.succeeded() { RecordStatus::Missing } else { RecordStatus::Error };
    for (metric_id, targets) in &by_metric {
        if metrics_with_events.contains(*metric_id) {
            continue;
        }
        for target in targets {
            let mut record = blank(absent_status, (*metric_id).to_string());
            record.requirement_id = Some(target.requirement_id.clone());
            record.definition_id = Some(target.definition_id.clone());
            records.push(record);
        }
    }

    records
}
