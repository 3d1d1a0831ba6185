//! Shared generators, independent oracles and fixtures for the
//! integration suites. Oracles here are deliberately written against the
//! data model only, never in terms of the implementation they check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use aits_core::dsl::{
    Comparator, MetricBinding, Requirement, RiskClass, SandboxSpec, SpecExtension, SpecVersion,
    Threshold,
};
use aits_core::report::{
    AssessmentReport, BindingResult, Level, RequirementVerdict, RunMode, Scenario, ToolProvenance,
    Verdict, REPORT_VERSION,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------
// random specification trees
// ---------------------------------------------------------------------

const IDENT_FIRST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
const IDENT_REST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
const SEGMENT_FIRST: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
const LABEL_CHARS: &[u8] =
    b"abcdefghijklmnopqrstuvwxyz ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,:;()-+/";

pub fn gen_ident(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::new();
    s.push(*IDENT_FIRST.choose(rng).unwrap() as char);
    for _ in 0..rng.gen_range(0..6) {
        s.push(*IDENT_REST.choose(rng).unwrap() as char);
    }
    s
}

pub fn gen_qualified_id(rng: &mut ChaCha8Rng) -> String {
    let mut s = gen_ident(rng);
    for _ in 0..rng.gen_range(0..3) {
        s.push('.');
        s.push(*SEGMENT_FIRST.choose(rng).unwrap() as char);
        for _ in 0..rng.gen_range(0..4) {
            s.push(*IDENT_REST.choose(rng).unwrap() as char);
        }
    }
    s
}

pub fn gen_label(rng: &mut ChaCha8Rng) -> String {
    (0..rng.gen_range(0..20)).map(|_| *LABEL_CHARS.choose(rng).unwrap() as char).collect()
}

pub fn gen_version(rng: &mut ChaCha8Rng) -> SpecVersion {
    SpecVersion {
        major: rng.gen_range(0..20),
        minor: rng.gen_range(0..20),
        patch: if rng.gen_bool(0.5) { Some(rng.gen_range(0..20)) } else { None },
    }
}

/// Decimal literal with at most four fraction digits. Keeping every
/// generated threshold on that grid makes tighten/loosen arithmetic in
/// the merge generators exact.
pub fn gen_threshold(rng: &mut ChaCha8Rng) -> Threshold {
    let value = rng.gen_range(-100.0..100.0);
    Threshold::parse(&format!("{value:.4}")).unwrap()
}

fn threshold_at(value: f64) -> Threshold {
    Threshold::parse(&format!("{value:.4}")).unwrap()
}

pub fn gen_binding(rng: &mut ChaCha8Rng, metric_id: String) -> MetricBinding {
    MetricBinding {
        metric_id,
        comparator: if rng.gen_bool(0.5) { Comparator::Le } else { Comparator::Ge },
        threshold: gen_threshold(rng),
    }
}

pub fn gen_requirement(rng: &mut ChaCha8Rng, id: String) -> Requirement {
    let unbound = rng.gen_bool(0.15);
    let mut metric_ids = BTreeSet::new();
    while !unbound && metric_ids.len() < rng.gen_range(1..=3) {
        metric_ids.insert(gen_qualified_id(rng));
    }
    Requirement {
        id,
        label: if rng.gen_bool(0.4) { Some(gen_label(rng)) } else { None },
        bindings: metric_ids.into_iter().map(|m| gen_binding(rng, m)).collect(),
        unbound,
    }
}

pub fn gen_spec(rng: &mut ChaCha8Rng) -> SandboxSpec {
    let mut ids = BTreeSet::new();
    while ids.len() < rng.gen_range(0..=6) {
        ids.insert(gen_qualified_id(rng));
    }
    let mut requirements: Vec<Requirement> =
        ids.into_iter().map(|id| gen_requirement(rng, id)).collect();
    requirements.shuffle(rng);
    SandboxSpec {
        name: {
            let mut n = gen_label(rng);
            if n.is_empty() {
                n.push('s');
            }
            n
        },
        version: gen_version(rng),
        system_type: gen_ident(rng),
        risk_class: *[RiskClass::High, RiskClass::Limited, RiskClass::Minimal]
            .choose(rng)
            .unwrap(),
        requirements,
    }
}

/// A tighter-or-equal replacement on the four-decimal grid.
fn tightened(rng: &mut ChaCha8Rng, binding: &MetricBinding) -> Threshold {
    let delta = rng.gen_range(0.0..5.0);
    match binding.comparator {
        Comparator::Le => threshold_at(binding.threshold.value() - delta),
        Comparator::Ge => threshold_at(binding.threshold.value() + delta),
    }
}

/// A strictly looser replacement on the four-decimal grid.
fn loosened(rng: &mut ChaCha8Rng, binding: &MetricBinding) -> Threshold {
    let delta = rng.gen_range(0.001..5.0);
    match binding.comparator {
        Comparator::Le => threshold_at(binding.threshold.value() + delta),
        Comparator::Ge => threshold_at(binding.threshold.value() - delta),
    }
}

/// A valid extension for `spec`: refinements tighten existing bindings or
/// add fresh ones, additions introduce fresh requirement ids drawn from
/// `id_pool` (kept disjoint between extensions by the caller).
pub fn gen_valid_extension(
    rng: &mut ChaCha8Rng,
    spec: &SandboxSpec,
    name: &str,
    id_pool: &str,
) -> SpecExtension {
    let mut refinements = Vec::new();
    for req in &spec.requirements {
        if !rng.gen_bool(0.5) {
            continue;
        }
        let mut bindings = Vec::new();
        for binding in &req.bindings {
            if rng.gen_bool(0.6) {
                bindings.push(MetricBinding {
                    metric_id: binding.metric_id.clone(),
                    comparator: binding.comparator,
                    threshold: tightened(rng, binding),
                });
            }
        }
        if rng.gen_bool(0.3) {
            let fresh = format!("{id_pool}.extra{}", rng.gen_range(0..100));
            bindings.push(gen_binding(rng, fresh));
        }
        if bindings.is_empty() {
            continue;
        }
        refinements.push(Requirement { id: req.id.clone(), label: None, bindings, unbound: false });
    }

    let mut additions = Vec::new();
    for i in 0..rng.gen_range(0..=2) {
        additions.push(gen_requirement(rng, format!("{id_pool}.N{i}")));
    }

    SpecExtension {
        name: name.to_string(),
        extends_name: spec.name.clone(),
        extends_version: spec.version,
        additions,
        refinements,
    }
}

/// An extension that loosens one existing binding; returns None when the
/// spec has no bindings to loosen.
pub fn gen_loosening_extension(
    rng: &mut ChaCha8Rng,
    spec: &SandboxSpec,
    name: &str,
) -> Option<SpecExtension> {
    let bound: Vec<&Requirement> =
        spec.requirements.iter().filter(|r| !r.bindings.is_empty()).collect();
    let req = bound.choose(rng)?;
    let binding = req.bindings.choose(rng).unwrap();
    Some(SpecExtension {
        name: name.to_string(),
        extends_name: spec.name.clone(),
        extends_version: spec.version,
        additions: vec![],
        refinements: vec![Requirement {
            id: req.id.clone(),
            label: None,
            bindings: vec![MetricBinding {
                metric_id: binding.metric_id.clone(),
                comparator: binding.comparator,
                threshold: loosened(rng, binding),
            }],
            unbound: false,
        }],
    })
}

// ---------------------------------------------------------------------
// random ontology DAGs with a brute-force resolution oracle
// ---------------------------------------------------------------------

pub struct OntologyCase {
    pub source: String,
    pub requirements: Vec<String>,
    pub system_types: Vec<String>,
    /// child -> parents
    pub edges: BTreeMap<String, BTreeSet<String>>,
    pub measures: BTreeMap<String, BTreeSet<String>>,
    pub applies: BTreeMap<String, BTreeSet<String>>,
    pub definitions: BTreeMap<String, String>,
}

pub fn gen_ontology_case(rng: &mut ChaCha8Rng) -> OntologyCase {
    let n_requirements = rng.gen_range(1..=8);
    let requirements: Vec<String> = (0..n_requirements).map(|i| format!("R.{i}")).collect();
    let system_types = vec!["classifier".to_string(), "generative".to_string()];

    // edges only point from higher to lower index, so the graph is a DAG
    let mut edges: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for child in 1..n_requirements {
        for parent in 0..child {
            if rng.gen_bool(0.3) {
                edges
                    .entry(requirements[child].clone())
                    .or_default()
                    .insert(requirements[parent].clone());
            }
        }
    }

    let mut measures: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut applies: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut definitions: BTreeMap<String, String> = BTreeMap::new();
    for m in 0..rng.gen_range(1..=8) {
        let metric = format!("m.{m}");
        definitions.insert(metric.clone(), format!("def:{:064x}", m + 1));
        let mut measured = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=2) {
            measured.insert(requirements.choose(rng).unwrap().clone());
        }
        measures.insert(metric.clone(), measured);
        let mut applicable = BTreeSet::new();
        for t in &system_types {
            if rng.gen_bool(0.6) {
                applicable.insert(t.clone());
            }
        }
        applies.insert(metric, applicable);
    }

    let mut source = String::new();
    for (child, parents) in &edges {
        for parent in parents {
            source.push_str(&format!("{child} subRequirementOf {parent}\n"));
        }
    }
    for (metric, definition) in &definitions {
        source.push_str(&format!("{metric} hasDefinition {definition}\n"));
    }
    for (metric, measured) in &measures {
        for r in measured {
            source.push_str(&format!("{metric} measures {r}\n"));
        }
    }
    for (metric, applicable) in &applies {
        for t in applicable {
            source.push_str(&format!("{metric} appliesTo {t}\n"));
        }
    }

    OntologyCase { source, requirements, system_types, edges, measures, applies, definitions }
}

/// Brute-force oracle: enumerate every upward path from each measured
/// requirement and test whether it hits the target.
pub fn oracle_resolve(
    case: &OntologyCase,
    target: &str,
    system_type: &str,
) -> BTreeSet<(String, String)> {
    fn reaches(
        edges: &BTreeMap<String, BTreeSet<String>>,
        from: &str,
        target: &str,
        path: &mut Vec<String>,
    ) -> bool {
        if from == target {
            return true;
        }
        if path.iter().any(|p| p == from) {
            return false;
        }
        path.push(from.to_string());
        let hit = edges
            .get(from)
            .map(|parents| parents.iter().any(|p| reaches(edges, p, target, path)))
            .unwrap_or(false);
        path.pop();
        hit
    }

    let mut resolved = BTreeSet::new();
    for (metric, measured) in &case.measures {
        let applicable = case.applies.get(metric).is_some_and(|ts| ts.contains(system_type));
        if !applicable {
            continue;
        }
        let mut path = Vec::new();
        if measured.iter().any(|r| reaches(&case.edges, r, target, &mut path)) {
            resolved.insert((metric.clone(), case.definitions[metric].clone()));
        }
    }
    resolved
}

// ---------------------------------------------------------------------
// random planning cases with a brute-force eligibility oracle
// ---------------------------------------------------------------------

pub struct PlanCase {
    pub spec_source: String,
    pub ontology_source: String,
    pub card_sources: Vec<String>,
    /// (requirement, metric) -> definition
    pub targets: BTreeMap<(String, String), String>,
    /// tool -> (metrics, supports the spec's system type)
    pub tools: BTreeMap<String, (BTreeSet<String>, bool)>,
}

pub fn gen_plan_case(rng: &mut ChaCha8Rng) -> PlanCase {
    let n_targets = rng.gen_range(1..=10);
    let metrics: Vec<String> = (0..n_targets).map(|i| format!("mt.{i}")).collect();
    let definitions: Vec<String> =
        (0..n_targets).map(|i| format!("def:{:064x}", 100 + i)).collect();

    let mut targets: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut requirement_bindings: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, metric) in metrics.iter().enumerate() {
        let requirement = format!("SPEC.R{}", i % 3);
        targets.insert((requirement.clone(), metric.clone()), definitions[i].clone());
        requirement_bindings.entry(requirement).or_default().push(metric.clone());
    }

    let mut spec_source = String::from("sandbox \"plan case\" version \"1.0\" {\n");
    spec_source.push_str("  system_type classifier\n  risk_class high\n");
    for (requirement, bound_metrics) in &requirement_bindings {
        spec_source.push_str(&format!("  requirement {requirement} {{\n"));
        for metric in bound_metrics {
            spec_source.push_str(&format!("    metric {metric} <= 1.0\n"));
        }
        spec_source.push_str("  }\n");
    }
    spec_source.push('}');

    let mut ontology_source = String::new();
    for (i, metric) in metrics.iter().enumerate() {
        ontology_source.push_str(&format!("{metric} hasDefinition {}\n", definitions[i]));
    }

    let mut tools: BTreeMap<String, (BTreeSet<String>, bool)> = BTreeMap::new();
    let mut card_sources = Vec::new();
    for k in 0..rng.gen_range(0..=6) {
        let tool_id = format!("tool{k}");
        let mut listed: BTreeSet<String> = metrics.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
        if listed.is_empty() {
            listed.insert(metrics.choose(rng).unwrap().clone());
        }
        let supports = rng.gen_bool(0.75);
        let metric_entries: Vec<String> = listed
            .iter()
            .map(|m| {
                let def = &targets
                    .iter()
                    .find(|((_, metric), _)| metric == m)
                    .map(|(_, def)| def.clone())
                    .unwrap();
                format!("{{\"metric_id\":\"{m}\",\"definition_id\":\"{def}\"}}")
            })
            .collect();
        let system_types =
            if supports { "[\"classifier\",\"other\"]" } else { "[\"other\"]" };
        card_sources.push(format!(
            "{{\"tool_id\":\"{tool_id}\",\"name\":\"{tool_id}\",\"version\":\"1.0\",\
             \"metrics\":[{}],\"supported_system_types\":{system_types},\
             \"deterministic\":true,\"invocation\":\"true {{subject}}\",\"protocol_version\":1}}",
            metric_entries.join(",")
        ));
        tools.insert(tool_id, (listed, supports));
    }

    PlanCase { spec_source, ontology_source, card_sources, targets, tools }
}

pub type GapOracle =
    (BTreeMap<(String, String), &'static str>, BTreeSet<(String, String)>);

/// Brute-force gap oracle: a target is a gap iff no card is eligible.
/// Returns (gaps with reason, coverable target set).
pub fn oracle_gaps(case: &PlanCase) -> GapOracle {
    let mut gaps = BTreeMap::new();
    let mut coverable = BTreeSet::new();
    for (requirement, metric) in case.targets.keys() {
        let listing: Vec<&(BTreeSet<String>, bool)> =
            case.tools.values().filter(|(metrics, _)| metrics.contains(metric)).collect();
        let eligible = listing.iter().any(|(_, supports)| *supports);
        if eligible {
            coverable.insert((requirement.clone(), metric.clone()));
        } else if listing.is_empty() {
            gaps.insert((requirement.clone(), metric.clone()), "no_supporting_tool");
        } else {
            gaps.insert((requirement.clone(), metric.clone()), "system_type_unsupported");
        }
    }
    (gaps, coverable)
}

// ---------------------------------------------------------------------
// synthetic reports
// ---------------------------------------------------------------------

/// A self-consistent report over (requirement, metric, definition,
/// observed, satisfied) rows; `observed: None` leaves the binding
/// unassessed.
pub fn make_report(rows: &[(&str, &str, &str, Option<f64>, bool)]) -> AssessmentReport {
    let mut by_requirement: BTreeMap<String, Vec<BindingResult>> = BTreeMap::new();
    for (requirement, metric, definition, observed, satisfied) in rows {
        by_requirement.entry(requirement.to_string()).or_default().push(BindingResult {
            metric_id: metric.to_string(),
            definition_id: definition.to_string(),
            comparator: Comparator::Le,
            threshold: 0.5,
            observed: *observed,
            satisfied: observed.map(|_| *satisfied),
        });
    }
    let verdicts: Vec<RequirementVerdict> = by_requirement
        .into_iter()
        .map(|(requirement_id, bindings)| {
            let verdict = if bindings.iter().any(|b| b.satisfied == Some(false)) {
                Verdict::Fail
            } else if bindings.iter().all(|b| b.satisfied == Some(true)) {
                Verdict::Pass
            } else {
                Verdict::Unassessed
            };
            RequirementVerdict { requirement_id, verdict, bindings }
        })
        .collect();
    let mut report = AssessmentReport {
        report_version: REPORT_VERSION,
        scenario: Scenario::SelfAssessment,
        mode: RunMode::Assessment,
        level: Level::Micro,
        preliminary: false,
        spec_hash: "c".repeat(64),
        applied_extensions: vec![],
        verdicts,
        gaps: vec![],
        tools: vec![ToolProvenance { tool_id: "synthetic".into(), tool_version: "1.0".into() }],
        unmapped_evidence: 0,
        report_hash: String::new(),
    };
    report.report_hash = report.compute_hash().unwrap();
    report
}

// ---------------------------------------------------------------------
// mock tools and end-to-end fixtures
// ---------------------------------------------------------------------

pub const DEF_DPD: &str =
    "def:6f3d1c08a1e6d9f4b2c5e7a9d0b3f6c8e1a4d7f0b3c6e9a2d5f8b1c4e7a0d3f6";
pub const DEF_F1: &str =
    "def:9c6b3e0a7d4f1c8e5b2a9f6d3c0e7b4a1d8f5c2e9b6a3d0f7c4e1a8b5d2f9c6e";
pub const DEF_NOISE: &str =
    "def:4e1a8d5b2f9c6e3a0d7b4f1c8e5a2d9f6c3b0e7a4d1f8c5b2e9a6d3f0c7b4e1a";

/// Write a python mock tool emitting fixed metric values after an
/// optional random delay. `@VALUES@` is a python dict literal.
pub fn write_value_tool(dir: &Path, file: &str, tool_id: &str, values: &str, delay: bool) -> PathBuf {
    let delay_line = if delay { "time.sleep(random.uniform(0.0, 0.05))" } else { "pass" };
    let body = r#"
import json, random, sys, time
req = json.loads(sys.stdin.readline())
@DELAY@
print(json.dumps({"event": "hello", "protocol_version": 1, "tool_id": "@TOOL_ID@"}), flush=True)
values = @VALUES@
for metric in req["metrics_requested"]:
    if metric in values:
        @DELAY@
        print(json.dumps({"event": "evidence", "metric_id": metric, "value": values[metric]}), flush=True)
print(json.dumps({"event": "done", "status": "ok"}), flush=True)
"#
    .replace("@TOOL_ID@", tool_id)
    .replace("@VALUES@", values)
    .replace("@DELAY@", delay_line);
    let path = dir.join(file);
    std::fs::write(&path, body).unwrap();
    path
}

pub fn card_source(
    tool_id: &str,
    metrics: &[(&str, &str)],
    system_types: &[&str],
    invocation: &str,
) -> String {
    let metric_entries: Vec<String> = metrics
        .iter()
        .map(|(m, d)| format!("{{\"metric_id\":\"{m}\",\"definition_id\":\"{d}\"}}"))
        .collect();
    let type_entries: Vec<String> = system_types.iter().map(|t| format!("\"{t}\"")).collect();
    format!(
        "{{\"tool_id\":\"{tool_id}\",\"name\":\"{tool_id}\",\"version\":\"1.0\",\
         \"metrics\":[{}],\"supported_system_types\":[{}],\
         \"deterministic\":true,\"invocation\":\"{invocation}\",\"protocol_version\":1}}",
        metric_entries.join(","),
        type_entries.join(",")
    )
}

/// The hiring-screener fixture: a three-requirement spec, its ontology,
/// and three mock tools with randomized internal delays. Everything lands
/// under `dir`; returns (spec path, ontology path, card paths).
pub fn write_hiring_fixture(dir: &Path, failing: bool) -> (PathBuf, PathBuf, Vec<PathBuf>) {
    let spec_path = dir.join("hiring.aits");
    std::fs::write(
        &spec_path,
        r#"sandbox "candidate-screener" version "1.0" {
  system_type classifier
  risk_class high
  requirement AIA.Art10 "data governance" { metric fairness.dpd <= 0.1 }
  requirement AIA.Art15 "accuracy" { metric accuracy.f1 >= 0.85 }
  requirement AIA.Art15a "robustness" { metric robustness.noise-stability >= 0.9 }
}
"#,
    )
    .unwrap();

    let ontology_path = dir.join("reference.aitso");
    std::fs::write(
        &ontology_path,
        format!(
            "fairness.dpd hasDefinition {DEF_DPD}\n\
             fairness.dpd measures AIA.Art10\n\
             fairness.dpd appliesTo classifier\n\
             fairness.dpd label \"demographic parity difference\"\n\
             accuracy.f1 hasDefinition {DEF_F1}\n\
             accuracy.f1 measures AIA.Art15\n\
             accuracy.f1 appliesTo classifier\n\
             robustness.noise-stability hasDefinition {DEF_NOISE}\n\
             robustness.noise-stability measures AIA.Art15a\n\
             robustness.noise-stability appliesTo classifier\n"
        ),
    )
    .unwrap();

    let dpd = if failing { 0.25 } else { 0.04 };
    let fairness =
        write_value_tool(dir, "fairness.py", "fairness", &format!("{{\"fairness.dpd\": {dpd}}}"), true);
    let performance =
        write_value_tool(dir, "performance.py", "performance", "{\"accuracy.f1\": 0.91}", true);
    let robustness = write_value_tool(
        dir,
        "robustness.py",
        "robustness",
        "{\"robustness.noise-stability\": 0.93}",
        true,
    );

    let cards = [
        ("fairness", &fairness, vec![("fairness.dpd", DEF_DPD)]),
        ("performance", &performance, vec![("accuracy.f1", DEF_F1)]),
        ("robustness", &robustness, vec![("robustness.noise-stability", DEF_NOISE)]),
    ];
    let mut card_paths = Vec::new();
    for (tool_id, script, metrics) in cards {
        let path = dir.join(format!("{tool_id}.card.json"));
        std::fs::write(
            &path,
            card_source(
                tool_id,
                &metrics,
                &["classifier"],
                &format!("python3 {} {{subject}}", script.display()),
            ),
        )
        .unwrap();
        card_paths.push(path);
    }

    (spec_path, ontology_path, card_paths)
}

pub fn aits_binary() -> &'static str {
    env!("CARGO_BIN_EXE_aits")
}
