//! Assessment-tool cards, the open catalogue, and assessment planning.
//!
//! A tool card is a machine-readable description of one assessment tool:
//! which metrics it implements (pinned to definition ids), which system
//! types it supports, and how to invoke it. Planning assigns tools to the
//! resolved metric targets of an effective specification with a greedy
//! set cover; targets no tool can serve become explicit gaps — those gaps
//! are an output, not a failure, because a missing tool or metric is
//! itself a learning signal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dsl::{effective_spec_hash, is_ident, is_qualified_id, EffectiveSpec, SpecVersion};
use crate::ontology::Ontology;
use crate::runner::PROTOCOL_VERSION;

/// One metric a card claims to implement, pinned to the definition the
/// tool actually computes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardMetric {
    pub metric_id: String,
    pub definition_id: String,
}

/// Machine-readable description of an assessment tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCard {
    pub tool_id: String,
    pub name: String,
    pub version: String,
    pub metrics: Vec<CardMetric>,
    pub supported_system_types: Vec<String>,
    pub deterministic: bool,
    pub invocation: String,
    pub protocol_version: u32,
}

impl ToolCard {
    pub fn supports_system_type(&self, system_type: &str) -> bool {
        self.supported_system_types.iter().any(|t| t == system_type)
    }

    pub fn implements(&self, metric_id: &str, definition_id: &str) -> bool {
        self.metrics
            .iter()
            .any(|m| m.metric_id == metric_id && m.definition_id == definition_id)
    }

    pub fn lists_metric(&self, metric_id: &str) -> bool {
        self.metrics.iter().any(|m| m.metric_id == metric_id)
    }
}

/// One problem found while linting a card.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CardFinding {
    NotJson(String),
    NotAnObject,
    MissingField(&'static str),
    WrongType { field: String, expected: &'static str },
    UnknownField(String),
    BadToolId(String),
    BadVersion(String),
    EmptyMetrics,
    DuplicateMetric(String),
    BadMetricId(String),
    EmptyDefinitionId(String),
    BadSystemType(String),
    PlaceholderCount(usize),
    UnsupportedProtocolVersion(u64),
    UnknownMetric(String),
    DefinitionMismatch { metric_id: String, card: String, ontology: String },
}

impl fmt::Display for CardFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CardFinding::NotJson(e) => write!(f, "not valid JSON: {e}"),
            CardFinding::NotAnObject => write!(f, "card must be a JSON object"),
            CardFinding::MissingField(name) => write!(f, "missing field `{name}`"),
            CardFinding::WrongType { field, expected } => {
                write!(f, "field `{field}` must be {expected}")
            }
            CardFinding::UnknownField(name) => write!(f, "unknown field `{name}`"),
            CardFinding::BadToolId(id) => write!(f, "tool_id `{id}` is not an identifier"),
            CardFinding::BadVersion(v) => {
                write!(f, "version `{v}` is not MAJOR.MINOR[.PATCH]")
            }
            CardFinding::EmptyMetrics => write!(f, "metrics must be non-empty"),
            CardFinding::DuplicateMetric(id) => write!(f, "metric `{id}` listed twice"),
            CardFinding::BadMetricId(id) => {
                write!(f, "metric id `{id}` is not a qualified identifier")
            }
            CardFinding::EmptyDefinitionId(id) => {
                write!(f, "metric `{id}` has an empty definition_id")
            }
            CardFinding::BadSystemType(t) => {
                write!(f, "system type `{t}` is not an identifier")
            }
            CardFinding::PlaceholderCount(n) => {
                write!(f, "invocation must contain `{{subject}}` exactly once, found {n}")
            }
            CardFinding::UnsupportedProtocolVersion(v) => {
                write!(f, "protocol_version {v} is not supported (engine speaks {PROTOCOL_VERSION})")
            }
            CardFinding::UnknownMetric(id) => {
                write!(f, "metric `{id}` is not defined in the ontology")
            }
            CardFinding::DefinitionMismatch { metric_id, card, ontology } => write!(
                f,
                "definition mismatch for `{metric_id}`: card claims {card}, ontology says {ontology}"
            ),
        }
    }
}

const CARD_FIELDS: [&str; 8] = [
    "tool_id",
    "name",
    "version",
    "metrics",
    "supported_system_types",
    "deterministic",
    "invocation",
    "protocol_version",
];

/// Validate a card source against the schema and the ontology. Returns the
/// card only when the finding list would be empty; otherwise the complete
/// list.
pub fn lint_card(source: &str, ontology: &Ontology) -> Result<ToolCard, Vec<CardFinding>> {
    let value: Value = match serde_json::from_str(source) {
        Ok(v) => v,
        Err(e) => return Err(vec![CardFinding::NotJson(e.to_string())]),
    };
    let Value::Object(map) = &value else {
        return Err(vec![CardFinding::NotAnObject]);
    };

    let mut findings = Vec::new();
    for key in map.keys() {
        if !CARD_FIELDS.contains(&key.as_str()) {
            findings.push(CardFinding::UnknownField(key.clone()));
        }
    }
    for field in CARD_FIELDS {
        if !map.contains_key(field) {
            findings.push(CardFinding::MissingField(field));
        }
    }

    let str_field = |field: &'static str, findings: &mut Vec<CardFinding>| -> Option<String> {
        match map.get(field) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                findings.push(CardFinding::WrongType { field: field.to_string(), expected: "a string" });
                None
            }
            None => None,
        }
    };

    let tool_id = str_field("tool_id", &mut findings);
    if let Some(id) = &tool_id {
        if !is_ident(id) {
            findings.push(CardFinding::BadToolId(id.clone()));
        }
    }
    let name = str_field("name", &mut findings);
    let version = str_field("version", &mut findings);
    if let Some(v) = &version {
        if v.parse::<SpecVersion>().is_err() {
            findings.push(CardFinding::BadVersion(v.clone()));
        }
    }
    let invocation = str_field("invocation", &mut findings);
    if let Some(template) = &invocation {
        let count = template.matches("{subject}").count();
        if count != 1 {
            findings.push(CardFinding::PlaceholderCount(count));
        }
    }

    let deterministic = match map.get("deterministic") {
        Some(Value::Bool(b)) => Some(*b),
        Some(_) => {
            findings.push(CardFinding::WrongType {
                field: "deterministic".into(),
                expected: "a boolean",
            });
            None
        }
        None => None,
    };

    let protocol_version = match map.get("protocol_version") {
        Some(Value::Number(n)) if n.as_u64().is_some() => {
            let v = n.as_u64().unwrap();
            if v != u64::from(PROTOCOL_VERSION) {
                findings.push(CardFinding::UnsupportedProtocolVersion(v));
                None
            } else {
                Some(v as u32)
            }
        }
        Some(_) => {
            findings.push(CardFinding::WrongType {
                field: "protocol_version".into(),
                expected: "an integer",
            });
            None
        }
        None => None,
    };

    let mut metrics: Vec<CardMetric> = Vec::new();
    match map.get("metrics") {
        Some(Value::Array(entries)) => {
            if entries.is_empty() {
                findings.push(CardFinding::EmptyMetrics);
            }
            let mut seen = BTreeSet::new();
            for entry in entries {
                let Value::Object(m) = entry else {
                    findings.push(CardFinding::WrongType {
                        field: "metrics[]".into(),
                        expected: "an object with metric_id and definition_id",
                    });
                    continue;
                };
                for key in m.keys() {
                    if key != "metric_id" && key != "definition_id" {
                        findings.push(CardFinding::UnknownField(format!("metrics[].{key}")));
                    }
                }
                let metric_id = match m.get("metric_id") {
                    Some(Value::String(s)) => s.clone(),
                    _ => {
                        findings.push(CardFinding::WrongType {
                            field: "metrics[].metric_id".into(),
                            expected: "a string",
                        });
                        continue;
                    }
                };
                let definition_id = match m.get("definition_id") {
                    Some(Value::String(s)) => s.clone(),
                    _ => {
                        findings.push(CardFinding::WrongType {
                            field: "metrics[].definition_id".into(),
                            expected: "a string",
                        });
                        continue;
                    }
                };
                if !is_qualified_id(&metric_id) {
                    findings.push(CardFinding::BadMetricId(metric_id.clone()));
                    continue;
                }
                if definition_id.is_empty() {
                    findings.push(CardFinding::EmptyDefinitionId(metric_id.clone()));
                    continue;
                }
                if !seen.insert(metric_id.clone()) {
                    findings.push(CardFinding::DuplicateMetric(metric_id.clone()));
                    continue;
                }
                // ontology cross-check: the claimed (metric, definition)
                // pair must exist with the same definition id
                match ontology.definition_of(&metric_id) {
                    None => findings.push(CardFinding::UnknownMetric(metric_id.clone())),
                    Some(def) if def != definition_id => {
                        findings.push(CardFinding::DefinitionMismatch {
                            metric_id: metric_id.clone(),
                            card: definition_id.clone(),
                            ontology: def.to_string(),
                        })
                    }
                    Some(_) => {}
                }
                metrics.push(CardMetric { metric_id, definition_id });
            }
        }
        Some(_) => findings.push(CardFinding::WrongType {
            field: "metrics".into(),
            expected: "an array",
        }),
        None => {}
    }

    let mut supported_system_types: Vec<String> = Vec::new();
    match map.get("supported_system_types") {
        Some(Value::Array(entries)) => {
            for entry in entries {
                match entry {
                    Value::String(s) if is_ident(s) => supported_system_types.push(s.clone()),
                    Value::String(s) => findings.push(CardFinding::BadSystemType(s.clone())),
                    _ => findings.push(CardFinding::WrongType {
                        field: "supported_system_types[]".into(),
                        expected: "a string",
                    }),
                }
            }
        }
        Some(_) => findings.push(CardFinding::WrongType {
            field: "supported_system_types".into(),
            expected: "an array of strings",
        }),
        None => {}
    }

    if !findings.is_empty() {
        return Err(findings);
    }
    Ok(ToolCard {
        tool_id: tool_id.unwrap(),
        name: name.unwrap(),
        version: version.unwrap(),
        metrics,
        supported_system_types,
        deterministic: deterministic.unwrap(),
        invocation: invocation.unwrap(),
        protocol_version: protocol_version.unwrap(),
    })
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate tool_id `{tool_id}` (from `{first}` and `{second}`)")]
    DuplicateToolId { tool_id: String, first: PathBuf, second: PathBuf },
}

/// Validated catalogue; cards are kept sorted by tool id so every
/// downstream iteration is deterministic regardless of input order.
#[derive(Debug, Clone, Default)]
pub struct Catalogue {
    cards: Vec<ToolCard>,
    sources: BTreeMap<String, PathBuf>,
}

impl Catalogue {
    pub fn from_cards(cards: Vec<ToolCard>) -> Result<Catalogue, RegistryError> {
        let mut catalogue = Catalogue::default();
        for card in cards {
            catalogue.push(card, PathBuf::from("<memory>"))?;
        }
        Ok(catalogue)
    }

    fn push(&mut self, card: ToolCard, source: PathBuf) -> Result<(), RegistryError> {
        if let Some(first) = self.sources.get(&card.tool_id) {
            return Err(RegistryError::DuplicateToolId {
                tool_id: card.tool_id,
                first: first.clone(),
                second: source,
            });
        }
        self.sources.insert(card.tool_id.clone(), source);
        let at = self.cards.partition_point(|c| c.tool_id < card.tool_id);
        self.cards.insert(at, card);
        Ok(())
    }

    /// Cards in ascending tool-id order.
    pub fn cards(&self) -> &[ToolCard] {
        &self.cards
    }

    pub fn card(&self, tool_id: &str) -> Option<&ToolCard> {
        self.cards.iter().find(|c| c.tool_id == tool_id)
    }

    pub fn source_of(&self, tool_id: &str) -> Option<&Path> {
        self.sources.get(tool_id).map(PathBuf::as_path)
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }
}

/// A card that failed linting, with everything wrong about it.
#[derive(Debug)]
pub struct RejectedCard {
    pub path: PathBuf,
    pub findings: Vec<CardFinding>,
}

#[derive(Debug)]
pub struct CatalogueLoad {
    pub catalogue: Catalogue,
    pub rejected: Vec<RejectedCard>,
}

/// Load all cards from disk. Invalid cards are excluded and reported;
/// a duplicate tool id across files is a hard error because report
/// provenance must stay unambiguous.
pub fn load_catalogue(paths: &[PathBuf], ontology: &Ontology) -> Result<CatalogueLoad, RegistryError> {
    let mut catalogue = Catalogue::default();
    let mut rejected = Vec::new();
    for path in paths {
        let source = std::fs::read_to_string(path)
            .map_err(|e| RegistryError::Io { path: path.clone(), source: e })?;
        match lint_card(&source, ontology) {
            Ok(card) => catalogue.push(card, path.clone())?,
            Err(findings) => rejected.push(RejectedCard { path: path.clone(), findings }),
        }
    }
    Ok(CatalogueLoad { catalogue, rejected })
}

/// Why a target ended up unassigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapReason {
    NoSupportingTool,
    SystemTypeUnsupported,
}

/// One (requirement, metric) pair that a tool will assess.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub requirement_id: String,
    pub metric_id: String,
    pub definition_id: String,
    pub tool_id: String,
}

/// One (requirement, metric) pair nothing in the catalogue can assess.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gap {
    pub requirement_id: String,
    pub metric_id: String,
    pub reason: GapReason,
}

/// Deterministic tool-to-target assignment for one effective spec.
/// Assignments and gaps partition the resolved target set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentPlan {
    pub spec_hash: String,
    pub assignments: Vec<Assignment>,
    pub gaps: Vec<Gap>,
}

impl AssessmentPlan {
    /// Targets grouped by assigned tool, for invocation.
    pub fn assignments_by_tool(&self) -> BTreeMap<String, Vec<&Assignment>> {
        let mut by_tool: BTreeMap<String, Vec<&Assignment>> = BTreeMap::new();
        for a in &self.assignments {
            by_tool.entry(a.tool_id.clone()).or_default().push(a);
        }
        by_tool
    }
}

/// An assessment target: one (requirement, metric) pair with the
/// definition the ontology pins for the metric, if any.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Target {
    pub requirement_id: String,
    pub metric_id: String,
    pub definition_id: Option<String>,
}

/// The targets of an effective spec: ontology resolution per requirement
/// plus the spec's explicit metric bindings.
pub fn collect_targets(eff: &EffectiveSpec, ontology: &Ontology) -> BTreeSet<Target> {
    let mut targets = BTreeSet::new();
    for req in &eff.requirements {
        for md in ontology.resolve_metrics(&req.id, &eff.core.system_type).metrics {
            targets.insert(Target {
                requirement_id: req.id.clone(),
                metric_id: md.metric_id,
                definition_id: Some(md.definition_id),
            });
        }
        for binding in &req.bindings {
            targets.insert(Target {
                requirement_id: req.id.clone(),
                metric_id: binding.metric_id.clone(),
                definition_id: ontology.definition_of(&binding.metric_id).map(str::to_string),
            });
        }
    }
    targets
}

fn eligible(card: &ToolCard, target: &Target, system_type: &str) -> bool {
    match &target.definition_id {
        Some(def) => card.implements(&target.metric_id, def) && card.supports_system_type(system_type),
        None => false,
    }
}

/// Greedy set cover over the targets: repeatedly pick the eligible tool
/// covering the most uncovered targets, ties broken by smallest tool id.
/// Uncoverable targets become gaps.
pub fn plan_assessment(
    eff: &EffectiveSpec,
    ontology: &Ontology,
    catalogue: &Catalogue,
) -> AssessmentPlan {
    let system_type = &eff.core.system_type;
    let mut uncovered = collect_targets(eff, ontology);
    let mut assignments: Vec<Assignment> = Vec::new();

    loop {
        let mut best: Option<(&ToolCard, Vec<Target>)> = None;
        for card in catalogue.cards() {
            let covers: Vec<Target> = uncovered
                .iter()
                .filter(|t| eligible(card, t, system_type))
                .cloned()
                .collect();
            // strict `>` keeps the lexicographically smallest tool id on
            // ties because cards iterate in sorted order
            if covers.len() > best.as_ref().map_or(0, |(_, c)| c.len()) {
                best = Some((card, covers));
            }
        }
        let Some((card, covers)) = best else { break };
        for target in covers {
            uncovered.remove(&target);
            assignments.push(Assignment {
                requirement_id: target.requirement_id,
                metric_id: target.metric_id,
                definition_id: target.definition_id.expect("eligible targets have definitions"),
                tool_id: card.tool_id.clone(),
            });
        }
    }

    let gaps: Vec<Gap> = uncovered
        .into_iter()
        .map(|target| {
            let metric_known_to_some_card = target.definition_id.as_deref().is_some_and(|def| {
                catalogue.cards().iter().any(|c| c.implements(&target.metric_id, def))
            });
            let reason = if metric_known_to_some_card {
                GapReason::SystemTypeUnsupported
            } else {
                GapReason::NoSupportingTool
            };
            Gap { requirement_id: target.requirement_id, metric_id: target.metric_id, reason }
        })
        .collect();

    assignments.sort();

    AssessmentPlan { spec_hash: effective_spec_hash(eff), assignments, gaps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::to_canonical_bytes;
    use crate::dsl::{merge, parse_spec};

    const DEF_A: &str = "def:1111111111111111111111111111111111111111111111111111111111111111";
    const DEF_B: &str = "def:2222222222222222222222222222222222222222222222222222222222222222";
    const DEF_BAD: &str = "def:9999999999999999999999999999999999999999999999999999999999999999";

    fn ontology() -> Ontology {
        Ontology::load(&format!(
            "m.a measures R.1\nm.a hasDefinition {DEF_A}\nm.a appliesTo classifier\n\
             m.b measures R.2\nm.b hasDefinition {DEF_B}\nm.b appliesTo classifier\nm.b appliesTo generative\n"
        ))
        .unwrap()
    }

    fn card_json(tool_id: &str, metric_id: &str, definition_id: &str, system_types: &[&str]) -> String {
        serde_json::json!({
            "tool_id": tool_id,
            "name": format!("{tool_id} probe"),
            "version": "1.0",
            "metrics": [{"metric_id": metric_id, "definition_id": definition_id}],
            "supported_system_types": system_types,
            "deterministic": true,
            "invocation": "python3 tool.py {subject}",
            "protocol_version": 1
        })
        .to_string()
    }

    fn eff() -> EffectiveSpec {
        let spec = parse_spec(
            r#"sandbox "s" version "1.0" {
                system_type classifier
                risk_class high
                requirement R.1 { metric m.a <= 0.5 }
                requirement R.2 { metric m.b >= 0.8 }
            }"#,
        )
        .unwrap();
        merge(spec, &[]).unwrap()
    }

    #[test]
    fn valid_card_passes_lint() {
        let card = lint_card(&card_json("fair", "m.a", DEF_A, &["classifier"]), &ontology()).unwrap();
        assert_eq!(card.tool_id, "fair");
        assert!(card.implements("m.a", DEF_A));
        assert!(card.supports_system_type("classifier"));
    }

    #[test]
    fn definition_mismatch_is_found() {
        let err = lint_card(&card_json("fair", "m.a", DEF_BAD, &["classifier"]), &ontology())
            .unwrap_err();
        assert!(matches!(
            &err[0],
            CardFinding::DefinitionMismatch { metric_id, .. } if metric_id == "m.a"
        ));
    }

    #[test]
    fn empty_metrics_is_found() {
        let source = serde_json::json!({
            "tool_id": "t", "name": "t", "version": "1.0", "metrics": [],
            "supported_system_types": ["classifier"], "deterministic": true,
            "invocation": "t {subject}", "protocol_version": 1
        })
        .to_string();
        let err = lint_card(&source, &ontology()).unwrap_err();
        assert!(err.contains(&CardFinding::EmptyMetrics));
    }

    #[test]
    fn lint_collects_all_findings_at_once() {
        let source = serde_json::json!({
            "tool_id": "bad tool", "version": "one",
            "metrics": [{"metric_id": "m.zzz", "definition_id": DEF_A}],
            "supported_system_types": ["classifier"], "deterministic": true,
            "invocation": "t", "protocol_version": 2, "vendor": "acme"
        })
        .to_string();
        let err = lint_card(&source, &ontology()).unwrap_err();
        assert!(err.contains(&CardFinding::MissingField("name")));
        assert!(err.contains(&CardFinding::UnknownField("vendor".into())));
        assert!(err.contains(&CardFinding::BadToolId("bad tool".into())));
        assert!(err.contains(&CardFinding::BadVersion("one".into())));
        assert!(err.contains(&CardFinding::PlaceholderCount(0)));
        assert!(err.contains(&CardFinding::UnsupportedProtocolVersion(2)));
        assert!(err.contains(&CardFinding::UnknownMetric("m.zzz".into())));
    }

    #[test]
    fn unknown_fields_are_findings() {
        let mut v: serde_json::Value =
            serde_json::from_str(&card_json("fair", "m.a", DEF_A, &["classifier"])).unwrap();
        v["extra"] = serde_json::json!(1);
        let err = lint_card(&v.to_string(), &ontology()).unwrap_err();
        assert_eq!(err, vec![CardFinding::UnknownField("extra".into())]);
    }

    #[test]
    fn empty_catalogue_from_zero_paths() {
        let load = load_catalogue(&[], &ontology()).unwrap();
        assert!(load.catalogue.is_empty());
        assert!(load.rejected.is_empty());
    }

    #[test]
    fn catalogue_loads_valid_cards_and_excludes_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.card.json");
        let bad = dir.path().join("bad.card.json");
        std::fs::write(&good, card_json("fair", "m.a", DEF_A, &["classifier"])).unwrap();
        std::fs::write(&bad, card_json("broken", "m.a", DEF_BAD, &["classifier"])).unwrap();
        let load = load_catalogue(&[good, bad.clone()], &ontology()).unwrap();
        assert_eq!(load.catalogue.len(), 1);
        assert_eq!(load.rejected.len(), 1);
        assert_eq!(load.rejected[0].path, bad);
    }

    #[test]
    fn duplicate_tool_id_across_files_is_an_error_naming_both_paths() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.card.json");
        let b = dir.path().join("b.card.json");
        std::fs::write(&a, card_json("fair", "m.a", DEF_A, &["classifier"])).unwrap();
        std::fs::write(&b, card_json("fair", "m.b", DEF_B, &["classifier"])).unwrap();
        match load_catalogue(&[a.clone(), b.clone()], &ontology()) {
            Err(RegistryError::DuplicateToolId { tool_id, first, second }) => {
                assert_eq!(tool_id, "fair");
                assert_eq!((first, second), (a, b));
            }
            other => panic!("expected duplicate tool id error, got {other:?}"),
        }
    }

    #[test]
    fn empty_catalogue_puts_all_targets_in_gaps() {
        let plan = plan_assessment(&eff(), &ontology(), &Catalogue::default());
        assert!(plan.assignments.is_empty());
        assert_eq!(plan.gaps.len(), 2);
        assert!(plan.gaps.iter().all(|g| g.reason == GapReason::NoSupportingTool));
    }

    #[test]
    fn single_tool_covering_everything_is_assigned_to_every_target() {
        let ont = ontology();
        let source = serde_json::json!({
            "tool_id": "omni", "name": "omni", "version": "1.0",
            "metrics": [
                {"metric_id": "m.a", "definition_id": DEF_A},
                {"metric_id": "m.b", "definition_id": DEF_B},
            ],
            "supported_system_types": ["classifier"], "deterministic": true,
            "invocation": "omni {subject}", "protocol_version": 1
        })
        .to_string();
        let card = lint_card(&source, &ont).unwrap();
        let catalogue = Catalogue::from_cards(vec![card]).unwrap();
        let plan = plan_assessment(&eff(), &ont, &catalogue);
        assert!(plan.gaps.is_empty());
        assert_eq!(plan.assignments.len(), 2);
        assert!(plan.assignments.iter().all(|a| a.tool_id == "omni"));
    }

    #[test]
    fn ties_break_to_smallest_tool_id_and_plans_ignore_input_order() {
        let ont = ontology();
        let zeta = lint_card(&card_json("zeta", "m.a", DEF_A, &["classifier"]), &ont).unwrap();
        let alpha = lint_card(&card_json("alpha", "m.a", DEF_A, &["classifier"]), &ont).unwrap();
        let one = Catalogue::from_cards(vec![zeta.clone(), alpha.clone()]).unwrap();
        let two = Catalogue::from_cards(vec![alpha, zeta]).unwrap();
        let plan_one = plan_assessment(&eff(), &ont, &one);
        let plan_two = plan_assessment(&eff(), &ont, &two);
        assert_eq!(plan_one, plan_two);
        assert_eq!(
            to_canonical_bytes(&plan_one).unwrap(),
            to_canonical_bytes(&plan_two).unwrap()
        );
        assert_eq!(plan_one.assignments[0].tool_id, "alpha");
    }

    #[test]
    fn gap_reasons_distinguish_missing_tools_from_wrong_system_types() {
        let ont = ontology();
        // tool knows m.b but only for generative systems
        let card = lint_card(&card_json("gen", "m.b", DEF_B, &["generative"]), &ont).unwrap();
        let catalogue = Catalogue::from_cards(vec![card]).unwrap();
        let plan = plan_assessment(&eff(), &ont, &catalogue);
        let by_metric: BTreeMap<&str, GapReason> =
            plan.gaps.iter().map(|g| (g.metric_id.as_str(), g.reason)).collect();
        assert_eq!(by_metric["m.a"], GapReason::NoSupportingTool);
        assert_eq!(by_metric["m.b"], GapReason::SystemTypeUnsupported);
    }

    #[test]
    fn unknown_bound_metric_becomes_a_gap() {
        let ont = ontology();
        let spec = parse_spec(
            r#"sandbox "s" version "1.0" {
                system_type classifier
                risk_class high
                requirement R.9 { metric m.future <= 0.5 }
            }"#,
        )
        .unwrap();
        let eff = merge(spec, &[]).unwrap();
        let plan = plan_assessment(&eff, &ont, &Catalogue::default());
        assert_eq!(plan.gaps.len(), 1);
        assert_eq!(plan.gaps[0].metric_id, "m.future");
        assert_eq!(plan.gaps[0].reason, GapReason::NoSupportingTool);
    }

    #[test]
    fn assignments_and_gaps_partition_the_targets() {
        let ont = ontology();
        let card = lint_card(&card_json("fair", "m.a", DEF_A, &["classifier"]), &ont).unwrap();
        let catalogue = Catalogue::from_cards(vec![card]).unwrap();
        let eff = eff();
        let plan = plan_assessment(&eff, &ont, &catalogue);
        let targets = collect_targets(&eff, &ont);
        let mut seen = BTreeSet::new();
        for a in &plan.assignments {
            assert!(seen.insert((a.requirement_id.clone(), a.metric_id.clone())));
        }
        for g in &plan.gaps {
            assert!(seen.insert((g.requirement_id.clone(), g.metric_id.clone())));
        }
        let expected: BTreeSet<(String, String)> = targets
            .into_iter()
            .map(|t| (t.requirement_id, t.metric_id))
            .collect();
        assert_eq!(seen, expected);
    }
}
