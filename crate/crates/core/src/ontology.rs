//! Reference ontology of metrics.
//!
//! A small closed vocabulary of triples ties metric identifiers to unique
//! formal definitions, to the requirements they measure, and to the system
//! types they apply to; `subRequirementOf` arranges requirements in an
//! acyclic hierarchy so evidence for a sub-requirement counts toward its
//! parent. Definition identity is opaque: the engine only ever compares
//! definition ids for equality, which is what keeps aggregated evidence
//! comparable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dsl::is_qualified_id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Predicate {
    Measures,
    HasDefinition,
    AppliesTo,
    SubRequirementOf,
    Label,
}

impl Predicate {
    pub fn as_str(&self) -> &'static str {
        match self {
            Predicate::Measures => "measures",
            Predicate::HasDefinition => "hasDefinition",
            Predicate::AppliesTo => "appliesTo",
            Predicate::SubRequirementOf => "subRequirementOf",
            Predicate::Label => "label",
        }
    }
}

impl FromStr for Predicate {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "measures" => Ok(Predicate::Measures),
            "hasDefinition" => Ok(Predicate::HasDefinition),
            "appliesTo" => Ok(Predicate::AppliesTo),
            "subRequirementOf" => Ok(Predicate::SubRequirementOf),
            "label" => Ok(Predicate::Label),
            _ => Err(()),
        }
    }
}

/// Object position of a triple: an identifier, or a quoted string for
/// `label` triples.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum TripleObject {
    Id(String),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub predicate: Predicate,
    pub object: TripleObject,
}

/// A metric together with its unique definition id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MetricDefinition {
    pub metric_id: String,
    pub definition_id: String,
}

/// Consistency findings and resolution warnings. Findings are data, not
/// failures; loading promotes them to errors, checking just reports them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    DuplicateDefinition { metric_id: String, definition_ids: Vec<String> },
    UndefinedMetric { metric_id: String },
    HierarchyCycle { members: Vec<String> },
    UnknownRequirement { requirement_id: String },
    AmbiguousLabel { label: String, metric_ids: Vec<String> },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DuplicateDefinition { metric_id, definition_ids } => write!(
                f,
                "metric `{metric_id}` has {} definitions: {}",
                definition_ids.len(),
                definition_ids.join(", ")
            ),
            Finding::UndefinedMetric { metric_id } => {
                write!(f, "metric `{metric_id}` is used but has no definition")
            }
            Finding::HierarchyCycle { members } => {
                write!(f, "requirement hierarchy cycle: {{{}}}", members.join(", "))
            }
            Finding::UnknownRequirement { requirement_id } => {
                write!(f, "requirement `{requirement_id}` is not covered by the ontology")
            }
            Finding::AmbiguousLabel { label, metric_ids } => write!(
                f,
                "label \"{label}\" is shared by metrics: {}",
                metric_ids.join(", ")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OntologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("ontology is inconsistent: {}", .findings.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; "))]
    Inconsistent { findings: Vec<Finding> },
}

/// Result of resolving a requirement and system type to applicable
/// metric definitions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Resolution {
    pub metrics: BTreeSet<MetricDefinition>,
    pub warnings: Vec<Finding>,
}

/// Immutable triple set with derived indexes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ontology {
    triples: BTreeSet<Triple>,
    definitions: BTreeMap<String, BTreeSet<String>>,
    measures: BTreeMap<String, BTreeSet<String>>,
    applies_to: BTreeMap<String, BTreeSet<String>>,
    labels: BTreeMap<String, BTreeSet<String>>,
    parents: BTreeMap<String, BTreeSet<String>>,
    children: BTreeMap<String, BTreeSet<String>>,
}

impl Ontology {
    /// Parse the line-oriented triple format without the consistency gate.
    /// Duplicate identical triples collapse, so loading a file twice is
    /// the same as loading it once.
    pub fn parse(source: &str) -> Result<Ontology, OntologyError> {
        let mut ont = Ontology::default();
        for (idx, raw) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            ont.insert(parse_triple(line, line_no)?);
        }
        Ok(ont)
    }

    /// Parse and run the consistency gate; any finding is an error.
    pub fn load(source: &str) -> Result<Ontology, OntologyError> {
        let ont = Ontology::parse(source)?;
        let findings = ont.check_consistency();
        if findings.is_empty() {
            Ok(ont)
        } else {
            Err(OntologyError::Inconsistent { findings })
        }
    }

    fn insert(&mut self, triple: Triple) {
        if !self.triples.insert(triple.clone()) {
            return;
        }
        let Triple { subject, predicate, object } = triple;
        let object_id = match &object {
            TripleObject::Id(id) => id.clone(),
            TripleObject::Text(text) => text.clone(),
        };
        match predicate {
            Predicate::Measures => {
                self.measures.entry(subject).or_default().insert(object_id);
            }
            Predicate::HasDefinition => {
                self.definitions.entry(subject).or_default().insert(object_id);
            }
            Predicate::AppliesTo => {
                self.applies_to.entry(subject).or_default().insert(object_id);
            }
            Predicate::SubRequirementOf => {
                self.parents.entry(subject.clone()).or_default().insert(object_id.clone());
                self.children.entry(object_id).or_default().insert(subject);
            }
            Predicate::Label => {
                self.labels.entry(object_id).or_default().insert(subject);
            }
        }
    }

    /// The complete finding list; empty means consistent.
    pub fn check_consistency(&self) -> Vec<Finding> {
        let mut findings = Vec::new();

        for (metric, defs) in &self.definitions {
            if defs.len() > 1 {
                findings.push(Finding::DuplicateDefinition {
                    metric_id: metric.clone(),
                    definition_ids: defs.iter().cloned().collect(),
                });
            }
        }

        let used: BTreeSet<&String> =
            self.measures.keys().chain(self.applies_to.keys()).collect();
        for metric in used {
            if !self.definitions.contains_key(metric) {
                findings.push(Finding::UndefinedMetric { metric_id: metric.clone() });
            }
        }

        for cycle in self.hierarchy_cycles() {
            findings.push(Finding::HierarchyCycle { members: cycle });
        }

        findings
    }

    /// Strongly connected components of the `subRequirementOf` graph that
    /// contain a cycle (size > 1, or a self-loop), sorted by smallest
    /// member for deterministic reporting.
    fn hierarchy_cycles(&self) -> Vec<Vec<String>> {
        let nodes: Vec<&String> = {
            let mut set = BTreeSet::new();
            for (child, parents) in &self.parents {
                set.insert(child);
                set.extend(parents.iter());
            }
            set.into_iter().collect()
        };
        let index_of: BTreeMap<&String, usize> =
            nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();

        // iterative Tarjan
        let n = nodes.len();
        let mut indices = vec![usize::MAX; n];
        let mut lowlink = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut next_index = 0usize;
        let mut components: Vec<Vec<usize>> = Vec::new();

        #[derive(Clone)]
        struct Frame {
            node: usize,
            edge: usize,
        }

        let succ = |v: usize| -> Vec<usize> {
            self.parents
                .get(nodes[v])
                .map(|ps| ps.iter().filter_map(|p| index_of.get(p).copied()).collect())
                .unwrap_or_default()
        };

        for start in 0..n {
            if indices[start] != usize::MAX {
                continue;
            }
            let mut call_stack = vec![Frame { node: start, edge: 0 }];
            indices[start] = next_index;
            lowlink[start] = next_index;
            next_index += 1;
            stack.push(start);
            on_stack[start] = true;

            while let Some(frame) = call_stack.last().cloned() {
                let v = frame.node;
                let successors = succ(v);
                if frame.edge < successors.len() {
                    call_stack.last_mut().unwrap().edge += 1;
                    let w = successors[frame.edge];
                    if indices[w] == usize::MAX {
                        indices[w] = next_index;
                        lowlink[w] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call_stack.push(Frame { node: w, edge: 0 });
                    } else if on_stack[w] {
                        lowlink[v] = lowlink[v].min(indices[w]);
                    }
                } else {
                    call_stack.pop();
                    if let Some(parent) = call_stack.last() {
                        lowlink[parent.node] = lowlink[parent.node].min(lowlink[v]);
                    }
                    if lowlink[v] == indices[v] {
                        let mut component = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            component.push(w);
                            if w == v {
                                break;
                            }
                        }
                        components.push(component);
                    }
                }
            }
        }

        let mut cycles: Vec<Vec<String>> = components
            .into_iter()
            .filter(|c| {
                c.len() > 1
                    || self
                        .parents
                        .get(nodes[c[0]])
                        .is_some_and(|ps| ps.contains(nodes[c[0]]))
            })
            .map(|c| {
                let mut members: Vec<String> = c.into_iter().map(|i| nodes[i].clone()).collect();
                members.sort();
                members
            })
            .collect();
        cycles.sort();
        cycles
    }

    /// All applicable metric definitions for a requirement and system
    /// type: metrics measuring the requirement or any of its descendants
    /// (reflexive-transitive closure) whose applicability covers the
    /// system type. Unknown requirements resolve empty with a warning.
    pub fn resolve_metrics(&self, requirement_id: &str, system_type: &str) -> Resolution {
        let mut resolution = Resolution::default();
        if !self.known_requirements().contains(requirement_id) {
            resolution.warnings.push(Finding::UnknownRequirement {
                requirement_id: requirement_id.to_string(),
            });
            return resolution;
        }
        let scope = self.descendants(requirement_id);
        for (metric, measured) in &self.measures {
            if measured.is_disjoint(&scope) {
                continue;
            }
            if !self.applies_to.get(metric).is_some_and(|types| types.contains(system_type)) {
                continue;
            }
            if let Some(definition_id) = self.definition_of(metric) {
                resolution.metrics.insert(MetricDefinition {
                    metric_id: metric.clone(),
                    definition_id: definition_id.to_string(),
                });
            }
        }
        resolution
    }

    /// Requirement ids the ontology says anything about.
    fn known_requirements(&self) -> BTreeSet<String> {
        let mut known = BTreeSet::new();
        for targets in self.measures.values() {
            known.extend(targets.iter().cloned());
        }
        for (child, parents) in &self.parents {
            known.insert(child.clone());
            known.extend(parents.iter().cloned());
        }
        known
    }

    /// Reflexive-transitive closure downward over `subRequirementOf`.
    fn descendants(&self, root: &str) -> BTreeSet<String> {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut queue = vec![root.to_string()];
        while let Some(node) = queue.pop() {
            if !seen.insert(node.clone()) {
                continue;
            }
            if let Some(kids) = self.children.get(&node) {
                queue.extend(kids.iter().cloned());
            }
        }
        seen
    }

    /// The unique definition of a metric. With a consistent ontology there
    /// is at most one; an unchecked ontology yields the smallest.
    pub fn definition_of(&self, metric_id: &str) -> Option<&str> {
        self.definitions
            .get(metric_id)
            .and_then(|defs| defs.iter().next())
            .map(String::as_str)
    }

    /// True iff the metric has a definition.
    pub fn has_metric(&self, metric_id: &str) -> bool {
        self.definitions.contains_key(metric_id)
    }

    /// Metrics carrying exactly this label text (case-sensitive).
    pub fn metrics_labelled(&self, label: &str) -> BTreeSet<String> {
        self.labels.get(label).cloned().unwrap_or_default()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

fn parse_triple(line: &str, line_no: usize) -> Result<Triple, OntologyError> {
    let err = |message: String| OntologyError::Parse { line: line_no, message };

    let mut fields = line.splitn(3, char::is_whitespace);
    let subject = fields.next().unwrap_or_default().to_string();
    let predicate_text = fields.next().unwrap_or_default();
    let rest = fields.next().unwrap_or_default().trim();

    if subject.is_empty() || predicate_text.is_empty() || rest.is_empty() {
        return Err(err(format!("expected `subject predicate object`, found `{line}`")));
    }
    if !is_qualified_id(&subject) {
        return Err(err(format!("`{subject}` is not a valid qualified identifier")));
    }
    let predicate: Predicate = predicate_text
        .parse()
        .map_err(|_| err(format!("unknown predicate `{predicate_text}`")))?;

    let object = if let Some(quoted) = rest.strip_prefix('"') {
        let Some(text) = quoted.strip_suffix('"') else {
            return Err(err("unterminated string object".to_string()));
        };
        if text.contains('"') {
            return Err(err("string object contains a stray quote".to_string()));
        }
        if predicate != Predicate::Label {
            return Err(err(format!(
                "predicate `{predicate_text}` takes an identifier object, not a string"
            )));
        }
        TripleObject::Text(text.to_string())
    } else {
        if predicate == Predicate::Label {
            return Err(err("`label` takes a double-quoted string object".to_string()));
        }
        if rest.chars().any(char::is_whitespace) {
            return Err(err(format!("object `{rest}` must be a single token")));
        }
        let valid = match predicate {
            // definition ids are opaque content identifiers (`def:…`)
            Predicate::HasDefinition => !rest.is_empty(),
            _ => is_qualified_id(rest),
        };
        if !valid {
            return Err(err(format!("`{rest}` is not a valid object for `{predicate_text}`")));
        }
        TripleObject::Id(rest.to_string())
    };

    Ok(Triple { subject, predicate, object })
}
