//! Semi-automated mapping of unknown emitted metric identifiers.
//!
//! When a tool emits an identifier the plan does not know, the engine may
//! propose an ontology metric whose `label` equals the emitted id exactly
//! — nothing fuzzier, since a near-miss mapping is exactly the kind of
//! silent semantic drift the ontology exists to prevent. Proposals stay
//! inert until a human approves them; approvals persist in
//! `mappings.json` and apply to subsequent runs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{from_canonical_bytes, to_canonical_bytes};
use crate::ontology::{Finding, Ontology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingBasis {
    ExactLabelMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingProposal {
    pub emitted_id: String,
    pub proposed_metric_id: String,
    pub basis: MappingBasis,
    pub approved: bool,
}

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("mappings file is unreadable: {0}")]
    Decode(#[from] crate::canonical::CanonicalError),
    #[error("no proposal maps `{emitted_id}` to `{metric_id}`")]
    UnknownProposal { emitted_id: String, metric_id: String },
    #[error("metric `{metric_id}` is not defined in the ontology")]
    UndefinedMetric { metric_id: String },
}

/// All known proposals, keyed by emitted id (at most one per id, since
/// only unambiguous label matches are ever proposed).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MappingTable {
    entries: BTreeMap<String, MappingProposal>,
}

impl MappingTable {
    pub fn load(path: &Path) -> Result<MappingTable, MappingError> {
        if !path.exists() {
            return Ok(MappingTable::default());
        }
        let bytes = std::fs::read(path)
            .map_err(|e| MappingError::Io { path: path.display().to_string(), source: e })?;
        let proposals: Vec<MappingProposal> = from_canonical_bytes(&bytes)?;
        let mut table = MappingTable::default();
        for p in proposals {
            table.insert(p);
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<(), MappingError> {
        let proposals: Vec<&MappingProposal> = self.entries.values().collect();
        let bytes = to_canonical_bytes(&proposals)?;
        std::fs::write(path, bytes)
            .map_err(|e| MappingError::Io { path: path.display().to_string(), source: e })
    }

    /// Insert or refresh a proposal. An approved entry is never downgraded
    /// by a new unapproved proposal for the same id.
    pub fn insert(&mut self, proposal: MappingProposal) {
        match self.entries.get(&proposal.emitted_id) {
            Some(existing) if existing.approved && !proposal.approved => {}
            _ => {
                self.entries.insert(proposal.emitted_id.clone(), proposal);
            }
        }
    }

    /// The approved metric id for an emitted id, if any.
    pub fn approved_target(&self, emitted_id: &str) -> Option<&str> {
        self.entries
            .get(emitted_id)
            .filter(|p| p.approved)
            .map(|p| p.proposed_metric_id.as_str())
    }

    /// Approve an existing proposal. The target metric must be defined in
    /// the ontology, and the (emitted, metric) pair must match a proposal;
    /// approving an unproposed pair would be a silent mapping.
    pub fn approve(
        &mut self,
        emitted_id: &str,
        metric_id: &str,
        ontology: &Ontology,
    ) -> Result<(), MappingError> {
        if !ontology.has_metric(metric_id) {
            return Err(MappingError::UndefinedMetric { metric_id: metric_id.to_string() });
        }
        match self.entries.get_mut(emitted_id) {
            Some(p) if p.proposed_metric_id == metric_id => {
                p.approved = true;
                Ok(())
            }
            _ => Err(MappingError::UnknownProposal {
                emitted_id: emitted_id.to_string(),
                metric_id: metric_id.to_string(),
            }),
        }
    }

    pub fn proposals(&self) -> impl Iterator<Item = &MappingProposal> {
        self.entries.values()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Propose mappings for unmapped emitted ids by exact label match. Two
/// metrics sharing one label make the id ambiguous: that is a finding,
/// not a proposal.
pub fn propose_mappings(
    emitted_ids: impl IntoIterator<Item = String>,
    ontology: &Ontology,
) -> (Vec<MappingProposal>, Vec<Finding>) {
    let mut proposals = Vec::new();
    let mut findings = Vec::new();
    for emitted in emitted_ids {
        let mut candidates: Vec<String> = ontology
            .metrics_labelled(&emitted)
            .into_iter()
            .filter(|m| ontology.has_metric(m))
            .collect();
        match candidates.len() {
            0 => {}
            1 => proposals.push(MappingProposal {
                emitted_id: emitted,
                proposed_metric_id: candidates.pop().unwrap(),
                basis: MappingBasis::ExactLabelMatch,
                approved: false,
            }),
            _ => findings.push(Finding::AmbiguousLabel { label: emitted, metric_ids: candidates }),
        }
    }
    (proposals, findings)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEF_A: &str = "def:1111111111111111111111111111111111111111111111111111111111111111";
    const DEF_B: &str = "def:2222222222222222222222222222222222222222222222222222222222222222";

    fn ontology() -> Ontology {
        Ontology::load(&format!(
            "m.a measures R.1\nm.a hasDefinition {DEF_A}\nm.a appliesTo classifier\n\
             m.a label \"demographic parity difference\"\n\
             m.b measures R.1\nm.b hasDefinition {DEF_B}\nm.b appliesTo classifier\n"
        ))
        .unwrap()
    }

    #[test]
    fn exact_label_match_yields_an_inert_proposal() {
        let (proposals, findings) =
            propose_mappings(vec!["demographic parity difference".to_string()], &ontology());
        assert!(findings.is_empty());
        assert_eq!(
            proposals,
            vec![MappingProposal {
                emitted_id: "demographic parity difference".into(),
                proposed_metric_id: "m.a".into(),
                basis: MappingBasis::ExactLabelMatch,
                approved: false,
            }]
        );
    }

    #[test]
    fn no_label_match_yields_nothing() {
        let (proposals, findings) =
            propose_mappings(vec!["equalised odds".to_string()], &ontology());
        assert!(proposals.is_empty());
        assert!(findings.is_empty());
    }

    #[test]
    fn shared_label_is_ambiguous() {
        let source = format!(
            "m.a hasDefinition {DEF_A}\nm.a label \"parity\"\nm.b hasDefinition {DEF_B}\nm.b label \"parity\"\n"
        );
        let ont = Ontology::load(&source).unwrap();
        let (proposals, findings) = propose_mappings(vec!["parity".to_string()], &ont);
        assert!(proposals.is_empty());
        assert_eq!(
            findings,
            vec![Finding::AmbiguousLabel {
                label: "parity".into(),
                metric_ids: vec!["m.a".into(), "m.b".into()],
            }]
        );
    }

    #[test]
    fn approval_requires_a_matching_proposal_and_a_defined_metric() {
        let ont = ontology();
        let (proposals, _) =
            propose_mappings(vec!["demographic parity difference".to_string()], &ont);
        let mut table = MappingTable::default();
        for p in proposals {
            table.insert(p);
        }
        assert!(table.approved_target("demographic parity difference").is_none());

        assert!(matches!(
            table.approve("demographic parity difference", "m.b", &ont),
            Err(MappingError::UnknownProposal { .. })
        ));
        assert!(matches!(
            table.approve("demographic parity difference", "m.zzz", &ont),
            Err(MappingError::UndefinedMetric { .. })
        ));

        table.approve("demographic parity difference", "m.a", &ont).unwrap();
        assert_eq!(table.approved_target("demographic parity difference"), Some("m.a"));
    }

    #[test]
    fn approvals_survive_a_save_load_round_trip_and_reproposals() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mappings.json");
        let ont = ontology();
        let mut table = MappingTable::default();
        table.insert(MappingProposal {
            emitted_id: "demographic parity difference".into(),
            proposed_metric_id: "m.a".into(),
            basis: MappingBasis::ExactLabelMatch,
            approved: false,
        });
        table.approve("demographic parity difference", "m.a", &ont).unwrap();
        table.save(&path).unwrap();

        let mut reloaded = MappingTable::load(&path).unwrap();
        assert_eq!(reloaded, table);
        // re-proposing after a later run must not clear the approval
        reloaded.insert(MappingProposal {
            emitted_id: "demographic parity difference".into(),
            proposed_metric_id: "m.a".into(),
            basis: MappingBasis::ExactLabelMatch,
            approved: false,
        });
        assert_eq!(reloaded.approved_target("demographic parity difference"), Some("m.a"));
    }

    #[test]
    fn missing_file_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let table = MappingTable::load(&dir.path().join("absent.json")).unwrap();
        assert!(table.is_empty());
    }
}
