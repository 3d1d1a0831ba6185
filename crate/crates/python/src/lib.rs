//! Python bindings for the assessment-sandbox engine.
//!
//! Exposes the pure operations — spec parsing/formatting/hashing/merging,
//! ontology loading and resolution, card linting, assessment planning,
//! chain verification and report aggregation — as an extension module.
//! Tool execution stays on the `aits` command line.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use aits_core::aggregate::{aggregate_reports, AggregationPolicy, DEFAULT_GAP_THRESHOLD};
use aits_core::canonical::{from_canonical_bytes, to_canonical_string};
use aits_core::dsl;
use aits_core::evidence::{verify_chain, ChainStatus};
use aits_core::ontology;
use aits_core::registry;
use aits_core::report::AssessmentReport;

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A parsed core specification.
#[pyclass(frozen)]
struct Spec {
    inner: dsl::SandboxSpec,
}

#[pymethods]
impl Spec {
    /// Parse a `.aits` source.
    #[staticmethod]
    fn parse(source: &str) -> PyResult<Spec> {
        Ok(Spec { inner: dsl::parse_spec(source).map_err(value_error)? })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn version(&self) -> String {
        self.inner.version.to_string()
    }

    #[getter]
    fn system_type(&self) -> &str {
        &self.inner.system_type
    }

    #[getter]
    fn risk_class(&self) -> &str {
        self.inner.risk_class.as_str()
    }

    fn requirement_ids(&self) -> Vec<String> {
        self.inner.requirements.iter().map(|r| r.id.clone()).collect()
    }

    /// Canonical text.
    fn format(&self) -> String {
        dsl::format_spec(&self.inner)
    }

    /// SHA-256 of the canonical text.
    fn hash(&self) -> String {
        dsl::spec_hash(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Spec(name={:?}, version={:?})", self.inner.name, self.inner.version.to_string())
    }
}

/// A parsed sector extension.
#[pyclass(frozen)]
struct Extension {
    inner: dsl::SpecExtension,
}

#[pymethods]
impl Extension {
    /// Parse a source holding exactly one `extension` block.
    #[staticmethod]
    fn parse(source: &str) -> PyResult<Extension> {
        Ok(Extension { inner: dsl::parse_extension(source).map_err(value_error)? })
    }

    /// Parse a `.aitsx` source holding one or more extension blocks.
    #[staticmethod]
    fn parse_all(source: &str) -> PyResult<Vec<Extension>> {
        Ok(dsl::parse_extensions(source)
            .map_err(value_error)?
            .into_iter()
            .map(|inner| Extension { inner })
            .collect())
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn extends_name(&self) -> &str {
        &self.inner.extends_name
    }

    fn format(&self) -> String {
        dsl::format_extension(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Extension(name={:?}, extends={:?})", self.inner.name, self.inner.extends_name)
    }
}

/// A merged requirement table: core plus applied extensions.
#[pyclass(frozen)]
struct EffectiveSpec {
    inner: dsl::EffectiveSpec,
}

#[pymethods]
impl EffectiveSpec {
    #[getter]
    fn applied_extensions(&self) -> Vec<String> {
        self.inner.applied_extensions.clone()
    }

    fn requirement_ids(&self) -> Vec<String> {
        self.inner.requirements.iter().map(|r| r.id.clone()).collect()
    }

    /// Requirement id -> origin ("core" or the extension name).
    fn origins(&self) -> BTreeMap<String, String> {
        self.inner
            .requirements
            .iter()
            .map(|r| (r.id.clone(), r.origin.name().to_string()))
            .collect()
    }

    /// (metric_id, comparator, effective threshold) triples of one requirement.
    fn bindings(&self, requirement_id: &str) -> PyResult<Vec<(String, String, f64)>> {
        let req = self
            .inner
            .requirement(requirement_id)
            .ok_or_else(|| value_error(format!("unknown requirement `{requirement_id}`")))?;
        Ok(req
            .bindings
            .iter()
            .map(|b| (b.metric_id.clone(), b.comparator.token().to_string(), b.threshold.value()))
            .collect())
    }

    fn format(&self) -> String {
        dsl::format_effective(&self.inner)
    }

    fn hash(&self) -> String {
        dsl::effective_spec_hash(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("EffectiveSpec(requirements={})", self.inner.requirements.len())
    }
}

/// Apply extensions to a core spec under piggyback semantics.
#[pyfunction]
fn merge(spec: &Spec, extensions: Vec<PyRef<'_, Extension>>) -> PyResult<EffectiveSpec> {
    let extensions: Vec<dsl::SpecExtension> =
        extensions.iter().map(|e| e.inner.clone()).collect();
    Ok(EffectiveSpec {
        inner: dsl::merge(spec.inner.clone(), &extensions).map_err(value_error)?,
    })
}

/// The reference ontology of metrics.
#[pyclass(frozen, name = "Ontology")]
struct PyOntology {
    inner: ontology::Ontology,
}

#[pymethods]
impl PyOntology {
    /// Parse and consistency-check a triple source; findings are errors.
    #[staticmethod]
    fn load(source: &str) -> PyResult<PyOntology> {
        Ok(PyOntology { inner: ontology::Ontology::load(source).map_err(value_error)? })
    }

    /// Parse without the consistency gate and return the finding list.
    #[staticmethod]
    fn check(source: &str) -> PyResult<Vec<String>> {
        let ont = ontology::Ontology::parse(source).map_err(value_error)?;
        Ok(ont.check_consistency().iter().map(|f| f.to_string()).collect())
    }

    /// Applicable (metric_id, definition_id) pairs for a requirement and
    /// system type, closing over sub-requirements.
    fn resolve(&self, requirement_id: &str, system_type: &str) -> Vec<(String, String)> {
        self.inner
            .resolve_metrics(requirement_id, system_type)
            .metrics
            .into_iter()
            .map(|md| (md.metric_id, md.definition_id))
            .collect()
    }

    fn definition_of(&self, metric_id: &str) -> Option<String> {
        self.inner.definition_of(metric_id).map(str::to_string)
    }

    #[getter]
    fn triple_count(&self) -> usize {
        self.inner.triple_count()
    }

    fn __repr__(&self) -> String {
        format!("Ontology(triples={})", self.inner.triple_count())
    }
}

/// Lint a tool card against the schema and the ontology; returns the
/// finding list (empty means valid).
#[pyfunction]
fn lint_card(source: &str, ontology: &PyOntology) -> Vec<String> {
    match registry::lint_card(source, &ontology.inner) {
        Ok(_) => Vec::new(),
        Err(findings) => findings.iter().map(|f| f.to_string()).collect(),
    }
}

/// Plan tool assignments for an effective spec over a catalogue of card
/// sources. Returns the plan as canonical JSON.
#[pyfunction]
fn plan_assessment(
    eff: &EffectiveSpec,
    ontology: &PyOntology,
    cards: Vec<String>,
) -> PyResult<String> {
    let mut parsed = Vec::new();
    for (i, source) in cards.iter().enumerate() {
        let card = registry::lint_card(source, &ontology.inner).map_err(|findings| {
            let list: Vec<String> = findings.iter().map(|f| f.to_string()).collect();
            value_error(format!("card {i} is invalid: {}", list.join("; ")))
        })?;
        parsed.push(card);
    }
    let catalogue = registry::Catalogue::from_cards(parsed).map_err(value_error)?;
    let plan = registry::plan_assessment(&eff.inner, &ontology.inner, &catalogue);
    to_canonical_string(&plan).map_err(value_error)
}

/// Verify an evidence log. Returns None when intact, else
/// (broken_index, reason).
#[pyfunction]
fn verify_evidence_chain(path: PathBuf) -> PyResult<Option<(u64, String)>> {
    match verify_chain(&path).map_err(value_error)? {
        ChainStatus::Ok { .. } => Ok(None),
        ChainStatus::Broken { index, reason } => Ok(Some((index, reason))),
    }
}

/// Aggregate report JSON documents into a meso-level signal (canonical
/// JSON). `policy` is "strict" or "partition".
#[pyfunction]
#[pyo3(signature = (reports, policy = "strict", gap_threshold = DEFAULT_GAP_THRESHOLD))]
fn aggregate(reports: Vec<String>, policy: &str, gap_threshold: f64) -> PyResult<String> {
    let policy = match policy {
        "strict" => AggregationPolicy::Strict,
        "partition" => AggregationPolicy::Partition,
        other => return Err(value_error(format!("unknown policy `{other}`"))),
    };
    let mut decoded: Vec<AssessmentReport> = Vec::new();
    for (i, text) in reports.iter().enumerate() {
        decoded.push(
            from_canonical_bytes(text.as_bytes())
                .map_err(|e| value_error(format!("report {i} is undecodable: {e}")))?,
        );
    }
    let signal = aggregate_reports(&decoded, policy, gap_threshold).map_err(value_error)?;
    to_canonical_string(&signal).map_err(value_error)
}

#[pymodule]
fn aits_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Spec>()?;
    m.add_class::<Extension>()?;
    m.add_class::<EffectiveSpec>()?;
    m.add_class::<PyOntology>()?;
    m.add_function(wrap_pyfunction!(merge, m)?)?;
    m.add_function(wrap_pyfunction!(lint_card, m)?)?;
    m.add_function(wrap_pyfunction!(plan_assessment, m)?)?;
    m.add_function(wrap_pyfunction!(verify_evidence_chain, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add("PROTOCOL_VERSION", aits_core::runner::PROTOCOL_VERSION)?;
    Ok(())
}
