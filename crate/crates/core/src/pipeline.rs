//! End-to-end assessment pipeline:
//! parse → merge → resolve → plan → run → normalize → report.
//!
//! Artifacts land in the configured output directory: `plan.json`,
//! `evidence.ndjson` (appended, chain continued), `mappings.json` and
//! `report.json`. Tool failures become evidence statuses and unassessed
//! verdicts, not engine errors; engine errors map to exit codes ≥ 10 and
//! a machine-readable `error.json`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{SecondsFormat, Utc};
use thiserror::Error;
use uuid::Uuid;

use crate::canonical::to_canonical_bytes;
use crate::config::EngineConfig;
use crate::dsl::{
    effective_spec_hash, merge, parse_extensions, parse_spec, DslError, MergeError, SandboxSpec,
    SpecExtension,
};
use crate::evidence::{EvidenceError, EvidenceLog, EvidenceRecord, RecordStatus};
use crate::ontology::{Ontology, OntologyError};
use crate::registry::{
    load_catalogue, plan_assessment, AssessmentPlan, Catalogue, RegistryError, ToolCard,
};
use crate::report::{build_report, AssessmentReport, ReportError, RunMode, Scenario};
use crate::runner::{
    normalize_events, propose_mappings, run_tool, MappingError, MappingTable, PlannedTarget,
    RunContext, RunRequest, ToolRun, PROTOCOL_VERSION,
};

pub const PLAN_FILE: &str = "plan.json";
pub const EVIDENCE_FILE: &str = "evidence.ndjson";
pub const REPORT_FILE: &str = "report.json";
pub const MAPPINGS_FILE: &str = "mappings.json";
pub const ERROR_FILE: &str = "error.json";

/// Exit codes of the `run` workflow.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_UNASSESSED: i32 = 2;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("configuration: {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("ontology_path is not configured (set it in aits.toml, AITS_ONTOLOGY_PATH or --ontology)")]
    MissingOntology,
    #[error("cannot access `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Dsl {
        path: PathBuf,
        #[source]
        source: DslError,
    },
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error("{path}: {source}")]
    Ontology {
        path: PathBuf,
        #[source]
        source: OntologyError,
    },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Canonical(#[from] crate::canonical::CanonicalError),
    #[error("clock `{0}` is not an RFC 3339 UTC timestamp")]
    BadClock(String),
}

impl EngineError {
    /// Engine errors exit with codes ≥ 10, grouped by failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Config(_) | EngineError::MissingOntology | EngineError::BadClock(_) => 10,
            EngineError::Dsl { .. } | EngineError::Merge(_) => 11,
            EngineError::Ontology { .. } => 12,
            EngineError::Registry(_) => 13,
            EngineError::Evidence(_) | EngineError::Report(_) | EngineError::Mapping(_) => 14,
            EngineError::Io { .. } | EngineError::Canonical(_) => 15,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EngineError::Config(_) => "config",
            EngineError::MissingOntology => "config",
            EngineError::BadClock(_) => "clock",
            EngineError::Dsl { .. } => "dsl",
            EngineError::Merge(_) => "merge",
            EngineError::Ontology { .. } => "ontology",
            EngineError::Registry(_) => "catalogue",
            EngineError::Evidence(_) => "evidence",
            EngineError::Report(_) => "report",
            EngineError::Mapping(_) => "mapping",
            EngineError::Io { .. } | EngineError::Canonical(_) => "io",
        }
    }
}

pub struct PipelineOptions {
    pub spec_path: PathBuf,
    pub extension_paths: Vec<PathBuf>,
    pub scenario: Scenario,
    pub mode: RunMode,
    pub subject: String,
    /// Fixed RFC 3339 UTC timestamp; also derives deterministic run ids.
    pub clock: Option<String>,
}

pub struct PipelineOutcome {
    pub exit_code: i32,
    pub report: AssessmentReport,
    pub plan: AssessmentPlan,
    pub warnings: Vec<String>,
}

pub fn read_to_string(path: &Path) -> Result<String, EngineError> {
    std::fs::read_to_string(path)
        .map_err(|e| EngineError::Io { path: path.to_path_buf(), source: e })
}

pub fn load_spec(path: &Path) -> Result<SandboxSpec, EngineError> {
    parse_spec(&read_to_string(path)?)
        .map_err(|e| EngineError::Dsl { path: path.to_path_buf(), source: e })
}

/// Extensions from one or more `.aitsx` files, in file order.
pub fn load_extension_files(paths: &[PathBuf]) -> Result<Vec<SpecExtension>, EngineError> {
    let mut extensions = Vec::new();
    for path in paths {
        let parsed = parse_extensions(&read_to_string(path)?)
            .map_err(|e| EngineError::Dsl { path: path.clone(), source: e })?;
        extensions.extend(parsed);
    }
    Ok(extensions)
}

pub fn load_ontology(config: &EngineConfig) -> Result<Ontology, EngineError> {
    let path = config.ontology_path.as_ref().ok_or(EngineError::MissingOntology)?;
    Ontology::load(&read_to_string(path)?)
        .map_err(|e| EngineError::Ontology { path: path.clone(), source: e })
}

/// Load the configured catalogue; rejected cards come back as warnings.
pub fn load_checked_catalogue(
    config: &EngineConfig,
    ontology: &Ontology,
) -> Result<(Catalogue, Vec<String>), EngineError> {
    let load = load_catalogue(&config.catalogue_paths, ontology)?;
    let warnings = load
        .rejected
        .iter()
        .flat_map(|r| {
            r.findings
                .iter()
                .map(move |f| format!("card {} rejected: {f}", r.path.display()))
        })
        .collect();
    Ok((load.catalogue, warnings))
}

fn validate_clock(clock: &str) -> Result<String, EngineError> {
    let parsed = chrono::DateTime::parse_from_rfc3339(clock)
        .map_err(|_| EngineError::BadClock(clock.to_string()))?;
    if parsed.offset().local_minus_utc() != 0 {
        return Err(EngineError::BadClock(clock.to_string()));
    }
    Ok(clock.to_string())
}

fn now_utc() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

struct ToolJob {
    card: ToolCard,
    slice: Vec<PlannedTarget>,
    request: RunRequest,
}

/// Run every planned tool, at most `max_parallel` at a time. Results come
/// back keyed by tool id; completion order is unobservable downstream.
fn execute_jobs(
    jobs: Vec<ToolJob>,
    timeout: Duration,
    max_parallel: usize,
) -> BTreeMap<String, (ToolJob, ToolRun)> {
    let workers = max_parallel.min(jobs.len()).max(1);
    let queue: Mutex<VecDeque<ToolJob>> = Mutex::new(jobs.into());
    let results: Mutex<BTreeMap<String, (ToolJob, ToolRun)>> = Mutex::new(BTreeMap::new());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let Some(job) = queue.lock().unwrap().pop_front() else { break };
                let run = run_tool(&job.card, &job.request, timeout);
                results.lock().unwrap().insert(job.card.tool_id.clone(), (job, run));
            });
        }
    });

    results.into_inner().unwrap()
}

fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, EngineError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| EngineError::Io { path: path.clone(), source: e })?;
    Ok(path)
}

/// Best-effort machine-readable error artifact for exit codes ≥ 10.
pub fn write_error_json(output_dir: &Path, error: &EngineError) {
    let body = serde_json::json!({
        "error": { "kind": error.kind(), "exit_code": error.exit_code(), "message": error.to_string() }
    });
    if std::fs::create_dir_all(output_dir).is_ok() {
        if let Ok(bytes) = to_canonical_bytes(&body) {
            let _ = std::fs::write(output_dir.join(ERROR_FILE), bytes);
        }
    }
}

/// The full run workflow.
pub fn run_pipeline(
    options: &PipelineOptions,
    config: &EngineConfig,
) -> Result<PipelineOutcome, EngineError> {
    let core = load_spec(&options.spec_path)?;
    let extensions = load_extension_files(&options.extension_paths)?;
    let eff = merge(core, &extensions)?;
    let spec_hash = effective_spec_hash(&eff);

    let ontology = load_ontology(config)?;
    let (catalogue, mut warnings) = load_checked_catalogue(config, &ontology)?;

    let timestamp = match &options.clock {
        Some(clock) => validate_clock(clock)?,
        None => now_utc(),
    };

    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| EngineError::Io { path: config.output_dir.clone(), source: e })?;

    let plan = plan_assessment(&eff, &ontology, &catalogue);
    write_artifact(&config.output_dir, PLAN_FILE, &to_canonical_bytes(&plan)?)?;

    let mappings_path = config.output_dir.join(MAPPINGS_FILE);
    let mut mappings = MappingTable::load(&mappings_path)?;

    // one invocation per assigned tool; requested metrics deduplicated
    let mut jobs = Vec::new();
    for (tool_id, assignments) in plan.assignments_by_tool() {
        let card = catalogue.card(&tool_id).expect("plan only names catalogued tools").clone();
        let slice: Vec<PlannedTarget> = assignments
            .iter()
            .map(|a| PlannedTarget {
                requirement_id: a.requirement_id.clone(),
                metric_id: a.metric_id.clone(),
                definition_id: a.definition_id.clone(),
            })
            .collect();
        let metrics_requested: Vec<String> = slice
            .iter()
            .map(|t| t.metric_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        // with a fixed clock the run id derives from the run's identity,
        // so re-runs are byte-reproducible end to end
        let run_id = match &options.clock {
            Some(clock) => Uuid::new_v5(
                &Uuid::NAMESPACE_URL,
                format!("{spec_hash}|{tool_id}|{clock}").as_bytes(),
            ),
            None => Uuid::new_v4(),
        };
        jobs.push(ToolJob {
            card,
            slice,
            request: RunRequest {
                protocol_version: PROTOCOL_VERSION,
                run_id: run_id.to_string(),
                metrics_requested,
                subject: options.subject.clone(),
                params: BTreeMap::new(),
            },
        });
    }

    let outcomes = execute_jobs(jobs, Duration::from_secs(config.timeout_seconds), config.max_parallel_tools);

    // evidence enters the log in tool-id order, not completion order
    let mut log = EvidenceLog::open(&config.output_dir.join(EVIDENCE_FILE))?;
    let mut records: Vec<EvidenceRecord> = Vec::new();
    for (tool_id, (job, run)) in &outcomes {
        if let Some(failure) = &run.failure {
            warnings.push(format!("tool {tool_id}: {failure}"));
        }
        let ctx = RunContext {
            run_id: job.request.run_id.clone(),
            spec_hash: spec_hash.clone(),
            tool_id: tool_id.clone(),
            tool_version: job.card.version.clone(),
            timestamp: timestamp.clone(),
        };
        for mut record in normalize_events(run, &job.slice, &mappings, &ctx) {
            record.seq = log.len();
            records.push(log.append(record)?);
        }
    }

    let unmapped_ids: BTreeSet<String> = records
        .iter()
        .filter(|r| r.status == RecordStatus::Unmapped)
        .map(|r| r.metric_id.clone())
        .collect();
    let (proposals, ambiguities) = propose_mappings(unmapped_ids, &ontology);
    for finding in &ambiguities {
        warnings.push(finding.to_string());
    }
    for proposal in proposals {
        mappings.insert(proposal);
    }
    if !mappings.is_empty() {
        mappings.save(&mappings_path)?;
    }

    let report = build_report(&eff, &ontology, &plan, &records, options.scenario, options.mode)?;
    write_artifact(&config.output_dir, REPORT_FILE, &to_canonical_bytes(&report)?)?;

    // development mode never fails the process: iterative runs are
    // preliminary learning signals, not sanctions
    let exit_code = match options.mode {
        RunMode::Assessment if report.any_fail() => EXIT_FAIL,
        _ if report.any_unassessed() => EXIT_UNASSESSED,
        _ => EXIT_PASS,
    };

    Ok(PipelineOutcome { exit_code, report, plan, warnings })
}
