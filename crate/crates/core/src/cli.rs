//! The `aits` command line.
//!
//! Exit codes: 0 success (for `run`: all requirements pass), 1 negative
//! result (failed verdicts, findings, broken chain, incomparability),
//! 2 unassessed requirements without failures, ≥ 10 engine errors,
//! 64 usage errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::aggregate::{aggregate_reports, AggregationPolicy};
use crate::canonical::{from_canonical_bytes, to_canonical_bytes};
use crate::config::{ConfigOverrides, EngineConfig};
use crate::dsl::{
    format_effective, format_extension, format_spec, merge, parse_extensions, parse_spec,
    spec_hash,
};
use crate::evidence::verify_chain;
use crate::ontology::Ontology;
use crate::pipeline::{
    self, load_checked_catalogue, load_extension_files, load_ontology, load_spec, run_pipeline,
    EngineError, PipelineOptions,
};
use crate::registry::lint_card;
use crate::report::{AssessmentReport, RunMode, Scenario};
use crate::runner::{MappingError, MappingTable};

pub const EXIT_USAGE: i32 = 64;
pub const SIGNAL_FILE: &str = "signal.json";

#[derive(Parser)]
#[command(
    name = "aits",
    version,
    about = "Assessment sandbox engine: layered compliance specs, metric ontology, tool catalogue, auditable evidence"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Config file (defaults to ./aits.toml when present)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Reference ontology (.aitso)
    #[arg(long, global = true, value_name = "FILE")]
    ontology: Option<PathBuf>,
    /// Tool card file; repeat for several
    #[arg(long = "catalogue", global = true, value_name = "FILE")]
    catalogues: Vec<PathBuf>,
    /// Per-tool timeout in seconds
    #[arg(long, global = true, value_name = "SECONDS")]
    timeout_seconds: Option<u64>,
    /// Maximum concurrently running tools
    #[arg(long, global = true, value_name = "N")]
    max_parallel_tools: Option<usize>,
    /// Coverage-gap reporting threshold (fraction)
    #[arg(long, global = true, value_name = "FRACTION")]
    gap_threshold: Option<f64>,
    /// Directory for artifacts (plan, evidence, report, signal)
    #[arg(long, global = true, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Fixed RFC 3339 UTC clock for reproducible runs
    #[arg(long, global = true, value_name = "RFC3339")]
    clock: Option<String>,
}

impl GlobalArgs {
    fn engine_config(&self) -> Result<EngineConfig, EngineError> {
        let overrides = ConfigOverrides {
            ontology_path: self.ontology.clone(),
            catalogue_paths: self.catalogues.clone(),
            timeout_seconds: self.timeout_seconds,
            max_parallel_tools: self.max_parallel_tools,
            gap_threshold: self.gap_threshold,
            output_dir: self.output_dir.clone(),
        };
        Ok(EngineConfig::load(self.config.as_deref(), &overrides)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Specification language: check, format, hash, merge
    Dsl {
        #[command(subcommand)]
        command: DslCommand,
    },
    /// Reference ontology checks
    Onto {
        #[command(subcommand)]
        command: OntoCommand,
    },
    /// Resolve a requirement to its applicable metric definitions
    Resolve {
        spec: PathBuf,
        /// Requirement id to resolve
        #[arg(long)]
        req: String,
    },
    /// Tool card validation
    Cards {
        #[command(subcommand)]
        command: CardsCommand,
    },
    /// Plan tool assignments for a spec without running anything
    Plan {
        spec: PathBuf,
        extensions: Vec<PathBuf>,
    },
    /// Execute the full assessment pipeline
    Run {
        spec: PathBuf,
        extensions: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "self_assessment")]
        scenario: Scenario,
        #[arg(long, value_enum, default_value = "assessment")]
        mode: RunMode,
        /// Locator of the system under test, passed to every tool
        #[arg(long, default_value = "")]
        subject: String,
    },
    /// Metric-id mapping proposals and approvals
    Map {
        #[command(subcommand)]
        command: MapCommand,
    },
    /// Verify an evidence log's hash chain
    VerifyChain {
        log: PathBuf,
    },
    /// Aggregate assessment reports into a meso-level signal
    Aggregate {
        /// Report files or directories of report JSON files
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "strict")]
        policy: AggregationPolicy,
    },
}

#[derive(Subcommand)]
enum DslCommand {
    /// Parse and validate a spec or extension file
    Check { file: PathBuf },
    /// Print the canonical form
    Fmt { file: PathBuf },
    /// Print the spec hash (SHA-256 of the canonical form)
    Hash { file: PathBuf },
    /// Merge extensions into a core spec and print the effective form
    Merge {
        core: PathBuf,
        extensions: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OntoCommand {
    /// Parse a triple file and print consistency findings
    Check { file: PathBuf },
}

#[derive(Subcommand)]
enum CardsCommand {
    /// Validate tool cards against the schema and the ontology
    Lint {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MapCommand {
    /// List mapping proposals and their approval state
    List,
    /// Approve one proposal (emitted id -> ontology metric)
    Approve { emitted_id: String, metric_id: String },
}

/// Parse argv and dispatch. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let _ = e.print();
                    EXIT_USAGE
                }
            }
        }
    };

    let is_run = matches!(cli.command, Command::Run { .. });
    match dispatch(&cli) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            if is_run {
                if let Ok(config) = cli.global.engine_config() {
                    pipeline::write_error_json(&config.output_dir, &error);
                }
            }
            error.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, EngineError> {
    match &cli.command {
        Command::Dsl { command } => dsl_command(command),
        Command::Onto { command } => onto_command(command),
        Command::Resolve { spec, req } => resolve_command(&cli.global, spec, req),
        Command::Cards { command } => cards_command(&cli.global, command),
        Command::Plan { spec, extensions } => plan_command(&cli.global, spec, extensions),
        Command::Run { spec, extensions, scenario, mode, subject } => {
            run_command(&cli.global, spec, extensions, *scenario, *mode, subject)
        }
        Command::Map { command } => map_command(&cli.global, command),
        Command::VerifyChain { log } => verify_chain_command(log),
        Command::Aggregate { inputs, policy } => aggregate_command(&cli.global, inputs, *policy),
    }
}

/// `.aitsx` sources start with an `extension` block.
fn looks_like_extension(source: &str) -> bool {
    source
        .lines()
        .map(|l| l.find('#').map_or(l, |i| &l[..i]).trim_start())
        .find(|l| !l.is_empty())
        .is_some_and(|l| l.starts_with("extension"))
}

fn dsl_command(command: &DslCommand) -> Result<i32, EngineError> {
    match command {
        DslCommand::Check { file } => {
            let source = pipeline::read_to_string(file)?;
            let outcome = if looks_like_extension(&source) {
                parse_extensions(&source).map(|extensions| {
                    format!("ok: {} extension(s)", extensions.len())
                })
            } else {
                parse_spec(&source).map(|spec| {
                    format!("ok: sandbox \"{}\" version {}", spec.name, spec.version)
                })
            };
            match outcome {
                Ok(summary) => {
                    println!("{summary}");
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    Ok(1)
                }
            }
        }
        DslCommand::Fmt { file } => {
            let source = pipeline::read_to_string(file)?;
            if looks_like_extension(&source) {
                match parse_extensions(&source) {
                    Ok(extensions) => {
                        for ext in &extensions {
                            print!("{}", format_extension(ext));
                        }
                        Ok(0)
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", file.display());
                        Ok(1)
                    }
                }
            } else {
                match parse_spec(&source) {
                    Ok(spec) => {
                        print!("{}", format_spec(&spec));
                        Ok(0)
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", file.display());
                        Ok(1)
                    }
                }
            }
        }
        DslCommand::Hash { file } => {
            let source = pipeline::read_to_string(file)?;
            if looks_like_extension(&source) {
                eprintln!("{}: hashing applies to sandbox specification files", file.display());
                return Ok(1);
            }
            match parse_spec(&source) {
                Ok(spec) => {
                    println!("{}", spec_hash(&spec));
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    Ok(1)
                }
            }
        }
        DslCommand::Merge { core, extensions } => {
            let core_source = pipeline::read_to_string(core)?;
            let core_spec = match parse_spec(&core_source) {
                Ok(spec) => spec,
                Err(e) => {
                    eprintln!("{}: {e}", core.display());
                    return Ok(1);
                }
            };
            let extensions = match load_extension_files(extensions) {
                Ok(ext) => ext,
                Err(EngineError::Dsl { path, source }) => {
                    eprintln!("{}: {source}", path.display());
                    return Ok(1);
                }
                Err(other) => return Err(other),
            };
            match merge(core_spec, &extensions) {
                Ok(eff) => {
                    print!("{}", format_effective(&eff));
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("merge failed: {e}");
                    Ok(1)
                }
            }
        }
    }
}

fn onto_command(command: &OntoCommand) -> Result<i32, EngineError> {
    match command {
        OntoCommand::Check { file } => {
            let source = pipeline::read_to_string(file)?;
            let ontology = match Ontology::parse(&source) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    return Ok(1);
                }
            };
            let findings = ontology.check_consistency();
            if findings.is_empty() {
                println!("ok: {} triples, consistent", ontology.triple_count());
                Ok(0)
            } else {
                for finding in &findings {
                    println!("finding: {finding}");
                }
                Ok(1)
            }
        }
    }
}

fn resolve_command(global: &GlobalArgs, spec: &Path, req: &str) -> Result<i32, EngineError> {
    let config = global.engine_config()?;
    let spec = load_spec(spec)?;
    let ontology = load_ontology(&config)?;
    let resolution = ontology.resolve_metrics(req, &spec.system_type);
    for warning in &resolution.warnings {
        eprintln!("warning: {warning}");
    }
    for md in &resolution.metrics {
        println!("{}\t{}", md.metric_id, md.definition_id);
    }
    Ok(0)
}

fn cards_command(global: &GlobalArgs, command: &CardsCommand) -> Result<i32, EngineError> {
    match command {
        CardsCommand::Lint { files } => {
            let config = global.engine_config()?;
            let ontology = load_ontology(&config)?;
            let mut all_valid = true;
            for file in files {
                let source = pipeline::read_to_string(file)?;
                match lint_card(&source, &ontology) {
                    Ok(card) => {
                        println!("ok: {} {} ({})", card.tool_id, card.version, file.display())
                    }
                    Err(findings) => {
                        all_valid = false;
                        for finding in findings {
                            println!("finding: {}: {finding}", file.display());
                        }
                    }
                }
            }
            Ok(if all_valid { 0 } else { 1 })
        }
    }
}

fn plan_command(global: &GlobalArgs, spec: &Path, extensions: &[PathBuf]) -> Result<i32, EngineError> {
    let config = global.engine_config()?;
    let core = load_spec(spec)?;
    let extension_list = load_extension_files(extensions)?;
    let eff = merge(core, &extension_list)?;
    let ontology = load_ontology(&config)?;
    let (catalogue, warnings) = load_checked_catalogue(&config, &ontology)?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    let plan = crate::registry::plan_assessment(&eff, &ontology, &catalogue);
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| EngineError::Io { path: config.output_dir.clone(), source: e })?;
    let path = config.output_dir.join(pipeline::PLAN_FILE);
    std::fs::write(&path, to_canonical_bytes(&plan)?)
        .map_err(|e| EngineError::Io { path: path.clone(), source: e })?;
    println!(
        "plan: {} assignment(s), {} gap(s) -> {}",
        plan.assignments.len(),
        plan.gaps.len(),
        path.display()
    );
    Ok(0)
}

fn run_command(
    global: &GlobalArgs,
    spec: &Path,
    extensions: &[PathBuf],
    scenario: Scenario,
    mode: RunMode,
    subject: &str,
) -> Result<i32, EngineError> {
    let config = global.engine_config()?;
    let options = PipelineOptions {
        spec_path: spec.to_path_buf(),
        extension_paths: extensions.to_vec(),
        scenario,
        mode,
        subject: subject.to_string(),
        clock: global.clock.clone(),
    };
    let outcome = run_pipeline(&options, &config)?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    for verdict in &outcome.report.verdicts {
        println!("{}\t{}", verdict.requirement_id, verdict.verdict.as_str());
    }
    println!(
        "report: {} (hash {})",
        config.output_dir.join(pipeline::REPORT_FILE).display(),
        outcome.report.report_hash
    );
    Ok(outcome.exit_code)
}

fn map_command(global: &GlobalArgs, command: &MapCommand) -> Result<i32, EngineError> {
    let config = global.engine_config()?;
    let path = config.output_dir.join(pipeline::MAPPINGS_FILE);
    match command {
        MapCommand::List => {
            let table = MappingTable::load(&path)?;
            if table.is_empty() {
                println!("no mapping proposals");
                return Ok(0);
            }
            for p in table.proposals() {
                println!(
                    "{}\t->\t{}\t[{}]",
                    p.emitted_id,
                    p.proposed_metric_id,
                    if p.approved { "approved" } else { "proposed" }
                );
            }
            Ok(0)
        }
        MapCommand::Approve { emitted_id, metric_id } => {
            let ontology = load_ontology(&config)?;
            let mut table = MappingTable::load(&path)?;
            match table.approve(emitted_id, metric_id, &ontology) {
                Ok(()) => {
                    table.save(&path)?;
                    println!("approved: {emitted_id} -> {metric_id}");
                    Ok(0)
                }
                Err(e @ (MappingError::UnknownProposal { .. } | MappingError::UndefinedMetric { .. })) => {
                    eprintln!("{e}");
                    Ok(1)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn verify_chain_command(log: &Path) -> Result<i32, EngineError> {
    let status = verify_chain(log)?;
    println!("{status}");
    Ok(if status.is_ok() { 0 } else { 1 })
}

fn aggregate_command(
    global: &GlobalArgs,
    inputs: &[PathBuf],
    policy: AggregationPolicy,
) -> Result<i32, EngineError> {
    let config = global.engine_config()?;

    let mut files: Vec<PathBuf> = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| EngineError::Io { path: input.clone(), source: e })?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(input.clone());
        }
    }

    let mut reports: Vec<AssessmentReport> = Vec::new();
    for file in &files {
        let bytes = std::fs::read(file)
            .map_err(|e| EngineError::Io { path: file.clone(), source: e })?;
        match from_canonical_bytes::<AssessmentReport>(&bytes) {
            Ok(report) => reports.push(report),
            Err(e) => {
                eprintln!("{}: undecodable report: {e}", file.display());
                return Ok(1);
            }
        }
    }

    match aggregate_reports(&reports, policy, config.gap_threshold) {
        Ok(signal) => {
            std::fs::create_dir_all(&config.output_dir)
                .map_err(|e| EngineError::Io { path: config.output_dir.clone(), source: e })?;
            let path = config.output_dir.join(SIGNAL_FILE);
            std::fs::write(&path, to_canonical_bytes(&signal)?)
                .map_err(|e| EngineError::Io { path: path.clone(), source: e })?;
            println!(
                "signal: {} report(s), {} group(s), {} coverage gap(s), {} incomparabilit(ies) -> {}",
                signal.report_count,
                signal.groups.len(),
                signal.coverage_gaps.len(),
                signal.incomparabilities.len(),
                path.display()
            );
            Ok(0)
        }
        Err(e) => {
            eprintln!("aggregation failed: {e}");
            Ok(1)
        }
    }
}
