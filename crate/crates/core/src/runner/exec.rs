//! External tool execution.
//!
//! Tools run as child processes, never in-process plug-ins. The engine
//! writes one request line, then consumes events until `done`,
//! end-of-stream or the timeout. Reading happens on a dedicated thread so
//! the deadline holds no matter how the tool behaves; on timeout the
//! child is killed and the events received so far are kept.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::time::{Duration, Instant};

use super::protocol::{DoneStatus, RunRequest, ToolEvent, PROTOCOL_VERSION};
use crate::registry::ToolCard;

/// Grace period for reaping a child after `done` or after a kill.
const REAP_GRACE: Duration = Duration::from_secs(2);

/// How an invocation went wrong, if it did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunFailure {
    Spawn(String),
    Timeout,
    Protocol(String),
    NonzeroExit(i32),
    ToolFailed,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunFailure::Spawn(e) => write!(f, "spawn failure: {e}"),
            RunFailure::Timeout => write!(f, "timeout"),
            RunFailure::Protocol(e) => write!(f, "protocol violation: {e}"),
            RunFailure::NonzeroExit(code) => write!(f, "tool exited with status {code}"),
            RunFailure::ToolFailed => write!(f, "tool reported done(failed)"),
        }
    }
}

/// Everything one invocation produced: the validly received events plus
/// the failure, if any. A violating line is rejected, not kept as an
/// event; events received before the problem are retained.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolRun {
    pub tool_id: String,
    pub events: Vec<ToolEvent>,
    pub failure: Option<RunFailure>,
    pub exit_code: Option<i32>,
}

impl ToolRun {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    fn failed(tool_id: &str, failure: RunFailure) -> ToolRun {
        ToolRun { tool_id: tool_id.to_string(), events: Vec::new(), failure: Some(failure), exit_code: None }
    }
}

/// Split an invocation template on whitespace and substitute `{subject}`.
/// Returns argv; the card invariant guarantees exactly one placeholder.
pub fn build_argv(template: &str, subject: &str) -> Result<Vec<String>, String> {
    let argv: Vec<String> = template
        .split_whitespace()
        .map(|token| token.replace("{subject}", subject))
        .collect();
    if argv.is_empty() {
        return Err("invocation template is empty".to_string());
    }
    Ok(argv)
}

/// Run one tool to completion (or failure) against the given request.
pub fn run_tool(card: &ToolCard, request: &RunRequest, timeout: Duration) -> ToolRun {
    let argv = match build_argv(&card.invocation, &request.subject) {
        Ok(argv) => argv,
        Err(e) => return ToolRun::failed(&card.tool_id, RunFailure::Spawn(e)),
    };
    let request_line = match serde_json::to_string(request) {
        Ok(line) => line,
        Err(e) => return ToolRun::failed(&card.tool_id, RunFailure::Spawn(e.to_string())),
    };

    let mut child = match Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
    {
        Ok(child) => child,
        Err(e) => {
            return ToolRun::failed(&card.tool_id, RunFailure::Spawn(format!("{}: {e}", argv[0])))
        }
    };

    // one request line, then EOF on the tool's stdin
    if let Some(mut stdin) = child.stdin.take() {
        // a write failure means the child is already gone; the exit path
        // below will report it
        let _ = writeln!(stdin, "{request_line}");
    }

    let stdout = child.stdout.take().expect("stdout is piped");
    let (tx, rx) = mpsc::channel::<std::io::Result<String>>();
    let reader = std::thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            let failed = line.is_err();
            if tx.send(line).is_err() || failed {
                break;
            }
        }
    });

    let deadline = Instant::now() + timeout;
    let mut events: Vec<ToolEvent> = Vec::new();
    let mut seen_hello = false;
    let mut done: Option<DoneStatus> = None;
    let mut failure: Option<RunFailure> = None;

    loop {
        let remaining = deadline.saturating_duration_since(Instant::now());
        let line = match rx.recv_timeout(remaining) {
            Ok(Ok(line)) => line,
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => break, // end of stream
            Err(RecvTimeoutError::Timeout) => {
                failure = Some(RunFailure::Timeout);
                break;
            }
        };

        let event: ToolEvent = match serde_json::from_str(&line) {
            Ok(event) => event,
            Err(_) => {
                failure = Some(RunFailure::Protocol(format!("malformed event line: `{line}`")));
                break;
            }
        };

        if !seen_hello {
            match &event {
                ToolEvent::Hello { protocol_version, .. } => {
                    if *protocol_version != PROTOCOL_VERSION {
                        failure = Some(RunFailure::Protocol(format!(
                            "protocol version mismatch: tool speaks {protocol_version}, engine speaks {PROTOCOL_VERSION}"
                        )));
                        break;
                    }
                    seen_hello = true;
                    events.push(event);
                }
                _ => {
                    failure = Some(RunFailure::Protocol(
                        "first event must be `hello`".to_string(),
                    ));
                    break;
                }
            }
            continue;
        }

        match event {
            ToolEvent::Hello { .. } => {
                failure = Some(RunFailure::Protocol("duplicate `hello`".to_string()));
                break;
            }
            ToolEvent::Evidence { ref metric_id, value, ref instances } => {
                let finite = value.is_finite()
                    && instances
                        .as_ref()
                        .is_none_or(|is| is.iter().all(|i| i.value.is_finite()));
                if !finite {
                    failure = Some(RunFailure::Protocol(format!(
                        "non-finite evidence value for `{metric_id}`"
                    )));
                    break;
                }
                events.push(event);
            }
            ToolEvent::Log { .. } => events.push(event),
            ToolEvent::Done { status } => {
                events.push(event);
                done = Some(status);
                break;
            }
        }
    }

    let exit_code = reap(&mut child, failure.is_some());
    // the reader thread ends once the child's stdout closes
    let _ = reader.join();

    let failure = failure.or_else(|| match done {
        Some(DoneStatus::Ok) => match exit_code {
            Some(0) => None,
            Some(code) => Some(RunFailure::NonzeroExit(code)),
            None => Some(RunFailure::NonzeroExit(-1)),
        },
        Some(DoneStatus::Failed) => Some(RunFailure::ToolFailed),
        None => match exit_code {
            Some(code) if code != 0 => Some(RunFailure::NonzeroExit(code)),
            _ => Some(RunFailure::Protocol("stream ended before `done`".to_string())),
        },
    });

    ToolRun { tool_id: card.tool_id.clone(), events, failure, exit_code }
}

/// Wait for the child within the grace period; kill it first when the run
/// already failed, or if it overstays.
fn reap(child: &mut Child, kill_now: bool) -> Option<i32> {
    if kill_now {
        let _ = child.kill();
    }
    let deadline = Instant::now() + REAP_GRACE;
    loop {
        match child.try_wait() {
            Ok(Some(status)) => return status.code(),
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    return child.wait().ok().and_then(|s| s.code());
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            Err(_) => return None,
        }
    }
}
