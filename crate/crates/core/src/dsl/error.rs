//! Error types for DSL parsing and merging.

use std::fmt;
use thiserror::Error;

/// Syntax error with source position and the token set that would have
/// been accepted at that point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub found: String,
    pub expected: Vec<String>,
    pub message: Option<String>,
}

impl ParseError {
    pub fn at(line: usize, column: usize, found: String, expected: Vec<&str>) -> Self {
        ParseError {
            line,
            column,
            found,
            expected: expected.into_iter().map(str::to_string).collect(),
            message: None,
        }
    }

    pub fn message(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            found: String::new(),
            expected: Vec::new(),
            message: Some(message.into()),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        if let Some(msg) = &self.message {
            return f.write_str(msg);
        }
        write!(f, "expected ")?;
        for (i, e) in self.expected.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "; found {}", self.found)
    }
}

impl std::error::Error for ParseError {}

/// Any way parsing or validating a specification can fail.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("{0}")]
    Syntax(#[from] ParseError),
    #[error("line {line}, column {column}: specification name must not be empty")]
    EmptyName { line: usize, column: usize },
    #[error("line {line}, column {column}: malformed version `{text}` (expected MAJOR.MINOR[.PATCH])")]
    MalformedVersion { text: String, line: usize, column: usize },
    #[error("line {line}, column {column}: `{text}` is not a valid qualified identifier")]
    MalformedId { text: String, line: usize, column: usize },
    #[error("line {line}, column {column}: `{text}` is not a valid identifier")]
    MalformedIdent { text: String, line: usize, column: usize },
    #[error("line {line}, column {column}: threshold `{text}` is not a finite decimal")]
    NonFiniteThreshold { text: String, line: usize, column: usize },
    #[error("line {line}, column {column}: duplicate requirement id `{id}`")]
    DuplicateRequirement { id: String, line: usize, column: usize },
    #[error("line {line}, column {column}: duplicate metric `{metric_id}` in requirement `{requirement_id}`")]
    DuplicateMetric { requirement_id: String, metric_id: String, line: usize, column: usize },
    #[error("line {line}, column {column}: requirement `{id}` has no bindings; mark it `unbound` explicitly")]
    EmptyRequirement { id: String, line: usize, column: usize },
    #[error("specification declares no `{decl}`")]
    MissingDecl { decl: &'static str },
    #[error("line {line}, column {column}: duplicate `{decl}` declaration")]
    DuplicateDecl { decl: &'static str, line: usize, column: usize },
    #[error("line {line}, column {column}: requirement `{id}` appears under both `add` and `refine`")]
    AddRefineConflict { id: String, line: usize, column: usize },
    #[error("expected exactly one extension block, found {found}")]
    ExtensionCount { found: usize },
}

/// Any way applying extensions to a core specification can fail.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MergeError {
    #[error("extension `{extension}` extends `{declared_name}` {declared_version}, but the core is `{core_name}` {core_version}")]
    ExtendsMismatch {
        extension: String,
        declared_name: String,
        declared_version: String,
        core_name: String,
        core_version: String,
    },
    #[error("extension `{extension}` adds requirement `{id}`, which already exists")]
    DuplicateAdd { extension: String, id: String },
    #[error("extension `{extension}` refines unknown requirement `{id}`")]
    RefineUnknown { extension: String, id: String },
    #[error("extension `{extension}` loosens `{requirement_id}`/`{metric_id}`: {comparator} {refined} is looser than the base {base}")]
    LoosenedThreshold {
        extension: String,
        requirement_id: String,
        metric_id: String,
        comparator: &'static str,
        base: String,
        refined: String,
    },
    #[error("extension `{extension}` changes the comparator of `{requirement_id}`/`{metric_id}`")]
    ComparatorChanged { extension: String, requirement_id: String, metric_id: String },
}
