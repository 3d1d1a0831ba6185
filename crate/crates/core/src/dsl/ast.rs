//! Syntax tree for sandbox specifications and their sector extensions.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Risk classification declared by a specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskClass {
    High,
    Limited,
    Minimal,
}

impl RiskClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            RiskClass::High => "high",
            RiskClass::Limited => "limited",
            RiskClass::Minimal => "minimal",
        }
    }
}

impl FromStr for RiskClass {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "high" => Ok(RiskClass::High),
            "limited" => Ok(RiskClass::Limited),
            "minimal" => Ok(RiskClass::Minimal),
            _ => Err(()),
        }
    }
}

/// Threshold comparison direction. `Le` is satisfied when the observed
/// value is at or below the threshold, `Ge` at or above (both inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Comparator {
    Le,
    Ge,
}

impl Comparator {
    pub fn token(&self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
        }
    }

    /// Inclusive comparison of an observed value against a threshold.
    pub fn satisfied(&self, observed: f64, threshold: f64) -> bool {
        match self {
            Comparator::Le => observed <= threshold,
            Comparator::Ge => observed >= threshold,
        }
    }

    /// True iff `candidate` is a strictly tighter bound than `current`.
    pub fn tighter(&self, candidate: f64, current: f64) -> bool {
        match self {
            Comparator::Le => candidate < current,
            Comparator::Ge => candidate > current,
        }
    }

    /// True iff `candidate` is a strictly looser bound than `current`.
    pub fn looser(&self, candidate: f64, current: f64) -> bool {
        match self {
            Comparator::Le => candidate > current,
            Comparator::Ge => candidate < current,
        }
    }

    /// Worst observed value under this comparator: the one closest to (or
    /// furthest past) the bound.
    pub fn worst(&self, a: f64, b: f64) -> f64 {
        match self {
            Comparator::Le => a.max(b),
            Comparator::Ge => a.min(b),
        }
    }
}

/// A decimal threshold literal.
///
/// The source text is preserved verbatim so formatting and hashing are
/// stable across lossy float printing; comparisons use the parsed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    text: String,
    value: f64,
}

impl Threshold {
    /// Parse a plain decimal literal: optional minus sign, digits, optional
    /// fraction. Rejects anything that does not convert to a finite float.
    pub fn parse(text: &str) -> Result<Self, ThresholdError> {
        let digits = text.strip_prefix('-').unwrap_or(text);
        let (int_part, frac_part) = match digits.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (digits, None),
        };
        let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) || !frac_part.map_or(true, all_digits) {
            return Err(ThresholdError::Malformed(text.to_string()));
        }
        let value: f64 = text
            .parse()
            .map_err(|_| ThresholdError::Malformed(text.to_string()))?;
        if !value.is_finite() {
            return Err(ThresholdError::NonFinite(text.to_string()));
        }
        Ok(Threshold { text: text.to_string(), value })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ThresholdError {
    #[error("malformed decimal literal `{0}`")]
    Malformed(String),
    #[error("threshold `{0}` does not convert to a finite number")]
    NonFinite(String),
}

/// Specification version: `MAJOR.MINOR` with an optional `.PATCH`,
/// decimal components without leading zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecVersion {
    pub major: u64,
    pub minor: u64,
    pub patch: Option<u64>,
}

impl FromStr for SpecVersion {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        fn component(s: &str) -> Result<u64, ()> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(());
            }
            if s.len() > 1 && s.starts_with('0') {
                return Err(()); // leading zeros would break canonical texts
            }
            s.parse().map_err(|_| ())
        }
        let mut parts = s.split('.');
        let major = component(parts.next().ok_or(())?)?;
        let minor = component(parts.next().ok_or(())?)?;
        let patch = match parts.next() {
            Some(p) => Some(component(p)?),
            None => None,
        };
        if parts.next().is_some() {
            return Err(());
        }
        Ok(SpecVersion { major, minor, patch })
    }
}

impl fmt::Display for SpecVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.patch {
            Some(p) => write!(f, "{}.{}.{}", self.major, self.minor, p),
            None => write!(f, "{}.{}", self.major, self.minor),
        }
    }
}

/// One metric bound to a requirement with a pass threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricBinding {
    pub metric_id: String,
    pub comparator: Comparator,
    pub threshold: Threshold,
}

/// One obligation of the specification, either bound to metrics or
/// explicitly marked `unbound` (no suitable metric exists yet).
#[derive(Debug, Clone, PartialEq)]
pub struct Requirement {
    pub id: String,
    pub label: Option<String>,
    pub bindings: Vec<MetricBinding>,
    pub unbound: bool,
}

/// A parsed core specification.
#[derive(Debug, Clone, PartialEq)]
pub struct SandboxSpec {
    pub name: String,
    pub version: SpecVersion,
    pub system_type: String,
    pub risk_class: RiskClass,
    pub requirements: Vec<Requirement>,
}

/// A sector extension anchored to a core specification. Additions
/// introduce new requirements; refinements tighten or extend existing
/// ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecExtension {
    pub name: String,
    pub extends_name: String,
    pub extends_version: SpecVersion,
    pub additions: Vec<Requirement>,
    pub refinements: Vec<Requirement>,
}

/// True for a single identifier segment: `[A-Za-z_][A-Za-z0-9_-]*`.
pub fn is_ident(s: &str) -> bool {
    let mut bytes = s.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// True for a qualified identifier: dot-separated segments where the first
/// segment is an identifier and later segments may start with a digit
/// (`AIA.Art10`, `R.1`, `m.a`).
pub fn is_qualified_id(s: &str) -> bool {
    let mut segments = s.split('.');
    match segments.next() {
        Some(first) if is_ident(first) => {}
        _ => return false,
    }
    segments.all(|seg| {
        let mut bytes = seg.bytes();
        match bytes.next() {
            Some(b) if b.is_ascii_alphanumeric() || b == b'_' => {}
            _ => return false,
        }
        bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
    })
}
