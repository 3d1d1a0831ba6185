//! Recursive-descent parser for specification and extension sources.

use std::collections::HashSet;

use super::ast::*;
use super::error::{DslError, ParseError};
use super::lexer::{tokenize, Token, TokenKind};

/// Parse one `sandbox` block; the source must contain nothing else.
pub fn parse_spec(source: &str) -> Result<SandboxSpec, DslError> {
    let mut p = Parser::new(source)?;
    let spec = p.sandbox()?;
    p.expect_eof()?;
    Ok(spec)
}

/// Parse a source containing exactly one `extension` block.
pub fn parse_extension(source: &str) -> Result<SpecExtension, DslError> {
    let extensions = parse_extensions(source)?;
    match extensions.len() {
        1 => Ok(extensions.into_iter().next().unwrap()),
        n => Err(DslError::ExtensionCount { found: n }),
    }
}

/// Parse an extension file: one or more `extension` blocks.
pub fn parse_extensions(source: &str) -> Result<Vec<SpecExtension>, DslError> {
    let mut p = Parser::new(source)?;
    let mut extensions = Vec::new();
    while !p.at_eof() {
        extensions.push(p.extension()?);
    }
    if extensions.is_empty() {
        let t = p.peek().clone();
        return Err(p.unexpected(&t, vec!["extension"]).into());
    }
    Ok(extensions)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(source: &str) -> Result<Self, DslError> {
        Ok(Parser { tokens: tokenize(source)?, pos: 0 })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    fn unexpected(&self, token: &Token, expected: Vec<&str>) -> ParseError {
        ParseError::at(token.line, token.column, token.kind.describe(), expected)
    }

    fn expect_eof(&mut self) -> Result<(), DslError> {
        if self.at_eof() {
            Ok(())
        } else {
            let t = self.peek().clone();
            Err(self.unexpected(&t, vec!["end of input"]).into())
        }
    }

    fn expect_keyword(&mut self, keyword: &'static str) -> Result<Token, DslError> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Word(w) if w == keyword => Ok(self.advance()),
            _ => Err(self.unexpected(&t, vec![keyword]).into()),
        }
    }

    fn expect_string(&mut self, what: &'static str) -> Result<(String, Token), DslError> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Str(s) => {
                let s = s.clone();
                let t = self.advance();
                Ok((s, t))
            }
            _ => Err(self.unexpected(&t, vec![what]).into()),
        }
    }

    fn expect_lbrace(&mut self) -> Result<(), DslError> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::LBrace => {
                self.advance();
                Ok(())
            }
            _ => Err(self.unexpected(&t, vec!["{"]).into()),
        }
    }

    fn expect_ident(&mut self, what: &'static str) -> Result<String, DslError> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Word(w) => {
                if is_ident(w) {
                    let w = w.clone();
                    self.advance();
                    Ok(w)
                } else {
                    Err(DslError::MalformedIdent { text: w.clone(), line: t.line, column: t.column })
                }
            }
            _ => Err(self.unexpected(&t, vec![what]).into()),
        }
    }

    fn expect_qualified_id(&mut self, what: &'static str) -> Result<(String, Token), DslError> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Word(w) => {
                if is_qualified_id(w) {
                    let w = w.clone();
                    let t = self.advance();
                    Ok((w, t))
                } else {
                    Err(DslError::MalformedId { text: w.clone(), line: t.line, column: t.column })
                }
            }
            _ => Err(self.unexpected(&t, vec![what]).into()),
        }
    }

    fn version_from(&self, text: &str, token: &Token) -> Result<SpecVersion, DslError> {
        text.parse().map_err(|_| DslError::MalformedVersion {
            text: text.to_string(),
            line: token.line,
            column: token.column,
        })
    }

    fn sandbox(&mut self) -> Result<SandboxSpec, DslError> {
        self.expect_keyword("sandbox")?;
        let (name, name_token) = self.expect_string("specification name")?;
        if name.is_empty() {
            return Err(DslError::EmptyName { line: name_token.line, column: name_token.column });
        }
        self.expect_keyword("version")?;
        let (version_text, version_token) = self.expect_string("version string")?;
        let version = self.version_from(&version_text, &version_token)?;
        self.expect_lbrace()?;

        let mut system_type: Option<String> = None;
        let mut risk_class: Option<RiskClass> = None;
        let mut requirements: Vec<Requirement> = Vec::new();
        let mut seen_ids: HashSet<String> = HashSet::new();

        loop {
            let t = self.peek().clone();
            match &t.kind {
                TokenKind::RBrace => {
                    self.advance();
                    break;
                }
                TokenKind::Word(w) if w == "system_type" => {
                    self.advance();
                    let value = self.expect_ident("system type identifier")?;
                    if system_type.replace(value).is_some() {
                        return Err(DslError::DuplicateDecl {
                            decl: "system_type",
                            line: t.line,
                            column: t.column,
                        });
                    }
                }
                TokenKind::Word(w) if w == "risk_class" => {
                    self.advance();
                    let c = self.peek().clone();
                    let value = match &c.kind {
                        TokenKind::Word(w) => w.parse::<RiskClass>().ok(),
                        _ => None,
                    };
                    let value = match value {
                        Some(v) => {
                            self.advance();
                            v
                        }
                        None => {
                            return Err(self
                                .unexpected(&c, vec!["high", "limited", "minimal"])
                                .into())
                        }
                    };
                    if risk_class.replace(value).is_some() {
                        return Err(DslError::DuplicateDecl {
                            decl: "risk_class",
                            line: t.line,
                            column: t.column,
                        });
                    }
                }
                TokenKind::Word(w) if w == "requirement" => {
                    let req = self.requirement()?;
                    if !seen_ids.insert(req.id.clone()) {
                        return Err(DslError::DuplicateRequirement {
                            id: req.id,
                            line: t.line,
                            column: t.column,
                        });
                    }
                    requirements.push(req);
                }
                _ => {
                    return Err(self
                        .unexpected(&t, vec!["system_type", "risk_class", "requirement", "}"])
                        .into())
                }
            }
        }

        let system_type = system_type.ok_or(DslError::MissingDecl { decl: "system_type" })?;
        let risk_class = risk_class.ok_or(DslError::MissingDecl { decl: "risk_class" })?;
        Ok(SandboxSpec { name, version, system_type, risk_class, requirements })
    }

    fn requirement(&mut self) -> Result<Requirement, DslError> {
        self.expect_keyword("requirement")?;
        let (id, id_token) = self.expect_qualified_id("requirement id")?;
        let label = match &self.peek().kind {
            TokenKind::Str(s) => {
                let s = s.clone();
                self.advance();
                Some(s)
            }
            _ => None,
        };

        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Word(w) if w == "unbound" => {
                self.advance();
                Ok(Requirement { id, label, bindings: Vec::new(), unbound: true })
            }
            TokenKind::LBrace => {
                self.advance();
                let mut bindings = Vec::new();
                let mut seen_metrics: HashSet<String> = HashSet::new();
                loop {
                    let t = self.peek().clone();
                    match &t.kind {
                        TokenKind::RBrace => {
                            self.advance();
                            break;
                        }
                        TokenKind::Word(w) if w == "metric" => {
                            let binding = self.binding(&id)?;
                            if !seen_metrics.insert(binding.metric_id.clone()) {
                                return Err(DslError::DuplicateMetric {
                                    requirement_id: id,
                                    metric_id: binding.metric_id,
                                    line: t.line,
                                    column: t.column,
                                });
                            }
                            bindings.push(binding);
                        }
                        _ => return Err(self.unexpected(&t, vec!["metric", "}"]).into()),
                    }
                }
                if bindings.is_empty() {
                    return Err(DslError::EmptyRequirement {
                        id,
                        line: id_token.line,
                        column: id_token.column,
                    });
                }
                Ok(Requirement { id, label, bindings, unbound: false })
            }
            _ => Err(self.unexpected(&t, vec!["{", "unbound", "label string"]).into()),
        }
    }

    fn binding(&mut self, _requirement_id: &str) -> Result<MetricBinding, DslError> {
        self.expect_keyword("metric")?;
        let (metric_id, _) = self.expect_qualified_id("metric id")?;
        let t = self.peek().clone();
        let comparator = match t.kind {
            TokenKind::Le => Comparator::Le,
            TokenKind::Ge => Comparator::Ge,
            _ => return Err(self.unexpected(&t, vec!["<=", ">="]).into()),
        };
        self.advance();
        let t = self.peek().clone();
        let threshold = match &t.kind {
            TokenKind::Number(text) => Threshold::parse(text).map_err(|e| match e {
                ThresholdError::NonFinite(text) => DslError::NonFiniteThreshold {
                    text,
                    line: t.line,
                    column: t.column,
                },
                ThresholdError::Malformed(_) => ParseError::message(
                    t.line,
                    t.column,
                    format!("malformed decimal literal `{}`", t.kind.describe()),
                )
                .into(),
            })?,
            _ => return Err(self.unexpected(&t, vec!["decimal threshold"]).into()),
        };
        self.advance();
        Ok(MetricBinding { metric_id, comparator, threshold })
    }

    fn extension(&mut self) -> Result<SpecExtension, DslError> {
        self.expect_keyword("extension")?;
        let (name, name_token) = self.expect_string("extension name")?;
        if name.is_empty() {
            return Err(DslError::EmptyName { line: name_token.line, column: name_token.column });
        }
        self.expect_keyword("extends")?;
        let (extends_name, _) = self.expect_string("core specification name")?;
        self.expect_keyword("version")?;
        let (version_text, version_token) = self.expect_string("version string")?;
        let extends_version = self.version_from(&version_text, &version_token)?;
        self.expect_lbrace()?;

        let mut additions: Vec<Requirement> = Vec::new();
        let mut refinements: Vec<Requirement> = Vec::new();
        loop {
            let t = self.peek().clone();
            match &t.kind {
                TokenKind::RBrace => {
                    self.advance();
                    break;
                }
                TokenKind::Word(w) if w == "add" => {
                    self.advance();
                    additions.push(self.requirement()?);
                }
                TokenKind::Word(w) if w == "refine" => {
                    self.advance();
                    refinements.push(self.refinement()?);
                }
                _ => return Err(self.unexpected(&t, vec!["add", "refine", "}"]).into()),
            }
        }

        let added: HashSet<&str> = additions.iter().map(|r| r.id.as_str()).collect();
        for r in &refinements {
            if added.contains(r.id.as_str()) {
                return Err(DslError::AddRefineConflict {
                    id: r.id.clone(),
                    line: name_token.line,
                    column: name_token.column,
                });
            }
        }

        Ok(SpecExtension { name, extends_name, extends_version, additions, refinements })
    }

    /// A refinement is a requirement block that may be `unbound` (a no-op
    /// refinement); unlike additions it may not be empty-braced either.
    fn refinement(&mut self) -> Result<Requirement, DslError> {
        self.requirement()
    }
}
