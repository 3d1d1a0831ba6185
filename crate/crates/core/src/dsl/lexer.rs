//! Tokenizer for the specification DSL.
//!
//! Tokens are whitespace-separated; `#` starts a comment running to end of
//! line. Words cover both keywords and (qualified) identifiers, which the
//! parser distinguishes by context.

use super::error::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    /// Bare word: keyword, identifier or qualified identifier.
    Word(String),
    /// Double-quoted string (no escape sequences).
    Str(String),
    /// Decimal literal, kept as source text.
    Number(String),
    Le,
    Ge,
    LBrace,
    RBrace,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Word(w) => format!("`{w}`"),
            TokenKind::Str(_) => "string".to_string(),
            TokenKind::Number(n) => format!("number `{n}`"),
            TokenKind::Le => "`<=`".to_string(),
            TokenKind::Ge => "`>=`".to_string(),
            TokenKind::LBrace => "`{`".to_string(),
            TokenKind::RBrace => "`}`".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
    pub column: usize,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line = 1usize;
    let mut column = 1usize;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if let Some(ch) = c {
                if ch == '\n' {
                    line += 1;
                    column = 1;
                } else {
                    column += 1;
                }
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (start_line, start_column) = (line, column);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '{' => {
                bump!();
                tokens.push(Token { kind: TokenKind::LBrace, line: start_line, column: start_column });
            }
            '}' => {
                bump!();
                tokens.push(Token { kind: TokenKind::RBrace, line: start_line, column: start_column });
            }
            '<' | '>' => {
                bump!();
                match chars.peek() {
                    Some('=') => {
                        bump!();
                    }
                    _ => {
                        return Err(ParseError::at(
                            start_line,
                            start_column,
                            format!("`{c}`"),
                            vec!["<=", ">="],
                        ))
                    }
                }
                let kind = if c == '<' { TokenKind::Le } else { TokenKind::Ge };
                tokens.push(Token { kind, line: start_line, column: start_column });
            }
            '"' => {
                bump!();
                let mut text = String::new();
                loop {
                    match chars.peek() {
                        Some('"') => {
                            bump!();
                            break;
                        }
                        Some('\n') | None => {
                            return Err(ParseError::message(
                                start_line,
                                start_column,
                                "unterminated string literal",
                            ))
                        }
                        Some(&c) => {
                            text.push(c);
                            bump!();
                        }
                    }
                }
                tokens.push(Token { kind: TokenKind::Str(text), line: start_line, column: start_column });
            }
            c if c.is_ascii_digit() || c == '-' => {
                let mut text = String::new();
                if c == '-' {
                    text.push(c);
                    bump!();
                    if !matches!(chars.peek(), Some(d) if d.is_ascii_digit()) {
                        return Err(ParseError::message(
                            start_line,
                            start_column,
                            "`-` must start a decimal literal",
                        ));
                    }
                }
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() || d == '.' {
                        text.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                // a number must be followed by a delimiter, not glued to a word
                if matches!(chars.peek(), Some(d) if d.is_ascii_alphanumeric() || *d == '_' || *d == '-') {
                    return Err(ParseError::message(
                        start_line,
                        start_column,
                        format!("malformed number starting at `{text}`"),
                    ));
                }
                tokens.push(Token { kind: TokenKind::Number(text), line: start_line, column: start_column });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut text = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '-' || d == '.' {
                        text.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                tokens.push(Token { kind: TokenKind::Word(text), line: start_line, column: start_column });
            }
            other => {
                return Err(ParseError::message(
                    start_line,
                    start_column,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }

    tokens.push(Token { kind: TokenKind::Eof, line, column });
    Ok(tokens)
}
