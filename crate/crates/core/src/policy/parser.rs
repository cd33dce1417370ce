//! Recursive-descent parser for policy text.
//!
//! ```text
//! expr   := term (OR term)*
//! term   := factor (AND factor)*
//! factor := ATTR | '(' expr ')'
//! ATTR   := [A-Za-z0-9_:.-]+
//! ```
//!
//! Keywords are case-insensitive. `NOT` is recognised only to report that
//! negation is unsupported.

use std::fmt;

use thiserror::Error;

use super::{PolicyFormula, MAX_ATTRIBUTE_LEN};

const MAX_DEPTH: usize = 128;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedToken { expected: &'static str, found: String },
    UnexpectedEnd { expected: &'static str },
    Negation,
    TooDeep,
    AttributeTooLong,
}

/// A syntax error at a byte offset into the input.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("policy syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => f.write_str("empty policy"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken { expected, found } => {
                write!(f, "expected {expected}, found {found}")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "unexpected end of input, expected {expected}")
            }
            ParseErrorKind::Negation => f.write_str("negation is not supported in monotone policies"),
            ParseErrorKind::TooDeep => write!(f, "nesting deeper than {MAX_DEPTH} levels"),
            ParseErrorKind::AttributeTooLong => {
                write!(f, "attribute longer than {MAX_ATTRIBUTE_LEN} bytes")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token<'a> {
    Attr(&'a str),
    And,
    Or,
    Not,
    LParen,
    RParen,
}

impl fmt::Display for Token<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Attr(a) => write!(f, "attribute {a:?}"),
            Token::And => f.write_str("AND"),
            Token::Or => f.write_str("OR"),
            Token::Not => f.write_str("NOT"),
            Token::LParen => f.write_str("'('"),
            Token::RParen => f.write_str("')'"),
        }
    }
}

fn is_attr_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b':' | b'.' | b'-')
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token<'_>)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b if b.is_ascii_whitespace() => i += 1,
            b'(' => {
                out.push((i, Token::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Token::RParen));
                i += 1;
            }
            b if is_attr_byte(b) => {
                let start = i;
                while i < bytes.len() && is_attr_byte(bytes[i]) {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = if word.eq_ignore_ascii_case("and") {
                    Token::And
                } else if word.eq_ignore_ascii_case("or") {
                    Token::Or
                } else if word.eq_ignore_ascii_case("not") {
                    Token::Not
                } else if word.len() > MAX_ATTRIBUTE_LEN {
                    return Err(ParseError { offset: start, kind: ParseErrorKind::AttributeTooLong });
                } else {
                    Token::Attr(word)
                };
                out.push((start, tok));
            }
            _ => {
                let c = text[i..].chars().next().expect("in bounds");
                let kind = if c == '!' || c == '~' {
                    ParseErrorKind::Negation
                } else {
                    ParseErrorKind::UnexpectedChar(c)
                };
                return Err(ParseError { offset: i, kind });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token<'a>)>,
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn error(&self, expected: &'static str) -> ParseError {
        let kind = match self.peek() {
            None => ParseErrorKind::UnexpectedEnd { expected },
            Some(Token::Not) => ParseErrorKind::Negation,
            Some(t) => ParseErrorKind::UnexpectedToken { expected, found: t.to_string() },
        };
        ParseError { offset: self.offset(), kind }
    }

    fn expr(&mut self, depth: usize) -> Result<PolicyFormula, ParseError> {
        let mut node = self.term(depth)?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            node = PolicyFormula::or(node, self.term(depth)?);
        }
        Ok(node)
    }

    fn term(&mut self, depth: usize) -> Result<PolicyFormula, ParseError> {
        let mut node = self.factor(depth)?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            node = PolicyFormula::and(node, self.factor(depth)?);
        }
        Ok(node)
    }

    fn factor(&mut self, depth: usize) -> Result<PolicyFormula, ParseError> {
        match self.peek() {
            Some(Token::Attr(a)) => {
                let node = PolicyFormula::attr(*a);
                self.pos += 1;
                Ok(node)
            }
            Some(Token::LParen) => {
                if depth >= MAX_DEPTH {
                    return Err(ParseError { offset: self.offset(), kind: ParseErrorKind::TooDeep });
                }
                self.pos += 1;
                let inner = self.expr(depth + 1)?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(self.error("')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(self.error("attribute or '('")),
        }
    }
}

pub fn parse_policy(text: &str) -> Result<PolicyFormula, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError { offset: 0, kind: ParseErrorKind::Empty });
    }
    let mut p = Parser { tokens, pos: 0, end: text.len() };
    let f = p.expr(0)?;
    if p.pos != p.tokens.len() {
        return Err(p.error("AND, OR or end of input"));
    }
    Ok(f)
}
