//! Access policies: Boolean formulas over attributes, their monotone span
//! program (MSP) form, and roster-based r-anonymity checks.

mod anonymity;
mod msp;
mod parser;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use anonymity::{count_satisfying, count_satisfying_msp, verify_r_anonymity, Roster, RosterEntry};
pub(crate) use msp::{reduce, symmetric};
pub use msp::{compile_msp, decode_msp, MspProgram, SatisfyingAssignment};
pub use parser::{parse_policy, ParseError, ParseErrorKind};

/// Longest attribute name that fits the `u16` length prefix of the wire format.
pub const MAX_ATTRIBUTE_LEN: usize = u16::MAX as usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("attribute names must be non-empty")]
    EmptyAttribute,
    #[error("attribute name of {0} bytes exceeds the {MAX_ATTRIBUTE_LEN}-byte limit")]
    AttributeTooLong(usize),
    #[error("duplicate attribute {0:?}")]
    DuplicateAttribute(String),
    #[error("MSP must have at least one row and one column")]
    EmptyMsp,
    #[error("MSP row {row} has {found} columns, expected {expected}")]
    RaggedMsp { row: usize, expected: usize, found: usize },
    #[error("MSP has {rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("duplicate user handle {0:?} in roster")]
    DuplicateUser(String),
    #[error("roster line {line}: {reason}")]
    RosterSyntax { line: usize, reason: String },
}

pub fn check_attribute(name: &str) -> Result<(), PolicyError> {
    if name.is_empty() {
        Err(PolicyError::EmptyAttribute)
    } else if name.len() > MAX_ATTRIBUTE_LEN {
        Err(PolicyError::AttributeTooLong(name.len()))
    } else {
        Ok(())
    }
}

/// A finite set of attribute names, kept in sorted order.
///
/// The sorted order is the canonical order used by secret keys and the wire
/// format.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AttributeSet(BTreeSet<String>);

impl AttributeSet {
    pub fn new<I, T>(attrs: I) -> Result<Self, PolicyError>
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        let mut set = BTreeSet::new();
        for a in attrs {
            let a = a.into();
            check_attribute(&a)?;
            if set.contains(&a) {
                return Err(PolicyError::DuplicateAttribute(a));
            }
            set.insert(a);
        }
        Ok(AttributeSet(set))
    }

    pub fn empty() -> Self {
        AttributeSet(BTreeSet::new())
    }

    pub fn contains(&self, attr: &str) -> bool {
        self.0.contains(attr)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Attributes in canonical (sorted) order.
    pub fn iter(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.iter().map(String::as_str)
    }

    /// Index of `attr` in canonical order.
    pub fn position(&self, attr: &str) -> Option<usize> {
        self.0.iter().position(|a| a == attr)
    }

    pub fn is_subset(&self, other: &AttributeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// `self` without any attribute for which `drop` returns true.
    pub fn without(&self, drop: impl Fn(&str) -> bool) -> AttributeSet {
        AttributeSet(self.0.iter().filter(|a| !drop(a)).cloned().collect())
    }
}

/// Parses a comma-separated list such as `doctor, cardiology`. Blank
/// entries are ignored.
impl FromStr for AttributeSet {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttributeSet::new(s.split(',').map(str::trim).filter(|a| !a.is_empty()))
    }
}

impl fmt::Display for AttributeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let joined: Vec<&str> = self.iter().collect();
        write!(f, "{{{}}}", joined.join(", "))
    }
}

/// A monotone Boolean formula.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PolicyFormula {
    Attr(String),
    And(Box<PolicyFormula>, Box<PolicyFormula>),
    Or(Box<PolicyFormula>, Box<PolicyFormula>),
}

impl PolicyFormula {
    pub fn attr(name: impl Into<String>) -> Self {
        PolicyFormula::Attr(name.into())
    }

    pub fn and(l: PolicyFormula, r: PolicyFormula) -> Self {
        PolicyFormula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: PolicyFormula, r: PolicyFormula) -> Self {
        PolicyFormula::Or(Box::new(l), Box::new(r))
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PolicyFormula::Attr(_) => 1,
            PolicyFormula::And(l, r) | PolicyFormula::Or(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    /// Leaf attribute names, left to right (with repetition).
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            PolicyFormula::Attr(a) => out.push(a),
            PolicyFormula::And(l, r) | PolicyFormula::Or(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    pub fn mentions(&self, attr: &str) -> bool {
        self.leaves().contains(&attr)
    }

    /// Direct evaluation with every attribute of `attrs` set to true.
    pub fn satisfied_by(&self, attrs: &AttributeSet) -> bool {
        match self {
            PolicyFormula::Attr(a) => attrs.contains(a),
            PolicyFormula::And(l, r) => l.satisfied_by(attrs) && r.satisfied_by(attrs),
            PolicyFormula::Or(l, r) => l.satisfied_by(attrs) || r.satisfied_by(attrs),
        }
    }
}

pub fn satisfies(f: &PolicyFormula, attrs: &AttributeSet) -> bool {
    f.satisfied_by(attrs)
}

/// Prints with the fewest parentheses that `parse_policy` reads back as the
/// same tree. Both operators associate to the left.
impl fmt::Display for PolicyFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyFormula::Attr(a) => f.write_str(a),
            PolicyFormula::And(l, r) => {
                write_operand(f, l, matches!(**l, PolicyFormula::Or(..)))?;
                f.write_str(" AND ")?;
                write_operand(f, r, !matches!(**r, PolicyFormula::Attr(_)))
            }
            PolicyFormula::Or(l, r) => {
                write_operand(f, l, false)?;
                f.write_str(" OR ")?;
                write_operand(f, r, matches!(**r, PolicyFormula::Or(..)))
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, node: &PolicyFormula, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({node})")
    } else {
        write!(f, "{node}")
    }
}

impl FromStr for PolicyFormula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_policy(s)
    }
}
