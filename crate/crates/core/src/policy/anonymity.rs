//! r-anonymity: a policy should be satisfiable by at least `r` distinct
//! users, so that a successful login identifies its user with probability at
//! most `1/r`.

use std::collections::HashSet;
use std::num::NonZeroUsize;
use std::str::FromStr;

use num_bigint::BigUint;

use super::{decode_msp, AttributeSet, MspProgram, PolicyError, PolicyFormula};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RosterEntry {
    pub user: String,
    pub attrs: AttributeSet,
}

/// The known user population, one attribute set per user handle.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Roster {
    entries: Vec<RosterEntry>,
}

impl Roster {
    pub fn new<I>(entries: I) -> Result<Self, PolicyError>
    where
        I: IntoIterator<Item = (String, AttributeSet)>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (user, attrs) in entries {
            if !seen.insert(user.clone()) {
                return Err(PolicyError::DuplicateUser(user));
            }
            out.push(RosterEntry { user, attrs });
        }
        Ok(Roster { entries: out })
    }

    pub fn entries(&self) -> &[RosterEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One user per line: `user_id: attr1,attr2`. Blank lines and lines starting
/// with `#` are skipped.
impl FromStr for Roster {
    type Err = PolicyError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut parsed = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (user, attrs) = line.split_once(':').ok_or_else(|| PolicyError::RosterSyntax {
                line: n + 1,
                reason: "missing ':' after user id".into(),
            })?;
            let user = user.trim();
            if user.is_empty() {
                return Err(PolicyError::RosterSyntax { line: n + 1, reason: "empty user id".into() });
            }
            let attrs: AttributeSet = attrs.parse().map_err(|e: PolicyError| PolicyError::RosterSyntax {
                line: n + 1,
                reason: e.to_string(),
            })?;
            parsed.push((user.to_string(), attrs));
        }
        Roster::new(parsed)
    }
}

pub fn count_satisfying(f: &PolicyFormula, roster: &Roster) -> usize {
    roster.entries.iter().filter(|e| f.satisfied_by(&e.attrs)).count()
}

/// Same count, evaluated on the compiled program. This is what a client can
/// check, since it only ever sees the MSP.
pub fn count_satisfying_msp(msp: &MspProgram, roster: &Roster, p: &BigUint) -> usize {
    roster
        .entries
        .iter()
        .filter(|e| decode_msp(msp, &e.attrs, p).is_some())
        .count()
}

pub fn verify_r_anonymity(f: &PolicyFormula, roster: &Roster, r: NonZeroUsize) -> bool {
    count_satisfying(f, roster) >= r.get()
}
