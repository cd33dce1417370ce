//! Monotone span programs.
//!
//! A policy compiles to a matrix `M` (one row per leaf) and a row labelling.
//! An attribute set satisfies the program iff some combination of its rows
//! equals the target vector `(1, 0, ..., 0)` modulo `p`.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use super::{check_attribute, AttributeSet, PolicyError, PolicyFormula};

/// Matrix rows plus one attribute label per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MspProgram {
    rows: Vec<Vec<BigInt>>,
    labels: Vec<String>,
}

impl MspProgram {
    pub fn new(rows: Vec<Vec<BigInt>>, labels: Vec<String>) -> Result<Self, PolicyError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(PolicyError::EmptyMsp);
        }
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(PolicyError::RaggedMsp { row, expected: cols, found: r.len() });
        }
        if labels.len() != rows.len() {
            return Err(PolicyError::LabelCount { rows: rows.len(), labels: labels.len() });
        }
        for l in &labels {
            check_attribute(l)?;
        }
        Ok(MspProgram { rows, labels })
    }

    /// Number of rows `n`.
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of columns `m`.
    pub fn cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i][j]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Same program with every entry replaced by its representative in
    /// `(-p/2, p/2]`. This is the form produced by decoding the wire format.
    pub fn normalized(&self, p: &BigUint) -> MspProgram {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|e| symmetric(&reduce(e, p), p)).collect())
            .collect();
        MspProgram { rows, labels: self.labels.clone() }
    }
}

/// `e mod p` in `[0, p)`.
pub(crate) fn reduce(e: &BigInt, p: &BigUint) -> BigUint {
    let p = BigInt::from_biguint(Sign::Plus, p.clone());
    let r = ((e % &p) + &p) % &p;
    r.to_biguint().expect("non-negative after reduction")
}

/// Maps `v` in `[0, p)` to the representative in `(-p/2, p/2]`.
pub(crate) fn symmetric(v: &BigUint, p: &BigUint) -> BigInt {
    if v.clone() * 2u32 > *p {
        BigInt::from_biguint(Sign::Plus, v.clone()) - BigInt::from_biguint(Sign::Plus, p.clone())
    } else {
        BigInt::from_biguint(Sign::Plus, v.clone())
    }
}

/// Converts a formula to an MSP with entries in `{-1, 0, 1}`.
///
/// The root gets the vector `(1)` and a column counter `c = 1`. An OR node
/// passes its vector to both children. An AND node gives its left child the
/// parent vector padded to length `c` followed by `1`, its right child `c`
/// zeros followed by `-1`, and increments `c`. Leaves become rows in
/// left-to-right order, zero-padded to the final `c`.
pub fn compile_msp(f: &PolicyFormula) -> MspProgram {
    fn walk(node: &PolicyFormula, vector: Vec<i8>, c: &mut usize, out: &mut Vec<(Vec<i8>, String)>) {
        match node {
            PolicyFormula::Attr(a) => out.push((vector, a.clone())),
            PolicyFormula::Or(l, r) => {
                walk(l, vector.clone(), c, out);
                walk(r, vector, c, out);
            }
            PolicyFormula::And(l, r) => {
                let mut left = vector;
                left.resize(*c, 0);
                left.push(1);
                let mut right = vec![0; *c];
                right.push(-1);
                *c += 1;
                walk(l, left, c, out);
                walk(r, right, c, out);
            }
        }
    }

    let mut c = 1;
    let mut leaves = Vec::with_capacity(f.leaf_count());
    walk(f, vec![1], &mut c, &mut leaves);
    let (rows, labels) = leaves
        .into_iter()
        .map(|(mut v, label)| {
            v.resize(c, 0);
            (v.into_iter().map(BigInt::from).collect(), label)
        })
        .unzip();
    MspProgram::new(rows, labels).expect("compiler output is well formed")
}

/// Row indices `I` and nonzero coefficients `d_i` with
/// `sum d_i * M[i] = (1, 0, ..., 0) mod p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatisfyingAssignment {
    coefficients: Vec<(usize, BigUint)>,
}

impl SatisfyingAssignment {
    /// `(row, d_row)` pairs in increasing row order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &BigUint)> + '_ {
        self.coefficients.iter().map(|(i, d)| (*i, d))
    }

    pub fn indices(&self) -> Vec<usize> {
        self.coefficients.iter().map(|(i, _)| *i).collect()
    }

    pub fn coefficient(&self, row: usize) -> Option<&BigUint> {
        self.coefficients.iter().find(|(i, _)| *i == row).map(|(_, d)| d)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `sum d_i * M[i] mod p`.
    pub fn recombine(&self, msp: &MspProgram, p: &BigUint) -> Vec<BigUint> {
        let mut acc = vec![BigUint::zero(); msp.cols()];
        for (i, d) in self.iter() {
            for (slot, e) in acc.iter_mut().zip(msp.row(i)) {
                *slot = (&*slot + d * reduce(e, p)) % p;
            }
        }
        acc
    }
}

/// Solves for a satisfying assignment using only rows labelled by `attrs`.
///
/// Runs Gauss-Jordan elimination over `Z_p` (`p` prime) on the transposed
/// system `M'^T x = e_1`, choosing the smallest-index nonzero pivot in each
/// column. Free variables are set to zero and rows with a zero coefficient
/// are left out of `I`. Returns `None` when `attrs` does not satisfy the
/// program.
pub fn decode_msp(msp: &MspProgram, attrs: &AttributeSet, p: &BigUint) -> Option<SatisfyingAssignment> {
    let selected: Vec<usize> = (0..msp.rows()).filter(|&i| attrs.contains(msp.label(i))).collect();
    if selected.is_empty() {
        return None;
    }
    let m = msp.cols();
    let k = selected.len();

    // augmented matrix, one equation per MSP column
    let mut a: Vec<Vec<BigUint>> = (0..m)
        .map(|r| {
            let mut eq: Vec<BigUint> = selected.iter().map(|&i| reduce(msp.entry(i, r), p)).collect();
            eq.push(if r == 0 { BigUint::one() } else { BigUint::zero() });
            eq
        })
        .collect();

    let exp = p - 2u32;
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..k {
        let Some(found) = (next..m).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(next, found);
        let inv = a[next][col].modpow(&exp, p);
        for v in a[next].iter_mut() {
            *v = (&*v * &inv) % p;
        }
        let pivot_row = a[next].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r == next || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                // v - factor * pv  (mod p)
                *v = (&*v + p - (&factor * pv) % p) % p;
            }
        }
        pivots.push((next, col));
        next += 1;
        if next == m {
            break;
        }
    }

    if a[next..].iter().any(|row| !row[k].is_zero()) {
        return None;
    }

    let coefficients: Vec<(usize, BigUint)> = pivots
        .into_iter()
        .filter(|(r, _)| !a[*r][k].is_zero())
        .map(|(r, col)| (selected[col], a[r][k].clone()))
        .collect::<std::collections::BTreeMap<_, _>>()
        .into_iter()
        .collect();
    Some(SatisfyingAssignment { coefficients })
}
