//! Exponent-trapdoor pairing suite. INSECURE: for tests and demos only.
//!
//! Every element is stored as its discrete logarithm with respect to the
//! generator of its group, so `g^x` is the integer `x mod p` and the pairing
//! is multiplication of exponents.

use std::fmt;
use std::marker::PhantomData;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use sha2::{Digest, Sha256};
use zeroize::Zeroize;

use super::{GroupElement, GroupTag, PairingSuite, Scalar, SuiteError, SuiteId};

/// Mock moduli must stay below `2^61`.
pub const MOCK_MAX_MODULUS_BITS: u32 = 61;

const ELEMENT_LEN: usize = 8;

#[derive(Clone, Debug)]
pub struct MockSuite {
    p: u64,
    modulus: BigUint,
}

impl MockSuite {
    pub fn new(p: u64) -> Result<Self, SuiteError> {
        if p < 2 || p >> MOCK_MAX_MODULUS_BITS != 0 {
            return Err(SuiteError::ModulusOutOfRange(p));
        }
        if !is_prime(p) {
            return Err(SuiteError::NotPrime(p));
        }
        Ok(MockSuite {
            p,
            modulus: BigUint::from(p),
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn scalar(&self, v: u64) -> MockScalar {
        MockScalar { v: v % self.p, p: self.p }
    }

    /// `g^exp` in the group selected by `T`.
    pub fn element<T: Tag>(&self, exp: u64) -> MockElement<T> {
        MockElement::new(exp % self.p, self.p)
    }

    fn decode<T: Tag>(&self, bytes: &[u8]) -> Result<MockElement<T>, SuiteError> {
        let arr: [u8; ELEMENT_LEN] = bytes.try_into().map_err(|_| SuiteError::BadLength {
            group: T::TAG,
            expected: ELEMENT_LEN,
            found: bytes.len(),
        })?;
        let exp = u64::from_be_bytes(arr);
        if exp >= self.p {
            return Err(SuiteError::NonCanonical(T::TAG));
        }
        Ok(MockElement::new(exp, self.p))
    }
}

impl PartialEq for MockSuite {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p
    }
}

impl Eq for MockSuite {}

#[derive(Clone, Copy, PartialEq, Eq, Zeroize)]
pub struct MockScalar {
    v: u64,
    p: u64,
}

impl MockScalar {
    pub fn value(&self) -> u64 {
        self.v
    }
}

impl fmt::Debug for MockScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MockScalar({} mod {})", self.v, self.p)
    }
}

impl Scalar for MockScalar {
    fn add(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.p, rhs.p);
        MockScalar { v: add_mod(self.v, rhs.v, self.p), p: self.p }
    }

    fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.p, rhs.p);
        MockScalar { v: mul_mod(self.v, rhs.v, self.p), p: self.p }
    }

    fn neg(&self) -> Self {
        MockScalar { v: (self.p - self.v) % self.p, p: self.p }
    }

    fn is_zero(&self) -> bool {
        self.v == 0
    }

    fn to_biguint(&self) -> BigUint {
        BigUint::from(self.v)
    }
}

/// Group marker for [`MockElement`].
pub trait Tag: Copy + Send + Sync + 'static {
    const TAG: GroupTag;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct G1Tag;
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct G2Tag;
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GtTag;

impl Tag for G1Tag {
    const TAG: GroupTag = GroupTag::G1;
}
impl Tag for G2Tag {
    const TAG: GroupTag = GroupTag::G2;
}
impl Tag for GtTag {
    const TAG: GroupTag = GroupTag::Gt;
}

/// A `(group_tag, exponent)` pair.
pub struct MockElement<T> {
    exp: u64,
    p: u64,
    _tag: PhantomData<T>,
}

impl<T: Tag> MockElement<T> {
    fn new(exp: u64, p: u64) -> Self {
        MockElement { exp, p, _tag: PhantomData }
    }

    /// Discrete log with respect to the group generator.
    pub fn exponent(&self) -> u64 {
        self.exp
    }
}

impl<T> Clone for MockElement<T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T> Copy for MockElement<T> {}

impl<T> PartialEq for MockElement<T> {
    fn eq(&self, other: &Self) -> bool {
        self.exp == other.exp && self.p == other.p
    }
}

impl<T> Eq for MockElement<T> {}

impl<T: Tag> fmt::Debug for MockElement<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", generator_name(T::TAG), self.exp)
    }
}

impl<T> Zeroize for MockElement<T> {
    fn zeroize(&mut self) {
        self.exp.zeroize();
    }
}

fn generator_name(tag: GroupTag) -> &'static str {
    match tag {
        GroupTag::G1 => "g1",
        GroupTag::G2 => "g2",
        GroupTag::Gt => "gT",
    }
}

impl<T: Tag> GroupElement for MockElement<T> {
    type Scalar = MockScalar;
    const TAG: GroupTag = T::TAG;

    fn op(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.p, rhs.p);
        MockElement::new(add_mod(self.exp, rhs.exp, self.p), self.p)
    }

    fn inverse(&self) -> Self {
        MockElement::new((self.p - self.exp) % self.p, self.p)
    }

    fn pow(&self, k: &MockScalar) -> Self {
        debug_assert_eq!(self.p, k.p);
        MockElement::new(mul_mod(self.exp, k.v, self.p), self.p)
    }

    fn is_identity(&self) -> bool {
        self.exp == 0
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.exp.to_be_bytes().to_vec()
    }
}

impl PairingSuite for MockSuite {
    type Scalar = MockScalar;
    type G1 = MockElement<G1Tag>;
    type G2 = MockElement<G2Tag>;
    type Gt = MockElement<GtTag>;

    fn id(&self) -> SuiteId {
        SuiteId::Mock
    }

    /// Generic discrete-log bound; meaningless here since the trapdoor is
    /// stored in the clear.
    fn security_bits(&self) -> u32 {
        (64 - self.p.leading_zeros()) / 2
    }

    fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    fn g1(&self) -> Self::G1 {
        MockElement::new(1 % self.p, self.p)
    }

    fn g2(&self) -> Self::G2 {
        MockElement::new(1 % self.p, self.p)
    }

    fn pairing(&self, a: &Self::G1, b: &Self::G2) -> Self::Gt {
        MockElement::new(mul_mod(a.exp, b.exp, self.p), self.p)
    }

    /// `g1^(SHA-256(attr) mod p)`.
    fn hash_to_g1(&self, attr: &str) -> Self::G1 {
        let digest = Sha256::digest(attr.as_bytes());
        let exp = BigUint::from_bytes_be(&digest) % &self.modulus;
        MockElement::new(exp.to_u64().expect("reduced below a u64 modulus"), self.p)
    }

    fn scalar_from_biguint(&self, v: &BigUint) -> MockScalar {
        let r = v % &self.modulus;
        self.scalar(r.to_u64().expect("reduced below a u64 modulus"))
    }

    fn element_len(&self, _tag: GroupTag) -> usize {
        ELEMENT_LEN
    }

    fn decode_g1(&self, bytes: &[u8]) -> Result<Self::G1, SuiteError> {
        self.decode(bytes)
    }

    fn decode_g2(&self, bytes: &[u8]) -> Result<Self::G2, SuiteError> {
        self.decode(bytes)
    }

    fn decode_gt(&self, bytes: &[u8]) -> Result<Self::Gt, SuiteError> {
        self.decode(bytes)
    }
}

fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + b as u128) % p as u128) as u64
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut base: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for all `n < 2^64`.
fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n.is_multiple_of(w) {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
