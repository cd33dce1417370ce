//! Bilinear group backends.
//!
//! A [`PairingSuite`] bundles the three groups `G1`, `G2`, `GT` of prime
//! order `p`, their generators, the pairing `e: G1 x G2 -> GT` and a hash
//! from attribute strings into `G1`. All group laws are written
//! multiplicatively, matching the usual notation for the scheme.
//!
//! Two backends ship with the crate:
//!
//! * [`Bls12Suite`]: the asymmetric (Type-3) BLS12-381 pairing.
//! * [`MockSuite`]: an **insecure** backend that stores every element as its
//!   discrete logarithm. It exists so that every protocol equation can be
//!   checked with integer arithmetic in tests.

mod bls;
mod mock;

use std::fmt::{self, Debug};

use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use num_traits::Zero;
use rand::{CryptoRng, RngCore};
use sha2::Sha256;
use thiserror::Error;
use zeroize::Zeroize;

pub use bls::{Bls12Suite, BlsG1, BlsG2, BlsGt, BlsScalar};
pub use mock::{G1Tag, G2Tag, GtTag, MockElement, MockScalar, MockSuite, Tag, MOCK_MAX_MODULUS_BITS};

/// Identifies a backend on the wire and on disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum SuiteId {
    Mock = 0x00,
    Bls12_381 = 0x01,
}

impl SuiteId {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x00 => Some(SuiteId::Mock),
            0x01 => Some(SuiteId::Bls12_381),
            _ => None,
        }
    }

    pub fn as_byte(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuiteId::Mock => f.write_str("mock"),
            SuiteId::Bls12_381 => f.write_str("bls12-381"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupTag {
    G1,
    G2,
    Gt,
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupTag::G1 => f.write_str("G1"),
            GroupTag::G2 => f.write_str("G2"),
            GroupTag::Gt => f.write_str("GT"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SuiteError {
    #[error("mock modulus {0} is not prime")]
    NotPrime(u64),
    #[error("mock modulus {0} is out of range (must be prime and below 2^61)")]
    ModulusOutOfRange(u64),
    #[error("{group} encoding must be {expected} bytes, got {found}")]
    BadLength {
        group: GroupTag,
        expected: usize,
        found: usize,
    },
    #[error("invalid {0} encoding")]
    InvalidEncoding(GroupTag),
    #[error("non-canonical {0} encoding")]
    NonCanonical(GroupTag),
    #[error("requested security level {requested} exceeds suite level {available}")]
    SecurityLevel { requested: u32, available: u32 },
}

/// An element of `Z_p`.
pub trait Scalar: Clone + PartialEq + Eq + Debug + Send + Sync + Zeroize {
    fn add(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_biguint(&self) -> BigUint;
}

/// An element of one of the three prime-order groups.
pub trait GroupElement: Clone + PartialEq + Eq + Debug + Send + Sync + Zeroize {
    type Scalar: Scalar;
    const TAG: GroupTag;

    /// The group law.
    fn op(&self, rhs: &Self) -> Self;
    fn inverse(&self) -> Self;
    /// Exponentiation `self^k`.
    fn pow(&self, k: &Self::Scalar) -> Self;
    fn is_identity(&self) -> bool;
    /// Fixed-length canonical encoding.
    fn to_bytes(&self) -> Vec<u8>;
}

/// Abstract bilinear group `(p, G1, G2, GT, e, g1, g2, H)`.
pub trait PairingSuite: Clone + Debug + Send + Sync + 'static {
    type Scalar: Scalar;
    type G1: GroupElement<Scalar = Self::Scalar>;
    type G2: GroupElement<Scalar = Self::Scalar>;
    type Gt: GroupElement<Scalar = Self::Scalar>;

    fn id(&self) -> SuiteId;
    /// Nominal security level in bits.
    fn security_bits(&self) -> u32;
    /// The prime group order `p`.
    fn modulus(&self) -> &BigUint;

    fn g1(&self) -> Self::G1;
    fn g2(&self) -> Self::G2;
    fn pairing(&self, a: &Self::G1, b: &Self::G2) -> Self::Gt;
    fn hash_to_g1(&self, attr: &str) -> Self::G1;

    /// Reduces `v` modulo `p`.
    fn scalar_from_biguint(&self, v: &BigUint) -> Self::Scalar;

    /// Encoded length of an element of the given group.
    fn element_len(&self, tag: GroupTag) -> usize;
    fn decode_g1(&self, bytes: &[u8]) -> Result<Self::G1, SuiteError>;
    fn decode_g2(&self, bytes: &[u8]) -> Result<Self::G2, SuiteError>;
    fn decode_gt(&self, bytes: &[u8]) -> Result<Self::Gt, SuiteError>;

    /// `e(g1, g2)`.
    fn gt(&self) -> Self::Gt {
        self.pairing(&self.g1(), &self.g2())
    }

    fn scalar_from_u64(&self, v: u64) -> Self::Scalar {
        self.scalar_from_biguint(&BigUint::from(v))
    }

    fn scalar_from_i64(&self, v: i64) -> Self::Scalar {
        let s = self.scalar_from_u64(v.unsigned_abs());
        if v < 0 {
            s.neg()
        } else {
            s
        }
    }

    /// Length of a big-endian scalar encoding: `ceil(bits(p) / 8)`.
    fn scalar_len(&self) -> usize {
        (self.modulus().bits() as usize).div_ceil(8)
    }

    fn encode_scalar(&self, s: &Self::Scalar) -> Vec<u8> {
        be_fixed(&s.to_biguint(), self.scalar_len())
    }

    /// Parses a fixed-length big-endian scalar, rejecting values `>= p`.
    fn decode_scalar(&self, bytes: &[u8]) -> Option<Self::Scalar> {
        if bytes.len() != self.scalar_len() {
            return None;
        }
        let v = BigUint::from_bytes_be(bytes);
        (&v < self.modulus()).then(|| self.scalar_from_biguint(&v))
    }

    /// Uniform nonzero scalar drawn by rejection sampling.
    fn random_scalar<R: RngCore + CryptoRng + ?Sized>(&self, rng: &mut R) -> Self::Scalar {
        let mut buf = vec![0u8; self.scalar_len()];
        loop {
            rng.fill_bytes(&mut buf);
            if let Some(s) = self.accept_candidate(&mut buf) {
                buf.zeroize();
                return s;
            }
        }
    }

    /// Masks `candidate` to `bits(p)` bits and accepts it if it lies in
    /// `[1, p)`.
    #[doc(hidden)]
    fn accept_candidate(&self, candidate: &mut [u8]) -> Option<Self::Scalar> {
        let p = self.modulus();
        let excess = candidate.len() * 8 - p.bits() as usize;
        if excess > 0 {
            candidate[0] &= 0xffu8 >> excess;
        }
        let v = BigUint::from_bytes_be(candidate);
        (!v.is_zero() && &v < p).then(|| self.scalar_from_biguint(&v))
    }
}

/// Deterministic scalar derivation keyed by a seed.
///
/// Block `j` for label `L` is `HMAC-SHA256(seed, "ABKEM-DRBG" || len(L) || L || j)`;
/// blocks are tried in order until one falls in `[1, p)` after masking.
pub fn derive_scalar<S: PairingSuite>(suite: &S, seed: &[u8], label: &str) -> S::Scalar {
    let len = suite.scalar_len();
    let mut candidate = vec![0u8; len];
    for counter in 0u32.. {
        let mut filled = 0;
        let mut block_index = 0u32;
        while filled < len {
            let mut mac = Hmac::<Sha256>::new_from_slice(seed).expect("hmac accepts any key length");
            mac.update(b"ABKEM-DRBG");
            mac.update(&(label.len() as u16).to_be_bytes());
            mac.update(label.as_bytes());
            mac.update(&counter.to_be_bytes());
            mac.update(&block_index.to_be_bytes());
            let block = mac.finalize().into_bytes();
            let take = (len - filled).min(block.len());
            candidate[filled..filled + take].copy_from_slice(&block[..take]);
            filled += take;
            block_index += 1;
        }
        if let Some(s) = suite.accept_candidate(&mut candidate) {
            candidate.zeroize();
            return s;
        }
    }
    unreachable!("rejection sampling exhausted a 32-bit counter")
}

/// Big-endian encoding of `v` left-padded to `len` bytes.
pub(crate) fn be_fixed(v: &BigUint, len: usize) -> Vec<u8> {
    let raw = if v.is_zero() { Vec::new() } else { v.to_bytes_be() };
    debug_assert!(raw.len() <= len);
    let mut out = vec![0u8; len - raw.len()];
    out.extend_from_slice(&raw);
    out
}
