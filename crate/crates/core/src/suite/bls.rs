//! BLS12-381 backend on top of arkworks.

use ark_bls12_381::{g1, Bls12_381, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::hashing::curve_maps::wb::WBMap;
use ark_ec::hashing::map_to_curve_hasher::MapToCurveBasedHasher;
use ark_ec::hashing::HashToCurve;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::PrimeGroup;
use ark_ff::field_hashers::DefaultFieldHasher;
use ark_ff::{BigInteger, PrimeField, Zero};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use num_bigint::BigUint;
use sha2::Sha256;
use zeroize::Zeroize;

use super::{GroupElement, GroupTag, PairingSuite, Scalar, SuiteError, SuiteId};

pub type Gt = PairingOutput<Bls12_381>;

const HASH_DST: &[u8] = b"ABKEM-AUTH-V01-CS01-with-BLS12381G1_XMD:SHA-256_SSWU_RO_";

const G1_LEN: usize = 48;
const G2_LEN: usize = 96;
const GT_LEN: usize = 576;

type G1Hasher = MapToCurveBasedHasher<G1Projective, DefaultFieldHasher<Sha256, 128>, WBMap<g1::Config>>;

/// The production suite. Elements use arkworks' compressed encodings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bls12Suite {
    modulus: BigUint,
}

impl Bls12Suite {
    pub fn new() -> Self {
        Bls12Suite {
            modulus: Fr::MODULUS.into(),
        }
    }
}

impl Default for Bls12Suite {
    fn default() -> Self {
        Self::new()
    }
}

/// Element of `Z_r`, the BLS12-381 scalar field.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Zeroize)]
pub struct BlsScalar(pub Fr);

#[derive(Clone, Copy, PartialEq, Eq, Debug, Zeroize)]
pub struct BlsG1(pub G1Projective);

#[derive(Clone, Copy, PartialEq, Eq, Debug, Zeroize)]
pub struct BlsG2(pub G2Projective);

#[derive(Clone, Copy, PartialEq, Eq, Debug, Zeroize)]
pub struct BlsGt(pub Gt);

impl Scalar for BlsScalar {
    fn add(&self, rhs: &Self) -> Self {
        BlsScalar(self.0 + rhs.0)
    }

    fn mul(&self, rhs: &Self) -> Self {
        BlsScalar(self.0 * rhs.0)
    }

    fn neg(&self) -> Self {
        BlsScalar(-self.0)
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn to_biguint(&self) -> BigUint {
        self.0.into_bigint().into()
    }
}

/// Montgomery ladder: one addition and one doubling per bit of the
/// (fixed-width) scalar, independent of the bit values.
fn ladder<G: PrimeGroup<ScalarField = Fr>>(base: &G, k: &Fr) -> G {
    let bits = k.into_bigint();
    let mut r0 = G::zero();
    let mut r1 = *base;
    for i in (0..Fr::MODULUS_BIT_SIZE as usize).rev() {
        if bits.get_bit(i) {
            r0 += r1;
            r1.double_in_place();
        } else {
            r1 += r0;
            r0.double_in_place();
        }
    }
    r0
}

fn encode<T: CanonicalSerialize>(v: &T, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    v.serialize_compressed(&mut out)
        .expect("serializing into a Vec cannot fail");
    debug_assert_eq!(out.len(), len);
    out
}

fn decode<T>(bytes: &[u8], tag: GroupTag, len: usize) -> Result<T, SuiteError>
where
    T: CanonicalDeserialize + CanonicalSerialize,
{
    if bytes.len() != len {
        return Err(SuiteError::BadLength {
            group: tag,
            expected: len,
            found: bytes.len(),
        });
    }
    let v = T::deserialize_compressed(bytes).map_err(|_| SuiteError::InvalidEncoding(tag))?;
    if encode(&v, len) != bytes {
        return Err(SuiteError::NonCanonical(tag));
    }
    Ok(v)
}

macro_rules! group_newtype {
    ($ty:ident, $tag:expr, $len:expr) => {
        impl GroupElement for $ty {
            type Scalar = BlsScalar;
            const TAG: GroupTag = $tag;

            fn op(&self, rhs: &Self) -> Self {
                $ty(self.0 + rhs.0)
            }

            fn inverse(&self) -> Self {
                $ty(-self.0)
            }

            fn pow(&self, k: &BlsScalar) -> Self {
                $ty(ladder(&self.0, &k.0))
            }

            fn is_identity(&self) -> bool {
                self.0.is_zero()
            }

            fn to_bytes(&self) -> Vec<u8> {
                encode(&self.0, $len)
            }
        }
    };
}

group_newtype!(BlsG1, GroupTag::G1, G1_LEN);
group_newtype!(BlsG2, GroupTag::G2, G2_LEN);
group_newtype!(BlsGt, GroupTag::Gt, GT_LEN);

impl PairingSuite for Bls12Suite {
    type Scalar = BlsScalar;
    type G1 = BlsG1;
    type G2 = BlsG2;
    type Gt = BlsGt;

    fn id(&self) -> SuiteId {
        SuiteId::Bls12_381
    }

    fn security_bits(&self) -> u32 {
        128
    }

    fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    fn g1(&self) -> BlsG1 {
        BlsG1(G1Projective::generator())
    }

    fn g2(&self) -> BlsG2 {
        BlsG2(G2Projective::generator())
    }

    fn pairing(&self, a: &BlsG1, b: &BlsG2) -> BlsGt {
        BlsGt(Bls12_381::pairing(a.0, b.0))
    }

    fn hash_to_g1(&self, attr: &str) -> BlsG1 {
        let hasher = G1Hasher::new(HASH_DST).expect("valid hash-to-curve parameters");
        let point = hasher
            .hash(attr.as_bytes())
            .expect("hash-to-curve is total for the SSWU map");
        BlsG1(point.into())
    }

    fn scalar_from_biguint(&self, v: &BigUint) -> BlsScalar {
        BlsScalar(Fr::from(v.clone()))
    }

    fn element_len(&self, tag: GroupTag) -> usize {
        match tag {
            GroupTag::G1 => G1_LEN,
            GroupTag::G2 => G2_LEN,
            GroupTag::Gt => GT_LEN,
        }
    }

    fn decode_g1(&self, bytes: &[u8]) -> Result<BlsG1, SuiteError> {
        decode::<G1Affine>(bytes, GroupTag::G1, G1_LEN).map(|p| BlsG1(p.into()))
    }

    fn decode_g2(&self, bytes: &[u8]) -> Result<BlsG2, SuiteError> {
        decode::<G2Affine>(bytes, GroupTag::G2, G2_LEN).map(|p| BlsG2(p.into()))
    }

    fn decode_gt(&self, bytes: &[u8]) -> Result<BlsGt, SuiteError> {
        decode::<Gt>(bytes, GroupTag::Gt, GT_LEN).map(BlsGt)
    }
}
