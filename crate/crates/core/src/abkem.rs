//! Ciphertext-policy attribute-based key encapsulation (Waters-style), with
//! the encapsulation variant that also hands back its secret exponent `s`.
//!
//! ```text
//! Setup:    mpk = (g1^b, e(g1,g2)^a), msk = g1^a
//! KeyGen:   x1 = msk * mpk1^r, x2 = g2^r, sk_i = H(s_i)^r
//! Encap*:   mu = M * (s, v2..vm); z = g2^s; K = mpk2^s
//!           c_i = (mpk1^mu_i * H(label_i)^-r_i, g2^r_i); returns (K, C, s)
//! Decap:    w = prod c_i1^d_i
//!           K = e(x1, z) / (e(w, x2) * prod e(sk_pos(i), c_i2^d_i))
//! ```

use rand::{CryptoRng, RngCore};
use thiserror::Error;
use zeroize::{Zeroize, Zeroizing};

use crate::policy::{decode_msp, AttributeSet, MspProgram};
use crate::suite::{derive_scalar, GroupElement, PairingSuite, Scalar, SuiteError, SuiteId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AbkemError {
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error("key generation needs at least one attribute")]
    EmptyAttributeSet,
    #[error("encapsulation has {found} rows but the policy has {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("secret key holds {attrs} attributes but {components} key components")]
    KeyShape { attrs: usize, components: usize },
    #[error("attribute {0:?} is not covered by the secret key")]
    AttributeNotInKey(String),
    #[error("explicit randomness does not match the policy dimensions")]
    RandomnessShape,
}

/// Public system parameters: the pairing suite plus the security level it
/// was instantiated for.
#[derive(Clone, Debug)]
pub struct SystemParams<S: PairingSuite> {
    suite: S,
    security_bits: u32,
}

impl<S: PairingSuite> SystemParams<S> {
    pub fn new(security_bits: u32, suite: S) -> Result<Self, AbkemError> {
        if security_bits > suite.security_bits() {
            return Err(SuiteError::SecurityLevel {
                requested: security_bits,
                available: suite.security_bits(),
            }
            .into());
        }
        Ok(SystemParams { suite, security_bits })
    }

    pub fn suite(&self) -> &S {
        &self.suite
    }

    pub fn security_bits(&self) -> u32 {
        self.security_bits
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterPublicKey<S: PairingSuite> {
    /// `g1^b`
    pub mpk1: S::G1,
    /// `e(g1, g2)^a`
    pub mpk2: S::Gt,
}

/// `msk = g1^a`. On the mock suite the master exponents are kept as well so
/// tests can check every equation; they are never serialized.
pub struct MasterSecretKey<S: PairingSuite> {
    msk: S::G1,
    exponents: Option<(S::Scalar, S::Scalar)>,
}

impl<S: PairingSuite> MasterSecretKey<S> {
    pub fn from_element(msk: S::G1) -> Self {
        MasterSecretKey { msk, exponents: None }
    }

    pub fn element(&self) -> &S::G1 {
        &self.msk
    }

    /// `(a, b)` when generated on the mock suite.
    pub fn mock_exponents(&self) -> Option<(&S::Scalar, &S::Scalar)> {
        self.exponents.as_ref().map(|(a, b)| (a, b))
    }

    /// `e(msk, g2) == mpk2`.
    pub fn matches(&self, params: &SystemParams<S>, mpk: &MasterPublicKey<S>) -> bool {
        let suite = params.suite();
        suite.pairing(&self.msk, &suite.g2()) == mpk.mpk2
    }
}

impl<S: PairingSuite> Drop for MasterSecretKey<S> {
    fn drop(&mut self) {
        self.msk.zeroize();
        if let Some((a, b)) = self.exponents.as_mut() {
            a.zeroize();
            b.zeroize();
        }
    }
}

impl<S: PairingSuite> std::fmt::Debug for MasterSecretKey<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("MasterSecretKey(..)")
    }
}

/// `sk_S = (x1, x2, sk_1..sk_t)`, components aligned with the canonical
/// order of `S`.
pub struct AttributeSecretKey<S: PairingSuite> {
    attrs: AttributeSet,
    x1: S::G1,
    x2: S::G2,
    components: Vec<S::G1>,
}

impl<S: PairingSuite> AttributeSecretKey<S> {
    pub fn from_parts(
        attrs: AttributeSet,
        x1: S::G1,
        x2: S::G2,
        components: Vec<S::G1>,
    ) -> Result<Self, AbkemError> {
        if attrs.len() != components.len() {
            return Err(AbkemError::KeyShape { attrs: attrs.len(), components: components.len() });
        }
        if attrs.is_empty() {
            return Err(AbkemError::EmptyAttributeSet);
        }
        Ok(AttributeSecretKey { attrs, x1, x2, components })
    }

    pub fn attributes(&self) -> &AttributeSet {
        &self.attrs
    }

    pub fn x1(&self) -> &S::G1 {
        &self.x1
    }

    pub fn x2(&self) -> &S::G2 {
        &self.x2
    }

    pub fn components(&self) -> &[S::G1] {
        &self.components
    }

    /// `H(attr)^r` if `attr` is in the key.
    pub fn component(&self, attr: &str) -> Option<&S::G1> {
        self.attrs.position(attr).map(|i| &self.components[i])
    }

    /// `e(x1, g2) == mpk2 * e(mpk1, x2)`.
    pub fn is_consistent(&self, params: &SystemParams<S>, mpk: &MasterPublicKey<S>) -> bool {
        let suite = params.suite();
        suite.pairing(&self.x1, &suite.g2()) == mpk.mpk2.op(&suite.pairing(&mpk.mpk1, &self.x2))
    }
}

impl<S: PairingSuite> Drop for AttributeSecretKey<S> {
    fn drop(&mut self) {
        self.x1.zeroize();
        self.x2.zeroize();
        self.components.iter_mut().for_each(Zeroize::zeroize);
    }
}

impl<S: PairingSuite> std::fmt::Debug for AttributeSecretKey<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AttributeSecretKey").field("attrs", &self.attrs).finish_non_exhaustive()
    }
}

/// `C_P = (z, c_1..c_n)` with `c_i = (c_i1, c_i2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encapsulation<S: PairingSuite> {
    pub z: S::G2,
    pub rows: Vec<(S::G1, S::G2)>,
}

/// Output of [`key_encap_star`]: the key, its encapsulation, and the
/// exponent `s` with `K = mpk2^s`.
pub struct EncapResult<S: PairingSuite> {
    pub key: S::Gt,
    pub encapsulation: Encapsulation<S>,
    pub secret: Zeroizing<S::Scalar>,
}

/// 32-byte seed `R` from which all encapsulation randomness is derived.
#[derive(Clone, PartialEq, Eq, Zeroize)]
#[zeroize(drop)]
pub struct EncapSeed(pub [u8; 32]);

impl EncapSeed {
    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        EncapSeed(seed)
    }
}

/// The scalars `s, v_2..v_m, r_1..r_n` of one encapsulation.
pub struct EncapRandomness<S: PairingSuite> {
    s: S::Scalar,
    v: Vec<S::Scalar>,
    r: Vec<S::Scalar>,
}

impl<S: PairingSuite> EncapRandomness<S> {
    /// Derives every scalar from `seed` under the labels `"s"`, `"v2"`..`"vm"`
    /// and `"r1"`..`"rn"`.
    pub fn derive(suite: &S, msp: &MspProgram, seed: &EncapSeed) -> Self {
        let s = derive_scalar(suite, &seed.0, "s");
        let v = (2..=msp.cols())
            .map(|j| derive_scalar(suite, &seed.0, &format!("v{j}")))
            .collect();
        let r = (1..=msp.rows())
            .map(|i| derive_scalar(suite, &seed.0, &format!("r{i}")))
            .collect();
        EncapRandomness { s, v, r }
    }

    /// Caller-chosen scalars; `v` has `m - 1` entries and `r` has `n`.
    pub fn explicit(s: S::Scalar, v: Vec<S::Scalar>, r: Vec<S::Scalar>) -> Self {
        EncapRandomness { s, v, r }
    }

    pub fn s(&self) -> &S::Scalar {
        &self.s
    }

    /// `(mu_1..mu_n) = M * (s, v_2..v_m) mod p`.
    pub fn shares(&self, suite: &S, msp: &MspProgram) -> Vec<S::Scalar> {
        let vector: Vec<&S::Scalar> = std::iter::once(&self.s).chain(&self.v).collect();
        (0..msp.rows())
            .map(|i| {
                msp.row(i)
                    .iter()
                    .zip(&vector)
                    .map(|(e, x)| scalar_from_bigint(suite, e).mul(x))
                    .fold(suite.scalar_from_u64(0), |acc, t| acc.add(&t))
            })
            .collect()
    }

    fn fits(&self, msp: &MspProgram) -> bool {
        self.v.len() + 1 == msp.cols() && self.r.len() == msp.rows()
    }
}

impl<S: PairingSuite> Drop for EncapRandomness<S> {
    fn drop(&mut self) {
        self.s.zeroize();
        self.v.iter_mut().for_each(Zeroize::zeroize);
        self.r.iter_mut().for_each(Zeroize::zeroize);
    }
}

fn scalar_from_bigint<S: PairingSuite>(suite: &S, e: &num_bigint::BigInt) -> S::Scalar {
    suite.scalar_from_biguint(&crate::policy::reduce(e, suite.modulus()))
}

pub type SetupOutput<S> = (SystemParams<S>, MasterPublicKey<S>, MasterSecretKey<S>);

/// Draws uniform nonzero `a, b` and derives the master key pair.
pub fn setup<S: PairingSuite, R: RngCore + CryptoRng + ?Sized>(
    security_bits: u32,
    suite: S,
    rng: &mut R,
) -> Result<SetupOutput<S>, AbkemError> {
    let params = SystemParams::new(security_bits, suite)?;
    let a = params.suite().random_scalar(rng);
    let b = params.suite().random_scalar(rng);
    let (mpk, msk) = setup_with_exponents(&params, a, b);
    Ok((params, mpk, msk))
}

/// Master keys for fixed exponents `a` and `b`.
pub fn setup_with_exponents<S: PairingSuite>(
    params: &SystemParams<S>,
    a: S::Scalar,
    b: S::Scalar,
) -> (MasterPublicKey<S>, MasterSecretKey<S>) {
    let suite = params.suite();
    let mpk = MasterPublicKey {
        mpk1: suite.g1().pow(&b),
        mpk2: suite.gt().pow(&a),
    };
    let msk = MasterSecretKey {
        msk: suite.g1().pow(&a),
        exponents: (suite.id() == SuiteId::Mock).then_some((a, b)),
    };
    (mpk, msk)
}

pub fn keygen<S: PairingSuite, R: RngCore + CryptoRng + ?Sized>(
    params: &SystemParams<S>,
    mpk: &MasterPublicKey<S>,
    msk: &MasterSecretKey<S>,
    attrs: &AttributeSet,
    rng: &mut R,
) -> Result<AttributeSecretKey<S>, AbkemError> {
    let r = Zeroizing::new(params.suite().random_scalar(rng));
    keygen_with_exponent(params, mpk, msk, attrs, &r)
}

/// Key generation with a fixed exponent `r`.
pub fn keygen_with_exponent<S: PairingSuite>(
    params: &SystemParams<S>,
    mpk: &MasterPublicKey<S>,
    msk: &MasterSecretKey<S>,
    attrs: &AttributeSet,
    r: &S::Scalar,
) -> Result<AttributeSecretKey<S>, AbkemError> {
    if attrs.is_empty() {
        return Err(AbkemError::EmptyAttributeSet);
    }
    let suite = params.suite();
    let x1 = msk.msk.op(&mpk.mpk1.pow(r));
    let x2 = suite.g2().pow(r);
    let components = attrs.iter().map(|a| suite.hash_to_g1(a).pow(r)).collect();
    AttributeSecretKey::from_parts(attrs.clone(), x1, x2, components)
}

/// Encapsulates a fresh key under `msp`, deterministically from `seed`.
pub fn key_encap_star<S: PairingSuite>(
    params: &SystemParams<S>,
    mpk: &MasterPublicKey<S>,
    msp: &MspProgram,
    seed: &EncapSeed,
) -> EncapResult<S> {
    let randomness = EncapRandomness::derive(params.suite(), msp, seed);
    key_encap_star_with(params, mpk, msp, &randomness).expect("derived randomness fits the policy")
}

/// Encapsulation with caller-supplied scalars.
pub fn key_encap_star_with<S: PairingSuite>(
    params: &SystemParams<S>,
    mpk: &MasterPublicKey<S>,
    msp: &MspProgram,
    randomness: &EncapRandomness<S>,
) -> Result<EncapResult<S>, AbkemError> {
    if !randomness.fits(msp) {
        return Err(AbkemError::RandomnessShape);
    }
    let suite = params.suite();
    let mut shares = randomness.shares(suite, msp);
    let s = &randomness.s;
    let z = suite.g2().pow(s);
    let key = mpk.mpk2.pow(s);
    let rows = shares
        .iter()
        .zip(&randomness.r)
        .enumerate()
        .map(|(i, (mu, r_i))| {
            let blind = suite.hash_to_g1(msp.label(i)).pow(&r_i.neg());
            (mpk.mpk1.pow(mu).op(&blind), suite.g2().pow(r_i))
        })
        .collect();
    shares.iter_mut().for_each(Zeroize::zeroize);
    Ok(EncapResult {
        key,
        encapsulation: Encapsulation { z, rows },
        secret: Zeroizing::new(s.clone()),
    })
}

/// Recovers `K` when `attrs` satisfies `msp`, `None` otherwise.
///
/// `attrs` selects which attributes of `sk` may be used and must be a subset
/// of the key's attributes.
pub fn key_decap<S: PairingSuite>(
    params: &SystemParams<S>,
    msp: &MspProgram,
    encapsulation: &Encapsulation<S>,
    attrs: &AttributeSet,
    sk: &AttributeSecretKey<S>,
) -> Result<Option<S::Gt>, AbkemError> {
    if encapsulation.rows.len() != msp.rows() {
        return Err(AbkemError::ShapeMismatch {
            expected: msp.rows(),
            found: encapsulation.rows.len(),
        });
    }
    if let Some(missing) = attrs.iter().find(|a| !sk.attrs.contains(a)) {
        return Err(AbkemError::AttributeNotInKey(missing.to_string()));
    }
    let suite = params.suite();
    let Some(assignment) = decode_msp(msp, attrs, suite.modulus()) else {
        return Ok(None);
    };

    let mut w = suite.g1().pow(&suite.scalar_from_u64(0));
    let mut attr_part = suite.gt().pow(&suite.scalar_from_u64(0));
    for (i, d) in assignment.iter() {
        let d = suite.scalar_from_biguint(d);
        let (c1, c2) = &encapsulation.rows[i];
        w = w.op(&c1.pow(&d));
        let sk_i = sk.component(msp.label(i)).expect("label drawn from attrs, a subset of the key");
        attr_part = attr_part.op(&suite.pairing(sk_i, &c2.pow(&d)));
    }
    let denominator = suite.pairing(&w, &sk.x2).op(&attr_part);
    Ok(Some(suite.pairing(&sk.x1, &encapsulation.z).op(&denominator.inverse())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{compile_msp, parse_policy};
    use crate::suite::{Bls12Suite, MockSuite};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn mock_params() -> SystemParams<MockSuite> {
        SystemParams::new(0, MockSuite::new(1009).unwrap()).unwrap()
    }

    fn set(attrs: &[&str]) -> AttributeSet {
        AttributeSet::new(attrs.iter().copied()).unwrap()
    }

    #[test]
    fn forced_setup_exponents() {
        let params = mock_params();
        let s = params.suite();
        let (mpk, msk) = setup_with_exponents(&params, s.scalar(5), s.scalar(7));
        assert_eq!(mpk.mpk1.exponent(), 7);
        assert_eq!(mpk.mpk2.exponent(), 5);
        assert_eq!(msk.element().exponent(), 5);
        assert!(msk.matches(&params, &mpk));
        let (a, b) = msk.mock_exponents().unwrap();
        assert_eq!((a.value(), b.value()), (5, 7));
    }

    #[test]
    fn setup_rejects_excess_security_level() {
        let err = SystemParams::new(129, Bls12Suite::new()).unwrap_err();
        assert!(matches!(err, AbkemError::Suite(SuiteError::SecurityLevel { .. })));
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(setup(200, MockSuite::new(1009).unwrap(), &mut rng).is_err());
    }

    #[test]
    fn independent_setups_differ() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let suite = MockSuite::new((1 << 61) - 1).unwrap();
        let (_, _, m1) = setup(0, suite.clone(), &mut rng).unwrap();
        let (_, _, m2) = setup(0, suite, &mut rng).unwrap();
        assert_ne!(m1.element(), m2.element());
    }

    #[test]
    fn forced_keygen_exponents() {
        let params = mock_params();
        let s = params.suite();
        let (mpk, msk) = setup_with_exponents(&params, s.scalar(5), s.scalar(7));
        let sk = keygen_with_exponent(&params, &mpk, &msk, &set(&["A"]), &s.scalar(3)).unwrap();
        assert_eq!(sk.x1().exponent(), 26);
        assert_eq!(sk.x2().exponent(), 3);
        // H("A") = g1^527 on this suite
        assert_eq!(sk.component("A").unwrap().exponent(), 527 * 3 % 1009);
        assert!(sk.is_consistent(&params, &mpk));
    }

    #[test]
    fn keygen_needs_attributes_and_is_randomized() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (params, mpk, msk) = setup(0, MockSuite::new((1 << 61) - 1).unwrap(), &mut rng).unwrap();
        assert_eq!(
            keygen(&params, &mpk, &msk, &AttributeSet::empty(), &mut rng).unwrap_err(),
            AbkemError::EmptyAttributeSet
        );
        let k1 = keygen(&params, &mpk, &msk, &set(&["A", "B"]), &mut rng).unwrap();
        let k2 = keygen(&params, &mpk, &msk, &set(&["A", "B"]), &mut rng).unwrap();
        assert_ne!(k1.x2(), k2.x2());
        assert!(k1.is_consistent(&params, &mpk) && k2.is_consistent(&params, &mpk));
    }

    #[test]
    fn forced_encapsulation_and_decapsulation_vector() {
        let params = mock_params();
        let s = params.suite();
        let (mpk, msk) = setup_with_exponents(&params, s.scalar(5), s.scalar(7));
        let sk = keygen_with_exponent(&params, &mpk, &msk, &set(&["A"]), &s.scalar(3)).unwrap();
        let msp = compile_msp(&parse_policy("A").unwrap());
        let rnd = EncapRandomness::explicit(s.scalar(11), vec![], vec![s.scalar(400)]);
        assert_eq!(rnd.shares(s, &msp), vec![s.scalar(11)]);
        let out = key_encap_star_with(&params, &mpk, &msp, &rnd).unwrap();
        assert_eq!(out.key.exponent(), 55);
        assert_eq!(out.encapsulation.z.exponent(), 11);
        assert_eq!(out.secret.value(), 11);
        // c_11 = mpk1^mu * H(A)^-r: 7*11 - 527*400 = 158 mod 1009
        assert_eq!(out.encapsulation.rows[0].0.exponent(), 158);
        assert_eq!(out.encapsulation.rows[0].1.exponent(), 400);
        let k = key_decap(&params, &msp, &out.encapsulation, &set(&["A"]), &sk).unwrap();
        assert_eq!(k.unwrap().exponent(), 55);
    }

    #[test]
    fn encapsulation_is_a_function_of_the_seed() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (params, mpk, _) = setup(0, MockSuite::new((1 << 61) - 1).unwrap(), &mut rng).unwrap();
        let msp = compile_msp(&parse_policy("A AND (B OR C)").unwrap());
        let seed = EncapSeed([9; 32]);
        let a = key_encap_star(&params, &mpk, &msp, &seed);
        let b = key_encap_star(&params, &mpk, &msp, &seed);
        assert_eq!(a.key, b.key);
        assert_eq!(a.encapsulation, b.encapsulation);
        assert_eq!(*a.secret, *b.secret);
        // K and z share s
        assert_eq!(mpk.mpk2.pow(&a.secret), a.key);
        assert_eq!(params.suite().g2().pow(&a.secret), a.encapsulation.z);
        let c = key_encap_star(&params, &mpk, &msp, &EncapSeed([10; 32]));
        assert_ne!(a.encapsulation, c.encapsulation);
    }

    #[test]
    fn unsatisfied_policy_decaps_to_none() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let (params, mpk, msk) = setup(0, MockSuite::new((1 << 61) - 1).unwrap(), &mut rng).unwrap();
        let sk = keygen(&params, &mpk, &msk, &set(&["A", "B"]), &mut rng).unwrap();
        let msp = compile_msp(&parse_policy("A AND B").unwrap());
        let out = key_encap_star(&params, &mpk, &msp, &EncapSeed::random(&mut rng));
        assert_eq!(key_decap(&params, &msp, &out.encapsulation, &set(&["A"]), &sk).unwrap(), None);
        assert_eq!(
            key_decap(&params, &msp, &out.encapsulation, &set(&["A", "B"]), &sk).unwrap(),
            Some(out.key)
        );
    }

    #[test]
    fn decap_usage_errors() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (params, mpk, msk) = setup(0, MockSuite::new(1009).unwrap(), &mut rng).unwrap();
        let sk = keygen(&params, &mpk, &msk, &set(&["A"]), &mut rng).unwrap();
        let msp = compile_msp(&parse_policy("A OR B").unwrap());
        let mut out = key_encap_star(&params, &mpk, &msp, &EncapSeed::random(&mut rng));
        assert_eq!(
            key_decap(&params, &msp, &out.encapsulation, &set(&["B"]), &sk).unwrap_err(),
            AbkemError::AttributeNotInKey("B".into())
        );
        out.encapsulation.rows.pop();
        assert_eq!(
            key_decap(&params, &msp, &out.encapsulation, &set(&["A"]), &sk).unwrap_err(),
            AbkemError::ShapeMismatch { expected: 2, found: 1 }
        );
        let bad = EncapRandomness::explicit(params.suite().scalar(1), vec![], vec![]);
        assert_eq!(
            key_encap_star_with(&params, &mpk, &msp, &bad).err(),
            Some(AbkemError::RandomnessShape)
        );
    }

    #[test]
    fn production_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let (params, mpk, msk) = setup(128, Bls12Suite::new(), &mut rng).unwrap();
        assert!(msk.matches(&params, &mpk));
        assert!(msk.mock_exponents().is_none());
        let sk = keygen(&params, &mpk, &msk, &set(&["doctor", "cardiology"]), &mut rng).unwrap();
        assert!(sk.is_consistent(&params, &mpk));
        let msp = compile_msp(&parse_policy("doctor AND (cardiology OR oncology)").unwrap());
        let out = key_encap_star(&params, &mpk, &msp, &EncapSeed::random(&mut rng));
        let k = key_decap(&params, &msp, &out.encapsulation, sk.attributes(), &sk).unwrap();
        assert_eq!(k, Some(out.key));
    }
}
