use std::num::NonZeroUsize;

use rand::{CryptoRng, RngCore};
use thiserror::Error;
use zeroize::{Zeroize, Zeroizing};

use super::kdf::{context, kdf, mac};
use super::{Challenge, Response, SessionKeys};
use crate::abkem::{key_decap, AbkemError, AttributeSecretKey, MasterPublicKey, SystemParams};
use crate::authority::AttributeRevocationList;
use crate::policy::{count_satisfying_msp, AttributeSet, Roster};
use crate::suite::{GroupElement, PairingSuite};
use crate::wire;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClientError {
    #[error("attributes do not satisfy policy")]
    NotSatisfied,
    #[error("policy is satisfied by {satisfying} roster users, fewer than the required {required}")]
    AnonymityRefused { satisfying: usize, required: usize },
    #[error("challenge advertises revocation list v{advertised}, local copy is v{local}")]
    ArlVersionMismatch { local: u64, advertised: u64 },
    #[error("challenge is for service provider {found:?}, expected {expected:?}")]
    UnexpectedServiceProvider { expected: String, found: String },
    #[error("malformed challenge: {0}")]
    MalformedChallenge(String),
    #[error(transparent)]
    Abkem(#[from] AbkemError),
}

/// The user's side: public parameters, the attribute key, and local checks
/// to apply before answering.
pub struct ClientCredentials<S: PairingSuite> {
    params: SystemParams<S>,
    mpk: MasterPublicKey<S>,
    sk: AttributeSecretKey<S>,
    min_anonymity: Option<NonZeroUsize>,
    arl: Option<AttributeRevocationList>,
    expected_id_sp: Option<String>,
}

impl<S: PairingSuite> ClientCredentials<S> {
    pub fn new(params: SystemParams<S>, mpk: MasterPublicKey<S>, sk: AttributeSecretKey<S>) -> Self {
        ClientCredentials { params, mpk, sk, min_anonymity: None, arl: None, expected_id_sp: None }
    }

    /// Refuse policies satisfied by fewer than `r` users of the roster passed
    /// to [`client_respond`].
    pub fn with_min_anonymity(mut self, r: NonZeroUsize) -> Self {
        self.min_anonymity = Some(r);
        self
    }

    /// Local revocation list: its version must match the challenge, and its
    /// attributes are never used.
    pub fn with_arl(mut self, arl: AttributeRevocationList) -> Self {
        self.arl = Some(arl);
        self
    }

    pub fn expecting_id_sp(mut self, id_sp: impl Into<String>) -> Self {
        self.expected_id_sp = Some(id_sp.into());
        self
    }

    pub fn params(&self) -> &SystemParams<S> {
        &self.params
    }

    pub fn mpk(&self) -> &MasterPublicKey<S> {
        &self.mpk
    }

    pub fn attributes(&self) -> &AttributeSet {
        self.sk.attributes()
    }

    pub fn min_anonymity(&self) -> Option<NonZeroUsize> {
        self.min_anonymity
    }
}

/// Answers a challenge with a fresh ephemeral exponent.
///
/// Any error means nothing should be sent to the server.
pub fn client_respond<S: PairingSuite, R: RngCore + CryptoRng + ?Sized>(
    creds: &ClientCredentials<S>,
    ch: &Challenge<S>,
    roster: Option<&Roster>,
    rng: &mut R,
) -> Result<(Response<S>, SessionKeys), ClientError> {
    let b_eph = creds.params.suite().random_scalar(rng);
    client_respond_with_ephemeral(creds, ch, roster, b_eph)
}

/// Answers a challenge with a caller-chosen `b_eph`, which is consumed and
/// wiped before returning.
///
/// Neither the response nor the keys expose `b_eph`:
///
/// ```compile_fail
/// fn peek<S: abkem_auth::suite::PairingSuite>(r: &abkem_auth::protocol::Response<S>) {
///     let _ = r.b_eph;
/// }
/// ```
///
/// ```compile_fail
/// fn peek(k: &abkem_auth::protocol::SessionKeys) {
///     let _ = k.ephemeral();
/// }
/// ```
pub fn client_respond_with_ephemeral<S: PairingSuite>(
    creds: &ClientCredentials<S>,
    ch: &Challenge<S>,
    roster: Option<&Roster>,
    b_eph: S::Scalar,
) -> Result<(Response<S>, SessionKeys), ClientError> {
    let b_eph = Zeroizing::new(b_eph);
    let suite = creds.params.suite();
    if ch.encapsulation.rows.len() != ch.msp.rows() {
        return Err(ClientError::MalformedChallenge(format!(
            "{} encapsulation rows for a {}-row policy",
            ch.encapsulation.rows.len(),
            ch.msp.rows()
        )));
    }
    if let Some(expected) = &creds.expected_id_sp {
        if expected != &ch.id_sp {
            return Err(ClientError::UnexpectedServiceProvider {
                expected: expected.clone(),
                found: ch.id_sp.clone(),
            });
        }
    }
    if let Some(arl) = &creds.arl {
        if arl.version() != ch.arl_version {
            return Err(ClientError::ArlVersionMismatch { local: arl.version(), advertised: ch.arl_version });
        }
    }
    if let (Some(r), Some(roster)) = (creds.min_anonymity, roster) {
        let satisfying = count_satisfying_msp(&ch.msp, roster, suite.modulus());
        if satisfying < r.get() {
            return Err(ClientError::AnonymityRefused { satisfying, required: r.get() });
        }
    }

    let usable = match &creds.arl {
        Some(arl) => creds.sk.attributes().without(|a| arl.is_revoked(a)),
        None => creds.sk.attributes().clone(),
    };
    let mut k = key_decap(&creds.params, &ch.msp, &ch.encapsulation, &usable, &creds.sk)?
        .ok_or(ClientError::NotSatisfied)?;
    let b = creds.mpk.mpk2.pow(&b_eph);
    let mut k_dh = k.pow(&b_eph);
    k.zeroize();
    drop(b_eph);

    let transcript = wire::encode(suite, ch);
    let ctx = context(&transcript, &b, &ch.id_sp);
    let keys = kdf(&k_dh, &ctx);
    k_dh.zeroize();
    let tag = ch.require_confirmation.then(|| mac(keys.confirmation_key(), &ctx));
    Ok((Response { session_id: ch.session_id, b, mac: tag }, keys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abkem::{keygen, keygen_with_exponent, setup, setup_with_exponents, EncapRandomness};
    use crate::policy::parse_policy;
    use crate::protocol::{server_begin, server_begin_with, ServerConfig, SessionId};
    use crate::suite::MockSuite;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct World {
        cfg: ServerConfig<MockSuite>,
        creds: ClientCredentials<MockSuite>,
        rng: ChaCha20Rng,
    }

    fn world(policy: &str, attrs: &str, seed: u64) -> World {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (params, mpk, msk) = setup(0, MockSuite::new((1 << 61) - 1).unwrap(), &mut rng).unwrap();
        let sk = keygen(&params, &mpk, &msk, &attrs.parse().unwrap(), &mut rng).unwrap();
        let cfg = ServerConfig::new(params.clone(), mpk.clone(), parse_policy(policy).unwrap(), "sp").unwrap();
        World { cfg, creds: ClientCredentials::new(params, mpk, sk), rng }
    }

    #[test]
    fn forced_exponents_give_the_expected_dh_key() {
        let params = SystemParams::new(0, MockSuite::new(1009).unwrap()).unwrap();
        let s = params.suite().clone();
        let (mpk, msk) = setup_with_exponents(&params, s.scalar(5), s.scalar(7));
        let sk = keygen_with_exponent(&params, &mpk, &msk, &"A".parse().unwrap(), &s.scalar(3)).unwrap();
        let cfg = ServerConfig::new(params.clone(), mpk.clone(), parse_policy("A").unwrap(), "sp").unwrap();
        let rnd = EncapRandomness::explicit(s.scalar(7), vec![], vec![s.scalar(2)]);
        let (ch, mut session) = server_begin_with(&cfg, SessionId([0; 16]), &rnd).unwrap();
        let creds = ClientCredentials::new(params, mpk, sk);
        let (resp, keys) = client_respond_with_ephemeral(&creds, &ch, None, s.scalar(3)).unwrap();
        assert_eq!(resp.b.exponent(), 15);
        // K_DH = g_T^(5*7*3)
        let transcript = wire::encode(&s, &ch);
        let expected = kdf(&s.element::<crate::suite::GtTag>(105), &context(&transcript, &resp.b, "sp"));
        assert_eq!(keys.session_key(), expected.session_key());
        let server = session.finish(&resp);
        assert_eq!(server.keys().unwrap().session_key(), keys.session_key());
    }

    #[test]
    fn honest_run_agrees() {
        let mut w = world("doctor AND (cardiology OR oncology)", "doctor, oncology", 1);
        let (ch, mut session) = server_begin(&w.cfg, &mut w.rng).unwrap();
        let (resp, keys) = client_respond(&w.creds, &ch, None, &mut w.rng).unwrap();
        assert!(resp.mac.is_some());
        let result = session.finish(&resp);
        assert_eq!(result.keys().unwrap().session_key(), keys.session_key());
    }

    #[test]
    fn runs_without_confirmation() {
        let mut w = world("A", "A", 2);
        w.cfg = w.cfg.clone().with_confirmation(false);
        let (ch, mut session) = server_begin(&w.cfg, &mut w.rng).unwrap();
        let (resp, keys) = client_respond(&w.creds, &ch, None, &mut w.rng).unwrap();
        assert!(resp.mac.is_none());
        assert_eq!(session.finish(&resp).keys().unwrap().session_key(), keys.session_key());
    }

    #[test]
    fn unsatisfied_policy_is_a_local_error() {
        let mut w = world("A AND B", "A", 3);
        let (ch, _) = server_begin(&w.cfg, &mut w.rng).unwrap();
        assert_eq!(client_respond(&w.creds, &ch, None, &mut w.rng).unwrap_err(), ClientError::NotSatisfied);
    }

    #[test]
    fn anonymity_guard() {
        let mut w = world("A AND B", "A, B", 4);
        w.creds = w.creds.with_min_anonymity(NonZeroUsize::new(2).unwrap());
        let (ch, _) = server_begin(&w.cfg, &mut w.rng).unwrap();
        let roster: Roster = "u1: A, B\nu2: A\nu3: B".parse().unwrap();
        assert_eq!(
            client_respond(&w.creds, &ch, Some(&roster), &mut w.rng).unwrap_err(),
            ClientError::AnonymityRefused { satisfying: 1, required: 2 }
        );
        let wide: Roster = "u1: A, B\nu2: A, B, C".parse().unwrap();
        assert!(client_respond(&w.creds, &ch, Some(&wide), &mut w.rng).is_ok());
    }

    #[test]
    fn arl_checks() {
        let mut w = world("A OR B", "A, B", 5);
        let mut arl = AttributeRevocationList::new();
        arl.revoke("C").unwrap();
        w.cfg = w.cfg.clone().with_arl(arl.clone());
        let (ch, _) = server_begin(&w.cfg, &mut w.rng).unwrap();
        let stale = w.creds.with_arl(AttributeRevocationList::new());
        assert_eq!(
            client_respond(&stale, &ch, None, &mut w.rng).unwrap_err(),
            ClientError::ArlVersionMismatch { local: 0, advertised: 1 }
        );
        let current = stale.with_arl(arl);
        assert!(client_respond(&current, &ch, None, &mut w.rng).is_ok());
    }

    #[test]
    fn revoked_attributes_are_not_used() {
        let mut w = world("A OR B", "A", 6);
        let mut arl = AttributeRevocationList::new();
        arl.revoke("C").unwrap();
        arl.revoke("A").unwrap();
        // the server never saw this list; only the client drops A
        let (mut ch, _) = server_begin(&w.cfg, &mut w.rng).unwrap();
        ch.arl_version = 2;
        let creds = w.creds.with_arl(arl);
        assert_eq!(client_respond(&creds, &ch, None, &mut w.rng).unwrap_err(), ClientError::NotSatisfied);
    }

    #[test]
    fn service_provider_pinning_and_shape() {
        let mut w = world("A", "A", 7);
        let (mut ch, _) = server_begin(&w.cfg, &mut w.rng).unwrap();
        let pinned = w.creds.expecting_id_sp("other");
        assert!(matches!(
            client_respond(&pinned, &ch, None, &mut w.rng),
            Err(ClientError::UnexpectedServiceProvider { .. })
        ));
        let creds = pinned.expecting_id_sp("sp");
        ch.encapsulation.rows.clear();
        assert!(matches!(
            client_respond(&creds, &ch, None, &mut w.rng),
            Err(ClientError::MalformedChallenge(_))
        ));
    }

    #[test]
    fn fresh_runs_give_fresh_keys() {
        let mut w = world("A", "A", 8);
        let (ch1, _) = server_begin(&w.cfg, &mut w.rng).unwrap();
        let (ch2, _) = server_begin(&w.cfg, &mut w.rng).unwrap();
        let (_, k1) = client_respond(&w.creds, &ch1, None, &mut w.rng).unwrap();
        let (_, k2) = client_respond(&w.creds, &ch2, None, &mut w.rng).unwrap();
        assert_ne!(k1.session_key(), k2.session_key());
    }
}
