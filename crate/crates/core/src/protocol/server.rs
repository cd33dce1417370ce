use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{CryptoRng, RngCore};
use zeroize::{Zeroize, Zeroizing};

use super::kdf::{context, kdf, verify_mac};
use super::{AuthResult, Challenge, ProtocolError, RejectReason, Response, SessionId};
use crate::abkem::{key_encap_star_with, EncapRandomness, EncapSeed, MasterPublicKey, SystemParams};
use crate::authority::AttributeRevocationList;
use crate::policy::{compile_msp, MspProgram, PolicyFormula, MAX_ATTRIBUTE_LEN};
use crate::suite::{GroupElement, PairingSuite};
use crate::wire;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// What the authentication server knows: public parameters, the access
/// policy and its compiled form, and its own identity.
#[derive(Clone, Debug)]
pub struct ServerConfig<S: PairingSuite> {
    params: SystemParams<S>,
    mpk: MasterPublicKey<S>,
    policy: PolicyFormula,
    msp: MspProgram,
    id_sp: String,
    require_confirmation: bool,
    arl: AttributeRevocationList,
    timeout: Duration,
}

impl<S: PairingSuite> ServerConfig<S> {
    /// Compiles `policy`. Confirmation is required by default.
    pub fn new(
        params: SystemParams<S>,
        mpk: MasterPublicKey<S>,
        policy: PolicyFormula,
        id_sp: impl Into<String>,
    ) -> Result<Self, ProtocolError> {
        let id_sp = id_sp.into();
        if id_sp.is_empty() || id_sp.len() > MAX_ATTRIBUTE_LEN {
            return Err(ProtocolError::InvalidIdSp);
        }
        let msp = compile_msp(&policy);
        Ok(ServerConfig {
            params,
            mpk,
            policy,
            msp,
            id_sp,
            require_confirmation: true,
            arl: AttributeRevocationList::new(),
            timeout: DEFAULT_TIMEOUT,
        })
    }

    pub fn with_confirmation(mut self, required: bool) -> Self {
        self.require_confirmation = required;
        self
    }

    pub fn with_arl(mut self, arl: AttributeRevocationList) -> Self {
        self.arl = arl;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn params(&self) -> &SystemParams<S> {
        &self.params
    }

    pub fn mpk(&self) -> &MasterPublicKey<S> {
        &self.mpk
    }

    pub fn policy(&self) -> &PolicyFormula {
        &self.policy
    }

    pub fn msp(&self) -> &MspProgram {
        &self.msp
    }

    pub fn id_sp(&self) -> &str {
        &self.id_sp
    }

    pub fn require_confirmation(&self) -> bool {
        self.require_confirmation
    }

    pub fn arl(&self) -> &AttributeRevocationList {
        &self.arl
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }
}

/// Server state between `Challenge` and `Response`.
///
/// It holds the encapsulation exponent `s` and offers no way to read it.
/// `s` is wiped when the session finishes (whatever the outcome), expires,
/// or is dropped.
///
/// ```compile_fail
/// fn peek<S: abkem_auth::suite::PairingSuite>(s: &abkem_auth::protocol::ServerSession<S>) {
///     let _ = s.secret;
/// }
/// ```
///
/// ```compile_fail
/// fn peek<S: abkem_auth::suite::PairingSuite>(s: &abkem_auth::protocol::ServerSession<S>) {
///     let _ = s.secret();
/// }
/// ```
pub struct ServerSession<S: PairingSuite> {
    session_id: SessionId,
    secret: Option<Zeroizing<S::Scalar>>,
    transcript: Vec<u8>,
    id_sp: String,
    require_confirmation: bool,
    created_at: Instant,
    timeout: Duration,
    finished: bool,
}

impl<S: PairingSuite> ServerSession<S> {
    pub fn session_id(&self) -> SessionId {
        self.session_id
    }

    /// Encoded `Challenge` this session was opened with.
    pub fn transcript(&self) -> &[u8] {
        &self.transcript
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Whether the ephemeral exponent is still held.
    pub fn holds_secret(&self) -> bool {
        self.secret.is_some()
    }

    pub fn is_expired_at(&self, now: Instant) -> bool {
        now.saturating_duration_since(self.created_at) >= self.timeout
    }

    /// Wipes the secret if the session has timed out. Returns whether it did.
    pub fn expire_if_due(&mut self, now: Instant) -> bool {
        if self.is_expired_at(now) {
            self.secret = None;
            true
        } else {
            false
        }
    }

    pub fn finish(&mut self, resp: &Response<S>) -> AuthResult {
        self.finish_at(resp, Instant::now())
    }

    /// Consumes the session. Every call after the first is rejected as a
    /// replay, and `s` is gone after the first call whatever its outcome.
    pub fn finish_at(&mut self, resp: &Response<S>, now: Instant) -> AuthResult {
        if self.finished {
            return AuthResult::Rejected(RejectReason::Replay);
        }
        self.finished = true;
        let expired = self.is_expired_at(now);
        let Some(s) = self.secret.take() else {
            return AuthResult::Rejected(RejectReason::Expired);
        };
        if expired {
            return AuthResult::Rejected(RejectReason::Expired);
        }
        if resp.session_id != self.session_id {
            return AuthResult::Rejected(RejectReason::UnknownSession);
        }
        if resp.b.is_identity() {
            return AuthResult::Rejected(RejectReason::DegenerateKey);
        }
        let mut k_dh = resp.b.pow(&s);
        drop(s);
        let ctx = context(&self.transcript, &resp.b, &self.id_sp);
        let keys = kdf(&k_dh, &ctx);
        k_dh.zeroize();
        match (&resp.mac, self.require_confirmation) {
            (None, true) => AuthResult::Rejected(RejectReason::MissingConfirmation),
            (Some(tag), _) if !verify_mac(keys.confirmation_key(), &ctx, tag) => {
                AuthResult::Rejected(RejectReason::BadConfirmation)
            }
            _ => AuthResult::Accepted(keys),
        }
    }
}

/// Opens a session: fresh session id and encapsulation seed from `rng`.
pub fn server_begin<S: PairingSuite, R: RngCore + CryptoRng + ?Sized>(
    cfg: &ServerConfig<S>,
    rng: &mut R,
) -> Result<(Challenge<S>, ServerSession<S>), ProtocolError> {
    let session_id = SessionId::random(rng);
    let seed = EncapSeed::random(rng);
    let randomness = EncapRandomness::derive(cfg.params.suite(), &cfg.msp, &seed);
    server_begin_with(cfg, session_id, &randomness)
}

/// Opens a session with a fixed id and encapsulation randomness.
///
/// Refuses policies that name a revoked attribute.
pub fn server_begin_with<S: PairingSuite>(
    cfg: &ServerConfig<S>,
    session_id: SessionId,
    randomness: &EncapRandomness<S>,
) -> Result<(Challenge<S>, ServerSession<S>), ProtocolError> {
    if let Some(a) = cfg.arl.first_revoked(cfg.policy.leaves()) {
        return Err(ProtocolError::RevokedAttribute(a.to_string()));
    }
    let mut out = key_encap_star_with(&cfg.params, &cfg.mpk, &cfg.msp, randomness)?;
    // K itself is not needed: the server recomputes K_DH as B^s.
    out.key.zeroize();
    let challenge = Challenge {
        session_id,
        require_confirmation: cfg.require_confirmation,
        arl_version: cfg.arl.version(),
        id_sp: cfg.id_sp.clone(),
        msp: cfg.msp.clone(),
        encapsulation: out.encapsulation,
    };
    let transcript = wire::encode(cfg.params.suite(), &challenge);
    let session = ServerSession {
        session_id,
        secret: Some(out.secret),
        transcript,
        id_sp: cfg.id_sp.clone(),
        require_confirmation: cfg.require_confirmation,
        created_at: Instant::now(),
        timeout: cfg.timeout,
        finished: false,
    };
    Ok((challenge, session))
}

enum Slot<S: PairingSuite> {
    Pending(ServerSession<S>),
    /// Tombstone: when the session closed and what a late response gets.
    Closed(Instant, RejectReason),
}

/// Open sessions keyed by session id. Finished sessions leave a tombstone so
/// a repeated `Response` is reported as a replay.
pub struct SessionStore<S: PairingSuite> {
    slots: Mutex<HashMap<SessionId, Slot<S>>>,
}

impl<S: PairingSuite> Default for SessionStore<S> {
    fn default() -> Self {
        SessionStore { slots: Mutex::new(HashMap::new()) }
    }
}

impl<S: PairingSuite> SessionStore<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, session: ServerSession<S>) {
        let id = session.session_id;
        self.slots.lock().expect("session store lock").insert(id, Slot::Pending(session));
    }

    /// Finishes the session named by `resp`. The session is taken out under
    /// the lock, so concurrent deliveries of one response cannot both run.
    pub fn finish(&self, resp: &Response<S>) -> AuthResult {
        let now = Instant::now();
        let mut session = {
            let mut slots = self.slots.lock().expect("session store lock");
            match slots.get(&resp.session_id) {
                None => return AuthResult::Rejected(RejectReason::UnknownSession),
                Some(Slot::Closed(_, reason)) => return AuthResult::Rejected(*reason),
                Some(Slot::Pending(_)) => {}
            }
            match slots.insert(resp.session_id, Slot::Closed(now, RejectReason::Replay)) {
                Some(Slot::Pending(s)) => s,
                _ => unreachable!("checked above"),
            }
        };
        session.finish_at(resp, now)
    }

    /// Closes a pending session without finishing it, e.g. after an
    /// undecodable response.
    pub fn close(&self, id: SessionId, reason: RejectReason) {
        let mut slots = self.slots.lock().expect("session store lock");
        if let Some(slot) = slots.get_mut(&id) {
            if matches!(slot, Slot::Pending(_)) {
                *slot = Slot::Closed(Instant::now(), reason);
            }
        }
    }

    /// Wipes timed-out sessions, turning them into tombstones, and forgets
    /// tombstones older than `retain`. Returns how many sessions expired.
    pub fn purge(&self, now: Instant, retain: Duration) -> usize {
        let mut slots = self.slots.lock().expect("session store lock");
        let mut expired = 0;
        for slot in slots.values_mut() {
            if let Slot::Pending(s) = slot {
                if s.expire_if_due(now) {
                    *slot = Slot::Closed(now, RejectReason::Expired);
                    expired += 1;
                }
            }
        }
        slots.retain(|_, slot| match slot {
            Slot::Closed(at, _) => now.saturating_duration_since(*at) < retain,
            Slot::Pending(_) => true,
        });
        expired
    }

    pub fn pending(&self) -> usize {
        let slots = self.slots.lock().expect("session store lock");
        slots.values().filter(|s| matches!(s, Slot::Pending(_))).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abkem::setup_with_exponents;
    use crate::policy::parse_policy;
    use crate::suite::MockSuite;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn config() -> ServerConfig<MockSuite> {
        let params = SystemParams::new(0, MockSuite::new(1009).unwrap()).unwrap();
        let s = params.suite().clone();
        let (mpk, _) = setup_with_exponents(&params, s.scalar(5), s.scalar(7));
        ServerConfig::new(params, mpk, parse_policy("A AND (B OR C)").unwrap(), "sp.example").unwrap()
    }

    fn response(session: &ServerSession<MockSuite>, b_exp: u64) -> Response<MockSuite> {
        let suite = MockSuite::new(1009).unwrap();
        Response { session_id: session.session_id(), b: suite.element(b_exp), mac: None }
    }

    #[test]
    fn config_validation() {
        let cfg = config();
        assert_eq!(cfg.msp().rows(), cfg.policy().leaf_count());
        assert!(cfg.require_confirmation());
        assert_eq!(cfg.timeout(), DEFAULT_TIMEOUT);
        let c = config();
        assert!(matches!(
            ServerConfig::new(c.params().clone(), c.mpk().clone(), c.policy().clone(), ""),
            Err(ProtocolError::InvalidIdSp)
        ));
    }

    #[test]
    fn forced_exponent_shows_up_in_the_challenge() {
        let cfg = config();
        let s = cfg.params().suite();
        let rnd = EncapRandomness::explicit(s.scalar(7), vec![s.scalar(2)], vec![s.scalar(3); 3]);
        let (ch, session) = server_begin_with(&cfg, SessionId([1; 16]), &rnd).unwrap();
        assert_eq!(ch.encapsulation.z.exponent(), 7);
        assert_eq!(ch.msp.rows(), 3);
        assert_eq!(ch.arl_version, 0);
        assert!(session.holds_secret());
        assert_eq!(session.transcript(), wire::encode(s, &ch));
    }

    #[test]
    fn fresh_sessions_differ() {
        let cfg = config();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (a, _) = server_begin(&cfg, &mut rng).unwrap();
        let (b, _) = server_begin(&cfg, &mut rng).unwrap();
        assert_ne!(a.session_id, b.session_id);
        assert_ne!(a.encapsulation, b.encapsulation);
    }

    #[test]
    fn revoked_policy_attribute_is_refused() {
        let mut arl = AttributeRevocationList::new();
        arl.revoke("C").unwrap();
        let cfg = config().with_arl(arl);
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        assert!(matches!(
            server_begin(&cfg, &mut rng),
            Err(ProtocolError::RevokedAttribute(a)) if a == "C"
        ));
    }

    #[test]
    fn session_is_single_use_and_wipes_its_secret() {
        let cfg = config().with_confirmation(false);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let (_, mut session) = server_begin(&cfg, &mut rng).unwrap();
        let resp = response(&session, 15);
        assert!(session.finish(&resp).is_accepted());
        assert!(!session.holds_secret());
        assert!(session.is_finished());
        assert_eq!(session.finish(&resp).rejection(), Some(RejectReason::Replay));
    }

    #[test]
    fn rejections() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let cfg = config();
        let (_, mut s1) = server_begin(&cfg, &mut rng).unwrap();
        let mut wrong = response(&s1, 15);
        wrong.session_id = SessionId([9; 16]);
        assert_eq!(s1.finish(&wrong).rejection(), Some(RejectReason::UnknownSession));
        assert!(!s1.holds_secret());

        let (_, mut s2) = server_begin(&cfg, &mut rng).unwrap();
        assert_eq!(s2.finish(&response(&s2, 0)).rejection(), Some(RejectReason::DegenerateKey));

        let (_, mut s3) = server_begin(&cfg, &mut rng).unwrap();
        assert_eq!(s3.finish(&response(&s3, 15)).rejection(), Some(RejectReason::MissingConfirmation));

        let (_, mut s4) = server_begin(&cfg, &mut rng).unwrap();
        let mut forged = response(&s4, 15);
        forged.mac = Some([0; 32]);
        assert_eq!(s4.finish(&forged).rejection(), Some(RejectReason::BadConfirmation));
    }

    #[test]
    fn expiry() {
        let cfg = config().with_timeout(Duration::from_secs(1));
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let (_, mut session) = server_begin(&cfg, &mut rng).unwrap();
        let later = Instant::now() + Duration::from_secs(2);
        assert!(!session.expire_if_due(Instant::now()));
        assert!(session.expire_if_due(later));
        assert!(!session.holds_secret());
        let resp = response(&session, 15);
        assert_eq!(session.finish(&resp).rejection(), Some(RejectReason::Expired));

        let (_, mut other) = server_begin(&cfg, &mut rng).unwrap();
        let resp = response(&other, 15);
        assert_eq!(other.finish_at(&resp, later).rejection(), Some(RejectReason::Expired));
        assert!(!other.holds_secret());
    }

    #[test]
    fn store_demultiplexes_and_remembers() {
        let cfg = config().with_confirmation(false).with_timeout(Duration::from_secs(1));
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let store = SessionStore::new();
        let (_, a) = server_begin(&cfg, &mut rng).unwrap();
        let (_, b) = server_begin(&cfg, &mut rng).unwrap();
        let (_, c) = server_begin(&cfg, &mut rng).unwrap();
        let (ra, rb) = (response(&a, 15), response(&b, 16));
        let rc = response(&c, 17);
        store.insert(a);
        store.insert(b);
        store.insert(c);
        assert_eq!(store.pending(), 3);
        assert!(store.finish(&rb).is_accepted());
        assert!(store.finish(&ra).is_accepted());
        assert_eq!(store.finish(&ra).rejection(), Some(RejectReason::Replay));
        let mut stranger = ra.clone();
        stranger.session_id = SessionId([0xee; 16]);
        assert_eq!(store.finish(&stranger).rejection(), Some(RejectReason::UnknownSession));

        let later = Instant::now() + Duration::from_secs(5);
        assert_eq!(store.purge(later, Duration::from_secs(60)), 1);
        assert_eq!(store.pending(), 0);
        assert_eq!(store.finish(&rc).rejection(), Some(RejectReason::Expired));
        store.purge(later + Duration::from_secs(120), Duration::from_secs(60));
        assert_eq!(store.finish(&rc).rejection(), Some(RejectReason::UnknownSession));
    }
}
