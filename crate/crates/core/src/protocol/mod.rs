//! One-round anonymous authentication.
//!
//! The server encapsulates a key `K = mpk2^s` under its access policy and
//! sends the encapsulation as a [`Challenge`]. A client whose attributes
//! satisfy the policy recovers `K`, picks `b_eph`, and replies with
//! `B = mpk2^b_eph`. Both sides then hold `K_DH = K^b_eph = B^s` and derive
//! session keys from it. With confirmation enabled the client also sends a
//! MAC over the transcript, proving it derived the same keys.
//!
//! The exchange authenticates the user side only; server authentication is
//! left to the transport.

mod client;
mod driver;
mod kdf;
mod server;

use std::fmt;

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::abkem::{AbkemError, Encapsulation};
use crate::policy::MspProgram;
use crate::suite::PairingSuite;
use crate::wire::WireError;

pub use client::{client_respond, client_respond_with_ephemeral, ClientCredentials, ClientError};
pub use driver::{run_client, run_server, ClientOutcome};
pub use kdf::{kdf, mac, verify_mac, SessionKeys, KDF_SALT, TAG_LEN};
pub use server::{server_begin, server_begin_with, ServerConfig, ServerSession, SessionStore, DEFAULT_TIMEOUT};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SessionId(pub [u8; 16]);

impl SessionId {
    pub fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut id = [0u8; 16];
        rng.fill_bytes(&mut id);
        SessionId(id)
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|b| write!(f, "{b:02x}"))
    }
}

impl fmt::Debug for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionId({self})")
    }
}

/// Server to client: the encapsulation and everything needed to check it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Challenge<S: PairingSuite> {
    pub session_id: SessionId,
    pub require_confirmation: bool,
    pub arl_version: u64,
    pub id_sp: String,
    pub msp: MspProgram,
    pub encapsulation: Encapsulation<S>,
}

/// Client to server: the DH partial key `B` and, in the confirmation
/// variant, the MAC tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Response<S: PairingSuite> {
    pub session_id: SessionId,
    pub b: S::Gt,
    pub mac: Option<[u8; TAG_LEN]>,
}

/// Server to client after `Response`: accepted, or the rejection reason.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResultMessage {
    pub session_id: SessionId,
    pub rejection: Option<RejectReason>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RejectReason {
    Replay = 1,
    UnknownSession = 2,
    DegenerateKey = 3,
    BadConfirmation = 4,
    MissingConfirmation = 5,
    Expired = 6,
    Malformed = 7,
}

impl RejectReason {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => RejectReason::Replay,
            2 => RejectReason::UnknownSession,
            3 => RejectReason::DegenerateKey,
            4 => RejectReason::BadConfirmation,
            5 => RejectReason::MissingConfirmation,
            6 => RejectReason::Expired,
            7 => RejectReason::Malformed,
            _ => return None,
        })
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::Replay => "replay",
            RejectReason::UnknownSession => "unknown session",
            RejectReason::DegenerateKey => "degenerate key",
            RejectReason::BadConfirmation => "bad confirmation",
            RejectReason::MissingConfirmation => "missing confirmation",
            RejectReason::Expired => "expired",
            RejectReason::Malformed => "malformed response",
        })
    }
}

/// Server-side outcome. A rejection carries no key material.
#[derive(Debug)]
pub enum AuthResult {
    Accepted(SessionKeys),
    Rejected(RejectReason),
}

impl AuthResult {
    pub fn is_accepted(&self) -> bool {
        matches!(self, AuthResult::Accepted(_))
    }

    pub fn keys(&self) -> Option<&SessionKeys> {
        match self {
            AuthResult::Accepted(k) => Some(k),
            AuthResult::Rejected(_) => None,
        }
    }

    pub fn rejection(&self) -> Option<RejectReason> {
        match self {
            AuthResult::Accepted(_) => None,
            AuthResult::Rejected(r) => Some(*r),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Abkem(#[from] AbkemError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("policy names revoked attribute {0:?}")]
    RevokedAttribute(String),
    #[error("service provider id must be 1 to 65535 bytes")]
    InvalidIdSp,
    #[error("server answered for a different session")]
    SessionMismatch,
}
