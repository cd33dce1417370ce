//! Key generation authority: setup, attribute-key issuance, the attribute
//! revocation list (ARL) and full rekeying.
//!
//! A plain ARL gives no forward revocation: keys issued before an attribute
//! was revoked keep decapsulating. Enforcement happens at the protocol edges
//! (the server refuses policies naming revoked attributes, the client refuses
//! to use them), and [`AuthorityState::rotate`] is the only way to cut off
//! existing keys.

use std::collections::BTreeSet;

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::abkem::{
    keygen, setup, AbkemError, AttributeSecretKey, MasterPublicKey, MasterSecretKey, SystemParams,
};
use crate::policy::{check_attribute, AttributeSet, PolicyError};
use crate::suite::PairingSuite;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuthorityError {
    #[error(transparent)]
    Abkem(#[from] AbkemError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("attribute {0:?} is revoked")]
    Revoked(String),
    #[error("master secret key does not match the master public key")]
    InconsistentMasterKeys,
}

/// Versioned set of revoked attributes. Every mutation bumps the version.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AttributeRevocationList {
    version: u64,
    revoked: BTreeSet<String>,
}

impl AttributeRevocationList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a list read from disk.
    pub fn from_parts<I>(version: u64, revoked: I) -> Result<Self, PolicyError>
    where
        I: IntoIterator<Item = String>,
    {
        let mut set = BTreeSet::new();
        for a in revoked {
            check_attribute(&a)?;
            if !set.insert(a.clone()) {
                return Err(PolicyError::DuplicateAttribute(a));
            }
        }
        Ok(AttributeRevocationList { version, revoked: set })
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn is_revoked(&self, attr: &str) -> bool {
        self.revoked.contains(attr)
    }

    /// Revoked attributes in sorted order.
    pub fn revoked(&self) -> impl Iterator<Item = &str> + '_ {
        self.revoked.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.revoked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.revoked.is_empty()
    }

    /// First revoked attribute among `attrs`, in canonical order.
    pub fn first_revoked<'a>(&self, attrs: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
        attrs.into_iter().find(|a| self.is_revoked(a))
    }

    /// Adds `attr` and bumps the version, even if it was already present.
    pub fn revoke(&mut self, attr: &str) -> Result<(), PolicyError> {
        check_attribute(attr)?;
        self.revoked.insert(attr.to_string());
        self.version += 1;
        Ok(())
    }
}

pub struct AuthorityState<S: PairingSuite> {
    params: SystemParams<S>,
    mpk: MasterPublicKey<S>,
    msk: MasterSecretKey<S>,
    issued: u64,
    arl: AttributeRevocationList,
}

impl<S: PairingSuite> AuthorityState<S> {
    /// Runs setup; the ARL starts empty at version 0.
    pub fn init<R: RngCore + CryptoRng + ?Sized>(
        security_bits: u32,
        suite: S,
        rng: &mut R,
    ) -> Result<Self, AuthorityError> {
        let (params, mpk, msk) = setup(security_bits, suite, rng)?;
        Ok(AuthorityState { params, mpk, msk, issued: 0, arl: AttributeRevocationList::new() })
    }

    /// Reassembles a state loaded from key files, checking the master keys
    /// against each other.
    pub fn from_parts(
        params: SystemParams<S>,
        mpk: MasterPublicKey<S>,
        msk: MasterSecretKey<S>,
        arl: AttributeRevocationList,
    ) -> Result<Self, AuthorityError> {
        if !msk.matches(&params, &mpk) {
            return Err(AuthorityError::InconsistentMasterKeys);
        }
        Ok(AuthorityState { params, mpk, msk, issued: 0, arl })
    }

    pub fn params(&self) -> &SystemParams<S> {
        &self.params
    }

    pub fn mpk(&self) -> &MasterPublicKey<S> {
        &self.mpk
    }

    pub fn msk(&self) -> &MasterSecretKey<S> {
        &self.msk
    }

    pub fn arl(&self) -> &AttributeRevocationList {
        &self.arl
    }

    /// Keys issued by this instance since it was created or loaded.
    pub fn issued(&self) -> u64 {
        self.issued
    }

    pub fn is_consistent(&self) -> bool {
        self.msk.matches(&self.params, &self.mpk)
    }

    pub fn issue_keys<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        attrs: &AttributeSet,
        rng: &mut R,
    ) -> Result<AttributeSecretKey<S>, AuthorityError> {
        if let Some(a) = self.arl.first_revoked(attrs.iter()) {
            return Err(AuthorityError::Revoked(a.to_string()));
        }
        let sk = keygen(&self.params, &self.mpk, &self.msk, attrs, rng)?;
        self.issued += 1;
        Ok(sk)
    }

    pub fn revoke_attribute(&mut self, attr: &str) -> Result<&AttributeRevocationList, AuthorityError> {
        self.arl.revoke(attr)?;
        Ok(&self.arl)
    }

    /// Fresh master keys under the same parameters. The ARL carries over.
    pub fn rotate<R: RngCore + CryptoRng + ?Sized>(&mut self, rng: &mut R) -> Result<(), AuthorityError> {
        let (params, mpk, msk) = setup(self.params.security_bits(), self.params.suite().clone(), rng)?;
        self.params = params;
        self.mpk = mpk;
        self.msk = msk;
        self.issued = 0;
        Ok(())
    }
}
