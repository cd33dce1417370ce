//! Key files: `"ABK1" || kind || suite_id || body`.
//!
//! | kind | body |
//! |------|------|
//! | 0x10 params | `u16 security_bits, u16 len, modulus (big-endian, no leading zeros)` |
//! | 0x11 mpk    | `mpk1 (G1), mpk2 (GT)` |
//! | 0x12 msk    | `msk (G1)` |
//! | 0x13 sk     | `u16 t, t labels, x1 (G1), x2 (G2), t components (G1)` |
//! | 0x14 ARL    | `u64 version, u32 count, count labels` |
//!
//! Labels are `u16` length plus UTF-8 and appear in strictly increasing byte
//! order.

use std::fmt;

use num_bigint::BigUint;

use super::{read_suite_id, Reader, SuiteCodec, WireError, WireFormat, Writer, MAGIC};
use crate::abkem::{AttributeSecretKey, MasterPublicKey, MasterSecretKey, SystemParams};
use crate::authority::AttributeRevocationList;
use crate::policy::{check_attribute, AttributeSet};
use crate::suite::{PairingSuite, SuiteId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyKind {
    Params = 0x10,
    MasterPublicKey = 0x11,
    MasterSecretKey = 0x12,
    SecretKey = 0x13,
    RevocationList = 0x14,
}

impl KeyKind {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0x10 => KeyKind::Params,
            0x11 => KeyKind::MasterPublicKey,
            0x12 => KeyKind::MasterSecretKey,
            0x13 => KeyKind::SecretKey,
            0x14 => KeyKind::RevocationList,
            _ => return None,
        })
    }
}

impl fmt::Display for KeyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyKind::Params => "params",
            KeyKind::MasterPublicKey => "master public key",
            KeyKind::MasterSecretKey => "master secret key",
            KeyKind::SecretKey => "attribute secret key",
            KeyKind::RevocationList => "revocation list",
        })
    }
}

/// A value stored as a key file of a fixed kind.
pub trait KeyFileBody<S: PairingSuite>: WireFormat<S> {
    const KIND: KeyKind;
}

/// Reads the kind and suite from a key file header.
pub fn peek_key_file(bytes: &[u8]) -> Result<(KeyKind, SuiteId), WireError> {
    let mut r = Reader::new(bytes);
    read_header(&mut r)
}

fn read_header(r: &mut Reader<'_>) -> Result<(KeyKind, SuiteId), WireError> {
    if r.array::<4>()? != MAGIC {
        return Err(WireError::BadMagic);
    }
    let k = r.u8()?;
    let kind = KeyKind::from_byte(k).ok_or(WireError::UnknownKeyKind(k))?;
    Ok((kind, read_suite_id(r)?))
}

fn expect_header(r: &mut Reader<'_>, kind: KeyKind, suite: SuiteId) -> Result<(), WireError> {
    let (found_kind, found_suite) = read_header(r)?;
    if found_kind != kind {
        return Err(WireError::WrongKeyKind { expected: kind, found: found_kind });
    }
    if found_suite != suite {
        return Err(WireError::SuiteMismatch { expected: suite, found: found_suite });
    }
    Ok(())
}

fn write_header(w: &mut Writer, kind: KeyKind, suite: SuiteId) {
    w.bytes(&MAGIC);
    w.u8(kind as u8);
    w.u8(suite.as_byte());
}

pub fn write_key_file<S: PairingSuite, T: KeyFileBody<S>>(suite: &S, value: &T) -> Vec<u8> {
    let mut w = Writer::new();
    write_header(&mut w, T::KIND, suite.id());
    value.write(suite, &mut w);
    w.into_bytes()
}

pub fn read_key_file<S: PairingSuite, T: KeyFileBody<S>>(suite: &S, bytes: &[u8]) -> Result<T, WireError> {
    let mut r = Reader::new(bytes);
    expect_header(&mut r, T::KIND, suite.id())?;
    let v = T::read(suite, &mut r)?;
    r.finish()?;
    Ok(v)
}

pub fn encode_params<S: PairingSuite>(params: &SystemParams<S>) -> Vec<u8> {
    let suite = params.suite();
    let mut w = Writer::new();
    write_header(&mut w, KeyKind::Params, suite.id());
    w.u16(u16::try_from(params.security_bits()).expect("security level fits u16"));
    let modulus = suite.modulus().to_bytes_be();
    w.u16(u16::try_from(modulus.len()).expect("modulus fits u16 length"));
    w.bytes(&modulus);
    w.into_bytes()
}

/// Rebuilds the suite and parameters from a params file.
pub fn decode_params<S: SuiteCodec>(bytes: &[u8]) -> Result<SystemParams<S>, WireError> {
    let mut r = Reader::new(bytes);
    expect_header(&mut r, KeyKind::Params, S::ID)?;
    let security = r.u16()?;
    let len = r.u16()? as usize;
    let raw = r.take(len)?;
    if raw.first().is_none_or(|&b| b == 0) {
        return Err(WireError::BadParams("modulus has leading zeros or is empty".into()));
    }
    r.finish()?;
    let suite = S::from_modulus(&BigUint::from_bytes_be(raw))?;
    Ok(SystemParams::new(u32::from(security), suite)?)
}

/// Labels only; callers write the count in the width their format uses.
fn write_sorted_labels<'a>(w: &mut Writer, labels: impl Iterator<Item = &'a str>) {
    for l in labels {
        w.str(l);
    }
}

fn read_sorted_labels(r: &mut Reader<'_>, n: usize) -> Result<Vec<String>, WireError> {
    let mut out: Vec<String> = Vec::with_capacity(n);
    for _ in 0..n {
        let l = r.str()?;
        check_attribute(&l)?;
        if out.last().is_some_and(|prev| prev.as_str() >= l.as_str()) {
            return Err(WireError::UnsortedAttributes);
        }
        out.push(l);
    }
    Ok(out)
}

impl<S: PairingSuite> WireFormat<S> for MasterPublicKey<S> {
    fn write(&self, _suite: &S, w: &mut Writer) {
        w.element(&self.mpk1);
        w.element(&self.mpk2);
    }

    fn read(suite: &S, r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(MasterPublicKey { mpk1: r.g1(suite)?, mpk2: r.gt(suite)? })
    }
}

impl<S: PairingSuite> KeyFileBody<S> for MasterPublicKey<S> {
    const KIND: KeyKind = KeyKind::MasterPublicKey;
}

impl<S: PairingSuite> WireFormat<S> for MasterSecretKey<S> {
    fn write(&self, _suite: &S, w: &mut Writer) {
        w.element(self.element());
    }

    fn read(suite: &S, r: &mut Reader<'_>) -> Result<Self, WireError> {
        Ok(MasterSecretKey::from_element(r.g1(suite)?))
    }
}

impl<S: PairingSuite> KeyFileBody<S> for MasterSecretKey<S> {
    const KIND: KeyKind = KeyKind::MasterSecretKey;
}

impl<S: PairingSuite> WireFormat<S> for AttributeSecretKey<S> {
    fn write(&self, _suite: &S, w: &mut Writer) {
        let attrs = self.attributes();
        w.u16(u16::try_from(attrs.len()).expect("attribute count fits u16"));
        write_sorted_labels(w, attrs.iter());
        w.element(self.x1());
        w.element(self.x2());
        for c in self.components() {
            w.element(c);
        }
    }

    fn read(suite: &S, r: &mut Reader<'_>) -> Result<Self, WireError> {
        let t = r.u16()? as usize;
        // each label takes at least 3 bytes and each component a full G1 element
        let min = t * (3 + suite.element_len(crate::suite::GroupTag::G1));
        if min > r.remaining() {
            return Err(WireError::Truncated { needed: min, remaining: r.remaining() });
        }
        let labels = read_sorted_labels(r, t)?;
        let x1 = r.g1(suite)?;
        let x2 = r.g2(suite)?;
        let components = (0..t).map(|_| r.g1(suite)).collect::<Result<Vec<_>, _>>()?;
        let attrs = AttributeSet::new(labels)?;
        Ok(AttributeSecretKey::from_parts(attrs, x1, x2, components)?)
    }
}

impl<S: PairingSuite> KeyFileBody<S> for AttributeSecretKey<S> {
    const KIND: KeyKind = KeyKind::SecretKey;
}

impl<S: PairingSuite> WireFormat<S> for AttributeRevocationList {
    fn write(&self, _suite: &S, w: &mut Writer) {
        w.u64(self.version());
        w.count(self.len());
        write_sorted_labels(w, self.revoked());
    }

    fn read(_suite: &S, r: &mut Reader<'_>) -> Result<Self, WireError> {
        let version = r.u64()?;
        let n = r.count(3)?;
        let labels = read_sorted_labels(r, n)?;
        Ok(AttributeRevocationList::from_parts(version, labels)?)
    }
}

impl<S: PairingSuite> KeyFileBody<S> for AttributeRevocationList {
    const KIND: KeyKind = KeyKind::RevocationList;
}
