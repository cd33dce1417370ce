//! Binary encodings for keys, policies and protocol messages, plus framing
//! and transports.
//!
//! Every encoding is canonical: a value has exactly one byte string, and
//! decoders reject anything that would re-encode differently. Integers are
//! big-endian, scalars are `ceil(bits(p)/8)` bytes, group elements use the
//! suite's fixed-length encoding, strings carry a `u16` length prefix.

mod codec;
mod frame;
mod keys;
mod messages;

use num_bigint::BigUint;
use thiserror::Error;

use crate::abkem::AbkemError;
use crate::authority::AuthorityError;
use crate::policy::PolicyError;
use crate::suite::{Bls12Suite, MockSuite, PairingSuite, SuiteError, SuiteId};

pub use codec::{Reader, Writer};
pub use frame::{
    read_frame, write_frame, Direction, Frame, FrameType, LoopbackTransport, StreamTransport, TraceEntry,
    TracedTransport, Transport, MAX_FRAME_LEN,
};
pub use keys::{decode_params, encode_params, peek_key_file, read_key_file, write_key_file, KeyFileBody, KeyKind};

/// The four magic bytes that open every frame and key file.
pub const MAGIC: [u8; 4] = *b"ABK1";

#[derive(Debug, Error)]
pub enum WireError {
    #[error("input truncated: needed {needed} bytes, {remaining} remaining")]
    Truncated { needed: usize, remaining: usize },
    #[error("{0} trailing bytes after the encoded value")]
    TrailingBytes(usize),
    #[error("declared length overflows")]
    LengthOverflow,
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unknown frame type 0x{0:02x}")]
    UnknownFrameType(u8),
    #[error("expected a {expected:?} frame, got {found:?}")]
    UnexpectedFrame { expected: FrameType, found: FrameType },
    #[error("frame of {0} bytes exceeds the {MAX_FRAME_LEN}-byte cap")]
    FrameTooLarge(u64),
    #[error("unknown key file kind 0x{0:02x}")]
    UnknownKeyKind(u8),
    #[error("expected a {expected} file, got {found}")]
    WrongKeyKind { expected: KeyKind, found: KeyKind },
    #[error("unknown suite id 0x{0:02x}")]
    UnknownSuite(u8),
    #[error("encoded for suite {found}, expected {expected}")]
    SuiteMismatch { expected: SuiteId, found: SuiteId },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("scalar is not reduced modulo p")]
    NonCanonicalScalar,
    #[error("invalid UTF-8 in string field")]
    InvalidUtf8,
    #[error("invalid {field} value 0x{value:02x}")]
    InvalidField { field: &'static str, value: u8 },
    #[error("attributes must be listed in strictly increasing order")]
    UnsortedAttributes,
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Abkem(#[from] AbkemError),
    #[error(transparent)]
    Authority(#[from] AuthorityError),
    #[error("peer closed the connection")]
    PeerClosed,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A value with a canonical encoding relative to a pairing suite.
pub trait WireFormat<S: PairingSuite>: Sized {
    fn write(&self, suite: &S, w: &mut Writer);
    fn read(suite: &S, r: &mut Reader<'_>) -> Result<Self, WireError>;
}

pub fn encode<S: PairingSuite, T: WireFormat<S>>(suite: &S, value: &T) -> Vec<u8> {
    let mut w = Writer::new();
    value.write(suite, &mut w);
    w.into_bytes()
}

/// Decodes exactly one value; trailing bytes are an error.
pub fn decode<S: PairingSuite, T: WireFormat<S>>(suite: &S, bytes: &[u8]) -> Result<T, WireError> {
    let mut r = Reader::new(bytes);
    let v = T::read(suite, &mut r)?;
    r.finish()?;
    Ok(v)
}

/// A suite that can be rebuilt from the modulus stored in a params file.
pub trait SuiteCodec: PairingSuite + Sized {
    const ID: SuiteId;

    fn from_modulus(p: &BigUint) -> Result<Self, WireError>;
}

impl SuiteCodec for MockSuite {
    const ID: SuiteId = SuiteId::Mock;

    fn from_modulus(p: &BigUint) -> Result<Self, WireError> {
        let p = u64::try_from(p).map_err(|_| WireError::BadParams("mock modulus exceeds 64 bits".into()))?;
        Ok(MockSuite::new(p)?)
    }
}

impl SuiteCodec for Bls12Suite {
    const ID: SuiteId = SuiteId::Bls12_381;

    fn from_modulus(p: &BigUint) -> Result<Self, WireError> {
        let suite = Bls12Suite::new();
        if p != suite.modulus() {
            return Err(WireError::BadParams("modulus is not the BLS12-381 group order".into()));
        }
        Ok(suite)
    }
}

pub(crate) fn read_suite_id(r: &mut Reader<'_>) -> Result<SuiteId, WireError> {
    let b = r.u8()?;
    SuiteId::from_byte(b).ok_or(WireError::UnknownSuite(b))
}

pub(crate) fn expect_suite<S: PairingSuite>(suite: &S, r: &mut Reader<'_>) -> Result<(), WireError> {
    let found = read_suite_id(r)?;
    if found != suite.id() {
        return Err(WireError::SuiteMismatch { expected: suite.id(), found });
    }
    Ok(())
}
