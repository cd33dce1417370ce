//! Byte-level reader and writer shared by every encoding.

use num_bigint::BigUint;

use super::WireError;
use crate::suite::{GroupElement, GroupTag, PairingSuite};

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    /// Element counts are `u32` on the wire.
    pub fn count(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("collection larger than u32::MAX"));
    }

    /// `u16` length prefix followed by UTF-8. Callers validate lengths when
    /// the value is constructed.
    pub fn str(&mut self, s: &str) {
        self.u16(u16::try_from(s.len()).expect("string length validated at construction"));
        self.bytes(s.as_bytes());
    }

    pub fn element<E: GroupElement>(&mut self, e: &E) {
        self.bytes(&e.to_bytes());
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if n > self.remaining() {
            return Err(WireError::Truncated { needed: n, remaining: self.remaining() });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    pub fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.array::<1>()?[0])
    }

    pub fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    /// Reads a `u32` count of items that each occupy at least `min_item_len`
    /// bytes, failing before any allocation if they cannot all fit.
    pub fn count(&mut self, min_item_len: usize) -> Result<usize, WireError> {
        let n = self.u32()? as usize;
        let needed = n.checked_mul(min_item_len).ok_or(WireError::LengthOverflow)?;
        if needed > self.remaining() {
            return Err(WireError::Truncated { needed, remaining: self.remaining() });
        }
        Ok(n)
    }

    pub fn str(&mut self) -> Result<String, WireError> {
        let len = self.u16()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| WireError::InvalidUtf8)
    }

    /// Fixed-length big-endian integer below `p`.
    pub fn reduced(&mut self, len: usize, p: &BigUint) -> Result<BigUint, WireError> {
        let v = BigUint::from_bytes_be(self.take(len)?);
        if &v >= p {
            return Err(WireError::NonCanonicalScalar);
        }
        Ok(v)
    }

    pub fn g1<S: PairingSuite>(&mut self, suite: &S) -> Result<S::G1, WireError> {
        let raw = self.take(suite.element_len(GroupTag::G1))?;
        Ok(suite.decode_g1(raw)?)
    }

    pub fn g2<S: PairingSuite>(&mut self, suite: &S) -> Result<S::G2, WireError> {
        let raw = self.take(suite.element_len(GroupTag::G2))?;
        Ok(suite.decode_g2(raw)?)
    }

    pub fn gt<S: PairingSuite>(&mut self, suite: &S) -> Result<S::Gt, WireError> {
        let raw = self.take(suite.element_len(GroupTag::Gt))?;
        Ok(suite.decode_gt(raw)?)
    }

    pub fn finish(self) -> Result<(), WireError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(WireError::TrailingBytes(n)),
        }
    }
}
