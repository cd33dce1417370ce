//! Policy and protocol message encodings.
//!
//! ```text
//! MSP           u32 n, u32 m, n*m scalars (entries mod p), n labels
//! Encapsulation z (G2), u32 n, n * (c_i1 (G1), c_i2 (G2))
//! Challenge     suite_id, session_id[16], flags, u64 arl_version, id_sp, MSP, Encapsulation
//! Response      suite_id, session_id[16], B (GT), 0x00 | 0x01 tag[32]
//! Result        session_id[16], status (0 accepted, 1 rejected), reason code (0 when accepted)
//! ```
//!
//! Challenge flags: bit 0 set when the server requires key confirmation;
//! other bits must be clear. MSP entries decode to their representative in
//! `(-p/2, p/2]`, so `-1` is written as `p - 1` and read back as `-1`.

use num_bigint::BigInt;

use super::{expect_suite, Reader, WireError, WireFormat, Writer};
use crate::abkem::{AbkemError, Encapsulation};
use crate::policy::{reduce, symmetric, MspProgram};
use crate::protocol::{Challenge, RejectReason, Response, ResultMessage, SessionId, TAG_LEN};
use crate::suite::{GroupTag, PairingSuite};

const FLAG_CONFIRM: u8 = 0x01;

impl<S: PairingSuite> WireFormat<S> for MspProgram {
    fn write(&self, suite: &S, w: &mut Writer) {
        let p = suite.modulus();
        let len = suite.scalar_len();
        w.count(self.rows());
        w.count(self.cols());
        for i in 0..self.rows() {
            for e in self.row(i) {
                w.bytes(&crate::suite::be_fixed(&reduce(e, p), len));
            }
        }
        for l in self.labels() {
            w.str(l);
        }
    }

    fn read(suite: &S, r: &mut Reader<'_>) -> Result<Self, WireError> {
        let p = suite.modulus();
        let len = suite.scalar_len();
        let n = r.u32()? as usize;
        let m = r.u32()? as usize;
        // n*m scalars plus n labels of at least 3 bytes each
        let needed = n
            .checked_mul(m)
            .and_then(|nm| nm.checked_mul(len))
            .and_then(|b| b.checked_add(n.checked_mul(3)?))
            .ok_or(WireError::LengthOverflow)?;
        if needed > r.remaining() {
            return Err(WireError::Truncated { needed, remaining: r.remaining() });
        }
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let row = (0..m)
                .map(|_| Ok(symmetric(&r.reduced(len, p)?, p)))
                .collect::<Result<Vec<BigInt>, WireError>>()?;
            rows.push(row);
        }
        let labels = (0..n).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
        Ok(MspProgram::new(rows, labels)?)
    }
}

impl<S: PairingSuite> WireFormat<S> for Encapsulation<S> {
    fn write(&self, _suite: &S, w: &mut Writer) {
        w.element(&self.z);
        w.count(self.rows.len());
        for (c1, c2) in &self.rows {
            w.element(c1);
            w.element(c2);
        }
    }

    fn read(suite: &S, r: &mut Reader<'_>) -> Result<Self, WireError> {
        let z = r.g2(suite)?;
        let n = r.count(suite.element_len(GroupTag::G1) + suite.element_len(GroupTag::G2))?;
        let rows = (0..n)
            .map(|_| Ok((r.g1(suite)?, r.g2(suite)?)))
            .collect::<Result<Vec<_>, WireError>>()?;
        Ok(Encapsulation { z, rows })
    }
}

impl<S: PairingSuite> WireFormat<S> for Challenge<S> {
    fn write(&self, suite: &S, w: &mut Writer) {
        w.u8(suite.id().as_byte());
        w.bytes(&self.session_id.0);
        w.u8(if self.require_confirmation { FLAG_CONFIRM } else { 0 });
        w.u64(self.arl_version);
        w.str(&self.id_sp);
        self.msp.write(suite, w);
        self.encapsulation.write(suite, w);
    }

    fn read(suite: &S, r: &mut Reader<'_>) -> Result<Self, WireError> {
        expect_suite(suite, r)?;
        let session_id = SessionId(r.array()?);
        let flags = r.u8()?;
        if flags & !FLAG_CONFIRM != 0 {
            return Err(WireError::InvalidField { field: "challenge flags", value: flags });
        }
        let arl_version = r.u64()?;
        let id_sp = r.str()?;
        if id_sp.is_empty() {
            return Err(WireError::BadParams("empty service provider id".into()));
        }
        let msp = MspProgram::read(suite, r)?;
        let encapsulation = Encapsulation::read(suite, r)?;
        if encapsulation.rows.len() != msp.rows() {
            return Err(AbkemError::ShapeMismatch { expected: msp.rows(), found: encapsulation.rows.len() }.into());
        }
        Ok(Challenge {
            session_id,
            require_confirmation: flags & FLAG_CONFIRM != 0,
            arl_version,
            id_sp,
            msp,
            encapsulation,
        })
    }
}

impl<S: PairingSuite> WireFormat<S> for Response<S> {
    fn write(&self, suite: &S, w: &mut Writer) {
        w.u8(suite.id().as_byte());
        w.bytes(&self.session_id.0);
        w.element(&self.b);
        match &self.mac {
            None => w.u8(0x00),
            Some(tag) => {
                w.u8(0x01);
                w.bytes(tag);
            }
        }
    }

    fn read(suite: &S, r: &mut Reader<'_>) -> Result<Self, WireError> {
        expect_suite(suite, r)?;
        let session_id = SessionId(r.array()?);
        let b = r.gt(suite)?;
        let mac = match r.u8()? {
            0x00 => None,
            0x01 => Some(r.array::<TAG_LEN>()?),
            v => return Err(WireError::InvalidField { field: "response mac flag", value: v }),
        };
        Ok(Response { session_id, b, mac })
    }
}

impl<S: PairingSuite> WireFormat<S> for ResultMessage {
    fn write(&self, _suite: &S, w: &mut Writer) {
        w.bytes(&self.session_id.0);
        match self.rejection {
            None => {
                w.u8(0);
                w.u8(0);
            }
            Some(reason) => {
                w.u8(1);
                w.u8(reason.code());
            }
        }
    }

    fn read(_suite: &S, r: &mut Reader<'_>) -> Result<Self, WireError> {
        let session_id = SessionId(r.array()?);
        let rejection = match (r.u8()?, r.u8()?) {
            (0, 0) => None,
            (1, code) => Some(
                RejectReason::from_code(code).ok_or(WireError::InvalidField { field: "reason code", value: code })?,
            ),
            (0, code) => return Err(WireError::InvalidField { field: "reason code", value: code }),
            (status, _) => return Err(WireError::InvalidField { field: "result status", value: status }),
        };
        Ok(ResultMessage { session_id, rejection })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abkem::{key_encap_star, setup, EncapSeed};
    use crate::policy::{compile_msp, parse_policy};
    use crate::suite::{Bls12Suite, GtTag, MockSuite, SuiteId};
    use crate::wire::{decode, encode};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn mock() -> MockSuite {
        MockSuite::new(1009).unwrap()
    }

    #[test]
    fn single_row_msp_layout() {
        let msp = compile_msp(&parse_policy("A").unwrap());
        let bytes = encode(&mock(), &msp);
        assert_eq!(bytes, [0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, b'A']);
        assert_eq!(decode::<_, MspProgram>(&mock(), &bytes).unwrap(), msp);
    }

    #[test]
    fn negative_entries_are_written_as_p_minus_one() {
        let msp = compile_msp(&parse_policy("A AND B").unwrap());
        let bytes = encode(&mock(), &msp);
        // rows (1, 1) and (0, -1); p - 1 = 1008 = 0x03f0
        assert_eq!(&bytes[8..16], &[0, 1, 0, 1, 0, 0, 0x03, 0xf0]);
        assert_eq!(decode::<_, MspProgram>(&mock(), &bytes).unwrap(), msp);
    }

    #[test]
    fn msp_decoding_errors() {
        let mut bytes = encode(&mock(), &compile_msp(&parse_policy("A").unwrap()));
        bytes[8] = 0x03;
        bytes[9] = 0xf1;
        assert!(matches!(decode::<_, MspProgram>(&mock(), &bytes), Err(WireError::NonCanonicalScalar)));
        let huge = [0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff];
        assert!(matches!(decode::<_, MspProgram>(&mock(), &huge), Err(WireError::LengthOverflow)));
        let large = [0, 0, 0x10, 0, 0, 0, 0x10, 0];
        assert!(matches!(decode::<_, MspProgram>(&mock(), &large), Err(WireError::Truncated { .. })));
        let empty = [0, 0, 0, 0, 0, 0, 0, 0];
        assert!(matches!(decode::<_, MspProgram>(&mock(), &empty), Err(WireError::Policy(_))));
    }

    #[test]
    fn response_flag_layout() {
        let suite = mock();
        let mut resp = Response::<MockSuite> { session_id: SessionId([3; 16]), b: suite.element::<GtTag>(15), mac: None };
        let bytes = encode(&suite, &resp);
        assert_eq!(bytes.len(), 1 + 16 + 8 + 1);
        assert_eq!(bytes[0], 0x00);
        assert_eq!(*bytes.last().unwrap(), 0x00);
        resp.mac = Some([0xaa; 32]);
        let bytes = encode(&suite, &resp);
        assert_eq!(bytes[25], 0x01);
        assert_eq!(bytes.len(), 26 + 32);
        assert_eq!(decode::<_, Response<MockSuite>>(&suite, &bytes).unwrap(), resp);
        let mut bad = bytes.clone();
        bad[25] = 0x02;
        assert!(matches!(decode::<_, Response<MockSuite>>(&suite, &bad), Err(WireError::InvalidField { .. })));
    }

    #[test]
    fn cross_suite_decoding_is_refused() {
        let suite = mock();
        let resp = Response::<MockSuite> { session_id: SessionId([3; 16]), b: suite.element::<GtTag>(15), mac: None };
        let bytes = encode(&suite, &resp);
        assert!(matches!(
            decode::<_, Response<Bls12Suite>>(&Bls12Suite::new(), &bytes),
            Err(WireError::SuiteMismatch { expected: SuiteId::Bls12_381, found: SuiteId::Mock })
        ));
    }

    #[test]
    fn result_layout() {
        let ok = ResultMessage { session_id: SessionId([1; 16]), rejection: None };
        let no = ResultMessage { session_id: SessionId([1; 16]), rejection: Some(RejectReason::BadConfirmation) };
        assert_eq!(&encode(&mock(), &ok)[16..], &[0, 0]);
        assert_eq!(&encode(&mock(), &no)[16..], &[1, 4]);
        for bad in [[0u8, 4], [1, 0], [1, 99], [2, 0]] {
            let mut bytes = vec![1u8; 16];
            bytes.extend_from_slice(&bad);
            assert!(decode::<_, ResultMessage>(&mock(), &bytes).is_err());
        }
    }

    #[test]
    fn challenge_roundtrip_on_both_suites() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (params, mpk, _) = setup(128, Bls12Suite::new(), &mut rng).unwrap();
        let msp = compile_msp(&parse_policy("doctor AND (cardiology OR oncology)").unwrap());
        let out = key_encap_star(&params, &mpk, &msp, &EncapSeed::random(&mut rng));
        let ch = Challenge {
            session_id: SessionId([7; 16]),
            require_confirmation: true,
            arl_version: 4,
            id_sp: "hospital.example".into(),
            msp,
            encapsulation: out.encapsulation,
        };
        let bytes = encode(params.suite(), &ch);
        assert_eq!(bytes[17], 0x01);
        assert_eq!(decode::<_, Challenge<Bls12Suite>>(params.suite(), &bytes).unwrap(), ch);

        let mut flags = bytes.clone();
        flags[17] = 0x03;
        assert!(matches!(
            decode::<_, Challenge<Bls12Suite>>(params.suite(), &flags),
            Err(WireError::InvalidField { .. })
        ));
        let mut trailing = bytes;
        trailing.push(0);
        assert!(matches!(
            decode::<_, Challenge<Bls12Suite>>(params.suite(), &trailing),
            Err(WireError::TrailingBytes(1))
        ));
    }

    #[test]
    fn challenge_shape_is_checked() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (params, mpk, _) = setup(0, mock(), &mut rng).unwrap();
        let msp = compile_msp(&parse_policy("A OR B").unwrap());
        let mut out = key_encap_star(&params, &mpk, &msp, &EncapSeed::random(&mut rng));
        out.encapsulation.rows.pop();
        let ch = Challenge {
            session_id: SessionId([0; 16]),
            require_confirmation: false,
            arl_version: 0,
            id_sp: "sp".into(),
            msp,
            encapsulation: out.encapsulation,
        };
        assert!(matches!(
            decode::<_, Challenge<MockSuite>>(params.suite(), &encode(params.suite(), &ch)),
            Err(WireError::Abkem(AbkemError::ShapeMismatch { expected: 2, found: 1 }))
        ));
    }

    proptest! {
        #[test]
        fn random_msp_roundtrip(
            rows in proptest::collection::vec(proptest::collection::vec(-504i64..=504, 3), 1..5),
            label in "[a-z]{1,4}",
        ) {
            let n = rows.len();
            let msp = MspProgram::new(
                rows.into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect(),
                vec![label; n],
            ).unwrap();
            let bytes = encode(&mock(), &msp);
            let back: MspProgram = decode(&mock(), &bytes).unwrap();
            prop_assert_eq!(&back, &msp);
            prop_assert_eq!(encode(&mock(), &back), bytes);
        }

        #[test]
        fn challenge_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..128)) {
            if let Ok(ch) = decode::<_, Challenge<MockSuite>>(&mock(), &bytes) {
                prop_assert_eq!(encode(&mock(), &ch), bytes);
            }
        }
    }
}
