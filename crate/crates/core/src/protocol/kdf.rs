//! Session key derivation and key confirmation.
//!
//! ```text
//! prk   = HKDF-Extract(salt = "ABKEM-AUTH-v1", ikm = encode(K_DH))
//! K_d   = HKDF-Expand(prk, context || 0x01, 32)
//! k_mac = HKDF-Expand(prk, context || 0x02, 32)
//! m     = HMAC-SHA256(k_mac, context)
//! ```

use std::fmt;

use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use sha2::{Digest, Sha256};
use zeroize::{Zeroize, ZeroizeOnDrop, Zeroizing};

use crate::suite::GroupElement;

pub const KDF_SALT: &[u8] = b"ABKEM-AUTH-v1";
pub const TAG_LEN: usize = 32;

/// `K_d` and the confirmation key `k_mac`. Wiped on drop.
#[derive(Clone, Zeroize, ZeroizeOnDrop)]
pub struct SessionKeys {
    k_d: [u8; 32],
    k_mac: [u8; 32],
}

impl SessionKeys {
    pub fn session_key(&self) -> &[u8; 32] {
        &self.k_d
    }

    pub fn confirmation_key(&self) -> &[u8; 32] {
        &self.k_mac
    }

    /// First 8 hex digits of `SHA-256(K_d)`, for comparing keys by eye.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.k_d);
        digest[..4].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for SessionKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionKeys({})", self.fingerprint())
    }
}

pub fn kdf<E: GroupElement>(k_dh: &E, context: &[u8]) -> SessionKeys {
    let ikm = Zeroizing::new(k_dh.to_bytes());
    let hk = Hkdf::<Sha256>::new(Some(KDF_SALT), &ikm);
    let mut keys = SessionKeys { k_d: [0; 32], k_mac: [0; 32] };
    hk.expand_multi_info(&[context, &[0x01]], &mut keys.k_d)
        .expect("32 bytes is a valid HKDF-SHA256 output length");
    hk.expand_multi_info(&[context, &[0x02]], &mut keys.k_mac)
        .expect("32 bytes is a valid HKDF-SHA256 output length");
    keys
}

pub fn mac(key: &[u8; 32], data: &[u8]) -> [u8; TAG_LEN] {
    let mut m = Hmac::<Sha256>::new_from_slice(key).expect("hmac accepts any key length");
    m.update(data);
    m.finalize().into_bytes().into()
}

/// Constant-time tag check.
pub fn verify_mac(key: &[u8; 32], data: &[u8], tag: &[u8]) -> bool {
    let mut m = Hmac::<Sha256>::new_from_slice(key).expect("hmac accepts any key length");
    m.update(data);
    m.verify_slice(tag).is_ok()
}

/// `transcript || encode(B) || id_sp`, the input to both `kdf` and `mac`.
pub(crate) fn context<E: GroupElement>(transcript: &[u8], b: &E, id_sp: &str) -> Vec<u8> {
    let mut out = transcript.to_vec();
    out.extend_from_slice(&b.to_bytes());
    out.extend_from_slice(id_sp.as_bytes());
    out
}
