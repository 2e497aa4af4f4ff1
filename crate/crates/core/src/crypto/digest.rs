use hmac::{Hmac, Mac};
use sha2::{Digest as _, Sha256};

use super::SymKey;

pub const DIGEST_LEN: usize = 32;

/// A 256-bit SHA-256 digest or HMAC-SHA256 tag.
pub type Digest = [u8; DIGEST_LEN];

pub fn hash(data: &[u8]) -> Digest {
    Sha256::digest(data).into()
}

pub fn hmac(key: &SymKey, data: &[u8]) -> Digest {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(key.as_bytes()).expect("HMAC accepts keys of any length");
    mac.update(data);
    mac.finalize().into_bytes().into()
}
