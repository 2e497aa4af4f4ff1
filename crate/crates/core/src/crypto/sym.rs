use aes::cipher::{block_padding::Pkcs7, BlockDecryptMut, BlockEncryptMut, KeyIvInit};

use super::{CryptoError, SymKey};

type Aes128CbcEnc = cbc::Encryptor<aes::Aes128>;
type Aes128CbcDec = cbc::Decryptor<aes::Aes128>;

/// AES block length in bytes.
pub const BLOCK_LEN: usize = 16;

// Fixed IV: every protected plaintext in both protocols starts with fresh
// nonce or key material, and the wire format has no IV slot.
const IV: [u8; BLOCK_LEN] = [0u8; BLOCK_LEN];

/// Ciphertext length for a plaintext of `plaintext_len` bytes. Padding is
/// always added, so block-aligned input grows by a full block.
pub fn ciphertext_len(plaintext_len: usize) -> usize {
    BLOCK_LEN * (plaintext_len / BLOCK_LEN + 1)
}

/// AES-128-CBC with PKCS#7 padding.
pub fn sym_encrypt(key: &SymKey, plaintext: &[u8]) -> Vec<u8> {
    Aes128CbcEnc::new(key.as_bytes().into(), &IV.into()).encrypt_padded_vec_mut::<Pkcs7>(plaintext)
}

pub fn sym_decrypt(key: &SymKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if ciphertext.is_empty() || ciphertext.len() % BLOCK_LEN != 0 {
        return Err(CryptoError::BadCiphertextLength(ciphertext.len()));
    }
    Aes128CbcDec::new(key.as_bytes().into(), &IV.into())
        .decrypt_padded_vec_mut::<Pkcs7>(ciphertext)
        .map_err(|_| CryptoError::Padding)
}
