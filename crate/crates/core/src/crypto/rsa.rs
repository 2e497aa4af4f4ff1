//! Textbook (unpadded) RSA.
//!
//! Raw RSA is deliberately used: the group verification at the target relies
//! on `E(a) * E(b) = E(a * b) mod n`, which any padding scheme destroys.

use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};

use super::CryptoError;

/// Largest RSA input block, in bytes, at the 3072-bit reference size
/// (`384 - 2*32 - 2`).
pub const REFERENCE_INPUT_BLOCK_LEN: usize = 318;
pub const PUBLIC_EXPONENT: u32 = 65_537;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeySize {
    #[default]
    Full3072,
    /// Small moduli for fast test suites. Never secure.
    InsecureTest(u32),
}

impl KeySize {
    pub fn bits(self) -> u32 {
        match self {
            KeySize::Full3072 => 3072,
            KeySize::InsecureTest(bits) => bits,
        }
    }
}

impl fmt::Display for KeySize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeySize::Full3072 => f.write_str("full-3072"),
            KeySize::InsecureTest(b) => write!(f, "test-{b}"),
        }
    }
}

impl std::str::FromStr for KeySize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full-3072" => Ok(KeySize::Full3072),
            "test-64" => Ok(KeySize::InsecureTest(64)),
            "test-512" => Ok(KeySize::InsecureTest(512)),
            other => Err(format!("unknown key size `{other}` (expected test-64, test-512 or full-3072)")),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct RsaPublicKey {
    n: BigUint,
    e: BigUint,
}

#[derive(Clone, PartialEq, Eq)]
pub struct RsaPrivateKey {
    n: BigUint,
    d: BigUint,
}

#[derive(Clone, PartialEq, Eq)]
pub struct RsaKeyPair {
    public: RsaPublicKey,
    private: RsaPrivateKey,
}

impl fmt::Debug for RsaPublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RsaPublicKey({} bits, e={})", self.n.bits(), self.e)
    }
}

impl fmt::Debug for RsaPrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RsaPrivateKey({} bits)", self.n.bits())
    }
}

impl fmt::Debug for RsaKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("RsaKeyPair").field(&self.public).finish()
    }
}

impl RsaPublicKey {
    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn exponent(&self) -> &BigUint {
        &self.e
    }

    pub fn modulus_bits(&self) -> u64 {
        self.n.bits()
    }

    /// Width in bytes of every encoded ciphertext.
    pub fn modulus_len(&self) -> usize {
        self.n.bits().div_ceil(8) as usize
    }

    /// Plaintext bytes per block when encrypting a byte string: the reference
    /// 318-byte block, capped so any block value stays below the modulus.
    pub fn input_block_len(&self) -> usize {
        REFERENCE_INPUT_BLOCK_LEN.min(self.modulus_len() - 1)
    }

    /// Fixed-width big-endian encoding of a residue.
    pub fn encode(&self, value: &BigUint) -> Vec<u8> {
        let bytes = value.to_bytes_be();
        let width = self.modulus_len();
        debug_assert!(bytes.len() <= width);
        let mut out = vec![0u8; width - bytes.len()];
        out.extend_from_slice(&bytes);
        out
    }

    /// Inverse of [`encode`](Self::encode); rejects wrong widths and values
    /// outside `[0, n)`.
    pub fn decode(&self, bytes: &[u8]) -> Result<BigUint, CryptoError> {
        if bytes.len() != self.modulus_len() {
            return Err(CryptoError::BlockLayout);
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= self.n {
            return Err(CryptoError::Range);
        }
        Ok(v)
    }
}

impl RsaPrivateKey {
    pub fn modulus(&self) -> &BigUint {
        &self.n
    }
}

impl RsaKeyPair {
    /// Generates a keypair whose modulus has exactly `size.bits()` bits.
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(size: KeySize, rng: &mut R) -> Self {
        let bits = size.bits();
        assert!(bits >= 64 && bits % 2 == 0, "unsupported RSA size {bits}");
        let half = u64::from(bits / 2);
        let e = BigUint::from(PUBLIC_EXPONENT);
        loop {
            let p = random_prime(half, rng);
            let q = random_prime(half, rng);
            if p == q {
                continue;
            }
            match Self::from_primes(&p, &q, &e) {
                Ok(kp) if kp.public.n.bits() == u64::from(bits) => return kp,
                _ => continue,
            }
        }
    }

    /// Builds a keypair from known primes, with `d = e^-1 mod lcm(p-1, q-1)`.
    pub fn from_primes(p: &BigUint, q: &BigUint, e: &BigUint) -> Result<Self, CryptoError> {
        let one = BigUint::one();
        let lambda = (p - &one).lcm(&(q - &one));
        let d = e.modinv(&lambda).ok_or(CryptoError::Range)?;
        let n = p * q;
        Ok(Self { public: RsaPublicKey { n: n.clone(), e: e.clone() }, private: RsaPrivateKey { n, d } })
    }

    pub fn public(&self) -> &RsaPublicKey {
        &self.public
    }

    pub fn private(&self) -> &RsaPrivateKey {
        &self.private
    }
}

fn random_prime<R: RngCore + CryptoRng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    loop {
        let mut candidate = rng.gen_biguint(bits);
        // top two bits set so that p*q has exactly 2*bits bits
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if glass_pumpkin::prime::check_with(&candidate, rng) {
            return candidate;
        }
    }
}

/// `m^e mod n`.
pub fn raw_encrypt(key: &RsaPublicKey, m: &BigUint) -> Result<BigUint, CryptoError> {
    if m >= &key.n {
        return Err(CryptoError::Range);
    }
    Ok(m.modpow(&key.e, &key.n))
}

/// `c^d mod n`.
pub fn raw_decrypt(key: &RsaPrivateKey, c: &BigUint) -> Result<BigUint, CryptoError> {
    if c >= &key.n {
        return Err(CryptoError::Range);
    }
    Ok(c.modpow(&key.d, &key.n))
}

/// Splits `plaintext` into [`RsaPublicKey::input_block_len`]-sized chunks and
/// raw-encrypts each one.
pub fn encrypt_blocks(key: &RsaPublicKey, plaintext: &[u8]) -> Vec<BigUint> {
    plaintext
        .chunks(key.input_block_len())
        .map(|chunk| raw_encrypt(key, &BigUint::from_bytes_be(chunk)).expect("chunk is shorter than the modulus"))
        .collect()
}

/// Inverse of [`encrypt_blocks`] for a plaintext of known length.
pub fn decrypt_blocks(
    key: &RsaPrivateKey,
    public: &RsaPublicKey,
    blocks: &[BigUint],
    plaintext_len: usize,
) -> Result<Vec<u8>, CryptoError> {
    let chunk = public.input_block_len();
    if plaintext_len == 0 || blocks.len() != plaintext_len.div_ceil(chunk) {
        return Err(CryptoError::BlockLayout);
    }
    let mut out = Vec::with_capacity(plaintext_len);
    for (i, c) in blocks.iter().enumerate() {
        let width = if i + 1 == blocks.len() { plaintext_len - chunk * i } else { chunk };
        let m = raw_decrypt(key, c)?;
        let bytes = if m.is_zero() { Vec::new() } else { m.to_bytes_be() };
        if bytes.len() > width {
            return Err(CryptoError::BlockLayout);
        }
        out.extend(std::iter::repeat(0u8).take(width - bytes.len()));
        out.extend_from_slice(&bytes);
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// Square-and-multiply over u128, independent of BigUint::modpow.
    pub(crate) fn modpow_oracle(base: u128, mut exp: u128, modulus: u128) -> u128 {
        let mut acc = 1u128 % modulus;
        let mut b = base % modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * b % modulus;
            }
            b = b * b % modulus;
            exp >>= 1;
        }
        acc
    }

    fn toy() -> RsaKeyPair {
        // n = 61 * 53 = 3233, e = 17
        RsaKeyPair::from_primes(&61u32.into(), &53u32.into(), &17u32.into()).unwrap()
    }

    #[test]
    fn toy_key_worked_values() {
        let kp = toy();
        let enc = |m: u32| raw_encrypt(kp.public(), &BigUint::from(m)).unwrap();
        assert_eq!(enc(0), BigUint::from(0u32));
        assert_eq!(enc(1), BigUint::from(1u32));
        let expected = modpow_oracle(65, 17, 3233);
        assert_eq!(expected, 2790);
        assert_eq!(enc(65), BigUint::from(expected));
        assert_eq!(raw_decrypt(kp.private(), &BigUint::from(2790u32)).unwrap(), BigUint::from(65u32));
        assert_eq!(raw_decrypt(kp.private(), &BigUint::from(1u32)).unwrap(), BigUint::from(1u32));
    }

    #[test]
    fn range_errors() {
        let kp = toy();
        assert_eq!(raw_encrypt(kp.public(), &BigUint::from(3233u32)), Err(CryptoError::Range));
        assert_eq!(raw_decrypt(kp.private(), &BigUint::from(4000u32)), Err(CryptoError::Range));
    }

    #[test]
    fn generated_64_bit_key_roundtrips_sweep() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let kp = RsaKeyPair::generate(KeySize::InsecureTest(64), &mut rng);
        assert_eq!(kp.public().modulus_bits(), 64);
        let n = kp.public().modulus();
        for _ in 0..500 {
            let m = rng.gen_biguint_below(n);
            let c = raw_encrypt(kp.public(), &m).unwrap();
            assert_eq!(raw_decrypt(kp.private(), &c).unwrap(), m);
        }
        // cross-check modpow against the u128 oracle
        let n128 = u128::from_str_radix(&n.to_str_radix(16), 16).unwrap();
        let e128 = u128::from(PUBLIC_EXPONENT);
        for _ in 0..50 {
            let m = rng.gen_biguint_below(n);
            let m128 = u128::from_str_radix(&m.to_str_radix(16), 16).unwrap();
            let c = raw_encrypt(kp.public(), &m).unwrap();
            assert_eq!(c, BigUint::from(modpow_oracle(m128, e128, n128)));
        }
    }

    #[test]
    fn full_size_key_has_3072_bits_and_is_homomorphic() {
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let kp = RsaKeyPair::generate(KeySize::Full3072, &mut rng);
        let pk = kp.public();
        assert_eq!(pk.modulus_bits(), 3072);
        assert_eq!(pk.modulus_len(), 384);
        assert_eq!(pk.input_block_len(), 318);
        let n = pk.modulus();
        for _ in 0..10 {
            let a = rng.gen_biguint_below(n);
            let b = rng.gen_biguint_below(n);
            let lhs = raw_encrypt(pk, &a).unwrap() * raw_encrypt(pk, &b).unwrap() % n;
            let rhs = raw_encrypt(pk, &(&a * &b % n)).unwrap();
            assert_eq!(lhs, rhs);
        }
        let m = rng.gen_biguint_below(n);
        assert_eq!(raw_decrypt(kp.private(), &raw_encrypt(pk, &m).unwrap()).unwrap(), m);
    }

    #[test]
    fn block_roundtrip_with_leading_zeros() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let kp = RsaKeyPair::generate(KeySize::InsecureTest(256), &mut rng);
        let mut pt = vec![0u8; 100];
        pt[40] = 7;
        pt[99] = 1;
        let blocks = encrypt_blocks(kp.public(), &pt);
        assert_eq!(blocks.len(), 100usize.div_ceil(kp.public().input_block_len()));
        assert_eq!(decrypt_blocks(kp.private(), kp.public(), &blocks, 100).unwrap(), pt);
        assert_eq!(decrypt_blocks(kp.private(), kp.public(), &blocks, 10), Err(CryptoError::BlockLayout));
    }

    #[test]
    fn encode_decode_fixed_width() {
        let kp = toy();
        let pk = kp.public();
        assert_eq!(pk.encode(&BigUint::from(5u32)), vec![0, 5]);
        assert_eq!(pk.decode(&[0, 5]).unwrap(), BigUint::from(5u32));
        assert_eq!(pk.decode(&[5]), Err(CryptoError::BlockLayout));
        assert_eq!(pk.decode(&[0x0c, 0xa1]), Err(CryptoError::Range));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn homomorphic_identity_small_keys(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let kp = RsaKeyPair::generate(KeySize::InsecureTest(128), &mut rng);
            let pk = kp.public();
            let n = pk.modulus();
            for _ in 0..64 {
                let a = rng.gen_biguint_below(n);
                let b = rng.gen_biguint_below(n);
                let lhs = raw_encrypt(pk, &a).unwrap() * raw_encrypt(pk, &b).unwrap() % n;
                prop_assert_eq!(lhs, raw_encrypt(pk, &(&a * &b % n)).unwrap());
            }
        }
    }
}
