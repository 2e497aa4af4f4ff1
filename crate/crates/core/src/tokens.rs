//! Verification predicates and the two group tokens: the nested-HMAC chain
//! and the homomorphic RSA group authenticator.

use num_bigint::BigUint;
use num_traits::One;

use crate::crypto::{CryptoError, Digest, Meter, Nonce, NonceKind, RsaKeyPair, RsaPublicKey, SymKey, NONCE_LEN};
use crate::wire::{ClientList, EntityId, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenError {
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("no long-term key for client {0}")]
    UnknownClient(EntityId),
    #[error("authenticator carries {authenticator} tokens, verification token {veri}")]
    GroupSizeMismatch { authenticator: usize, veri: usize },
    #[error("empty token list")]
    Empty,
    #[error("token bytes do not match the expected block layout")]
    Layout,
}

/// `|ts - now| <= delta` on the 32-bit logical clock.
pub fn ts_veri(ts: Timestamp, now: Timestamp, delta: u32) -> bool {
    ts.0.abs_diff(now.0) <= delta
}

pub fn id_veri(sender: EntityId, registered: EntityId) -> bool {
    sender == registered
}

/// Constant-time comparison of an issued challenge with its echo.
pub fn en_veri(challenge: &Nonce, response: &Nonce) -> bool {
    challenge.kind() == NonceKind::En && challenge.ct_matches(response)
}

pub fn hm_gen(meter: &mut Meter, key: &SymKey, seed: &[u8]) -> Digest {
    meter.hmac(key, seed)
}

/// Recomputes the chain from `seed` and compares with `hm1`.
///
/// `chain` is in client-list order (deepest client first, leader last). The
/// fold starts at the leader, which HMACs the seed, and ends at `chain[0]`.
pub fn hm_veri<F>(
    meter: &mut Meter,
    hm1: &Digest,
    chain: &[EntityId],
    keys: F,
    seed: &Nonce,
) -> Result<bool, TokenError>
where
    F: Fn(EntityId) -> Option<SymKey>,
{
    // resolve every key before spending any HMACs
    let resolved =
        chain.iter().rev().map(|id| keys(*id).ok_or(TokenError::UnknownClient(*id))).collect::<Result<Vec<_>, _>>()?;
    let (first, rest) = resolved.split_first().ok_or(TokenError::Empty)?;
    let mut hm = hm_gen(meter, first, seed.as_bytes());
    for key in rest {
        hm = hm_gen(meter, key, &hm);
    }
    Ok(subtle::ConstantTimeEq::ct_eq(&hm[..], &hm1[..]).into())
}

/// A finished HM chain value together with the ordering that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HmChainToken {
    pub value: Digest,
    pub chain_order: ClientList,
    pub seed: Nonce,
}

impl HmChainToken {
    pub fn verify<F>(&self, meter: &mut Meter, keys: F) -> Result<bool, TokenError>
    where
        F: Fn(EntityId) -> Option<SymKey>,
    {
        hm_veri(meter, &self.value, self.chain_order.as_slice(), keys, &self.seed)
    }
}

/// `EPU[OrNonce]`, one client's contribution to the group authenticator.
pub fn or_nonce_token(meter: &mut Meter, key: &RsaPublicKey, or_nonce: &Nonce) -> Result<BigUint, TokenError> {
    Ok(meter.rsa_encrypt(key, &or_nonce.to_biguint())?)
}

/// RSA encryption of the concatenated OrNonces, issued by the AS for the
/// target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncAuthVeriToken {
    blocks: Vec<BigUint>,
    nc: usize,
}

impl EncAuthVeriToken {
    pub fn issue(meter: &mut Meter, key: &RsaPublicKey, or_nonces: &[Nonce]) -> Self {
        let plain: Vec<u8> = or_nonces.iter().flat_map(|n| *n.as_bytes()).collect();
        Self { blocks: meter.rsa_encrypt_message(key, &plain), nc: or_nonces.len() }
    }

    pub fn group_size(&self) -> usize {
        self.nc
    }

    pub fn blocks(&self) -> &[BigUint] {
        &self.blocks
    }

    pub fn block_count(key: &RsaPublicKey, nc: usize) -> usize {
        (nc * NONCE_LEN).div_ceil(key.input_block_len())
    }

    /// Fixed-width ciphertext blocks, concatenated.
    pub fn to_bytes(&self, key: &RsaPublicKey) -> Vec<u8> {
        self.blocks.iter().flat_map(|b| key.encode(b)).collect()
    }

    pub fn from_bytes(key: &RsaPublicKey, bytes: &[u8], nc: usize) -> Result<Self, TokenError> {
        let width = key.modulus_len();
        if nc == 0 || bytes.len() != width * Self::block_count(key, nc) {
            return Err(TokenError::Layout);
        }
        let blocks = bytes.chunks(width).map(|c| key.decode(c)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { blocks, nc })
    }

    /// Decrypts and splits into the issued OrNonces, in client-list order.
    pub fn open(&self, meter: &mut Meter, keypair: &RsaKeyPair) -> Result<Vec<Nonce>, TokenError> {
        let plain =
            meter.rsa_decrypt_message(keypair.private(), keypair.public(), &self.blocks, self.nc * NONCE_LEN)?;
        Ok(plain.chunks_exact(NONCE_LEN).map(|c| Nonce::from_slice(NonceKind::Or, c).expect("exact chunk")).collect())
    }
}

/// Per-client RSA tokens in client-list order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncGroupAuthenticator {
    tokens: Vec<BigUint>,
}

impl EncGroupAuthenticator {
    pub fn tokens(&self) -> &[BigUint] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn to_wire(&self, key: &RsaPublicKey) -> Vec<Vec<u8>> {
        self.tokens.iter().map(|t| key.encode(t)).collect()
    }

    pub fn from_wire(key: &RsaPublicKey, items: &[Vec<u8>]) -> Result<Self, TokenError> {
        let tokens = items.iter().map(|i| key.decode(i)).collect::<Result<Vec<_>, _>>()?;
        build_group_authenticator(key, tokens)
    }
}

pub fn build_group_authenticator(
    key: &RsaPublicKey,
    tokens: Vec<BigUint>,
) -> Result<EncGroupAuthenticator, TokenError> {
    if tokens.is_empty() {
        return Err(TokenError::Empty);
    }
    if tokens.iter().any(|t| t >= key.modulus()) {
        return Err(CryptoError::Range.into());
    }
    Ok(EncGroupAuthenticator { tokens })
}

/// True when the integer product of `values` is already below `n`, in which
/// case the modular reduction before encryption is a no-op.
pub fn product_fits(values: &[BigUint], n: &BigUint) -> bool {
    values.iter().fold(BigUint::one(), |acc, v| acc * v) < *n
}

/// `X = E(∏ m_i mod n)` against `Y = ∏ c_i mod n`.
pub fn homomorphic_check(
    meter: &mut Meter,
    key: &RsaPublicKey,
    plaintexts: &[BigUint],
    tokens: &[BigUint],
) -> Result<bool, TokenError> {
    if plaintexts.len() != tokens.len() {
        return Err(TokenError::GroupSizeMismatch { authenticator: tokens.len(), veri: plaintexts.len() });
    }
    let n = key.modulus();
    let m = plaintexts.iter().fold(BigUint::one(), |acc, v| acc * v % n);
    let x = meter.rsa_encrypt(key, &m)?;
    let y = tokens.iter().fold(BigUint::one(), |acc, v| acc * v % n);
    Ok(x == y)
}

/// Opens the verification token (one decryption) and runs
/// [`homomorphic_check`] (one encryption).
pub fn homomorphic_group_verify(
    meter: &mut Meter,
    authenticator: &EncGroupAuthenticator,
    veri_token: &EncAuthVeriToken,
    keypair: &RsaKeyPair,
) -> Result<bool, TokenError> {
    if authenticator.len() != veri_token.group_size() {
        return Err(TokenError::GroupSizeMismatch {
            authenticator: authenticator.len(),
            veri: veri_token.group_size(),
        });
    }
    let or_nonces = veri_token.open(meter, keypair)?;
    let values: Vec<BigUint> = or_nonces.iter().map(Nonce::to_biguint).collect();
    homomorphic_check(meter, keypair.public(), &values, authenticator.tokens())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{hmac, KeySize, OpCounter};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::collections::BTreeMap;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn ts_veri_boundaries() {
        let now = Timestamp(100_000);
        assert!(ts_veri(now, now, 5000));
        assert!(ts_veri(Timestamp(95_000), now, 5000));
        assert!(!ts_veri(Timestamp(94_999), now, 5000));
        assert!(ts_veri(Timestamp(105_000), now, 5000));
        assert!(!ts_veri(Timestamp(105_001), now, 5000));
    }

    proptest! {
        #[test]
        fn ts_veri_symmetric(t in 10_000u32..u32::MAX - 10_000, d in 0u32..10_000, delta in 0u32..10_000) {
            prop_assert_eq!(
                ts_veri(Timestamp(t + d), Timestamp(t), delta),
                ts_veri(Timestamp(t - d), Timestamp(t), delta)
            );
        }

        #[test]
        fn id_veri_reflexive(a in any::<u32>(), b in any::<u32>()) {
            prop_assert!(id_veri(EntityId(a), EntityId(a)));
            prop_assert_eq!(id_veri(EntityId(a), EntityId(b)), a == b);
        }

        /// The hop-by-hop chain that clients run equals the verifier's fold.
        #[test]
        fn chain_fold_equivalence(nc in 1usize..12, seed in any::<u64>()) {
            let mut r = rng(seed);
            let ids: Vec<EntityId> = (0..nc as u32).map(|i| EntityId(100 + i)).collect();
            let keys: BTreeMap<EntityId, SymKey> = ids.iter().map(|id| (*id, SymKey::random(&mut r))).collect();
            let en2 = Nonce::en(&mut r);

            // leader (last) starts, then clients nc-2 down to 0
            let mut hm = hmac(&keys[&ids[nc - 1]], en2.as_bytes());
            for id in ids[..nc - 1].iter().rev() {
                hm = hmac(&keys[id], &hm);
            }

            let mut meter = Meter::new();
            prop_assert!(hm_veri(&mut meter, &hm, &ids, |id| keys.get(&id).cloned(), &en2).unwrap());
            prop_assert_eq!(meter.total(), OpCounter { hmac: nc as u64, ..Default::default() });
        }
    }

    #[test]
    fn en_veri_cases() {
        let mut r = rng(1);
        let a = Nonce::en(&mut r);
        assert!(en_veri(&a, &a.clone()));
        let mut flipped = *a.as_bytes();
        flipped[7] ^= 0x10;
        assert!(!en_veri(&a, &Nonce::new(NonceKind::En, flipped)));
        assert!(!en_veri(&a, &Nonce::new(NonceKind::Or, *a.as_bytes())));
        for _ in 0..10_000 {
            let b = Nonce::en(&mut r);
            assert!(!en_veri(&a, &b));
        }
    }

    #[test]
    fn hm_gen_chain_step() {
        let mut r = rng(2);
        let k2 = SymKey::random(&mut r);
        let hm3 = [0x5a; 32];
        let mut m = Meter::new();
        assert_eq!(hm_gen(&mut m, &k2, &hm3), hmac(&k2, &hm3));
        assert_eq!(m.total().hmac, 1);
    }

    #[test]
    fn hm_veri_nc3_and_mutation() {
        let mut r = rng(3);
        let ids = [EntityId(1), EntityId(2), EntityId(3)];
        let keys: BTreeMap<_, _> = ids.iter().map(|id| (*id, SymKey::random(&mut r))).collect();
        let seed = Nonce::en(&mut r);
        // HM3 by the leader, HM2 by C2, HM1 by C1
        let hm3 = hmac(&keys[&ids[2]], seed.as_bytes());
        let hm2 = hmac(&keys[&ids[1]], &hm3);
        let hm1 = hmac(&keys[&ids[0]], &hm2);
        let mut m = Meter::new();
        assert!(hm_veri(&mut m, &hm1, &ids, |id| keys.get(&id).cloned(), &seed).unwrap());

        for victim in ids {
            let mut bad = keys.clone();
            bad.insert(victim, SymKey::random(&mut r));
            assert!(!hm_veri(&mut m, &hm1, &ids, |id| bad.get(&id).cloned(), &seed).unwrap());
        }

        assert_eq!(
            hm_veri(&mut m, &hm1, &[EntityId(1), EntityId(9)], |id| keys.get(&id).cloned(), &seed),
            Err(TokenError::UnknownClient(EntityId(9)))
        );
    }

    #[test]
    fn hm_veri_single_client() {
        let mut r = rng(4);
        let k = SymKey::random(&mut r);
        let seed = Nonce::en(&mut r);
        let mut m = Meter::new();
        let hm = hmac(&k, seed.as_bytes());
        assert!(hm_veri(&mut m, &hm, &[EntityId(5)], |_| Some(k.clone()), &seed).unwrap());
    }

    #[test]
    fn authenticator_construction() {
        let mut r = rng(5);
        let kp = RsaKeyPair::generate(KeySize::InsecureTest(512), &mut r);
        let pk = kp.public();
        let toks: Vec<BigUint> = (1u32..=3).map(BigUint::from).collect();
        let auth = build_group_authenticator(pk, toks.clone()).unwrap();
        assert_eq!(auth.len(), 3);
        assert_eq!(auth.tokens(), &toks[..]);
        assert_eq!(EncGroupAuthenticator::from_wire(pk, &auth.to_wire(pk)).unwrap(), auth);
        let too_big = vec![BigUint::from(1u32), pk.modulus().clone()];
        assert_eq!(build_group_authenticator(pk, too_big), Err(CryptoError::Range.into()));
    }

    /// Small-key oracle: 16-bit plaintexts under a 64-bit modulus, checked with
    /// u128 arithmetic.
    #[test]
    fn homomorphic_small_key_oracle() {
        use crate::crypto::rsa::tests::modpow_oracle;
        let mut r = rng(6);
        let kp = RsaKeyPair::generate(KeySize::InsecureTest(64), &mut r);
        let n: u128 = kp.public().modulus().try_into().unwrap();
        let e = 65_537u128;
        for _ in 0..50 {
            let ms: Vec<u128> = (0..3).map(|_| r.gen_range(2u128..1 << 16)).collect();
            let cs: Vec<u128> = ms.iter().map(|m| modpow_oracle(*m, e, n)).collect();
            let x = modpow_oracle(ms.iter().fold(1, |a, m| a * m % n), e, n);
            let y = cs.iter().fold(1, |a, c| a * c % n);
            assert_eq!(x, y);

            let mut meter = Meter::new();
            let big = |v: &Vec<u128>| v.iter().map(|x| BigUint::from(*x)).collect::<Vec<_>>();
            assert!(homomorphic_check(&mut meter, kp.public(), &big(&ms), &big(&cs)).unwrap());
        }
    }

    fn honest_group(r: &mut ChaCha20Rng, kp: &RsaKeyPair, nc: usize) -> (EncGroupAuthenticator, EncAuthVeriToken) {
        let mut m = Meter::new();
        let ors: Vec<Nonce> = (0..nc).map(|_| Nonce::or(r)).collect();
        let toks = ors.iter().map(|o| or_nonce_token(&mut m, kp.public(), o).unwrap()).collect();
        let auth = build_group_authenticator(kp.public(), toks).unwrap();
        (auth, EncAuthVeriToken::issue(&mut m, kp.public(), &ors))
    }

    #[test]
    fn homomorphic_completeness_and_counts() {
        let mut r = rng(7);
        let kp = RsaKeyPair::generate(KeySize::InsecureTest(512), &mut r);
        for nc in 1..=20 {
            for _ in 0..5 {
                let (auth, veri) = honest_group(&mut r, &kp, nc);
                let mut m = Meter::new();
                assert!(homomorphic_group_verify(&mut m, &auth, &veri, &kp).unwrap(), "nc={nc}");
                assert_eq!(m.total(), OpCounter { ae: 1, ad: 1, ..Default::default() });
            }
        }
    }

    #[test]
    fn homomorphic_nc1_is_ciphertext_equality() {
        let mut r = rng(8);
        let kp = RsaKeyPair::generate(KeySize::InsecureTest(512), &mut r);
        let (auth, veri) = honest_group(&mut r, &kp, 1);
        let ors = veri.open(&mut Meter::new(), &kp).unwrap();
        let direct = crate::crypto::rsa::raw_encrypt(kp.public(), &ors[0].to_biguint()).unwrap();
        assert_eq!(auth.tokens()[0], direct);
    }

    #[test]
    fn homomorphic_rejects_substitution() {
        let mut r = rng(9);
        let kp = RsaKeyPair::generate(KeySize::InsecureTest(512), &mut r);
        let mut accepted = 0;
        for _ in 0..200 {
            let (auth, veri) = honest_group(&mut r, &kp, 3);
            let mut toks = auth.tokens().to_vec();
            let i = r.gen_range(0..3);
            toks[i] = num_bigint::RandBigInt::gen_biguint_below(&mut r, kp.public().modulus());
            let forged = build_group_authenticator(kp.public(), toks).unwrap();
            if homomorphic_group_verify(&mut Meter::new(), &forged, &veri, &kp).unwrap() {
                accepted += 1;
            }
        }
        assert_eq!(accepted, 0);
    }

    #[test]
    fn product_overflow_boundary() {
        let mut r = rng(10);
        let kp = RsaKeyPair::generate(KeySize::Full3072, &mut r);
        let n = kp.public().modulus();
        let max = BigUint::from(u128::MAX);
        assert!(product_fits(&vec![max.clone(); 23], n));
        assert!(!product_fits(&vec![max; 24], n));

        // past the boundary the modular identity still holds
        let (auth, veri) = honest_group(&mut r, &kp, 30);
        let ors: Vec<BigUint> = veri.open(&mut Meter::new(), &kp).unwrap().iter().map(Nonce::to_biguint).collect();
        assert!(!product_fits(&ors, n));
        assert!(homomorphic_group_verify(&mut Meter::new(), &auth, &veri, &kp).unwrap());
    }

    #[test]
    fn veri_token_layout() {
        let mut r = rng(11);
        let kp = RsaKeyPair::generate(KeySize::InsecureTest(512), &mut r);
        let pk = kp.public();
        // 63-byte input blocks: 5 nonces = 80 bytes -> 2 blocks
        let (_, veri) = honest_group(&mut r, &kp, 5);
        assert_eq!(veri.blocks().len(), 2);
        let bytes = veri.to_bytes(pk);
        assert_eq!(bytes.len(), 128);
        assert_eq!(EncAuthVeriToken::from_bytes(pk, &bytes, 5).unwrap(), veri);
        assert_eq!(EncAuthVeriToken::from_bytes(pk, &bytes, 3), Err(TokenError::Layout));
        assert_eq!(EncAuthVeriToken::block_count(pk, 3), 1);
    }

    #[test]
    fn group_size_mismatch() {
        let mut r = rng(12);
        let kp = RsaKeyPair::generate(KeySize::InsecureTest(512), &mut r);
        let (auth, _) = honest_group(&mut r, &kp, 3);
        let (_, veri) = honest_group(&mut r, &kp, 4);
        assert_eq!(
            homomorphic_group_verify(&mut Meter::new(), &auth, &veri, &kp),
            Err(TokenError::GroupSizeMismatch { authenticator: 3, veri: 4 })
        );
    }
}
