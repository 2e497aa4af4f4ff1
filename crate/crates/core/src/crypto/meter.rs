use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::rsa::{self, RsaPrivateKey, RsaPublicKey};
use super::{digest, sym, CryptoError, Digest, SymKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    SymEncryptDecrypt,
    AsymEncrypt,
    AsymDecrypt,
    Hash,
    Hmac,
}

/// Counts of primitive invocations, one field per cost-model term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpCounter {
    pub se: u64,
    pub ae: u64,
    pub ad: u64,
    pub h: u64,
    pub hmac: u64,
}

impl OpCounter {
    pub fn total(&self) -> u64 {
        self.se + self.ae + self.ad + self.h + self.hmac
    }

    pub fn get(&self, kind: OpKind) -> u64 {
        match kind {
            OpKind::SymEncryptDecrypt => self.se,
            OpKind::AsymEncrypt => self.ae,
            OpKind::AsymDecrypt => self.ad,
            OpKind::Hash => self.h,
            OpKind::Hmac => self.hmac,
        }
    }

    fn bump(&mut self, kind: OpKind) {
        match kind {
            OpKind::SymEncryptDecrypt => self.se += 1,
            OpKind::AsymEncrypt => self.ae += 1,
            OpKind::AsymDecrypt => self.ad += 1,
            OpKind::Hash => self.h += 1,
            OpKind::Hmac => self.hmac += 1,
        }
    }
}

impl Add for OpCounter {
    type Output = OpCounter;

    fn add(self, rhs: OpCounter) -> OpCounter {
        OpCounter {
            se: self.se + rhs.se,
            ae: self.ae + rhs.ae,
            ad: self.ad + rhs.ad,
            h: self.h + rhs.h,
            hmac: self.hmac + rhs.hmac,
        }
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: OpCounter) {
        *self = *self + rhs;
    }
}

/// Saturating difference; used for per-event deltas of monotone counters.
impl Sub for OpCounter {
    type Output = OpCounter;

    fn sub(self, rhs: OpCounter) -> OpCounter {
        OpCounter {
            se: self.se.saturating_sub(rhs.se),
            ae: self.ae.saturating_sub(rhs.ae),
            ad: self.ad.saturating_sub(rhs.ad),
            h: self.h.saturating_sub(rhs.h),
            hmac: self.hmac.saturating_sub(rhs.hmac),
        }
    }
}

impl std::iter::Sum for OpCounter {
    fn sum<I: Iterator<Item = OpCounter>>(iter: I) -> OpCounter {
        iter.fold(OpCounter::default(), Add::add)
    }
}

impl fmt::Display for OpCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "se={} ae={} ad={} h={} hmac={}", self.se, self.ae, self.ad, self.h, self.hmac)
    }
}

/// Which protocol an operation is booked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum Phase {
    #[default]
    Hgaka,
    Hga,
}

/// Instrumented access to the primitives. One meter per actor per execution;
/// counters only ever grow.
#[derive(Debug, Default, Clone)]
pub struct Meter {
    phase: Phase,
    hgaka: OpCounter,
    hga: OpCounter,
}

impl Meter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn counter(&self, phase: Phase) -> OpCounter {
        match phase {
            Phase::Hgaka => self.hgaka,
            Phase::Hga => self.hga,
        }
    }

    pub fn total(&self) -> OpCounter {
        self.hgaka + self.hga
    }

    fn record(&mut self, kind: OpKind) {
        match self.phase {
            Phase::Hgaka => self.hgaka.bump(kind),
            Phase::Hga => self.hga.bump(kind),
        }
    }

    pub fn sym_encrypt(&mut self, key: &SymKey, plaintext: &[u8]) -> Vec<u8> {
        self.record(OpKind::SymEncryptDecrypt);
        sym::sym_encrypt(key, plaintext)
    }

    pub fn sym_decrypt(&mut self, key: &SymKey, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
        self.record(OpKind::SymEncryptDecrypt);
        sym::sym_decrypt(key, ciphertext)
    }

    pub fn rsa_encrypt(&mut self, key: &RsaPublicKey, m: &BigUint) -> Result<BigUint, CryptoError> {
        self.record(OpKind::AsymEncrypt);
        rsa::raw_encrypt(key, m)
    }

    pub fn rsa_decrypt(&mut self, key: &RsaPrivateKey, c: &BigUint) -> Result<BigUint, CryptoError> {
        self.record(OpKind::AsymDecrypt);
        rsa::raw_decrypt(key, c)
    }

    /// Encrypts a byte string block by block. Booked as one asymmetric
    /// encryption regardless of the number of blocks.
    pub fn rsa_encrypt_message(&mut self, key: &RsaPublicKey, plaintext: &[u8]) -> Vec<BigUint> {
        self.record(OpKind::AsymEncrypt);
        rsa::encrypt_blocks(key, plaintext)
    }

    /// Booked as one asymmetric decryption.
    pub fn rsa_decrypt_message(
        &mut self,
        key: &RsaPrivateKey,
        public: &RsaPublicKey,
        blocks: &[BigUint],
        plaintext_len: usize,
    ) -> Result<Vec<u8>, CryptoError> {
        self.record(OpKind::AsymDecrypt);
        rsa::decrypt_blocks(key, public, blocks, plaintext_len)
    }

    pub fn hash(&mut self, data: &[u8]) -> Digest {
        self.record(OpKind::Hash);
        digest::hash(data)
    }

    pub fn hmac(&mut self, key: &SymKey, data: &[u8]) -> Digest {
        self.record(OpKind::Hmac);
        digest::hmac(key, data)
    }
}
