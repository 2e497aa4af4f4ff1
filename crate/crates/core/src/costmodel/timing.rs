use std::collections::BTreeMap;
use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::CostError;
use crate::crypto::rng::seeded;
use crate::crypto::rsa::{raw_decrypt, raw_encrypt};
use crate::crypto::{hash, hmac, sym_decrypt, sym_encrypt, KeySize, RsaKeyPair, SymKey};

pub const FITTED_PRESET: &str = "paper-2019-laptop";

/// Unit costs back-solved from the published PCC lines
/// (HGAKA 0.096nc+2.248, HGA 2.131nc+18.636, Kerberos 1.7nc).
const FITTED_UNITS: [(CostKind, f64); 7] = [
    (CostKind::Se, 0.015),
    (CostKind::Ae, 2.101),
    (CostKind::Ad, 16.448),
    (CostKind::H, 0.027),
    (CostKind::Hmac, 0.033),
    (CostKind::Kse, 0.068),
    (CostKind::Ksd, 0.068),
];

/// Typical Kerberos message body used when timing KSE/KSD.
const KERBEROS_MESSAGE_LEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CostKind {
    Se,
    Ae,
    Ad,
    H,
    Hmac,
    Kse,
    Ksd,
}

impl CostKind {
    pub const ALL: [CostKind; 7] =
        [CostKind::Se, CostKind::Ae, CostKind::Ad, CostKind::H, CostKind::Hmac, CostKind::Kse, CostKind::Ksd];

    pub fn label(self) -> &'static str {
        match self {
            CostKind::Se => "se",
            CostKind::Ae => "ae",
            CostKind::Ad => "ad",
            CostKind::H => "h",
            CostKind::Hmac => "hmac",
            CostKind::Kse => "kse",
            CostKind::Ksd => "ksd",
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CostKind {
    type Err = CostError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CostKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| CostError::Timing(format!("unknown operation kind `{s}`")))
    }
}

/// Per-operation unit costs in milliseconds. Machine specific.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingModel {
    pub name: String,
    unit_ms: BTreeMap<CostKind, f64>,
    sem_ms: BTreeMap<CostKind, f64>,
    pub iterations: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iterations: Option<u64>,
    unit_ms: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    sem_ms: BTreeMap<String, f64>,
}

fn keyed(raw: BTreeMap<String, f64>, positive: bool) -> Result<BTreeMap<CostKind, f64>, CostError> {
    raw.into_iter()
        .map(|(k, v)| {
            let kind: CostKind = k.parse()?;
            let ok = v.is_finite() && if positive { v > 0.0 } else { v >= 0.0 };
            if !ok {
                return Err(CostError::Timing(format!("{kind} = {v} is out of range")));
            }
            Ok((kind, v))
        })
        .collect()
}

fn labelled(map: &BTreeMap<CostKind, f64>) -> BTreeMap<String, f64> {
    map.iter().map(|(k, v)| (k.label().to_string(), *v)).collect()
}

impl TimingModel {
    pub fn new(name: impl Into<String>, units: impl IntoIterator<Item = (CostKind, f64)>) -> Result<Self, CostError> {
        let unit_ms = units.into_iter().map(|(k, v)| (k.label().to_string(), v)).collect();
        Self::from_raw(RawModel { name: name.into(), iterations: None, unit_ms, sem_ms: BTreeMap::new() })
    }

    fn from_raw(raw: RawModel) -> Result<Self, CostError> {
        Ok(Self {
            name: raw.name,
            unit_ms: keyed(raw.unit_ms, true)?,
            sem_ms: keyed(raw.sem_ms, false)?,
            iterations: raw.iterations,
        })
    }

    /// Built-in presets by name.
    pub fn preset(name: &str) -> Option<Self> {
        (name == FITTED_PRESET).then(|| Self::new(FITTED_PRESET, FITTED_UNITS).expect("preset is valid"))
    }

    pub fn from_toml(text: &str) -> Result<Self, CostError> {
        let raw: RawModel = toml::from_str(text).map_err(|e| CostError::Timing(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn to_toml(&self) -> String {
        let raw = RawModel {
            name: self.name.clone(),
            iterations: self.iterations,
            unit_ms: labelled(&self.unit_ms),
            sem_ms: labelled(&self.sem_ms),
        };
        toml::to_string(&raw).expect("timing model serializes")
    }

    pub fn unit_ms(&self, kind: CostKind) -> Option<f64> {
        self.unit_ms.get(&kind).copied()
    }

    pub fn sem_ms(&self, kind: CostKind) -> Option<f64> {
        self.sem_ms.get(&kind).copied()
    }
}

fn sample<F: FnMut()>(iterations: usize, mut op: F) -> (f64, f64) {
    for _ in 0..iterations.min(10) {
        op();
    }
    let samples: Vec<f64> = (0..iterations)
        .map(|_| {
            let start = Instant::now();
            op();
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub const MIN_ITERATIONS: usize = 100;

/// Microbenchmarks every primitive on this machine and returns mean unit
/// costs with their standard errors.
pub fn calibrate(iterations: usize, key_size: KeySize) -> Result<TimingModel, CostError> {
    if iterations < MIN_ITERATIONS {
        return Err(CostError::Iterations { got: iterations, min: MIN_ITERATIONS });
    }
    let mut rng = seeded(0xca1, 0);
    let kp = RsaKeyPair::generate(key_size, &mut rng);
    let key = SymKey::random(&mut rng);
    let m = BigUint::from_bytes_be(&vec![0x5a; kp.public().input_block_len()]);
    let c = raw_encrypt(kp.public(), &m).expect("input block fits the modulus");
    let short = [7u8; 32];
    let sealed_short = sym_encrypt(&key, &short);
    let ticket = [9u8; KERBEROS_MESSAGE_LEN];
    let sealed_ticket = sym_encrypt(&key, &ticket);

    let mut units = BTreeMap::new();
    let mut sems = BTreeMap::new();
    for kind in CostKind::ALL {
        let (mean, sem) = match kind {
            CostKind::Se => sample(iterations, || {
                black_box(sym_decrypt(&key, black_box(&sealed_short)).ok());
            }),
            CostKind::Ae => sample(iterations, || {
                black_box(raw_encrypt(kp.public(), black_box(&m)).ok());
            }),
            CostKind::Ad => sample(iterations, || {
                black_box(raw_decrypt(kp.private(), black_box(&c)).ok());
            }),
            CostKind::H => sample(iterations, || {
                black_box(hash(black_box(&short)));
            }),
            CostKind::Hmac => sample(iterations, || {
                black_box(hmac(&key, black_box(&short)));
            }),
            CostKind::Kse => sample(iterations, || {
                black_box(sym_encrypt(&key, black_box(&ticket)));
            }),
            CostKind::Ksd => sample(iterations, || {
                black_box(sym_decrypt(&key, black_box(&sealed_ticket)).ok());
            }),
        };
        if mean <= 0.0 || !mean.is_finite() {
            return Err(CostError::TimerResolution(kind));
        }
        units.insert(kind.label().to_string(), mean);
        sems.insert(kind.label().to_string(), sem);
    }
    TimingModel::from_raw(RawModel {
        name: format!("calibrated-{key_size}"),
        iterations: Some(iterations as u64),
        unit_ms: units,
        sem_ms: sems,
    })
}
