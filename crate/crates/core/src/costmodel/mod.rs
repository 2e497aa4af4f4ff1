//! Closed-form communication and computation costs for HGAKA, HGA and a
//! Kerberos v5 baseline, plus reconciliation against measured runs.
//!
//! Bracketed lengths `L[x]` are read as `L * ceil(x / L)`.

mod reconcile;
mod table;
mod timing;

pub use reconcile::{reconcile, Discrepancy, Reconciliation};
pub use table::{cost_table, cost_table_seq, to_csv, CostRow, CSV_HEADER};
pub use timing::{calibrate, CostKind, TimingModel, FITTED_PRESET, MIN_ITERATIONS};

use std::fmt;
use std::ops::{Add, Mul};

use crate::actors::Role;
use crate::crypto::{OpCounter, Phase};
use crate::wire::{MessageTag, RSA_BOOKED_BLOCK_BITS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("{op} needs nc >= {min}, got {nc}")]
    Domain { op: &'static str, nc: usize, min: usize },
    #[error("timing model has no unit cost for {0}")]
    MissingUnitCost(CostKind),
    #[error("invalid timing model: {0}")]
    Timing(String),
    #[error("calibration needs at least {min} iterations, got {got}")]
    Iterations { got: usize, min: usize },
    #[error("timer resolution too coarse to measure {0}")]
    TimerResolution(CostKind),
}

fn require(op: &'static str, nc: usize, min: usize) -> Result<(), CostError> {
    if nc < min {
        Err(CostError::Domain { op, nc, min })
    } else {
        Ok(())
    }
}

/// Which protocol a formula describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Hgaka,
    Hga,
}

impl From<Protocol> for Phase {
    fn from(p: Protocol) -> Phase {
        match p {
            Protocol::Hgaka => Phase::Hgaka,
            Protocol::Hga => Phase::Hga,
        }
    }
}

/// One row of a communication breakdown: `messages` messages of one kind
/// totalling `bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommRow {
    pub label: &'static str,
    pub messages: u64,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommCost {
    pub bits: u64,
    pub breakdown: Vec<CommRow>,
}

impl CommCost {
    fn from_rows(breakdown: Vec<CommRow>) -> Self {
        Self { bits: breakdown.iter().map(|r| r.bits).sum(), breakdown }
    }

    pub fn bytes(&self) -> u64 {
        self.bits / 8
    }

    pub fn messages(&self) -> u64 {
        self.breakdown.iter().map(|r| r.messages).sum()
    }

    pub fn row(&self, label: &str) -> Option<&CommRow> {
        self.breakdown.iter().find(|r| r.label == label)
    }
}

fn sealed(bits: u64) -> u64 {
    128 * bits.div_ceil(128)
}

fn rsa_blocks(nc: u64) -> u64 {
    (128 * nc).div_ceil(RSA_BOOKED_BLOCK_BITS)
}

fn request_bits(nc: u64) -> u64 {
    sealed(32 * nc + 192)
}

/// `EK_GD[SK]` plus the OrNonce list in asymmetric blocks, sealed under K_D.
fn package_bits(nc: u64) -> u64 {
    sealed(128 + RSA_BOOKED_BLOCK_BITS * rsa_blocks(nc))
}

fn row(tag: MessageTag, messages: u64, bits: u64) -> CommRow {
    CommRow { label: tag.label(), messages, bits }
}

pub fn comm_hgaka(nc: usize) -> Result<CommCost, CostError> {
    require("comm_hgaka", nc, 2)?;
    let n = nc as u64;
    Ok(CommCost::from_rows(vec![
        row(MessageTag::HgakaRequest, 1, request_bits(n)),
        row(MessageTag::HgakaChallenge, 1, 256),
        row(MessageTag::HmLink, n, 256 * n),
        row(MessageTag::HgakaProof, 1, 512),
        row(MessageTag::HgakaGrant, 1, 256 * (n - 1) + 384 + package_bits(n) + 256),
        row(MessageTag::HgakaShare, n - 1, 256 * (n - 1)),
    ]))
}

pub fn comm_hga(nc: usize) -> Result<CommCost, CostError> {
    require("comm_hga", nc, 2)?;
    let n = nc as u64;
    Ok(CommCost::from_rows(vec![
        row(MessageTag::PreHga, n - 1, RSA_BOOKED_BLOCK_BITS * (n - 1)),
        row(MessageTag::HgaRequest, 1, request_bits(n) + RSA_BOOKED_BLOCK_BITS * n + package_bits(n) + 256),
        row(MessageTag::HgaResponse, 1, 128 + 256 * (n - 1)),
        row(MessageTag::HgaShare, n - 1, 256 * (n - 1)),
    ]))
}

pub fn comm(protocol: Protocol, nc: usize) -> Result<CommCost, CostError> {
    match protocol {
        Protocol::Hgaka => comm_hgaka(nc),
        Protocol::Hga => comm_hga(nc),
    }
}

pub const KERBEROS_BITS_PER_CLIENT: u64 = 6080;

/// One full AS/TGS/AP exchange per client.
pub fn comm_kerberos(nc: usize) -> Result<CommCost, CostError> {
    require("comm_kerberos", nc, 1)?;
    let n = nc as u64;
    Ok(CommCost::from_rows(vec![CommRow {
        label: "Kerberos-Exchange",
        messages: n,
        bits: KERBEROS_BITS_PER_CLIENT * n,
    }]))
}

/// Operation counts, including the Kerberos symmetric kinds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct OpCounts {
    pub se: u64,
    pub ae: u64,
    pub ad: u64,
    pub h: u64,
    pub hmac: u64,
    pub kse: u64,
    pub ksd: u64,
}

impl OpCounts {
    pub fn get(&self, kind: CostKind) -> u64 {
        match kind {
            CostKind::Se => self.se,
            CostKind::Ae => self.ae,
            CostKind::Ad => self.ad,
            CostKind::H => self.h,
            CostKind::Hmac => self.hmac,
            CostKind::Kse => self.kse,
            CostKind::Ksd => self.ksd,
        }
    }

    pub fn total(&self) -> u64 {
        CostKind::ALL.iter().map(|k| self.get(*k)).sum()
    }
}

impl From<OpCounter> for OpCounts {
    fn from(c: OpCounter) -> Self {
        Self { se: c.se, ae: c.ae, ad: c.ad, h: c.h, hmac: c.hmac, kse: 0, ksd: 0 }
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, o: OpCounts) -> OpCounts {
        OpCounts {
            se: self.se + o.se,
            ae: self.ae + o.ae,
            ad: self.ad + o.ad,
            h: self.h + o.h,
            hmac: self.hmac + o.hmac,
            kse: self.kse + o.kse,
            ksd: self.ksd + o.ksd,
        }
    }
}

impl Mul<u64> for OpCounts {
    type Output = OpCounts;

    fn mul(self, k: u64) -> OpCounts {
        OpCounts {
            se: self.se * k,
            ae: self.ae * k,
            ad: self.ad * k,
            h: self.h * k,
            hmac: self.hmac * k,
            kse: self.kse * k,
            ksd: self.ksd * k,
        }
    }
}

impl fmt::Display for OpCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = CostKind::ALL
            .iter()
            .filter(|k| self.get(**k) != 0)
            .map(|k| format!("{}={}", k.label(), self.get(*k)))
            .collect();
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(" "))
        }
    }
}

/// `members` parties of one role, each spending `each`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleCost {
    pub role: Role,
    pub members: u64,
    pub each: OpCounts,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompCost {
    pub counts: OpCounts,
    pub roles: Vec<RoleCost>,
}

impl CompCost {
    fn from_roles(roles: Vec<RoleCost>) -> Self {
        let counts = roles.iter().fold(OpCounts::default(), |acc, r| acc + r.each * r.members);
        Self { counts, roles }
    }

    pub fn role(&self, role: Role) -> Option<&RoleCost> {
        self.roles.iter().find(|r| r.role == role)
    }
}

fn ops(se: u64, ae: u64, ad: u64, h: u64, hmac: u64) -> OpCounts {
    OpCounts { se, ae, ad, h, hmac, kse: 0, ksd: 0 }
}

pub fn comp_hgaka(nc: usize) -> Result<CompCost, CostError> {
    require("comp_hgaka", nc, 2)?;
    let n = nc as u64;
    Ok(CompCost::from_roles(vec![
        RoleCost { role: Role::Leader, members: 1, each: ops(4, 0, 0, 0, 1) },
        RoleCost { role: Role::Client, members: n - 1, each: ops(1, 0, 0, 0, 1) },
        RoleCost { role: Role::AuthServer, members: 1, each: ops(5 + n, 1, 0, 1, n) },
    ]))
}

pub fn comp_hga(nc: usize) -> Result<CompCost, CostError> {
    require("comp_hga", nc, 2)?;
    let n = nc as u64;
    Ok(CompCost::from_roles(vec![
        RoleCost { role: Role::Leader, members: 1, each: ops(2, 1, 0, 0, 0) },
        RoleCost { role: Role::Client, members: n - 1, each: ops(1, 1, 0, 0, 0) },
        RoleCost { role: Role::Target, members: 1, each: ops(3 + n, 1, 1, 1, 0) },
    ]))
}

pub fn comp(protocol: Protocol, nc: usize) -> Result<CompCost, CostError> {
    match protocol {
        Protocol::Hgaka => comp_hgaka(nc),
        Protocol::Hga => comp_hga(nc),
    }
}

/// Booked per client as that client's whole exchange, server work included.
pub fn comp_kerberos(nc: usize) -> Result<CompCost, CostError> {
    require("comp_kerberos", nc, 1)?;
    let each = OpCounts { kse: 2 + 2 * 5, ksd: 1 + 2 * 6, ..OpCounts::default() };
    Ok(CompCost::from_roles(vec![RoleCost { role: Role::Client, members: nc as u64, each }]))
}

/// Estimated wall-clock cost of `counts` in milliseconds.
pub fn pcc_ms(counts: &OpCounts, timing: &TimingModel) -> Result<f64, CostError> {
    let mut total = 0.0;
    for kind in CostKind::ALL {
        let n = counts.get(kind);
        if n == 0 {
            continue;
        }
        let unit = timing.unit_ms(kind).ok_or(CostError::MissingUnitCost(kind))?;
        total += n as f64 * unit;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkFactor {
    pub log2_ops: f64,
}

/// Brute-force effort: each of the `nc` 128-bit keys in the HMAC chain for
/// HGAKA, the symmetric key plus the OrNonce search for HGA.
pub fn work_factor(protocol: Protocol, nc: usize) -> Result<WorkFactor, CostError> {
    let log2_ops = match protocol {
        Protocol::Hgaka => {
            require("work_factor", nc, 2)?;
            128.0 + (nc as f64).log2()
        }
        Protocol::Hga => 129.0,
    };
    Ok(WorkFactor { log2_ops })
}
