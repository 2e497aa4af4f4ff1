//! State machines for the four roles: authentication server, group leader,
//! non-leader client and target device.
//!
//! Actors are driven by [`Actor::on_start`], [`Actor::on_message`] and
//! [`Actor::on_timer`] and push outgoing messages and timer requests into an
//! [`Outbox`]. They never see the network directly.
//!
//! Failure handling: a message that cannot be authenticated (wrong key,
//! malformed, stale, duplicate, unexpected) is logged and dropped, so a
//! forged message cannot tear down an honest session. A verification failure
//! on an authenticated message of the current session terminates it.

mod client;
mod keys;
mod leader;
mod server;
mod target;

pub use client::Client;
pub use keys::{AsKeys, ClientKeys, KeyRegistry, TargetKeys};
pub use leader::Leader;
pub use server::AuthServer;
pub use target::Target;

use std::collections::BTreeMap;
use std::fmt;

use crate::crypto::{Meter, Nonce, NonceKind, SymKey, KEY_LEN, NONCE_LEN};
use crate::wire::{ClientList, EntityId, MalformedMessage, MessageTag, ProtocolMessage, Timestamp};

/// Default allowed clock skew in logical milliseconds.
pub const DEFAULT_DELTA_T: u32 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    AuthServer,
    Leader,
    Client,
    Target,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::AuthServer => "as",
            Role::Leader => "leader",
            Role::Client => "client",
            Role::Target => "target",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reason {
    Stale,
    Duplicate,
    IdMismatch,
    DecryptFailure,
    NonceMismatch,
    HmMismatch,
    HashMismatch,
    HomomorphicMismatch,
    Unauthorized,
    IncompleteGroup,
    Timeout,
    Malformed,
    Unexpected,
}

impl Reason {
    pub const ALL: [Reason; 13] = [
        Reason::Stale,
        Reason::Duplicate,
        Reason::IdMismatch,
        Reason::DecryptFailure,
        Reason::NonceMismatch,
        Reason::HmMismatch,
        Reason::HashMismatch,
        Reason::HomomorphicMismatch,
        Reason::Unauthorized,
        Reason::IncompleteGroup,
        Reason::Timeout,
        Reason::Malformed,
        Reason::Unexpected,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Reason::Stale => "stale",
            Reason::Duplicate => "duplicate",
            Reason::IdMismatch => "id-mismatch",
            Reason::DecryptFailure => "decrypt-failure",
            Reason::NonceMismatch => "nonce-mismatch",
            Reason::HmMismatch => "hm-mismatch",
            Reason::HashMismatch => "hash-mismatch",
            Reason::HomomorphicMismatch => "homomorphic-mismatch",
            Reason::Unauthorized => "unauthorized",
            Reason::IncompleteGroup => "incomplete-group",
            Reason::Timeout => "timeout",
            Reason::Malformed => "malformed",
            Reason::Unexpected => "unexpected",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Reason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|r| r.label() == s).ok_or_else(|| format!("unknown reason `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Active,
    Completed,
    Terminated(Reason),
}

impl Status {
    pub fn is_active(self) -> bool {
        self == Status::Active
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Active => f.write_str("active"),
            Status::Completed => f.write_str("completed"),
            Status::Terminated(r) => write!(f, "terminated({r})"),
        }
    }
}

/// One dropped or fatal message, kept for transcripts and scenario checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub at: u64,
    pub from: Option<EntityId>,
    pub tag: Option<MessageTag>,
    pub reason: Reason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimerId(pub u64);

#[derive(Debug, Default)]
pub struct Outbox {
    pub messages: Vec<ProtocolMessage>,
    /// `(delay_ms, id)` pairs.
    pub timers: Vec<(u64, TimerId)>,
}

impl Outbox {
    pub fn send(&mut self, msg: ProtocolMessage) {
        self.messages.push(msg);
    }

    pub fn arm(&mut self, delay: u64, id: TimerId) {
        self.timers.push((delay, id));
    }
}

pub trait Actor: Send {
    fn id(&self) -> EntityId;
    fn role(&self) -> Role;
    fn status(&self) -> Status;
    /// Protocol step label of the current state.
    fn step(&self) -> &'static str;
    fn meter(&self) -> &Meter;
    fn rejections(&self) -> &[Rejection];
    fn session_key(&self) -> Option<SymKey>;

    fn or_nonce(&self) -> Option<Nonce> {
        None
    }

    fn on_start(&mut self, _now: u64, _out: &mut Outbox) {}
    fn on_message(&mut self, msg: &ProtocolMessage, now: u64, out: &mut Outbox);
    fn on_timer(&mut self, _id: TimerId, _now: u64, _out: &mut Outbox) {}
    fn on_malformed(&mut self, err: &MalformedMessage, now: u64);
}

/// Static description of one group and its environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupConfig {
    pub clients: ClientList,
    pub target: EntityId,
    pub as_id: EntityId,
    pub delta_t: u32,
    /// Base wait before the leader gives up on a reply.
    pub timeout: u64,
    /// Fresh-nonce retransmissions of each protocol's first message.
    pub max_resends: u8,
    /// When false the servers accept replays inside the freshness window.
    pub replay_cache: bool,
}

impl GroupConfig {
    pub const AS_ID: EntityId = EntityId(1);
    pub const TARGET_ID: EntityId = EntityId(2);
    pub const FIRST_CLIENT_ID: u32 = 101;

    /// Group of `nc` clients with ids 101.., the last one leading.
    pub fn with_size(nc: usize) -> Result<Self, crate::wire::ClientListError> {
        let ids = (0..nc as u32).map(|i| EntityId(Self::FIRST_CLIENT_ID + i)).collect();
        Ok(Self::new(ClientList::new(ids)?))
    }

    pub fn new(clients: ClientList) -> Self {
        Self {
            clients,
            target: Self::TARGET_ID,
            as_id: Self::AS_ID,
            delta_t: DEFAULT_DELTA_T,
            timeout: 2 * DEFAULT_DELTA_T as u64,
            max_resends: 1,
            replay_cache: true,
        }
    }

    pub fn with_delta_t(mut self, delta_t: u32) -> Self {
        self.delta_t = delta_t;
        self.timeout = 2 * delta_t as u64;
        self
    }

    pub fn nc(&self) -> usize {
        self.clients.len()
    }

    pub fn leader(&self) -> EntityId {
        self.clients.leader()
    }
}

pub(crate) fn timestamp(now: u64) -> Timestamp {
    // the logical clock is 32 bits on the wire
    Timestamp(now as u32)
}

/// `ID_C-List ‖ ID_D1 ‖ EnNonce1 ‖ Ts`, the body of both first messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RequestBody {
    pub clients: ClientList,
    pub target: EntityId,
    pub nonce: Nonce,
    pub ts: Timestamp,
}

impl RequestBody {
    pub fn encode(&self) -> Vec<u8> {
        let mut v = self.clients.encode();
        v.extend_from_slice(&self.target.0.to_be_bytes());
        v.extend_from_slice(self.nonce.as_bytes());
        v.extend_from_slice(&self.ts.0.to_be_bytes());
        v
    }

    pub fn decode(b: &[u8]) -> Option<Self> {
        let tail = 4 + NONCE_LEN + 4;
        if b.len() < tail || (b.len() - tail) % 4 != 0 {
            return None;
        }
        let split = b.len() - tail;
        let clients = ClientList::decode(&b[..split]).ok()?;
        let rest = &b[split..];
        Some(Self {
            clients,
            target: EntityId(u32::from_be_bytes(rest[..4].try_into().ok()?)),
            nonce: Nonce::from_slice(NonceKind::En, &rest[4..4 + NONCE_LEN])?,
            ts: Timestamp(u32::from_be_bytes(rest[4 + NONCE_LEN..].try_into().ok()?)),
        })
    }
}

pub(crate) fn concat(parts: &[&[u8]]) -> Vec<u8> {
    parts.concat()
}

/// Splits `b` into fixed 16-byte fields; `None` on any length mismatch.
pub(crate) fn fields<const N: usize>(b: &[u8]) -> Option<[[u8; 16]; N]> {
    if b.len() != N * 16 {
        return None;
    }
    let mut out = [[0u8; 16]; N];
    for (o, c) in out.iter_mut().zip(b.chunks_exact(16)) {
        o.copy_from_slice(c);
    }
    Some(out)
}

pub(crate) fn sym_key(b: [u8; KEY_LEN]) -> SymKey {
    SymKey::from_bytes(b)
}

/// `(sender, Ts, EnNonce)` tuples seen within the last `window` ms.
#[derive(Debug, Clone)]
pub(crate) struct ReplayCache {
    window: u64,
    enabled: bool,
    seen: BTreeMap<(EntityId, u32, [u8; NONCE_LEN]), u64>,
}

impl ReplayCache {
    pub fn new(window: u64, enabled: bool) -> Self {
        Self { window, enabled, seen: BTreeMap::new() }
    }

    /// Records the tuple; false if it was already present.
    pub fn admit(&mut self, sender: EntityId, ts: Timestamp, nonce: &Nonce, now: u64) -> bool {
        if !self.enabled {
            return true;
        }
        let window = self.window;
        self.seen.retain(|_, at| now.saturating_sub(*at) <= window);
        self.seen.insert((sender, ts.0, *nonce.as_bytes()), now).is_none()
    }
}

/// Rejection log shared by every role.
#[derive(Debug, Default, Clone)]
pub(crate) struct Log(pub Vec<Rejection>);

impl Log {
    pub fn reject(&mut self, now: u64, msg: Option<&ProtocolMessage>, reason: Reason) {
        self.0.push(Rejection { at: now, from: msg.map(|m| m.sender), tag: msg.map(|m| m.tag()), reason });
    }
}
