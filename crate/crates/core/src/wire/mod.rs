//! Message schemas for HGAKA and HGA, their byte encoding, and length
//! accounting.
//!
//! The byte layout is described in `docs/wire-format.md`. Two lengths are
//! reported for every message: [`wire_bits`] (the real serialized size) and
//! [`payload_bits`] (only the cryptographic items, booked at the sizes the
//! cost model uses).

mod accounting;
mod codec;
pub mod dump;

pub use accounting::{payload_bits, wire_bits, RSA_BOOKED_BLOCK_BITS};
pub use codec::{parse, serialize, MalformedMessage, HEADER_LEN};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crypto::{Digest, Phase};

/// 32-bit entity identifier.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// 32-bit logical timestamp in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Timestamp(pub u32);

impl Timestamp {
    pub fn plus(self, ms: u32) -> Timestamp {
        Timestamp(self.0.saturating_add(ms))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Req = 0,
    Res = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageTag {
    /// HGAKA Msg1, leader to AS.
    HgakaRequest = 0x01,
    /// HGAKA Msg2, AS to leader.
    HgakaChallenge = 0x02,
    /// HGAKA Msg3..Msg5: one hop of the HM chain.
    HmLink = 0x03,
    /// HGAKA Msg6, leader to AS.
    HgakaProof = 0x06,
    /// HGAKA Msg7, AS to leader.
    HgakaGrant = 0x07,
    /// HGAKA Msg8/Msg9: leader forwards a client's OrNonce share.
    HgakaShare = 0x08,
    /// Pre-HGA token submission, client to leader.
    PreHga = 0x10,
    /// HGA Msg1, leader to target.
    HgaRequest = 0x11,
    /// HGA Msg2, target to leader.
    HgaResponse = 0x12,
    /// HGA Msg3/Msg4: leader forwards a client's session-key share.
    HgaShare = 0x13,
}

impl MessageTag {
    pub const ALL: [MessageTag; 10] = [
        MessageTag::HgakaRequest,
        MessageTag::HgakaChallenge,
        MessageTag::HmLink,
        MessageTag::HgakaProof,
        MessageTag::HgakaGrant,
        MessageTag::HgakaShare,
        MessageTag::PreHga,
        MessageTag::HgaRequest,
        MessageTag::HgaResponse,
        MessageTag::HgaShare,
    ];

    pub fn from_byte(b: u8) -> Option<MessageTag> {
        Self::ALL.into_iter().find(|t| *t as u8 == b)
    }

    pub fn protocol(self) -> Phase {
        match self {
            MessageTag::HgakaRequest
            | MessageTag::HgakaChallenge
            | MessageTag::HmLink
            | MessageTag::HgakaProof
            | MessageTag::HgakaGrant
            | MessageTag::HgakaShare => Phase::Hgaka,
            _ => Phase::Hga,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MessageTag::HgakaRequest => "HGAKA-Msg1",
            MessageTag::HgakaChallenge => "HGAKA-Msg2",
            MessageTag::HmLink => "HGAKA-HmLink",
            MessageTag::HgakaProof => "HGAKA-Msg6",
            MessageTag::HgakaGrant => "HGAKA-Msg7",
            MessageTag::HgakaShare => "HGAKA-Share",
            MessageTag::PreHga => "PreHGA-Msg",
            MessageTag::HgaRequest => "HGA-Msg1",
            MessageTag::HgaResponse => "HGA-Msg2",
            MessageTag::HgaShare => "HGA-Share",
        }
    }
}

impl fmt::Display for MessageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for MessageTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown message tag `{s}`"))
    }
}

/// Tag-specific message body. Ciphertexts are opaque bytes; RSA values are
/// fixed-width big-endian encodings under the target's modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    /// `EK_leader[ID_C-List, ID_D1, EnNonce1, Ts]`
    HgakaRequest { sealed: Vec<u8> },
    /// `EK_leader[EnNonce1, EnNonce2]`
    HgakaChallenge { sealed: Vec<u8> },
    /// `HM_i`
    HmLink { hm: Digest },
    /// `HM1, EK_leader[EnNonce2, EnNonce3]`
    HgakaProof { hm: Digest, sealed: Vec<u8> },
    /// Per-client `EK_Ci[OrNonce_Ci, EnNonce_i]` in client-list order, then
    /// `EK_leader[SK, OrNonce_leader, EnNonce3]`,
    /// `EK_D1[EK_GD1[SK], EncAuthVeriToken]` and its integrity hash.
    HgakaGrant { client_shares: Vec<Vec<u8>>, leader_share: Vec<u8>, target_package: Vec<u8>, package_digest: Digest },
    /// `EK_Ci[OrNonce_Ci, EnNonce_i]`
    HgakaShare { share: Vec<u8> },
    /// `EPU_D1[OrNonce_Ci]`
    PreHga { token: Vec<u8> },
    /// `ESK[ID_C-List, ID_D1, EnNonce1, Ts]`, the group authenticator, the
    /// stored target package and its hash.
    HgaRequest { sealed: Vec<u8>, authenticator: Vec<Vec<u8>>, target_package: Vec<u8>, package_digest: Digest },
    /// `ESK[EnNonce1]` then per-client `EOrNonce_Ci[SK, EnNonce_i]`.
    HgaResponse { echo: Vec<u8>, client_shares: Vec<Vec<u8>> },
    /// `EOrNonce_Ci[SK, EnNonce_i]`
    HgaShare { share: Vec<u8> },
}

impl Payload {
    pub fn tag(&self) -> MessageTag {
        match self {
            Payload::HgakaRequest { .. } => MessageTag::HgakaRequest,
            Payload::HgakaChallenge { .. } => MessageTag::HgakaChallenge,
            Payload::HmLink { .. } => MessageTag::HmLink,
            Payload::HgakaProof { .. } => MessageTag::HgakaProof,
            Payload::HgakaGrant { .. } => MessageTag::HgakaGrant,
            Payload::HgakaShare { .. } => MessageTag::HgakaShare,
            Payload::PreHga { .. } => MessageTag::PreHga,
            Payload::HgaRequest { .. } => MessageTag::HgaRequest,
            Payload::HgaResponse { .. } => MessageTag::HgaResponse,
            Payload::HgaShare { .. } => MessageTag::HgaShare,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolMessage {
    pub direction: Direction,
    pub sender: EntityId,
    pub receiver: EntityId,
    /// NC of the group this message belongs to.
    pub group_size: u16,
    /// Position along the HM chain, or the recipient's client-list index for
    /// share fan-out; zero otherwise.
    pub hop: u16,
    pub payload: Payload,
}

impl ProtocolMessage {
    pub fn tag(&self) -> MessageTag {
        self.payload.tag()
    }

    pub fn protocol(&self) -> Phase {
        self.tag().protocol()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientListError {
    #[error("a group needs at least two clients, got {0}")]
    TooSmall(usize),
    #[error("client {0} listed twice")]
    Duplicate(EntityId),
    #[error("client list too long for the wire format")]
    TooLarge,
}

/// Ordered client identities. Index 0 is the deepest HM-chain client; the
/// last element is the group leader.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<EntityId>", into = "Vec<EntityId>")]
pub struct ClientList(Vec<EntityId>);

impl ClientList {
    pub fn new(ids: Vec<EntityId>) -> Result<Self, ClientListError> {
        if ids.len() < 2 {
            return Err(ClientListError::TooSmall(ids.len()));
        }
        if ids.len() > u16::MAX as usize {
            return Err(ClientListError::TooLarge);
        }
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(*id) {
                return Err(ClientListError::Duplicate(*id));
            }
        }
        Ok(Self(ids))
    }

    pub fn as_slice(&self) -> &[EntityId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn leader(&self) -> EntityId {
        *self.0.last().expect("non-empty by construction")
    }

    /// Every client except the leader, in list order.
    pub fn non_leaders(&self) -> &[EntityId] {
        &self.0[..self.0.len() - 1]
    }

    pub fn position(&self, id: EntityId) -> Option<usize> {
        self.0.iter().position(|c| *c == id)
    }

    pub fn contains(&self, id: EntityId) -> bool {
        self.0.contains(&id)
    }

    /// Big-endian 32-bit ids, concatenated.
    pub fn encode(&self) -> Vec<u8> {
        self.0.iter().flat_map(|id| id.0.to_be_bytes()).collect()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ClientListError> {
        let ids =
            bytes.chunks_exact(4).map(|c| EntityId(u32::from_be_bytes(c.try_into().expect("chunk of 4")))).collect();
        Self::new(ids)
    }
}

impl TryFrom<Vec<EntityId>> for ClientList {
    type Error = ClientListError;

    fn try_from(v: Vec<EntityId>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ClientList> for Vec<EntityId> {
    fn from(c: ClientList) -> Self {
        c.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<EntityId> {
        v.iter().copied().map(EntityId).collect()
    }

    #[test]
    fn client_list_roles() {
        let c = ClientList::new(ids(&[1, 2, 3])).unwrap();
        assert_eq!(c.leader(), EntityId(3));
        assert_eq!(c.non_leaders(), &ids(&[1, 2])[..]);
        assert_eq!(ClientList::decode(&c.encode()).unwrap(), c);
    }

    #[test]
    fn client_list_rejects_small_and_duplicates() {
        assert_eq!(ClientList::new(ids(&[1])), Err(ClientListError::TooSmall(1)));
        assert_eq!(ClientList::new(ids(&[1, 2, 1])), Err(ClientListError::Duplicate(EntityId(1))));
    }

    #[test]
    fn tag_bytes_are_unique() {
        let bytes: BTreeSet<u8> = MessageTag::ALL.iter().map(|t| *t as u8).collect();
        assert_eq!(bytes.len(), MessageTag::ALL.len());
        for t in MessageTag::ALL {
            assert_eq!(MessageTag::from_byte(t as u8), Some(t));
            assert_eq!(t.label().parse::<MessageTag>().unwrap(), t);
        }
    }
}
