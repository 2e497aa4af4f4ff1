use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::actors::{Reason, Rejection, Role, Status};
use crate::crypto::{OpCounter, Phase};
use crate::wire::{dump, EntityId, MessageTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Honest,
    Adversary,
}

/// A message emitted by an honest actor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageRecord {
    pub from: EntityId,
    pub to: EntityId,
    pub tag: MessageTag,
    pub hop: u16,
    pub bytes: Vec<u8>,
    pub payload_bits: u64,
    pub wire_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryKind {
    /// An honest send and what the adversary did with it.
    Send {
        msg: MessageRecord,
        action: &'static str,
    },
    /// Bytes arriving at an actor, the operations the actor spent on them and
    /// the last rejection they caused, if any.
    Deliver {
        to: EntityId,
        origin: Origin,
        bytes: Vec<u8>,
        ops: OpCounter,
        rejected: Option<Reason>,
    },
    Timer {
        actor: EntityId,
        ops: OpCounter,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub time: u64,
    pub kind: EntryKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActorSummary {
    pub role: Role,
    pub status: Status,
    pub step: &'static str,
    pub hgaka: OpCounter,
    pub hga: OpCounter,
    pub rejections: Vec<Rejection>,
}

impl ActorSummary {
    pub fn total(&self) -> OpCounter {
        self.hgaka + self.hga
    }

    pub fn counter(&self, phase: Phase) -> OpCounter {
        match phase {
            Phase::Hgaka => self.hgaka,
            Phase::Hga => self.hga,
        }
    }

    pub fn rejected_with(&self, reasons: &[Reason]) -> bool {
        self.rejections.iter().any(|r| reasons.contains(&r.reason))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTranscript {
    pub nc: usize,
    pub leader: EntityId,
    pub entries: Vec<Entry>,
    pub actors: BTreeMap<EntityId, ActorSummary>,
    /// Whether every actor ended holding the same session key.
    pub shared_session_key: bool,
    /// Labels of secrets the adversary could read, either verbatim on the
    /// wire or by decrypting items with granted keys.
    pub recoverable: Vec<String>,
    pub end_time: u64,
}

impl RunTranscript {
    pub fn sends(&self) -> impl Iterator<Item = (u64, &MessageRecord)> {
        self.entries.iter().filter_map(|e| match &e.kind {
            EntryKind::Send { msg, .. } => Some((e.time, msg)),
            _ => None,
        })
    }

    pub fn message_count(&self, phase: Phase) -> usize {
        self.sends().filter(|(_, m)| m.tag.protocol() == phase).count()
    }

    pub fn payload_bits(&self, phase: Phase) -> u64 {
        self.sends().filter(|(_, m)| m.tag.protocol() == phase).map(|(_, m)| m.payload_bits).sum()
    }

    pub fn wire_bits(&self, phase: Phase) -> u64 {
        self.sends().filter(|(_, m)| m.tag.protocol() == phase).map(|(_, m)| m.wire_bits).sum()
    }

    /// Sum of all actors' counters for one protocol.
    pub fn ops(&self, phase: Phase) -> OpCounter {
        self.actors.values().map(|a| a.counter(phase)).sum()
    }

    pub fn role(&self, role: Role) -> impl Iterator<Item = (&EntityId, &ActorSummary)> {
        self.actors.iter().filter(move |(_, a)| a.role == role)
    }

    pub fn leader_summary(&self) -> &ActorSummary {
        &self.actors[&self.leader]
    }

    /// Every group member, the target and the server completed and share SK.
    pub fn all_completed(&self) -> bool {
        self.shared_session_key && self.actors.values().all(|a| a.status == Status::Completed)
    }

    pub fn deliveries(&self) -> impl Iterator<Item = (u64, EntityId, Origin, OpCounter, Option<Reason>)> + '_ {
        self.entries.iter().filter_map(|e| match &e.kind {
            EntryKind::Deliver { to, origin, ops, rejected, .. } => Some((e.time, *to, *origin, *ops, *rejected)),
            _ => None,
        })
    }

    /// One `"{time} {hex}"` line per honest send.
    pub fn dump(&self) -> String {
        dump::format_dump(self.sends().map(|(t, m)| (t, m.bytes.as_slice())))
    }

    /// Full human-readable rendering; byte-identical for identical runs.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            match &e.kind {
                EntryKind::Send { msg, action } => writeln!(
                    s,
                    "{:>7} send    {} {}->{} hop={} bits={}/{} [{action}] {}",
                    e.time,
                    msg.tag,
                    msg.from,
                    msg.to,
                    msg.hop,
                    msg.payload_bits,
                    msg.wire_bits,
                    hex::encode(&msg.bytes)
                ),
                EntryKind::Deliver { to, origin, bytes, ops, rejected } => writeln!(
                    s,
                    "{:>7} deliver {to} {origin:?} {} ops[{ops}]{}",
                    e.time,
                    hex::encode(bytes),
                    rejected.map(|r| format!(" rejected={r}")).unwrap_or_default()
                ),
                EntryKind::Timer { actor, ops } => writeln!(s, "{:>7} timer   {actor} ops[{ops}]", e.time),
            }
            .expect("write to String");
        }
        for (id, a) in &self.actors {
            writeln!(s, "actor {id} {} {} step={} hgaka[{}] hga[{}]", a.role, a.status, a.step, a.hgaka, a.hga)
                .expect("write to String");
            for r in &a.rejections {
                let tag = r.tag.map(|t| t.label()).unwrap_or("-");
                writeln!(s, "  rejected at {} {tag}: {}", r.at, r.reason).expect("write to String");
            }
        }
        writeln!(s, "shared_sk={} recoverable={:?} end={}", self.shared_session_key, self.recoverable, self.end_time)
            .expect("write to String");
        s
    }
}
