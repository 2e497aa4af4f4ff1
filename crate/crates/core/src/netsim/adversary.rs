//! Scriptable Dolev-Yao adversary: sees every message on the wire and
//! applies the first matching rule to it.

use crate::crypto::SymKey;
use crate::wire::{EntityId, MessageTag, ProtocolMessage, HEADER_LEN};

/// Field filter; `None` matches anything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Match {
    pub tag: Option<MessageTag>,
    pub sender: Option<EntityId>,
    pub receiver: Option<EntityId>,
    pub hop: Option<u16>,
}

impl Match {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn tag(tag: MessageTag) -> Self {
        Self { tag: Some(tag), ..Self::default() }
    }

    pub fn hop(mut self, hop: u16) -> Self {
        self.hop = Some(hop);
        self
    }

    pub fn matches(&self, msg: &ProtocolMessage) -> bool {
        self.tag.map_or(true, |t| t == msg.tag())
            && self.sender.map_or(true, |s| s == msg.sender)
            && self.receiver.map_or(true, |r| r == msg.receiver)
            && self.hop.map_or(true, |h| h == msg.hop)
    }
}

/// Raw bytes delivered to `to`, bypassing any honest sender.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forgery {
    pub to: EntityId,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdvAction {
    Pass,
    Drop,
    /// Extra delay on top of the link latency.
    Delay(u64),
    /// Deliver normally, then deliver a copy `after` ms later.
    Replay {
        after: u64,
    },
    /// XOR one byte of payload item `item` at `offset` within that item.
    Tamper {
        item: usize,
        offset: usize,
        xor: u8,
    },
    /// Deliver the forgeries first, then the original.
    Inject(Vec<Forgery>),
    /// Pass, flagged in the transcript.
    Observe,
}

impl AdvAction {
    pub fn label(&self) -> &'static str {
        match self {
            AdvAction::Pass => "pass",
            AdvAction::Drop => "drop",
            AdvAction::Delay(_) => "delay",
            AdvAction::Replay { .. } => "replay",
            AdvAction::Tamper { .. } => "tamper",
            AdvAction::Inject(_) => "inject",
            AdvAction::Observe => "observe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub matcher: Match,
    pub action: AdvAction,
    /// Remaining applications; `None` is unlimited.
    pub uses: Option<u32>,
}

impl Rule {
    pub fn new(matcher: Match, action: AdvAction) -> Self {
        Self { matcher, action, uses: None }
    }

    pub fn once(matcher: Match, action: AdvAction) -> Self {
        Self { matcher, action, uses: Some(1) }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AdversaryScript {
    pub rules: Vec<Rule>,
    /// Keys the adversary is assumed to have compromised, with labels.
    pub granted_keys: Vec<(String, SymKey)>,
}

impl AdversaryScript {
    pub fn passive() -> Self {
        Self::default()
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn grant(mut self, label: impl Into<String>, key: SymKey) -> Self {
        self.granted_keys.push((label.into(), key));
        self
    }

    /// Picks the action for `msg` and consumes one use of its rule.
    pub(crate) fn decide(&mut self, msg: &ProtocolMessage) -> AdvAction {
        for rule in &mut self.rules {
            if rule.uses == Some(0) || !rule.matcher.matches(msg) {
                continue;
            }
            if let Some(n) = &mut rule.uses {
                *n -= 1;
            }
            return rule.action.clone();
        }
        AdvAction::Pass
    }
}

/// Byte range of payload item `index` in a serialized message.
pub fn item_range(bytes: &[u8], index: usize) -> Option<std::ops::Range<usize>> {
    let mut pos = HEADER_LEN;
    for i in 0.. {
        let len = u16::from_be_bytes(bytes.get(pos..pos + 2)?.try_into().ok()?) as usize;
        let start = pos + 2;
        if start + len > bytes.len() {
            return None;
        }
        if i == index {
            return Some(start..start + len);
        }
        pos = start + len;
    }
    unreachable!()
}

pub(crate) fn tamper(bytes: &mut [u8], item: usize, offset: usize, xor: u8) -> bool {
    match item_range(bytes, item) {
        Some(r) if offset < r.len() => {
            bytes[r.start + offset] ^= xor;
            true
        }
        _ => false,
    }
}
