use crate::crypto::{Meter, Nonce, NonceKind, Phase, SymKey};
use crate::tokens;
use crate::wire::{Direction, EntityId, MalformedMessage, Payload, ProtocolMessage};

use super::{fields, sym_key, Actor, ClientKeys, GroupConfig, Log, Outbox, Reason, Rejection, Role, Status};

#[derive(Debug)]
enum Step {
    /// Waiting for the HM link from the previous chain member.
    AwaitChain,
    /// S8-HGAKA: waiting for the OrNonce share.
    AwaitShare,
    /// S1-HGA done: token sent, waiting for SK.
    AwaitSessionKey {
        or_nonce: Nonce,
    },
    Done {
        or_nonce: Nonce,
        sk: SymKey,
    },
    Failed(Reason),
}

/// Non-leader group member at position `index` of the client list.
pub struct Client {
    id: EntityId,
    index: usize,
    config: GroupConfig,
    keys: ClientKeys,
    step: Step,
    meter: Meter,
    log: Log,
}

impl Client {
    /// `None` if `id` is not a non-leader member of the group.
    pub fn new(id: EntityId, config: GroupConfig, keys: ClientKeys) -> Option<Self> {
        let index = config.clients.position(id).filter(|i| *i + 1 < config.nc())?;
        Some(Self { id, index, config, keys, step: Step::AwaitChain, meter: Meter::new(), log: Log::default() })
    }

    fn message(&self, receiver: EntityId, hop: u16, payload: Payload) -> ProtocolMessage {
        ProtocolMessage {
            direction: Direction::Req,
            sender: self.id,
            receiver,
            group_size: self.config.nc() as u16,
            hop,
            payload,
        }
    }

    fn terminate(&mut self, now: u64, msg: &ProtocolMessage, reason: Reason) {
        self.log.reject(now, Some(msg), reason);
        self.step = Step::Failed(reason);
    }

    fn ignore(&mut self, now: u64, msg: &ProtocolMessage, reason: Reason) {
        self.log.reject(now, Some(msg), reason);
    }

    /// The chain runs leader, clients[nc-2], ..., clients[0], leader.
    fn chain_hop(&self) -> u16 {
        (self.config.nc() - 1 - self.index) as u16
    }

    fn on_link(&mut self, msg: &ProtocolMessage, hm: &[u8; 32], now: u64, out: &mut Outbox) {
        let predecessor = self.config.clients.as_slice()[self.index + 1];
        if !matches!(self.step, Step::AwaitChain) || msg.sender != predecessor || msg.hop != self.chain_hop() {
            return self.ignore(now, msg, Reason::Unexpected);
        }
        let next = match self.index {
            0 => self.config.leader(),
            i => self.config.clients.as_slice()[i - 1],
        };
        let hm = tokens::hm_gen(&mut self.meter, &self.keys.own, hm);
        out.send(self.message(next, self.chain_hop() + 1, Payload::HmLink { hm }));
        self.step = Step::AwaitShare;
    }

    fn on_share(&mut self, msg: &ProtocolMessage, share: &[u8], now: u64, out: &mut Outbox) {
        if !matches!(self.step, Step::AwaitShare) || msg.sender != self.config.leader() {
            return self.ignore(now, msg, Reason::Unexpected);
        }
        let Ok(plain) = self.meter.sym_decrypt(&self.keys.own, share) else {
            return self.terminate(now, msg, Reason::DecryptFailure);
        };
        let Some([or_nonce, _en]) = fields::<2>(&plain) else {
            return self.terminate(now, msg, Reason::Malformed);
        };
        let or_nonce = Nonce::new(NonceKind::Or, or_nonce);

        // HGA S1: send the RSA token for this OrNonce to the leader
        self.meter.set_phase(Phase::Hga);
        let pk = &self.keys.target_public;
        let Ok(token) = tokens::or_nonce_token(&mut self.meter, pk, &or_nonce) else {
            return self.terminate(now, msg, Reason::Malformed);
        };
        let token = pk.encode(&token);
        out.send(self.message(self.config.leader(), self.index as u16, Payload::PreHga { token }));
        self.step = Step::AwaitSessionKey { or_nonce };
    }

    fn on_session_key(&mut self, msg: &ProtocolMessage, share: &[u8], now: u64) {
        let Step::AwaitSessionKey { or_nonce } = &self.step else {
            return self.ignore(now, msg, Reason::Unexpected);
        };
        if msg.sender != self.config.leader() {
            return self.ignore(now, msg, Reason::Unexpected);
        }
        let or_nonce = *or_nonce;
        let Ok(plain) = self.meter.sym_decrypt(&or_nonce.as_key(), share) else {
            return self.terminate(now, msg, Reason::DecryptFailure);
        };
        let Some([sk, _en]) = fields::<2>(&plain) else {
            return self.terminate(now, msg, Reason::Malformed);
        };
        self.step = Step::Done { or_nonce, sk: sym_key(sk) };
    }
}

impl Actor for Client {
    fn id(&self) -> EntityId {
        self.id
    }

    fn role(&self) -> Role {
        Role::Client
    }

    fn status(&self) -> Status {
        match self.step {
            Step::Done { .. } => Status::Completed,
            Step::Failed(r) => Status::Terminated(r),
            _ => Status::Active,
        }
    }

    fn step(&self) -> &'static str {
        match self.step {
            Step::AwaitChain => "idle",
            Step::AwaitShare => "S4-HGAKA",
            Step::AwaitSessionKey { .. } => "S1-HGA",
            Step::Done { .. } => "S4-HGA",
            Step::Failed(_) => "terminated",
        }
    }

    fn meter(&self) -> &Meter {
        &self.meter
    }

    fn rejections(&self) -> &[Rejection] {
        &self.log.0
    }

    fn session_key(&self) -> Option<SymKey> {
        match &self.step {
            Step::Done { sk, .. } => Some(sk.clone()),
            _ => None,
        }
    }

    fn or_nonce(&self) -> Option<Nonce> {
        match &self.step {
            Step::AwaitSessionKey { or_nonce } | Step::Done { or_nonce, .. } => Some(*or_nonce),
            _ => None,
        }
    }

    fn on_message(&mut self, msg: &ProtocolMessage, now: u64, out: &mut Outbox) {
        if matches!(self.step, Step::Done { .. } | Step::Failed(_)) || msg.group_size as usize != self.config.nc() {
            return self.ignore(now, msg, Reason::Unexpected);
        }
        self.meter.set_phase(msg.protocol());
        match &msg.payload {
            Payload::HmLink { hm } => self.on_link(msg, hm, now, out),
            Payload::HgakaShare { share } => self.on_share(msg, share, now, out),
            Payload::HgaShare { share } => self.on_session_key(msg, share, now),
            _ => self.ignore(now, msg, Reason::Unexpected),
        }
    }

    fn on_malformed(&mut self, _err: &MalformedMessage, now: u64) {
        self.log.reject(now, None, Reason::Malformed);
    }
}
