use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::crypto::rng::Csprng;
use crate::crypto::{Digest, Meter, Nonce, NonceKind, Phase, SymKey};
use crate::tokens::{self, build_group_authenticator};
use crate::wire::{Direction, EntityId, MalformedMessage, Payload, ProtocolMessage};

use super::{
    concat, fields, sym_key, timestamp, Actor, ClientKeys, GroupConfig, Log, Outbox, Reason, Rejection, RequestBody,
    Role, Status, TimerId,
};

#[derive(Debug)]
enum Step {
    Idle,
    /// S1-HGAKA: Msg1 sent.
    AwaitChallenge {
        en1: Nonce,
        resends_left: u8,
    },
    /// S3-HGAKA: HM chain started.
    AwaitChain {
        en2: Nonce,
    },
    /// S6-HGAKA: Msg6 sent.
    AwaitGrant {
        en3: Nonce,
    },
    /// S1-HGA: collecting PreHGA tokens, keyed by client-list index.
    CollectTokens {
        tokens: BTreeMap<usize, BigUint>,
    },
    /// S2-HGA: HGA Msg1 sent.
    AwaitAccess {
        en1: Nonce,
        authenticator: Vec<Vec<u8>>,
        resends_left: u8,
    },
    Done,
    Failed(Reason),
}

/// State carried from HGAKA into HGA.
#[derive(Debug, Default)]
struct Acquired {
    sk: Option<SymKey>,
    or_nonce: Option<Nonce>,
    target_package: Vec<u8>,
    package_digest: Digest,
    own_token: Option<BigUint>,
}

/// Group leader: the last entry of the client list.
pub struct Leader {
    config: GroupConfig,
    keys: ClientKeys,
    step: Step,
    acquired: Acquired,
    timer_seq: u64,
    armed: Option<TimerId>,
    meter: Meter,
    log: Log,
    rng: Box<dyn Csprng>,
}

impl Leader {
    pub fn new(config: GroupConfig, keys: ClientKeys, rng: Box<dyn Csprng>) -> Self {
        Self {
            config,
            keys,
            step: Step::Idle,
            acquired: Acquired::default(),
            timer_seq: 0,
            armed: None,
            meter: Meter::new(),
            log: Log::default(),
            rng,
        }
    }

    fn id_(&self) -> EntityId {
        self.config.leader()
    }

    fn nc(&self) -> usize {
        self.config.nc()
    }

    fn message(&self, receiver: EntityId, direction: Direction, hop: u16, payload: Payload) -> ProtocolMessage {
        ProtocolMessage { direction, sender: self.id_(), receiver, group_size: self.nc() as u16, hop, payload }
    }

    fn arm(&mut self, delay: u64, out: &mut Outbox) {
        self.timer_seq += 1;
        let id = TimerId(self.timer_seq);
        self.armed = Some(id);
        out.arm(delay, id);
    }

    fn terminate(&mut self, now: u64, msg: Option<&ProtocolMessage>, reason: Reason) {
        self.log.reject(now, msg, reason);
        self.step = Step::Failed(reason);
        self.armed = None;
    }

    fn ignore(&mut self, now: u64, msg: &ProtocolMessage, reason: Reason) {
        self.log.reject(now, Some(msg), reason);
    }

    fn request_body(&mut self, now: u64) -> RequestBody {
        RequestBody {
            clients: self.config.clients.clone(),
            target: self.config.target,
            nonce: Nonce::en(&mut self.rng),
            ts: timestamp(now),
        }
    }

    fn send_request(&mut self, now: u64, resends_left: u8, out: &mut Outbox) {
        self.meter.set_phase(Phase::Hgaka);
        let body = self.request_body(now);
        let sealed = self.meter.sym_encrypt(&self.keys.own, &body.encode());
        out.send(self.message(self.config.as_id, Direction::Req, 0, Payload::HgakaRequest { sealed }));
        self.step = Step::AwaitChallenge { en1: body.nonce, resends_left };
        self.arm(self.config.timeout, out);
    }

    fn send_access(&mut self, now: u64, authenticator: Vec<Vec<u8>>, resends_left: u8, out: &mut Outbox) {
        self.meter.set_phase(Phase::Hga);
        let sk = self.acquired.sk.clone().expect("SK acquired before HGA");
        let body = self.request_body(now);
        let sealed = self.meter.sym_encrypt(&sk, &body.encode());
        let payload = Payload::HgaRequest {
            sealed,
            authenticator: authenticator.clone(),
            target_package: self.acquired.target_package.clone(),
            package_digest: self.acquired.package_digest,
        };
        out.send(self.message(self.config.target, Direction::Req, 0, payload));
        self.step = Step::AwaitAccess { en1: body.nonce, authenticator, resends_left };
        self.arm(self.config.timeout, out);
    }

    fn on_challenge(&mut self, msg: &ProtocolMessage, sealed: &[u8], now: u64, out: &mut Outbox) {
        let Step::AwaitChallenge { en1, .. } = &self.step else {
            return self.ignore(now, msg, Reason::Unexpected);
        };
        let en1 = *en1;
        let Ok(plain) = self.meter.sym_decrypt(&self.keys.own, sealed) else {
            return self.ignore(now, msg, Reason::DecryptFailure);
        };
        let Some([echo, en2]) = fields::<2>(&plain) else {
            return self.ignore(now, msg, Reason::Malformed);
        };
        if !tokens::en_veri(&en1, &Nonce::new(NonceKind::En, echo)) {
            return self.terminate(now, Some(msg), Reason::NonceMismatch);
        }
        let en2 = Nonce::new(NonceKind::En, en2);
        // S3: the leader starts the chain over EnNonce2
        let hm = tokens::hm_gen(&mut self.meter, &self.keys.own, en2.as_bytes());
        let next = self.config.clients.as_slice()[self.nc() - 2];
        out.send(self.message(next, Direction::Req, 1, Payload::HmLink { hm }));
        self.step = Step::AwaitChain { en2 };
        self.arm(self.config.timeout * self.nc() as u64, out);
    }

    fn on_chain_return(&mut self, msg: &ProtocolMessage, hm: &Digest, now: u64, out: &mut Outbox) {
        let Step::AwaitChain { en2 } = &self.step else {
            return self.ignore(now, msg, Reason::Unexpected);
        };
        if msg.sender != self.config.clients.as_slice()[0] || msg.hop as usize != self.nc() {
            return self.ignore(now, msg, Reason::Unexpected);
        }
        let en2 = *en2;
        let en3 = Nonce::en(&mut self.rng);
        let sealed = self.meter.sym_encrypt(&self.keys.own, &concat(&[en2.as_bytes(), en3.as_bytes()]));
        out.send(self.message(self.config.as_id, Direction::Req, 0, Payload::HgakaProof { hm: *hm, sealed }));
        self.step = Step::AwaitGrant { en3 };
        self.arm(self.config.timeout, out);
    }

    fn on_grant(&mut self, msg: &ProtocolMessage, now: u64, out: &mut Outbox) {
        let Payload::HgakaGrant { client_shares, leader_share, target_package, package_digest } = &msg.payload else {
            unreachable!()
        };
        let Step::AwaitGrant { en3 } = &self.step else {
            return self.ignore(now, msg, Reason::Unexpected);
        };
        let en3 = *en3;
        if client_shares.len() != self.nc() - 1 {
            return self.ignore(now, msg, Reason::Malformed);
        }
        let Ok(plain) = self.meter.sym_decrypt(&self.keys.own, leader_share) else {
            return self.ignore(now, msg, Reason::DecryptFailure);
        };
        let Some([sk, or_nonce, echo]) = fields::<3>(&plain) else {
            return self.ignore(now, msg, Reason::Malformed);
        };
        if !tokens::en_veri(&en3, &Nonce::new(NonceKind::En, echo)) {
            return self.terminate(now, Some(msg), Reason::NonceMismatch);
        }
        self.acquired.sk = Some(sym_key(sk));
        self.acquired.or_nonce = Some(Nonce::new(NonceKind::Or, or_nonce));
        self.acquired.target_package = target_package.clone();
        self.acquired.package_digest = *package_digest;

        // S8: forward each client its share
        for (i, share) in client_shares.iter().enumerate() {
            let to = self.config.clients.as_slice()[i];
            out.send(self.message(to, Direction::Res, i as u16, Payload::HgakaShare { share: share.clone() }));
        }

        // HGA S1: own token, then wait for everyone else's
        self.meter.set_phase(Phase::Hga);
        let or = self.acquired.or_nonce.expect("just stored");
        match tokens::or_nonce_token(&mut self.meter, &self.keys.target_public, &or) {
            Ok(t) => self.acquired.own_token = Some(t),
            Err(_) => return self.terminate(now, None, Reason::Malformed),
        }
        self.step = Step::CollectTokens { tokens: BTreeMap::new() };
        self.arm(self.config.timeout * self.nc() as u64, out);
    }

    fn on_token(&mut self, msg: &ProtocolMessage, token: &[u8], now: u64, out: &mut Outbox) {
        let nc = self.nc();
        let Some(index) = self.config.clients.position(msg.sender).filter(|i| *i < nc - 1) else {
            return self.ignore(now, msg, Reason::Unexpected);
        };
        let Ok(value) = self.keys.target_public.decode(token) else {
            return self.ignore(now, msg, Reason::Malformed);
        };
        let Step::CollectTokens { tokens } = &mut self.step else {
            return self.ignore(now, msg, Reason::Unexpected);
        };
        if tokens.insert(index, value).is_some() {
            return self.ignore(now, msg, Reason::Duplicate);
        }
        if tokens.len() < nc - 1 {
            return;
        }
        let mut ordered: Vec<BigUint> = std::mem::take(tokens).into_values().collect();
        ordered.push(self.acquired.own_token.clone().expect("computed at S8"));
        let pk = &self.keys.target_public;
        let authenticator = match build_group_authenticator(pk, ordered) {
            Ok(a) => a.to_wire(pk),
            Err(_) => return self.terminate(now, Some(msg), Reason::Malformed),
        };
        self.send_access(now, authenticator, self.config.max_resends, out);
    }

    fn on_access(&mut self, msg: &ProtocolMessage, echo: &[u8], shares: &[Vec<u8>], now: u64, out: &mut Outbox) {
        let Step::AwaitAccess { en1, .. } = &self.step else {
            return self.ignore(now, msg, Reason::Unexpected);
        };
        let en1 = *en1;
        if shares.len() != self.nc() - 1 {
            return self.ignore(now, msg, Reason::Malformed);
        }
        let sk = self.acquired.sk.clone().expect("SK acquired before HGA");
        let Ok(plain) = self.meter.sym_decrypt(&sk, echo) else {
            return self.ignore(now, msg, Reason::DecryptFailure);
        };
        let Some([echo]) = fields::<1>(&plain) else {
            return self.ignore(now, msg, Reason::Malformed);
        };
        if !tokens::en_veri(&en1, &Nonce::new(NonceKind::En, echo)) {
            return self.terminate(now, Some(msg), Reason::NonceMismatch);
        }
        for (i, share) in shares.iter().enumerate() {
            let to = self.config.clients.as_slice()[i];
            out.send(self.message(to, Direction::Res, i as u16, Payload::HgaShare { share: share.clone() }));
        }
        self.step = Step::Done;
        self.armed = None;
    }
}

impl Actor for Leader {
    fn id(&self) -> EntityId {
        self.id_()
    }

    fn role(&self) -> Role {
        Role::Leader
    }

    fn status(&self) -> Status {
        match self.step {
            Step::Done => Status::Completed,
            Step::Failed(r) => Status::Terminated(r),
            _ => Status::Active,
        }
    }

    fn step(&self) -> &'static str {
        match self.step {
            Step::Idle => "idle",
            Step::AwaitChallenge { .. } => "S1-HGAKA",
            Step::AwaitChain { .. } => "S3-HGAKA",
            Step::AwaitGrant { .. } => "S6-HGAKA",
            Step::CollectTokens { .. } => "S1-HGA",
            Step::AwaitAccess { .. } => "S2-HGA",
            Step::Done => "S4-HGA",
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
        self.acquired.sk.clone()
    }

    fn or_nonce(&self) -> Option<Nonce> {
        self.acquired.or_nonce
    }

    fn on_start(&mut self, now: u64, out: &mut Outbox) {
        if matches!(self.step, Step::Idle) {
            self.send_request(now, self.config.max_resends, out);
        }
    }

    fn on_message(&mut self, msg: &ProtocolMessage, now: u64, out: &mut Outbox) {
        if matches!(self.step, Step::Done | Step::Failed(_)) {
            return self.ignore(now, msg, Reason::Unexpected);
        }
        if msg.group_size as usize != self.nc() {
            return self.ignore(now, msg, Reason::Malformed);
        }
        self.meter.set_phase(msg.protocol());
        let from_as = msg.sender == self.config.as_id;
        let from_target = msg.sender == self.config.target;
        match &msg.payload {
            Payload::HgakaChallenge { sealed } if from_as => self.on_challenge(msg, sealed, now, out),
            Payload::HmLink { hm } => self.on_chain_return(msg, hm, now, out),
            Payload::HgakaGrant { .. } if from_as => self.on_grant(msg, now, out),
            Payload::PreHga { token } => self.on_token(msg, token, now, out),
            Payload::HgaResponse { echo, client_shares } if from_target => {
                self.on_access(msg, echo, client_shares, now, out)
            }
            _ => self.ignore(now, msg, Reason::Unexpected),
        }
    }

    fn on_timer(&mut self, id: TimerId, now: u64, out: &mut Outbox) {
        if self.armed != Some(id) {
            return;
        }
        self.armed = None;
        match &self.step {
            Step::AwaitChallenge { resends_left, .. } if *resends_left > 0 => {
                let left = resends_left - 1;
                self.send_request(now, left, out);
            }
            Step::AwaitAccess { resends_left, authenticator, .. } if *resends_left > 0 => {
                let (left, auth) = (resends_left - 1, authenticator.clone());
                self.send_access(now, auth, left, out);
            }
            Step::AwaitChain { .. } | Step::CollectTokens { .. } => self.terminate(now, None, Reason::IncompleteGroup),
            Step::AwaitChallenge { .. } | Step::AwaitGrant { .. } | Step::AwaitAccess { .. } => {
                self.terminate(now, None, Reason::Timeout)
            }
            Step::Idle | Step::Done | Step::Failed(_) => {}
        }
    }

    fn on_malformed(&mut self, _err: &MalformedMessage, now: u64) {
        self.log.reject(now, None, Reason::Malformed);
    }
}
