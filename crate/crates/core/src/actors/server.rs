use std::collections::BTreeMap;

use crate::crypto::rng::Csprng;
use crate::crypto::{Meter, Nonce, NonceKind, Phase, SymKey};
use crate::tokens::{self, EncAuthVeriToken};
use crate::wire::{ClientList, Direction, EntityId, MalformedMessage, Payload, ProtocolMessage};

use super::keys::authorized;
use super::{
    concat, fields, timestamp, Actor, AsKeys, Log, Outbox, Reason, Rejection, ReplayCache, RequestBody, Role, Status,
};

#[derive(Debug)]
enum Session {
    /// Msg2 sent; waiting for Msg6.
    AwaitProof {
        clients: ClientList,
        target: EntityId,
        en2: Nonce,
    },
    /// Msg7 sent.
    Granted {
        sk: SymKey,
    },
    Failed,
}

/// Authentication server. Serves any number of leaders; one session per
/// leader id, replaced when the leader opens a new attempt.
pub struct AuthServer {
    id: EntityId,
    keys: AsKeys,
    delta_t: u32,
    cache: ReplayCache,
    sessions: BTreeMap<EntityId, Session>,
    outcome: Option<Status>,
    meter: Meter,
    log: Log,
    rng: Box<dyn Csprng>,
}

impl AuthServer {
    pub fn new(id: EntityId, keys: AsKeys, delta_t: u32, replay_cache: bool, rng: Box<dyn Csprng>) -> Self {
        Self {
            id,
            keys,
            delta_t,
            cache: ReplayCache::new(2 * delta_t as u64, replay_cache),
            sessions: BTreeMap::new(),
            outcome: None,
            meter: Meter::new(),
            log: Log::default(),
            rng,
        }
    }

    fn reject(&mut self, now: u64, msg: &ProtocolMessage, reason: Reason) {
        self.log.reject(now, Some(msg), reason);
        if self.outcome.is_none() {
            self.outcome = Some(Status::Terminated(reason));
        }
    }

    fn fail_session(&mut self, now: u64, msg: &ProtocolMessage, reason: Reason) {
        self.log.reject(now, Some(msg), reason);
        self.sessions.insert(msg.sender, Session::Failed);
        self.outcome = Some(Status::Terminated(reason));
    }

    fn on_request(&mut self, msg: &ProtocolMessage, sealed: &[u8], now: u64, out: &mut Outbox) {
        let Some(key) = self.keys.sym_keys.get(&msg.sender).cloned() else {
            return self.reject(now, msg, Reason::Unauthorized);
        };
        let Ok(plain) = self.meter.sym_decrypt(&key, sealed) else {
            return self.reject(now, msg, Reason::DecryptFailure);
        };
        let Some(body) = RequestBody::decode(&plain) else {
            return self.reject(now, msg, Reason::Malformed);
        };
        if !tokens::id_veri(msg.sender, body.clients.leader()) || body.clients.len() != msg.group_size as usize {
            return self.reject(now, msg, Reason::IdMismatch);
        }
        if !tokens::ts_veri(body.ts, timestamp(now), self.delta_t) {
            return self.reject(now, msg, Reason::Stale);
        }
        if !self.cache.admit(msg.sender, body.ts, &body.nonce, now) {
            return self.reject(now, msg, Reason::Duplicate);
        }
        if matches!(self.sessions.get(&msg.sender), Some(Session::Granted { .. })) {
            return self.reject(now, msg, Reason::Unexpected);
        }
        if !authorized(&self.keys.authorizations, body.target, body.clients.as_slice())
            || !self.keys.target_public.contains_key(&body.target)
            || !body.clients.as_slice().iter().all(|c| self.keys.sym_keys.contains_key(c))
        {
            return self.reject(now, msg, Reason::Unauthorized);
        }

        let en2 = Nonce::en(&mut self.rng);
        let sealed = self.meter.sym_encrypt(&key, &concat(&[body.nonce.as_bytes(), en2.as_bytes()]));
        out.send(ProtocolMessage {
            direction: Direction::Res,
            sender: self.id,
            receiver: msg.sender,
            group_size: msg.group_size,
            hop: 0,
            payload: Payload::HgakaChallenge { sealed },
        });
        self.sessions.insert(msg.sender, Session::AwaitProof { clients: body.clients, target: body.target, en2 });
        self.outcome = Some(Status::Active);
    }

    fn on_proof(&mut self, msg: &ProtocolMessage, hm: &[u8; 32], sealed: &[u8], now: u64, out: &mut Outbox) {
        let Some(Session::AwaitProof { clients, target, en2 }) = self.sessions.get(&msg.sender) else {
            return self.reject(now, msg, Reason::Unexpected);
        };
        let (clients, target, en2) = (clients.clone(), *target, *en2);
        if msg.group_size as usize != clients.len() {
            return self.reject(now, msg, Reason::Malformed);
        }
        let key = self.keys.sym_keys[&msg.sender].clone();
        let Ok(plain) = self.meter.sym_decrypt(&key, sealed) else {
            return self.reject(now, msg, Reason::DecryptFailure);
        };
        let Some([echo, en3]) = fields::<2>(&plain) else {
            return self.reject(now, msg, Reason::Malformed);
        };
        if !tokens::en_veri(&en2, &Nonce::new(NonceKind::En, echo)) {
            return self.fail_session(now, msg, Reason::NonceMismatch);
        }
        let sym_keys = &self.keys.sym_keys;
        let verified = tokens::hm_veri(&mut self.meter, hm, clients.as_slice(), |id| sym_keys.get(&id).cloned(), &en2);
        if verified != Ok(true) {
            return self.fail_session(now, msg, Reason::HmMismatch);
        }

        // S7: OrNonces, per-client EnNonces, SK and the target package
        let nc = clients.len();
        let or_nonces: Vec<Nonce> = (0..nc).map(|_| Nonce::or(&mut self.rng)).collect();
        let sk = SymKey::random(&mut self.rng);
        let mut client_shares = Vec::with_capacity(nc - 1);
        for (i, id) in clients.non_leaders().iter().enumerate() {
            let en_i = Nonce::en(&mut self.rng);
            let k = sym_keys[id].clone();
            client_shares.push(self.meter.sym_encrypt(&k, &concat(&[or_nonces[i].as_bytes(), en_i.as_bytes()])));
        }
        let leader_share = self.meter.sym_encrypt(&key, &concat(&[sk.as_bytes(), or_nonces[nc - 1].as_bytes(), &en3]));
        let pk = &self.keys.target_public[&target];
        let veri = EncAuthVeriToken::issue(&mut self.meter, pk, &or_nonces).to_bytes(pk);
        let k_gd = self.keys.group_keys[&target].clone();
        let k_d = self.keys.sym_keys[&target].clone();
        let ek_gd = self.meter.sym_encrypt(&k_gd, sk.as_bytes());
        let inner = concat(&[&ek_gd, &veri]);
        let target_package = self.meter.sym_encrypt(&k_d, &inner);
        let package_digest = self.meter.hash(&inner);

        out.send(ProtocolMessage {
            direction: Direction::Res,
            sender: self.id,
            receiver: msg.sender,
            group_size: msg.group_size,
            hop: 0,
            payload: Payload::HgakaGrant { client_shares, leader_share, target_package, package_digest },
        });
        self.sessions.insert(msg.sender, Session::Granted { sk });
        self.outcome = Some(Status::Completed);
    }
}

impl Actor for AuthServer {
    fn id(&self) -> EntityId {
        self.id
    }

    fn role(&self) -> Role {
        Role::AuthServer
    }

    fn status(&self) -> Status {
        self.outcome.unwrap_or(Status::Active)
    }

    fn step(&self) -> &'static str {
        match self.sessions.values().last() {
            None => "idle",
            Some(Session::AwaitProof { .. }) => "S2-HGAKA",
            Some(Session::Granted { .. }) => "S7-HGAKA",
            Some(Session::Failed) => "terminated",
        }
    }

    fn meter(&self) -> &Meter {
        &self.meter
    }

    fn rejections(&self) -> &[Rejection] {
        &self.log.0
    }

    fn session_key(&self) -> Option<SymKey> {
        self.sessions.values().find_map(|s| match s {
            Session::Granted { sk } => Some(sk.clone()),
            _ => None,
        })
    }

    fn on_message(&mut self, msg: &ProtocolMessage, now: u64, out: &mut Outbox) {
        self.meter.set_phase(Phase::Hgaka);
        match &msg.payload {
            Payload::HgakaRequest { sealed } => self.on_request(msg, sealed, now, out),
            Payload::HgakaProof { hm, sealed } => self.on_proof(msg, hm, sealed, now, out),
            _ => self.reject(now, msg, Reason::Unexpected),
        }
    }

    fn on_malformed(&mut self, _err: &MalformedMessage, now: u64) {
        self.log.reject(now, None, Reason::Malformed);
    }
}
