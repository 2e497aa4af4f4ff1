use subtle::ConstantTimeEq;

use crate::crypto::rng::Csprng;
use crate::crypto::{Digest, Meter, Nonce, Phase, SymKey, NONCE_LEN};
use crate::tokens::{self, EncAuthVeriToken, EncGroupAuthenticator};
use crate::wire::{Direction, EntityId, MalformedMessage, Payload, ProtocolMessage};

use super::{
    concat, sym_key, timestamp, Actor, Log, Outbox, Reason, Rejection, ReplayCache, RequestBody, Role, Status,
    TargetKeys,
};

/// Length of `EK_GD1[SK]` at the front of the target package.
const EK_GD_LEN: usize = 32;

/// Target device. Accepts any number of HGA attempts; completes on the first
/// one that verifies.
pub struct Target {
    id: EntityId,
    keys: TargetKeys,
    delta_t: u32,
    cache: ReplayCache,
    outcome: Option<Status>,
    sk: Option<SymKey>,
    meter: Meter,
    log: Log,
    rng: Box<dyn Csprng>,
}

/// Borrowed items of an HGA Msg1.
struct Request<'a> {
    sealed: &'a [u8],
    authenticator: &'a [Vec<u8>],
    target_package: &'a [u8],
    package_digest: &'a Digest,
}

impl Target {
    pub fn new(id: EntityId, keys: TargetKeys, delta_t: u32, replay_cache: bool, rng: Box<dyn Csprng>) -> Self {
        Self {
            id,
            keys,
            delta_t,
            cache: ReplayCache::new(2 * delta_t as u64, replay_cache),
            outcome: None,
            sk: None,
            meter: Meter::new(),
            log: Log::default(),
            rng,
        }
    }

    fn reject(&mut self, now: u64, msg: &ProtocolMessage, reason: Reason) {
        self.log.reject(now, Some(msg), reason);
        if !matches!(self.outcome, Some(Status::Completed)) {
            self.outcome = Some(Status::Terminated(reason));
        }
    }

    fn on_request(&mut self, msg: &ProtocolMessage, req: Request<'_>, now: u64, out: &mut Outbox) {
        let Request { sealed, authenticator, target_package, package_digest } = req;
        // (a) outer package under K_D1, then EK_GD1[SK] under K_GD1
        let Ok(inner) = self.meter.sym_decrypt(&self.keys.k_d, target_package) else {
            return self.reject(now, msg, Reason::DecryptFailure);
        };
        if inner.len() <= EK_GD_LEN {
            return self.reject(now, msg, Reason::Malformed);
        }
        let (ek_gd, veri_bytes) = inner.split_at(EK_GD_LEN);
        let Ok(sk) = self.meter.sym_decrypt(&self.keys.k_gd, ek_gd) else {
            return self.reject(now, msg, Reason::DecryptFailure);
        };
        let Ok(sk) = <[u8; 16]>::try_from(sk.as_slice()) else {
            return self.reject(now, msg, Reason::Malformed);
        };
        let sk = sym_key(sk);

        // (b) request body under SK, freshness and identities
        let Ok(plain) = self.meter.sym_decrypt(&sk, sealed) else {
            return self.reject(now, msg, Reason::DecryptFailure);
        };
        let Some(body) = RequestBody::decode(&plain) else {
            return self.reject(now, msg, Reason::Malformed);
        };
        let nc = body.clients.len();
        if body.target != self.id
            || !tokens::id_veri(msg.sender, body.clients.leader())
            || nc != msg.group_size as usize
            || authenticator.len() != nc
        {
            return self.reject(now, msg, Reason::IdMismatch);
        }
        if !tokens::ts_veri(body.ts, timestamp(now), self.delta_t) {
            return self.reject(now, msg, Reason::Stale);
        }
        if !self.cache.admit(msg.sender, body.ts, &body.nonce, now) {
            return self.reject(now, msg, Reason::Duplicate);
        }
        if matches!(self.outcome, Some(Status::Completed)) {
            return self.reject(now, msg, Reason::Unexpected);
        }
        if !body.clients.as_slice().iter().all(|c| self.keys.authorized.contains(c)) {
            return self.reject(now, msg, Reason::Unauthorized);
        }

        // (c) integrity hash before any RSA work
        let digest = self.meter.hash(&inner);
        if !bool::from(digest.ct_eq(package_digest)) {
            return self.reject(now, msg, Reason::HashMismatch);
        }

        // (d) homomorphic group check
        let pk = self.keys.keypair.public();
        let (Ok(veri), Ok(auth)) =
            (EncAuthVeriToken::from_bytes(pk, veri_bytes, nc), EncGroupAuthenticator::from_wire(pk, authenticator))
        else {
            return self.reject(now, msg, Reason::Malformed);
        };
        let Ok(or_nonces) = veri.open(&mut self.meter, &self.keys.keypair) else {
            return self.reject(now, msg, Reason::DecryptFailure);
        };
        let values: Vec<_> = or_nonces.iter().map(Nonce::to_biguint).collect();
        if tokens::homomorphic_check(&mut self.meter, pk, &values, auth.tokens()) != Ok(true) {
            return self.reject(now, msg, Reason::HomomorphicMismatch);
        }

        // S3 output: SK echo and per-client shares keyed by OrNonce
        let echo = self.meter.sym_encrypt(&sk, body.nonce.as_bytes());
        let mut client_shares = Vec::with_capacity(nc - 1);
        for or in &or_nonces[..nc - 1] {
            let en: [u8; NONCE_LEN] = *Nonce::en(&mut self.rng).as_bytes();
            client_shares.push(self.meter.sym_encrypt(&or.as_key(), &concat(&[sk.as_bytes(), &en])));
        }
        out.send(ProtocolMessage {
            direction: Direction::Res,
            sender: self.id,
            receiver: msg.sender,
            group_size: msg.group_size,
            hop: 0,
            payload: Payload::HgaResponse { echo, client_shares },
        });
        self.sk = Some(sk);
        self.outcome = Some(Status::Completed);
    }
}

impl Actor for Target {
    fn id(&self) -> EntityId {
        self.id
    }

    fn role(&self) -> Role {
        Role::Target
    }

    fn status(&self) -> Status {
        self.outcome.unwrap_or(Status::Active)
    }

    fn step(&self) -> &'static str {
        match self.outcome {
            Some(Status::Completed) => "S3-HGA",
            Some(Status::Terminated(_)) => "terminated",
            _ => "idle",
        }
    }

    fn meter(&self) -> &Meter {
        &self.meter
    }

    fn rejections(&self) -> &[Rejection] {
        &self.log.0
    }

    fn session_key(&self) -> Option<SymKey> {
        self.sk.clone()
    }

    fn on_message(&mut self, msg: &ProtocolMessage, now: u64, out: &mut Outbox) {
        self.meter.set_phase(Phase::Hga);
        match &msg.payload {
            Payload::HgaRequest { sealed, authenticator, target_package, package_digest } => {
                let req = Request { sealed, authenticator, target_package, package_digest };
                self.on_request(msg, req, now, out)
            }
            _ => self.reject(now, msg, Reason::Unexpected),
        }
    }

    fn on_malformed(&mut self, _err: &MalformedMessage, now: u64) {
        self.log.reject(now, None, Reason::Malformed);
    }
}
