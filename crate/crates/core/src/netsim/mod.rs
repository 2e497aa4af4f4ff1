//! Discrete-event transport with a logical clock and a scriptable adversary.
//!
//! Events are ordered by `(time, enqueue sequence)`, so equal-time events run
//! FIFO and a run is a pure function of `(config, registry, script, seed)`.

mod adversary;
mod scenarios;
mod transcript;

pub use adversary::{item_range, AdvAction, AdversaryScript, Forgery, Match, Rule};
pub use scenarios::{evaluate, scenario_suite, Expectation, Scenario, ScenarioResult};
pub use transcript::{ActorSummary, Entry, EntryKind, MessageRecord, Origin, RunTranscript};

use std::collections::BTreeMap;

use crate::actors::{Actor, AuthServer, Client, GroupConfig, KeyRegistry, Leader, Outbox, Status, Target, TimerId};
use crate::crypto::rng::seeded;
use crate::crypto::{sym_decrypt, SymKey};
use crate::wire::{self, EntityId, ProtocolMessage};

pub const DEFAULT_LATENCY_MS: u64 = 10;

/// OrNonces are 128-bit RSA plaintexts, so the modulus must exceed them.
pub const MIN_MODULUS_BITS: u64 = 130;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("event queue drained at t={0} with the leader still active")]
    Deadlock(u64),
    #[error("run exceeded {0} events")]
    EventLimit(usize),
    #[error("inconsistent configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone)]
pub struct NetConfig {
    pub latency: u64,
    /// Per-link overrides of `latency`.
    pub links: BTreeMap<(EntityId, EntityId), u64>,
    pub max_events: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self { latency: DEFAULT_LATENCY_MS, links: BTreeMap::new(), max_events: 1_000_000 }
    }
}

impl NetConfig {
    fn latency(&self, from: EntityId, to: EntityId) -> u64 {
        self.links.get(&(from, to)).copied().unwrap_or(self.latency)
    }
}

enum Event {
    Start(EntityId),
    Deliver { to: EntityId, origin: Origin, bytes: Vec<u8> },
    Timer { actor: EntityId, id: TimerId },
}

struct Scheduler {
    queue: BTreeMap<(u64, u64), Event>,
    seq: u64,
}

impl Scheduler {
    fn push(&mut self, time: u64, event: Event) {
        self.queue.insert((time, self.seq), event);
        self.seq += 1;
    }
}

fn build_actors(
    config: &GroupConfig,
    registry: &KeyRegistry,
    seed: u64,
) -> Result<BTreeMap<EntityId, Box<dyn Actor>>, SimError> {
    let missing = |what: &str| SimError::Config(format!("registry has no {what}"));
    let mut actors: BTreeMap<EntityId, Box<dyn Actor>> = BTreeMap::new();
    let as_keys = registry.as_view();
    actors.insert(
        config.as_id,
        Box::new(AuthServer::new(
            config.as_id,
            as_keys,
            config.delta_t,
            config.replay_cache,
            Box::new(seeded(seed, 0)),
        )),
    );
    let target_keys = registry.target_view(config.target).ok_or_else(|| missing("target keys"))?;
    if target_keys.keypair.public().modulus_bits() < MIN_MODULUS_BITS {
        return Err(SimError::Config(format!(
            "target modulus of {} bits cannot carry 128-bit OrNonces",
            target_keys.keypair.public().modulus_bits()
        )));
    }
    actors.insert(
        config.target,
        Box::new(Target::new(
            config.target,
            target_keys,
            config.delta_t,
            config.replay_cache,
            Box::new(seeded(seed, 1)),
        )),
    );
    for (i, id) in config.clients.as_slice().iter().enumerate() {
        let keys = registry.client_view(*id, config.target).ok_or_else(|| missing("client key"))?;
        let actor: Box<dyn Actor> = if *id == config.leader() {
            Box::new(Leader::new(config.clone(), keys, Box::new(seeded(seed, 2 + i as u64))))
        } else {
            Box::new(Client::new(*id, config.clone(), keys).expect("non-leader member"))
        };
        actors.insert(*id, actor);
    }
    Ok(actors)
}

/// Runs HGAKA followed by HGA to quiescence under `script`.
pub fn run(
    config: &GroupConfig,
    registry: &KeyRegistry,
    script: &AdversaryScript,
    seed: u64,
) -> Result<RunTranscript, SimError> {
    run_with(config, registry, script, seed, &NetConfig::default())
}

pub fn run_with(
    config: &GroupConfig,
    registry: &KeyRegistry,
    script: &AdversaryScript,
    seed: u64,
    net: &NetConfig,
) -> Result<RunTranscript, SimError> {
    let mut actors = build_actors(config, registry, seed)?;
    let mut script = script.clone();
    let mut sched = Scheduler { queue: BTreeMap::new(), seq: 0 };
    let mut entries = Vec::new();
    let mut wire_seen: Vec<Vec<u8>> = Vec::new();
    let leader = config.leader();
    sched.push(0, Event::Start(leader));

    let mut processed = 0usize;
    let mut now = 0;
    while let Some(((time, _), event)) = sched.queue.pop_first() {
        processed += 1;
        if processed > net.max_events {
            return Err(SimError::EventLimit(net.max_events));
        }
        now = time;
        let mut out = Outbox::default();
        let sender = match event {
            Event::Start(id) => {
                let actor = actors.get_mut(&id).expect("start target exists");
                actor.on_start(now, &mut out);
                id
            }
            Event::Timer { actor: id, id: timer } => {
                let actor = actors.get_mut(&id).expect("timer owner exists");
                let before = actor.meter().total();
                actor.on_timer(timer, now, &mut out);
                entries.push(Entry {
                    time: now,
                    kind: EntryKind::Timer { actor: id, ops: actor.meter().total() - before },
                });
                id
            }
            Event::Deliver { to, origin, bytes } => {
                let Some(actor) = actors.get_mut(&to) else { continue };
                let before = actor.meter().total();
                let rejections = actor.rejections().len();
                match wire::parse(&bytes) {
                    Ok(msg) => actor.on_message(&msg, now, &mut out),
                    Err(e) => actor.on_malformed(&e, now),
                }
                let rejected = actor.rejections()[rejections..].last().map(|r| r.reason);
                let ops = actor.meter().total() - before;
                entries.push(Entry { time: now, kind: EntryKind::Deliver { to, origin, bytes, ops, rejected } });
                to
            }
        };

        for (delay, id) in out.timers {
            sched.push(now + delay, Event::Timer { actor: sender, id });
        }
        for msg in out.messages {
            dispatch(&msg, now, net, &mut script, &mut sched, &mut entries, &mut wire_seen);
        }
    }

    if actors[&leader].status() == Status::Active {
        return Err(SimError::Deadlock(now));
    }

    let summaries = actors
        .iter()
        .map(|(id, a)| {
            let m = a.meter();
            let summary = ActorSummary {
                role: a.role(),
                status: a.status(),
                step: a.step(),
                hgaka: m.counter(crate::crypto::Phase::Hgaka),
                hga: m.counter(crate::crypto::Phase::Hga),
                rejections: a.rejections().to_vec(),
            };
            (*id, summary)
        })
        .collect();

    let keys: Vec<Option<SymKey>> = actors.values().map(|a| a.session_key()).collect();
    let shared_session_key = keys.iter().all(|k| k.is_some() && *k == keys[0]);
    let recoverable = recoverable_secrets(&actors, registry, &script, &wire_seen);

    Ok(RunTranscript {
        nc: config.nc(),
        leader,
        entries,
        actors: summaries,
        shared_session_key,
        recoverable,
        end_time: now,
    })
}

fn dispatch(
    msg: &ProtocolMessage,
    now: u64,
    net: &NetConfig,
    script: &mut AdversaryScript,
    sched: &mut Scheduler,
    entries: &mut Vec<Entry>,
    wire_seen: &mut Vec<Vec<u8>>,
) {
    let bytes = wire::serialize(msg);
    let latency = net.latency(msg.sender, msg.receiver);
    let action = script.decide(msg);
    let record = MessageRecord {
        from: msg.sender,
        to: msg.receiver,
        tag: msg.tag(),
        hop: msg.hop,
        bytes: bytes.clone(),
        payload_bits: wire::payload_bits(msg),
        wire_bits: 8 * bytes.len() as u64,
    };
    entries.push(Entry { time: now, kind: EntryKind::Send { msg: record, action: action.label() } });
    wire_seen.push(bytes.clone());

    let honest = |bytes: Vec<u8>| Event::Deliver { to: msg.receiver, origin: Origin::Honest, bytes };
    match action {
        AdvAction::Pass | AdvAction::Observe => sched.push(now + latency, honest(bytes)),
        AdvAction::Drop => {}
        AdvAction::Delay(d) => sched.push(now + latency + d, honest(bytes)),
        AdvAction::Replay { after } => {
            sched.push(now + latency, honest(bytes.clone()));
            sched.push(now + latency + after, Event::Deliver { to: msg.receiver, origin: Origin::Adversary, bytes });
        }
        AdvAction::Tamper { item, offset, xor } => {
            let mut b = bytes;
            adversary::tamper(&mut b, item, offset, xor);
            wire_seen.push(b.clone());
            sched.push(now + latency, Event::Deliver { to: msg.receiver, origin: Origin::Adversary, bytes: b });
        }
        AdvAction::Inject(forgeries) => {
            for f in forgeries {
                wire_seen.push(f.bytes.clone());
                sched.push(now + latency, Event::Deliver { to: f.to, origin: Origin::Adversary, bytes: f.bytes });
            }
            sched.push(now + latency, honest(bytes));
        }
    }
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

fn recoverable_secrets(
    actors: &BTreeMap<EntityId, Box<dyn Actor>>,
    registry: &KeyRegistry,
    script: &AdversaryScript,
    wire_seen: &[Vec<u8>],
) -> Vec<String> {
    let mut secrets: Vec<(String, Vec<u8>)> = Vec::new();
    for (id, a) in actors {
        if let Some(k) = a.session_key() {
            secrets.push(("SK".into(), k.as_bytes().to_vec()));
        }
        if let Some(n) = a.or_nonce() {
            secrets.push((format!("OrNonce@{id}"), n.as_bytes().to_vec()));
        }
    }
    for (id, k) in &registry.sym_keys {
        secrets.push((format!("K@{id}"), k.as_bytes().to_vec()));
    }
    for (id, k) in &registry.group_keys {
        secrets.push((format!("KG@{id}"), k.as_bytes().to_vec()));
    }

    // everything readable: raw wire bytes plus items opened with granted keys
    let mut readable: Vec<Vec<u8>> = wire_seen.to_vec();
    for bytes in wire_seen {
        for i in 0.. {
            let Some(r) = item_range(bytes, i) else { break };
            for (_, key) in &script.granted_keys {
                if let Ok(plain) = sym_decrypt(key, &bytes[r.clone()]) {
                    readable.push(plain);
                }
            }
        }
    }

    let mut found: Vec<String> =
        secrets.into_iter().filter(|(_, s)| readable.iter().any(|r| contains(r, s))).map(|(l, _)| l).collect();
    found.sort();
    found.dedup();
    found
}

/// Convenience for tests and the CLI: provision keys from `seed` and run.
pub fn run_fresh(
    config: &GroupConfig,
    key_size: crate::crypto::KeySize,
    script: &AdversaryScript,
    seed: u64,
) -> Result<(KeyRegistry, RunTranscript), SimError> {
    let registry = KeyRegistry::provision(config, key_size, &mut seeded(seed, u64::MAX));
    let t = run(config, &registry, script, seed)?;
    Ok((registry, t))
}
