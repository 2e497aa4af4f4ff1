//! Canned attack scripts, one per threat class, with their expected outcomes.

use rand::{Rng, RngCore};

use crate::actors::{GroupConfig, Reason, RequestBody, Role};
use crate::crypto::rng::seeded;
use crate::crypto::{sym_encrypt, Nonce, OpCounter, SymKey};
use crate::wire::{serialize, Direction, EntityId, MessageTag, Payload, ProtocolMessage, Timestamp};

use super::{AdvAction, AdversaryScript, Forgery, Match, Origin, Rule, RunTranscript};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectation {
    /// Role expected to log one of `reasons`.
    pub rejected_by: Option<Role>,
    pub reasons: Vec<Reason>,
    /// True: every actor completes with a shared SK. False: the group must
    /// not complete.
    pub honest_completes: bool,
    /// Upper bound on the work any adversary-originated delivery may cost.
    pub per_forgery_budget: Option<OpCounter>,
    /// Deliveries rejected for this reason must cost no RSA operation.
    pub no_rsa_on: Option<Reason>,
    pub nothing_recoverable: bool,
}

impl Expectation {
    fn completes() -> Self {
        Self {
            rejected_by: None,
            reasons: Vec::new(),
            honest_completes: true,
            per_forgery_budget: None,
            no_rsa_on: None,
            nothing_recoverable: false,
        }
    }

    fn rejected(mut self, role: Role, reasons: &[Reason]) -> Self {
        self.rejected_by = Some(role);
        self.reasons = reasons.to_vec();
        self
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub script: AdversaryScript,
    pub expect: Expectation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioResult {
    pub name: &'static str,
    pub nc: usize,
    pub passed: bool,
    /// Failed checks; empty when `passed`.
    pub failures: Vec<String>,
}

fn message(sender: EntityId, receiver: EntityId, nc: usize, payload: Payload) -> Vec<u8> {
    serialize(&ProtocolMessage { direction: Direction::Req, sender, receiver, group_size: nc as u16, hop: 0, payload })
}

fn random_bytes(rng: &mut impl RngCore, len: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    rng.fill_bytes(&mut v);
    v
}

/// The full suite for one group. Forged material is drawn from `seed`.
pub fn scenario_suite(config: &GroupConfig, seed: u64) -> Vec<Scenario> {
    let mut rng = seeded(seed, 0xad);
    let nc = config.nc();
    let leader = config.leader();
    let base = Expectation::completes;

    // Msg1 with a plausible body, sealed under a key the adversary made up
    let body = RequestBody {
        clients: config.clients.clone(),
        target: config.target,
        nonce: Nonce::en(&mut rng),
        ts: Timestamp(0),
    };
    let fake_key = SymKey::random(&mut rng);
    let forged_msg1 =
        message(leader, config.as_id, nc, Payload::HgakaRequest { sealed: sym_encrypt(&fake_key, &body.encode()) });

    let forged_msg2 = message(
        config.as_id,
        leader,
        nc,
        Payload::HgakaChallenge { sealed: sym_encrypt(&fake_key, &random_bytes(&mut rng, 32)) },
    );

    let forged_hga2 = message(
        config.target,
        leader,
        nc,
        Payload::HgaResponse {
            echo: sym_encrypt(&fake_key, &random_bytes(&mut rng, 16)),
            client_shares: (1..nc).map(|_| random_bytes(&mut rng, 48)).collect(),
        },
    );

    let flood: Vec<Forgery> = (0..100)
        .map(|_| {
            let len = 16 * rng.gen_range(1..8);
            Forgery {
                to: config.as_id,
                bytes: message(leader, config.as_id, nc, Payload::HgakaRequest { sealed: random_bytes(&mut rng, len) }),
            }
        })
        .collect();

    let on = |tag| Match::tag(tag);
    vec![
        Scenario { name: "honest", script: AdversaryScript::passive(), expect: base() },
        Scenario {
            name: "client-impersonation",
            script: AdversaryScript::passive().with_rule(Rule::once(
                on(MessageTag::HgakaRequest),
                AdvAction::Inject(vec![Forgery { to: config.as_id, bytes: forged_msg1 }]),
            )),
            expect: base().rejected(Role::AuthServer, &[Reason::DecryptFailure, Reason::Malformed]),
        },
        Scenario {
            name: "as-impersonation",
            script: AdversaryScript::passive().with_rule(Rule::once(
                on(MessageTag::HgakaRequest),
                AdvAction::Inject(vec![Forgery { to: leader, bytes: forged_msg2 }]),
            )),
            expect: base().rejected(Role::Leader, &[Reason::DecryptFailure, Reason::Malformed]),
        },
        Scenario {
            name: "target-impersonation",
            script: AdversaryScript::passive().with_rule(Rule::once(
                on(MessageTag::HgaRequest),
                AdvAction::Inject(vec![Forgery { to: leader, bytes: forged_hga2 }]),
            )),
            expect: base().rejected(Role::Leader, &[Reason::DecryptFailure, Reason::Malformed]),
        },
        Scenario {
            name: "tamper-hm",
            script: AdversaryScript::passive().with_rule(Rule::once(
                on(MessageTag::HmLink).hop(1),
                AdvAction::Tamper { item: 0, offset: 0, xor: 0x01 },
            )),
            expect: Expectation { honest_completes: false, ..base().rejected(Role::AuthServer, &[Reason::HmMismatch]) },
        },
        Scenario {
            name: "eavesdrop",
            script: AdversaryScript::passive().with_rule(Rule::new(Match::any(), AdvAction::Observe)),
            expect: Expectation { nothing_recoverable: true, ..base() },
        },
        Scenario {
            name: "replay-msg1",
            script: AdversaryScript::passive()
                .with_rule(Rule::once(on(MessageTag::HgakaRequest), AdvAction::Replay { after: 25 })),
            expect: base().rejected(Role::AuthServer, &[Reason::Duplicate]),
        },
        Scenario {
            name: "replay-hga-msg1",
            script: AdversaryScript::passive()
                .with_rule(Rule::once(on(MessageTag::HgaRequest), AdvAction::Replay { after: 25 })),
            expect: base().rejected(Role::Target, &[Reason::Duplicate]),
        },
        Scenario {
            name: "dos-flood",
            script: AdversaryScript::passive()
                .with_rule(Rule::once(on(MessageTag::HgakaRequest), AdvAction::Inject(flood))),
            expect: Expectation {
                per_forgery_budget: Some(OpCounter { se: 1, ..OpCounter::default() }),
                ..base().rejected(Role::AuthServer, &[Reason::DecryptFailure, Reason::Malformed])
            },
        },
        Scenario {
            name: "dos-hash",
            script: AdversaryScript::passive().with_rule(Rule::once(
                on(MessageTag::HgaRequest),
                AdvAction::Tamper { item: nc + 2, offset: 0, xor: 0x80 },
            )),
            expect: Expectation {
                no_rsa_on: Some(Reason::HashMismatch),
                ..base().rejected(Role::Target, &[Reason::HashMismatch])
            },
        },
    ]
}

fn within(ops: OpCounter, budget: OpCounter) -> bool {
    ops.se <= budget.se && ops.ae <= budget.ae && ops.ad <= budget.ad && ops.h <= budget.h && ops.hmac <= budget.hmac
}

/// Checks a finished run against the scenario's expectation.
pub fn evaluate(scenario: &Scenario, t: &RunTranscript) -> ScenarioResult {
    let e = &scenario.expect;
    let mut failures = Vec::new();

    if let Some(role) = e.rejected_by {
        if !t.role(role).any(|(_, a)| a.rejected_with(&e.reasons)) {
            let labels: Vec<_> = e.reasons.iter().map(|r| r.label()).collect();
            failures.push(format!("{role} never rejected with {}", labels.join("|")));
        }
    }
    if e.honest_completes != t.all_completed() {
        failures.push(format!(
            "expected honest completion = {}, leader ended {}",
            e.honest_completes,
            t.leader_summary().status
        ));
    }
    if let Some(budget) = e.per_forgery_budget {
        let role = e.rejected_by;
        for (time, to, origin, ops, _) in t.deliveries() {
            let target_role = t.actors.get(&to).map(|a| a.role);
            if origin == Origin::Adversary && (role.is_none() || target_role == role) && !within(ops, budget) {
                failures.push(format!("forgery at t={time} cost {ops}, budget {budget}"));
            }
        }
    }
    if let Some(reason) = e.no_rsa_on {
        let hits: Vec<_> = t.deliveries().filter(|d| d.4 == Some(reason)).collect();
        if hits.is_empty() {
            failures.push(format!("no delivery was rejected with {reason}"));
        }
        for (time, _, _, ops, _) in hits {
            if ops.ad != 0 || ops.ae != 0 {
                failures.push(format!("{reason} at t={time} still spent RSA work: {ops}"));
            }
        }
    }
    if e.nothing_recoverable && !t.recoverable.is_empty() {
        failures.push(format!("adversary recovered {:?}", t.recoverable));
    }

    ScenarioResult { name: scenario.name, nc: t.nc, passed: failures.is_empty(), failures }
}
