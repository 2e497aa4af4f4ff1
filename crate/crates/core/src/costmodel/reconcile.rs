use std::fmt;

use super::{comm, comp, CostError, CostKind, OpCounts, Protocol};
use crate::netsim::RunTranscript;

/// One quantity where a run departs from the closed-form value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    pub protocol: Protocol,
    pub what: String,
    pub expected: u64,
    pub measured: u64,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.protocol {
            Protocol::Hgaka => "hgaka",
            Protocol::Hga => "hga",
        };
        write!(f, "{p} {}: expected {}, measured {}", self.what, self.expected, self.measured)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconciliation {
    pub nc: usize,
    pub discrepancies: Vec<Discrepancy>,
}

impl Reconciliation {
    pub fn is_clean(&self) -> bool {
        self.discrepancies.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = format!("reconciliation nc={}: {} discrepancies\n", self.nc, self.discrepancies.len());
        for d in &self.discrepancies {
            s.push_str(&format!("  {d}\n"));
        }
        s
    }
}

struct Checker {
    protocol: Protocol,
    found: Vec<Discrepancy>,
}

impl Checker {
    fn eq(&mut self, what: impl Into<String>, expected: u64, measured: u64) {
        if expected != measured {
            self.found.push(Discrepancy { protocol: self.protocol, what: what.into(), expected, measured });
        }
    }

    fn ops(&mut self, what: &str, expected: OpCounts, measured: OpCounts) {
        for k in CostKind::ALL {
            self.eq(format!("{what} {k}"), expected.get(k), measured.get(k));
        }
    }
}

/// Compares an honest run against the formulas for `nc`: message counts and
/// payload bits per message kind, operation totals, and each actor's
/// operations against its role's share.
pub fn reconcile(t: &RunTranscript, nc: usize) -> Result<Reconciliation, CostError> {
    let mut found = Vec::new();
    for protocol in [Protocol::Hgaka, Protocol::Hga] {
        let phase = protocol.into();
        let expected_comm = comm(protocol, nc)?;
        let expected_comp = comp(protocol, nc)?;
        let mut c = Checker { protocol, found: Vec::new() };

        c.eq("payload bits", expected_comm.bits, t.payload_bits(phase));
        c.eq("messages", expected_comm.messages(), t.message_count(phase) as u64);
        for row in &expected_comm.breakdown {
            let sends: Vec<_> = t.sends().filter(|(_, m)| m.tag.label() == row.label).collect();
            c.eq(format!("{} messages", row.label), row.messages, sends.len() as u64);
            c.eq(format!("{} bits", row.label), row.bits, sends.iter().map(|(_, m)| m.payload_bits).sum());
        }

        c.ops("total", expected_comp.counts, t.ops(phase).into());
        for (id, actor) in &t.actors {
            let each = expected_comp.role(actor.role).map(|r| r.each).unwrap_or_default();
            c.ops(&format!("{} {id}", actor.role), each, actor.counter(phase).into());
        }
        found.extend(c.found);
    }
    Ok(Reconciliation { nc, discrepancies: found })
}
