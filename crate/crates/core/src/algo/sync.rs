//! Barrier bookkeeping shared by the synchronous algorithms: which messages
//! an iteration waits for, and a per-step mailbox that buffers early
//! arrivals.

use std::collections::BTreeMap;

use crate::problem::{AgentId, Cost};

/// Message kinds of MGM and MGM-2 on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SyncKind {
    Value,
    Gain,
    /// Offer or no-offer notice.
    Offer,
    /// Accept or reject.
    Response,
    /// Approve or disapprove.
    Approval,
}

/// Pairing role of an MGM-2 agent within one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// MGM agents, and MGM-2 agents that neither offered nor accepted.
    Unpaired,
    /// Sent an offer and waits for the target's answer.
    Offerer { target: AgentId },
    /// Part of an agreed pair.
    Paired { partner: AgentId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Iteration {
    Mgm(u8),
    Mgm2(u8),
}

/// Messages that must be present before `iteration` can fire.
pub fn expected_messages(
    neighbors: &[AgentId],
    iteration: Iteration,
    role: Role,
) -> Vec<(AgentId, SyncKind)> {
    let all = |kind| neighbors.iter().map(|&k| (k, kind)).collect();
    match (iteration, role) {
        (Iteration::Mgm(1), _) | (Iteration::Mgm2(1), _) => all(SyncKind::Value),
        (Iteration::Mgm(2), _) | (Iteration::Mgm2(4), _) => all(SyncKind::Gain),
        (Iteration::Mgm2(2), _) => all(SyncKind::Offer),
        (Iteration::Mgm2(3), Role::Offerer { target }) => vec![(target, SyncKind::Response)],
        (Iteration::Mgm2(5), Role::Paired { partner }) => vec![(partner, SyncKind::Approval)],
        _ => Vec::new(),
    }
}

/// Early messages keyed by step and kind; nothing is dropped.
#[derive(Debug, Clone)]
pub struct Mailbox<M> {
    slots: BTreeMap<(u64, SyncKind), BTreeMap<AgentId, M>>,
}

impl<M> Default for Mailbox<M> {
    fn default() -> Self {
        Self {
            slots: BTreeMap::new(),
        }
    }
}

impl<M> Mailbox<M> {
    pub fn put(&mut self, step: u64, kind: SyncKind, from: AgentId, msg: M) {
        let prev = self.slots.entry((step, kind)).or_default().insert(from, msg);
        assert!(prev.is_none(), "duplicate {kind:?} from {from} in step {step}");
    }

    pub fn has_all(&self, step: u64, expected: &[(AgentId, SyncKind)]) -> bool {
        expected.iter().all(|&(from, kind)| {
            self.slots
                .get(&(step, kind))
                .is_some_and(|slot| slot.contains_key(&from))
        })
    }

    /// Removes and returns every message of `kind` for `step`.
    pub fn take(&mut self, step: u64, kind: SyncKind) -> BTreeMap<AgentId, M> {
        self.slots.remove(&(step, kind)).unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.values().all(BTreeMap::is_empty)
    }
}

/// Local winner rule on one edge: strictly larger gain wins, equal gains go
/// to the smaller agent id. Exactly one side of any edge wins.
pub fn beats(gain: Cost, me: AgentId, other_gain: Cost, other: AgentId) -> bool {
    gain > other_gain || (gain == other_gain && me < other)
}
