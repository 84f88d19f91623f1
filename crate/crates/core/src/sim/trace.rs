use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LatencyModel, Nclo};
use crate::problem::{AgentId, Cost, ProblemInstance, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Initial,
    Unilateral,
    Bilateral,
    /// Value picked while choosing a color in the ordering phase.
    Ordering,
}

/// One committed value selection. Pair moves carry both agents' values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub nclo: Nclo,
    pub seq: u64,
    pub step: u64,
    pub kind: MoveKind,
    pub by: AgentId,
    pub changes: Vec<(AgentId, Value)>,
    /// Improvement the deciding agent computed from its local view.
    pub gain: Cost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "note", rename_all = "lowercase")]
pub enum Note {
    Color { step: u64, color: u32 },
    Offer { step: u64, to: AgentId },
    Paired { step: u64, offerer: AgentId, receiver: AgentId },
    Unilateral { step: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub nclo: Nclo,
    pub agent: AgentId,
    pub note: Note,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentMeters {
    pub messages_sent: u64,
    pub idle_nclos: Nclo,
    pub busy_nclos: Nclo,
    pub final_clock: Nclo,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Nothing left in flight and no agent waiting.
    Quiescent,
    BudgetExhausted,
    /// No value changed for the configured number of steps.
    Converged,
    /// Queue drained while agents still expected messages.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub algorithm: String,
    pub latency: LatencyModel,
    pub budget: Nclo,
    pub sample_interval: Nclo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub meta: RunMeta,
    pub initial: Vec<Value>,
    /// Sorted by `(nclo, seq)`.
    pub moves: Vec<Move>,
    pub notes: Vec<Annotation>,
    pub meters: Vec<AgentMeters>,
    /// Send time of every message, sorted.
    pub send_times: Vec<Nclo>,
    /// Every `[from, to)` interval an agent spent waiting.
    pub idle_gaps: Vec<(Nclo, Nclo)>,
    pub message_kinds: BTreeMap<String, u64>,
    pub outcome: Outcome,
    /// Clock of the last processed event.
    pub end_nclo: Nclo,
    /// Global cost sampled every `sample_interval` up to the budget.
    pub curve: Vec<(Nclo, Cost)>,
}

/// A point of the dense cost curve: the global cost right after a move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensePoint {
    pub nclo: Nclo,
    pub cost: Cost,
    /// Index into `Trace::moves`; `None` for the initial assignment.
    pub move_index: Option<usize>,
}

impl Trace {
    pub fn stalled(&self) -> bool {
        self.outcome == Outcome::Stalled
    }

    /// `(nclo, agent, new_value)` for every value selection, starting with the
    /// initial values at time 0.
    pub fn value_events(&self) -> Vec<(Nclo, AgentId, Value)> {
        self.initial
            .iter()
            .enumerate()
            .map(|(a, &v)| (0, a, v))
            .chain(
                self.moves
                    .iter()
                    .flat_map(|m| m.changes.iter().map(move |&(a, v)| (m.nclo, a, v))),
            )
            .collect()
    }

    pub fn assignment_at(&self, t: Nclo) -> Vec<Value> {
        let mut values = self.initial.clone();
        for m in self.moves.iter().take_while(|m| m.nclo <= t) {
            for &(a, v) in &m.changes {
                values[a] = v;
            }
        }
        values
    }

    pub fn final_assignment(&self) -> Vec<Value> {
        self.assignment_at(Nclo::MAX)
    }

    pub fn messages_total(&self) -> u64 {
        self.send_times.len() as u64
    }

    pub fn idle_total(&self) -> Nclo {
        self.meters.iter().map(|m| m.idle_nclos).sum()
    }

    /// Messages sent at or before `t`.
    pub fn messages_until(&self, t: Nclo) -> u64 {
        self.send_times.partition_point(|&s| s <= t) as u64
    }

    /// Idle NCLOs accumulated by all agents in `[0, t]`.
    pub fn idle_until(&self, t: Nclo) -> Nclo {
        self.idle_gaps
            .iter()
            .filter(|g| g.0 < t)
            .map(|&(from, to)| to.min(t) - from)
            .sum()
    }

    /// Highest step any agent completed.
    pub fn max_steps(&self) -> u64 {
        self.meters.iter().map(|m| m.steps).max().unwrap_or(0)
    }

    pub fn color_notes(&self) -> impl Iterator<Item = (u64, AgentId, u32)> + '_ {
        self.notes.iter().filter_map(|n| match n.note {
            Note::Color { step, color } => Some((step, n.agent, color)),
            _ => None,
        })
    }

    pub fn pairings(&self) -> impl Iterator<Item = (u64, AgentId, AgentId)> + '_ {
        self.notes.iter().filter_map(|n| match n.note {
            Note::Paired {
                step,
                offerer,
                receiver,
            } if n.agent == receiver => Some((step, offerer, receiver)),
            _ => None,
        })
    }
}

/// Cost after every move, for monotonicity checks; the first point is the
/// initial assignment's cost at time 0.
pub fn dense_curve(trace: &Trace, instance: &ProblemInstance) -> Vec<DensePoint> {
    let mut values = trace.initial.clone();
    let mut cost = instance.global_cost_unchecked(&values);
    let mut out = Vec::with_capacity(trace.moves.len() + 1);
    out.push(DensePoint {
        nclo: 0,
        cost,
        move_index: None,
    });
    for (idx, m) in trace.moves.iter().enumerate() {
        cost = apply_move(instance, &mut values, cost, &m.changes);
        out.push(DensePoint {
            nclo: m.nclo,
            cost,
            move_index: Some(idx),
        });
    }
    out
}

/// Applies `changes` to `values` and returns the updated global cost,
/// touching only the constraints of the changed agents.
pub(crate) fn apply_move(
    instance: &ProblemInstance,
    values: &mut [Value],
    mut cost: Cost,
    changes: &[(AgentId, Value)],
) -> Cost {
    let changed = |a: AgentId| changes.iter().any(|&(b, _)| a == b);
    for &(a, _) in changes {
        for &k in instance.neighbors(a) {
            // constraints inside the group are counted once, from their smaller end
            if changed(k) && k < a {
                continue;
            }
            cost -= instance.cost(a, k, values[a], values[k]);
        }
    }
    for &(a, v) in changes {
        values[a] = v;
    }
    for &(a, _) in changes {
        for &k in instance.neighbors(a) {
            if changed(k) && k < a {
                continue;
            }
            cost += instance.cost(a, k, values[a], values[k]);
        }
    }
    cost
}

/// Global cost of the assignment held at every multiple of the sample
/// interval, up to the budget.
pub fn cost_curve(trace: &Trace, instance: &ProblemInstance) -> Vec<(Nclo, Cost)> {
    sample_curve(
        instance,
        &trace.initial,
        &trace.moves,
        trace.meta.budget,
        trace.meta.sample_interval,
    )
}

pub(crate) fn sample_curve(
    instance: &ProblemInstance,
    initial: &[Value],
    moves: &[Move],
    budget: Nclo,
    interval: Nclo,
) -> Vec<(Nclo, Cost)> {
    let mut values = initial.to_vec();
    let mut cost = instance.global_cost_unchecked(&values);
    let mut next = 0;
    let mut out = Vec::new();
    let mut t = 0;
    loop {
        while next < moves.len() && moves[next].nclo <= t {
            cost = apply_move(instance, &mut values, cost, &moves[next].changes);
            next += 1;
        }
        out.push((t, cost));
        match t.checked_add(interval) {
            Some(nt) if nt <= budget => t = nt,
            _ => break,
        }
    }
    out
}

/// First NCLO at which the dense curve is within `fraction` of the final
/// cost (e.g. `0.01` for 1%).
pub fn nclo_to_within(trace: &Trace, instance: &ProblemInstance, fraction: f64) -> Nclo {
    let dense = dense_curve(trace, instance);
    let final_cost = dense.last().map_or(0, |p| p.cost) as f64;
    let limit = final_cost * (1.0 + fraction);
    dense
        .iter()
        .find(|p| p.cost as f64 <= limit)
        .map_or(0, |p| p.nclo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::path3;

    fn fixture(moves: Vec<Move>) -> Trace {
        Trace {
            meta: RunMeta {
                seed: 0,
                algorithm: "fixture".into(),
                latency: LatencyModel::Perfect,
                budget: 100,
                sample_interval: 10,
            },
            initial: vec![0, 0, 0],
            moves,
            notes: vec![],
            meters: vec![AgentMeters::default(); 3],
            send_times: vec![1, 3, 3, 9],
            idle_gaps: vec![(0, 4), (10, 20)],
            message_kinds: BTreeMap::new(),
            outcome: Outcome::BudgetExhausted,
            end_nclo: 100,
            curve: vec![],
        }
    }

    fn mv(nclo: Nclo, changes: Vec<(AgentId, Value)>) -> Move {
        Move {
            nclo,
            seq: nclo,
            step: 1,
            kind: MoveKind::Unilateral,
            by: changes[0].0,
            changes,
            gain: 0,
        }
    }

    #[test]
    fn constant_trace_gives_constant_curve() {
        let p = path3();
        let curve = cost_curve(&fixture(vec![]), &p);
        assert_eq!(curve.len(), 11);
        assert!(curve.iter().all(|&(_, c)| c == 13));
        assert_eq!(curve.last().unwrap().0, 100);
    }

    #[test]
    fn single_improving_event_steps_once() {
        let p = path3();
        let trace = fixture(vec![mv(25, vec![(1, 1)])]);
        let curve = cost_curve(&trace, &p);
        let drops: Vec<_> = curve.windows(2).filter(|w| w[0].1 != w[1].1).collect();
        assert_eq!(drops.len(), 1);
        assert_eq!(drops[0][0], (20, 13));
        assert_eq!(drops[0][1], (30, 3));
        let dense = dense_curve(&trace, &p);
        assert_eq!(dense.iter().map(|d| d.cost).collect::<Vec<_>>(), vec![13, 3]);
    }

    #[test]
    fn joint_moves_apply_atomically() {
        let p = path3();
        let mut values = vec![1, 0, 1];
        let before = p.global_cost(&values).unwrap();
        let after = apply_move(&p, &mut values, before, &[(0, 0), (1, 1)]);
        assert_eq!(values, vec![0, 1, 1]);
        assert_eq!(after, p.global_cost(&values).unwrap());
    }

    #[test]
    fn meters_over_time() {
        let trace = fixture(vec![]);
        assert_eq!(trace.messages_until(0), 0);
        assert_eq!(trace.messages_until(3), 3);
        assert_eq!(trace.messages_total(), 4);
        assert_eq!(trace.idle_until(2), 2);
        assert_eq!(trace.idle_until(15), 9);
        assert_eq!(trace.idle_until(1000), 14);
    }

    #[test]
    fn value_events_start_with_initial_values() {
        let trace = fixture(vec![mv(5, vec![(2, 1)])]);
        assert_eq!(
            trace.value_events(),
            vec![(0, 0, 0), (0, 1, 0), (0, 2, 0), (5, 2, 1)]
        );
        assert_eq!(trace.final_assignment(), vec![0, 0, 1]);
        assert_eq!(trace.assignment_at(4), vec![0, 0, 0]);
    }
}
