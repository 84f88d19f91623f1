//! Executable checks of the guarantees: monotone cost curves, 2-opt final
//! assignments, proper colorings, and exact optima for tiny instances.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::problem::{AgentId, Cost, ProblemInstance, Value};
use crate::sim::{dense_curve, MoveKind, Nclo, Trace};

/// Largest search space [`brute_force_optimum`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneViolation {
    pub nclo: Nclo,
    pub agent: AgentId,
    pub before: Cost,
    pub after: Cost,
}

impl fmt::Display for MonotoneViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cost rose from {} to {} at nclo {} (move by agent {})",
            self.before, self.after, self.nclo, self.agent
        )
    }
}

/// Passes iff the cost never rises from one move to the next.
pub fn check_monotone(trace: &Trace, instance: &ProblemInstance) -> Result<(), MonotoneViolation> {
    let dense = dense_curve(trace, instance);
    for w in dense.windows(2) {
        if w[1].cost > w[0].cost {
            let m = &trace.moves[w[1].move_index.expect("only the first point is initial")];
            return Err(MonotoneViolation {
                nclo: w[1].nclo,
                agent: m.by,
                before: w[0].cost,
                after: w[1].cost,
            });
        }
    }
    Ok(())
}

/// A strictly improving deviation of one agent or one constrained pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub changes: Vec<(AgentId, Value)>,
    pub gain: Cost,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let moves: Vec<String> = self
            .changes
            .iter()
            .map(|(a, v)| format!("agent {a} -> {v}"))
            .collect();
        write!(f, "{} improves the cost by {}", moves.join(", "), self.gain)
    }
}

/// Tries every unilateral deviation and every joint deviation of every
/// constrained pair, recomputing the global cost from scratch. Returns the
/// largest improvement found, the first one on ties.
pub fn check_2opt(instance: &ProblemInstance, assignment: &[Value]) -> Result<(), Witness> {
    let base = instance
        .global_cost(assignment)
        .expect("complete in-domain assignment");
    let mut values = assignment.to_vec();
    let mut best: Option<Witness> = None;
    let mut consider = |values: &[Value], changes: Vec<(AgentId, Value)>| {
        let c = instance.global_cost(values).expect("in-domain values");
        if c < base && best.as_ref().is_none_or(|w| base - c > w.gain) {
            best = Some(Witness {
                changes,
                gain: base - c,
            });
        }
    };
    for a in 0..instance.n() {
        for d in 0..instance.domain_size(a) {
            if d == assignment[a] {
                continue;
            }
            values[a] = d;
            consider(&values, vec![(a, d)]);
        }
        values[a] = assignment[a];
    }
    for con in instance.constraints() {
        let (i, j) = (con.i, con.j);
        for di in 0..instance.domain_size(i) {
            for dj in 0..instance.domain_size(j) {
                if di == assignment[i] && dj == assignment[j] {
                    continue;
                }
                values[i] = di;
                values[j] = dj;
                consider(&values, vec![(i, di), (j, dj)]);
            }
        }
        values[i] = assignment[i];
        values[j] = assignment[j];
    }
    best.map_or(Ok(()), Err)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("search space of {size} assignments exceeds the limit of {limit}")]
pub struct TooLarge {
    pub size: u128,
    pub limit: u128,
}

/// Exact minimum by enumeration in lexicographic order; the first optimal
/// assignment wins.
pub fn brute_force_optimum(instance: &ProblemInstance) -> Result<(Vec<Value>, Cost), TooLarge> {
    let size = instance
        .domain_sizes()
        .iter()
        .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128))
        .unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_LIMIT {
        return Err(TooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let n = instance.n();
    let mut values = vec![0; n];
    let mut best = (values.clone(), instance.global_cost(&values).expect("valid"));
    // odometer with the last agent varying fastest
    loop {
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(best);
            }
            k -= 1;
            values[k] += 1;
            if values[k] < instance.domain_size(k) {
                break;
            }
            values[k] = 0;
        }
        let c = instance.global_cost(&values).expect("valid");
        if c < best.1 {
            best = (values.clone(), c);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringViolation {
    pub step: u64,
    pub a: AgentId,
    pub b: AgentId,
    pub color: u32,
}

impl fmt::Display for ColoringViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {}: neighbors {} and {} share color {}",
            self.step, self.a, self.b, self.color
        )
    }
}

/// Colorings recorded in the trace, per step.
pub fn colorings(trace: &Trace) -> BTreeMap<u64, BTreeMap<AgentId, u32>> {
    let mut out: BTreeMap<u64, BTreeMap<AgentId, u32>> = BTreeMap::new();
    for (step, agent, color) in trace.color_notes() {
        out.entry(step).or_default().insert(agent, color);
    }
    out
}

/// Passes iff no two neighbors picked the same color in the same step.
pub fn check_proper_coloring(trace: &Trace, instance: &ProblemInstance) -> Result<(), ColoringViolation> {
    for (step, colors) in colorings(trace) {
        for con in instance.constraints() {
            if let (Some(&ca), Some(&cb)) = (colors.get(&con.i), colors.get(&con.j)) {
                if ca == cb {
                    return Err(ColoringViolation {
                        step,
                        a: con.i,
                        b: con.j,
                        color: ca,
                    });
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GainMismatch {
    pub move_index: usize,
    pub claimed: Cost,
    /// Signed actual improvement.
    pub actual: i128,
}

/// Replays the trace and compares every move's claimed gain with the change
/// in global cost it caused. Selections made during coloring are skipped.
pub fn check_gain_consistency(trace: &Trace, instance: &ProblemInstance) -> Vec<GainMismatch> {
    let mut values = trace.initial.clone();
    let mut cost = instance.global_cost(&values).expect("valid initial") as i128;
    let mut out = Vec::new();
    for (idx, m) in trace.moves.iter().enumerate() {
        for &(a, v) in &m.changes {
            values[a] = v;
        }
        let next = instance.global_cost(&values).expect("valid move") as i128;
        if m.kind != MoveKind::Ordering && cost - next != m.gain as i128 {
            out.push(GainMismatch {
                move_index: idx,
                claimed: m.gain,
                actual: cost - next,
            });
        }
        cost = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{path3, InstanceBuilder};
    use crate::sim::{AgentMeters, Annotation, LatencyModel, Move, Note, Outcome, RunMeta};

    fn trace(moves: Vec<Move>, notes: Vec<Annotation>) -> Trace {
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
            notes,
            meters: vec![AgentMeters::default(); 3],
            send_times: vec![],
            idle_gaps: vec![],
            message_kinds: BTreeMap::new(),
            outcome: Outcome::BudgetExhausted,
            end_nclo: 100,
            curve: vec![],
        }
    }

    fn mv(nclo: Nclo, by: AgentId, value: Value, gain: Cost) -> Move {
        Move {
            nclo,
            seq: nclo,
            step: 1,
            kind: MoveKind::Unilateral,
            by,
            changes: vec![(by, value)],
            gain,
        }
    }

    #[test]
    fn constant_trace_is_monotone() {
        assert_eq!(check_monotone(&trace(vec![], vec![]), &path3()), Ok(()));
    }

    #[test]
    fn uphill_move_is_reported() {
        // (0,0,0)=13 -> A2:1 gives 3 -> A3:1 gives 2+5=7
        let t = trace(vec![mv(4, 1, 1, 10), mv(9, 2, 1, 0)], vec![]);
        let err = check_monotone(&t, &path3()).unwrap_err();
        assert_eq!(
            err,
            MonotoneViolation {
                nclo: 9,
                agent: 2,
                before: 3,
                after: 7
            }
        );
        let mism = check_gain_consistency(&t, &path3());
        assert_eq!(mism.len(), 1);
        assert_eq!(mism[0].actual, -4);
    }

    #[test]
    fn optimum_passes_2opt() {
        assert_eq!(check_2opt(&path3(), &[0, 1, 0]), Ok(()));
    }

    #[test]
    fn witness_at_all_zero() {
        // A2 alone already reaches the optimum; the equal pair move comes later
        let w = check_2opt(&path3(), &[0, 0, 0]).unwrap_err();
        assert_eq!(w.changes, vec![(1, 1)]);
        assert_eq!(w.gain, 10);
    }

    #[test]
    fn pair_witness_when_no_single_move_helps() {
        let inst = InstanceBuilder::new(vec![2, 2])
            .edge(0, 1, vec![vec![1, 5], vec![5, 0]])
            .build()
            .unwrap();
        let w = check_2opt(&inst, &[0, 0]).unwrap_err();
        assert_eq!(w.changes, vec![(0, 1), (1, 1)]);
        assert_eq!(w.gain, 1);
    }

    #[test]
    fn single_agent_at_best_value_passes() {
        let inst = InstanceBuilder::new(vec![4]).build().unwrap();
        assert_eq!(check_2opt(&inst, &[2]), Ok(()));
    }

    #[test]
    fn brute_force_small_cases() {
        let empty = InstanceBuilder::new(vec![3, 2, 5]).build().unwrap();
        assert_eq!(brute_force_optimum(&empty).unwrap(), (vec![0, 0, 0], 0));
        assert_eq!(brute_force_optimum(&path3()).unwrap(), (vec![0, 1, 0], 3));
    }

    #[test]
    fn brute_force_refuses_large_spaces() {
        let big = InstanceBuilder::new(vec![10; 8]).build().unwrap();
        let err = brute_force_optimum(&big).unwrap_err();
        assert_eq!(err.size, 100_000_000);
    }

    #[test]
    fn equal_neighbor_colors_are_reported() {
        let note = |agent, color| Annotation {
            nclo: 1,
            agent,
            note: Note::Color { step: 3, color },
        };
        let good = trace(vec![], vec![note(0, 1), note(1, 2), note(2, 1)]);
        assert_eq!(check_proper_coloring(&good, &path3()), Ok(()));
        let bad = trace(vec![], vec![note(0, 1), note(1, 2), note(2, 2)]);
        assert_eq!(
            check_proper_coloring(&bad, &path3()),
            Err(ColoringViolation {
                step: 3,
                a: 1,
                b: 2,
                color: 2
            })
        );
    }
}
