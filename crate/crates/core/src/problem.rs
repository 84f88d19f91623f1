//! Binary symmetric DCOP instances, cost evaluation and the best-response
//! searches shared by every algorithm.
//!
//! Each agent owns exactly one variable whose domain is `0..domain_size`.
//! Constraints are binary and stored as dense row-major tables keyed by the
//! ordered pair `(i, j)` with `i < j`; lookups in either direction resolve to
//! the same cell, so the instance is symmetric in access.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type AgentId = usize;
pub type Value = usize;
pub type Cost = u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProblemError {
    #[error("agent {0} has an empty domain")]
    EmptyDomain(AgentId),
    #[error("self-edge on agent {0}")]
    SelfEdge(AgentId),
    #[error("agent {agent} out of range (n = {n})")]
    UnknownAgent { agent: AgentId, n: usize },
    #[error("duplicate constraint between {0} and {1}")]
    DuplicateEdge(AgentId, AgentId),
    #[error("constraint ({i},{j}) table is {got}, expected {expected}")]
    TableShape {
        i: AgentId,
        j: AgentId,
        got: String,
        expected: String,
    },
    #[error("assignment has {got} values, instance has {n} agents")]
    AssignmentLength { got: usize, n: usize },
    #[error("value {value} outside the domain of agent {agent}")]
    ValueOutOfDomain { agent: AgentId, value: Value },
    #[error("assignment is incomplete: agent {0} has no value")]
    Incomplete(AgentId),
    #[error("no value known for neighbor {neighbor} of agent {agent}")]
    MissingNeighbor { agent: AgentId, neighbor: AgentId },
    #[error("agents {0} and {1} are not constrained")]
    NotAnEdge(AgentId, AgentId),
    #[error("malformed instance document: {0}")]
    Format(String),
}

/// Source of agent values used by the local evaluations.
pub trait ValueLookup {
    fn value_of(&self, agent: AgentId) -> Option<Value>;
}

impl ValueLookup for BTreeMap<AgentId, Value> {
    fn value_of(&self, agent: AgentId) -> Option<Value> {
        self.get(&agent).copied()
    }
}

impl ValueLookup for HashMap<AgentId, Value> {
    fn value_of(&self, agent: AgentId) -> Option<Value> {
        self.get(&agent).copied()
    }
}

/// A complete assignment indexed by agent id.
impl ValueLookup for [Value] {
    fn value_of(&self, agent: AgentId) -> Option<Value> {
        self.get(agent).copied()
    }
}

impl ValueLookup for Vec<Value> {
    fn value_of(&self, agent: AgentId) -> Option<Value> {
        self.as_slice().value_of(agent)
    }
}

impl ValueLookup for [Option<Value>] {
    fn value_of(&self, agent: AgentId) -> Option<Value> {
        self.get(agent).copied().flatten()
    }
}

impl<T: ValueLookup + ?Sized> ValueLookup for &T {
    fn value_of(&self, agent: AgentId) -> Option<Value> {
        (**self).value_of(agent)
    }
}

/// Looks values up in `primary` first and falls back to `fallback`.
pub struct Overlay<'a, A: ?Sized, B: ?Sized> {
    pub primary: &'a A,
    pub fallback: &'a B,
}

impl<A: ValueLookup + ?Sized, B: ValueLookup + ?Sized> ValueLookup for Overlay<'_, A, B> {
    fn value_of(&self, agent: AgentId) -> Option<Value> {
        self.primary
            .value_of(agent)
            .or_else(|| self.fallback.value_of(agent))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub i: AgentId,
    pub j: AgentId,
    /// Row-major `|D_i| x |D_j|` table.
    costs: Vec<Cost>,
    cols: usize,
}

impl Constraint {
    pub fn cost(&self, di: Value, dj: Value) -> Cost {
        self.costs[di * self.cols + dj]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Cost]> {
        self.costs.chunks(self.cols)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    domains: Vec<usize>,
    constraints: Vec<Constraint>,
    neighbors: Vec<Vec<AgentId>>,
    index: HashMap<(AgentId, AgentId), usize>,
}

/// Incremental construction of a [`ProblemInstance`].
#[derive(Debug, Clone)]
pub struct InstanceBuilder {
    domains: Vec<usize>,
    edges: Vec<(AgentId, AgentId, Vec<Vec<Cost>>)>,
}

impl InstanceBuilder {
    pub fn new(domains: Vec<usize>) -> Self {
        Self {
            domains,
            edges: Vec::new(),
        }
    }

    /// Adds the constraint between `i` and `j`; `table[d_i][d_j]` is the cost.
    pub fn edge(mut self, i: AgentId, j: AgentId, table: Vec<Vec<Cost>>) -> Self {
        self.edges.push((i, j, table));
        self
    }

    pub fn push_edge(&mut self, i: AgentId, j: AgentId, table: Vec<Vec<Cost>>) {
        self.edges.push((i, j, table));
    }

    pub fn build(self) -> Result<ProblemInstance, ProblemError> {
        let n = self.domains.len();
        if let Some(a) = self.domains.iter().position(|&d| d == 0) {
            return Err(ProblemError::EmptyDomain(a));
        }
        let mut constraints = Vec::with_capacity(self.edges.len());
        let mut index = HashMap::with_capacity(self.edges.len());
        let mut neighbors = vec![Vec::new(); n];
        for (i, j, table) in self.edges {
            for agent in [i, j] {
                if agent >= n {
                    return Err(ProblemError::UnknownAgent { agent, n });
                }
            }
            if i == j {
                return Err(ProblemError::SelfEdge(i));
            }
            let (lo, hi, table) = if i < j {
                (i, j, table)
            } else {
                (j, i, transpose(&table))
            };
            let (rows, cols) = (self.domains[lo], self.domains[hi]);
            if table.len() != rows || table.iter().any(|r| r.len() != cols) {
                return Err(ProblemError::TableShape {
                    i: lo,
                    j: hi,
                    got: format!(
                        "{}x{:?}",
                        table.len(),
                        table.iter().map(Vec::len).collect::<Vec<_>>()
                    ),
                    expected: format!("{rows}x{cols}"),
                });
            }
            if index.insert((lo, hi), constraints.len()).is_some() {
                return Err(ProblemError::DuplicateEdge(lo, hi));
            }
            neighbors[lo].push(hi);
            neighbors[hi].push(lo);
            constraints.push(Constraint {
                i: lo,
                j: hi,
                costs: table.into_iter().flatten().collect(),
                cols,
            });
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(ProblemInstance {
            domains: self.domains,
            constraints,
            neighbors,
            index,
        })
    }
}

fn transpose(table: &[Vec<Cost>]) -> Vec<Vec<Cost>> {
    let cols = table.first().map_or(0, Vec::len);
    (0..cols)
        .map(|c| table.iter().map(|row| row.get(c).copied().unwrap_or(0)).collect())
        .collect()
}

impl ProblemInstance {
    pub fn n(&self) -> usize {
        self.domains.len()
    }

    pub fn domain_size(&self, agent: AgentId) -> usize {
        self.domains[agent]
    }

    pub fn domain_sizes(&self) -> &[usize] {
        &self.domains
    }

    pub fn neighbors(&self, agent: AgentId) -> &[AgentId] {
        &self.neighbors[agent]
    }

    pub fn degree(&self, agent: AgentId) -> usize {
        self.neighbors[agent].len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn edge_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn are_neighbors(&self, i: AgentId, j: AgentId) -> bool {
        self.index.contains_key(&(i.min(j), i.max(j)))
    }

    /// Cost of the constraint between `i` and `j` when they take `di` and
    /// `dj`. Unconstrained pairs cost 0.
    pub fn cost(&self, i: AgentId, j: AgentId, di: Value, dj: Value) -> Cost {
        if i < j {
            self.index
                .get(&(i, j))
                .map_or(0, |&e| self.constraints[e].cost(di, dj))
        } else {
            self.index
                .get(&(j, i))
                .map_or(0, |&e| self.constraints[e].cost(dj, di))
        }
    }

    fn check_value(&self, agent: AgentId, value: Value) -> Result<(), ProblemError> {
        if value >= self.domains[agent] {
            Err(ProblemError::ValueOutOfDomain { agent, value })
        } else {
            Ok(())
        }
    }

    /// Validates a complete assignment against the domains.
    pub fn check_assignment(&self, values: &[Value]) -> Result<(), ProblemError> {
        if values.len() != self.n() {
            return Err(ProblemError::AssignmentLength {
                got: values.len(),
                n: self.n(),
            });
        }
        values
            .iter()
            .enumerate()
            .try_for_each(|(a, &v)| self.check_value(a, v))
    }

    pub fn global_cost(&self, values: &[Value]) -> Result<Cost, ProblemError> {
        self.check_assignment(values)?;
        Ok(self.global_cost_unchecked(values))
    }

    pub(crate) fn global_cost_unchecked(&self, values: &[Value]) -> Cost {
        self.constraints
            .iter()
            .map(|c| c.cost(values[c.i], values[c.j]))
            .sum()
    }

    /// Global cost of an assignment that may leave agents unassigned; errors
    /// on the first missing agent.
    pub fn global_cost_partial(&self, values: &[Option<Value>]) -> Result<Cost, ProblemError> {
        if values.len() != self.n() {
            return Err(ProblemError::AssignmentLength {
                got: values.len(),
                n: self.n(),
            });
        }
        let complete = values
            .iter()
            .enumerate()
            .map(|(a, v)| v.ok_or(ProblemError::Incomplete(a)))
            .collect::<Result<Vec<_>, _>>()?;
        self.global_cost(&complete)
    }

    /// Cost of a partial assignment: the sum over constraints whose both
    /// endpoints are assigned.
    pub fn partial_assignment_cost(&self, values: &[Option<Value>]) -> Cost {
        self.constraints
            .iter()
            .filter_map(|c| {
                let di = values.get(c.i).copied().flatten()?;
                let dj = values.get(c.j).copied().flatten()?;
                Some(c.cost(di, dj))
            })
            .sum()
    }

    fn neighbor_values(
        &self,
        agent: AgentId,
        view: &(impl ValueLookup + ?Sized),
        skip: Option<AgentId>,
    ) -> Result<Vec<(AgentId, Value)>, ProblemError> {
        self.neighbors[agent]
            .iter()
            .filter(|&&k| Some(k) != skip)
            .map(|&k| {
                view.value_of(k)
                    .map(|v| (k, v))
                    .ok_or(ProblemError::MissingNeighbor { agent, neighbor: k })
            })
            .collect()
    }

    pub fn local_cost(
        &self,
        agent: AgentId,
        value: Value,
        view: &(impl ValueLookup + ?Sized),
    ) -> Result<Cost, ProblemError> {
        let nbrs = self.neighbor_values(agent, view, None)?;
        Ok(self.local_cost_with(agent, value, &nbrs))
    }

    fn local_cost_with(&self, agent: AgentId, value: Value, nbrs: &[(AgentId, Value)]) -> Cost {
        nbrs.iter()
            .map(|&(k, vk)| self.cost(agent, k, value, vk))
            .sum()
    }

    /// Best unilateral response of `agent` given its neighbors' values. The
    /// current value is kept unless another value strictly improves on it;
    /// ties among improving values go to the smallest value id.
    pub fn best_unilateral(
        &self,
        agent: AgentId,
        current: Value,
        view: &(impl ValueLookup + ?Sized),
    ) -> Result<(Value, Cost), ProblemError> {
        self.check_value(agent, current)?;
        let nbrs = self.neighbor_values(agent, view, None)?;
        let current_cost = self.local_cost_with(agent, current, &nbrs);
        let mut best = (current, current_cost);
        for d in 0..self.domains[agent] {
            let c = self.local_cost_with(agent, d, &nbrs);
            if c < best.1 {
                best = (d, c);
            }
        }
        Ok((best.0, current_cost - best.1))
    }

    /// Best joint response of the constrained pair `(i, j)` with every other
    /// agent fixed. Same strict-improvement and tie rules as
    /// [`best_unilateral`](Self::best_unilateral), ties ordered by `(d_i, d_j)`.
    pub fn best_bilateral(
        &self,
        i: AgentId,
        j: AgentId,
        current_i: Value,
        current_j: Value,
        outside: &(impl ValueLookup + ?Sized),
    ) -> Result<(Value, Value, Cost), ProblemError> {
        if i >= self.n() || j >= self.n() || !self.are_neighbors(i, j) {
            return Err(ProblemError::NotAnEdge(i, j));
        }
        self.check_value(i, current_i)?;
        self.check_value(j, current_j)?;
        let ni = self.neighbor_values(i, outside, Some(j))?;
        let nj = self.neighbor_values(j, outside, Some(i))?;
        // per-value outside costs, computed once
        let ci: Vec<Cost> = (0..self.domains[i])
            .map(|d| self.local_cost_with(i, d, &ni))
            .collect();
        let cj: Vec<Cost> = (0..self.domains[j])
            .map(|d| self.local_cost_with(j, d, &nj))
            .collect();
        let joint = |di: Value, dj: Value| self.cost(i, j, di, dj) + ci[di] + cj[dj];
        let current_cost = joint(current_i, current_j);
        let mut best = (current_i, current_j, current_cost);
        for di in 0..self.domains[i] {
            for dj in 0..self.domains[j] {
                let c = joint(di, dj);
                if c < best.2 {
                    best = (di, dj, c);
                }
            }
        }
        Ok((best.0, best.1, current_cost - best.2))
    }

    /// Constraint checks charged for a unilateral search.
    pub fn unilateral_checks(&self, agent: AgentId) -> u64 {
        (self.domains[agent] * self.degree(agent)) as u64
    }

    /// Constraint checks charged for a bilateral search over `(i, j)`.
    pub fn bilateral_checks(&self, i: AgentId, j: AgentId) -> u64 {
        let span = (self.degree(i) + self.degree(j)).saturating_sub(1);
        (self.domains[i] * self.domains[j] * span) as u64
    }

    pub fn to_document(&self) -> InstanceDocument {
        InstanceDocument {
            n: self.n(),
            domains: self.domains.clone(),
            edges: self
                .constraints
                .iter()
                .map(|c| EdgeDocument {
                    i: c.i,
                    j: c.j,
                    costs: c.rows().map(<[Cost]>::to_vec).collect(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: InstanceDocument) -> Result<Self, ProblemError> {
        if doc.n != doc.domains.len() {
            return Err(ProblemError::Format(format!(
                "n = {} but {} domains listed",
                doc.n,
                doc.domains.len()
            )));
        }
        let mut builder = InstanceBuilder::new(doc.domains);
        for e in doc.edges {
            builder.push_edge(e.i, e.j, e.costs);
        }
        builder.build()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("instance document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        let doc: InstanceDocument =
            serde_json::from_str(text).map_err(|e| ProblemError::Format(e.to_string()))?;
        Self::from_document(doc)
    }
}

/// On-disk form of an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub n: usize,
    pub domains: Vec<usize>,
    pub edges: Vec<EdgeDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDocument {
    pub i: AgentId,
    pub j: AgentId,
    pub costs: Vec<Vec<Cost>>,
}

/// The three-agent path used across the test suites:
/// `A1 - A2 - A3`, binary domains, `R12 = [[10,2],[4,6]]`, `R23 = [[3,8],[1,5]]`.
pub fn path3() -> ProblemInstance {
    InstanceBuilder::new(vec![2, 2, 2])
        .edge(0, 1, vec![vec![10, 2], vec![4, 6]])
        .edge(1, 2, vec![vec![3, 8], vec![1, 5]])
        .build()
        .expect("valid fixture")
}
