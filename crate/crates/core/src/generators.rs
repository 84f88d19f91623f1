//! Seeded generators for the uniform-random, graph-coloring and scale-free
//! benchmark families.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{AgentId, Cost, InstanceBuilder, ProblemError, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    UniformRandom,
    GraphColoring,
    ScaleFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    /// Edge probability for the Erdős–Rényi families.
    pub density: f64,
    pub domain_size: usize,
    pub cost_low: Cost,
    pub cost_high: Cost,
    pub seed: u64,
    pub seed_agents: usize,
    pub attach: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("density {0} outside [0, 1]")]
    Density(f64),
    #[error("cost bounds inverted: {0} > {1}")]
    CostBounds(Cost, Cost),
    #[error("domain size must be at least 1")]
    EmptyDomain,
    #[error("scale-free attach count {attach} exceeds the {existing} existing agents")]
    Attach { attach: usize, existing: usize },
    #[error("scale-free instance needs n >= seed agents ({n} < {seed_agents})")]
    TooFewAgents { n: usize, seed_agents: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

impl GeneratorSpec {
    /// Sparse or dense uniform random problems: 10 values, costs in 1..=100.
    pub fn uniform(n: usize, density: f64, seed: u64) -> Self {
        Self {
            family: Family::UniformRandom,
            n,
            density,
            domain_size: 10,
            cost_low: 1,
            cost_high: 100,
            seed,
            seed_agents: 10,
            attach: 3,
        }
    }

    /// Graph coloring: 3 colors, density 0.05, conflict costs in 10..=100.
    pub fn coloring(n: usize, seed: u64) -> Self {
        Self {
            family: Family::GraphColoring,
            density: 0.05,
            domain_size: 3,
            cost_low: 10,
            cost_high: 100,
            ..Self::uniform(n, 0.05, seed)
        }
    }

    /// Scale-free: a 10-agent seed tree grown by attaching each new agent to 3
    /// existing ones.
    pub fn scale_free(n: usize, seed: u64) -> Self {
        Self {
            family: Family::ScaleFree,
            ..Self::uniform(n, 0.0, seed)
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if !(0.0..=1.0).contains(&self.density) {
            return Err(GeneratorError::Density(self.density));
        }
        if self.cost_low > self.cost_high {
            return Err(GeneratorError::CostBounds(self.cost_low, self.cost_high));
        }
        if self.domain_size == 0 {
            return Err(GeneratorError::EmptyDomain);
        }
        if self.family == Family::ScaleFree {
            if self.attach > self.seed_agents {
                return Err(GeneratorError::Attach {
                    attach: self.attach,
                    existing: self.seed_agents,
                });
            }
            if self.n < self.seed_agents {
                return Err(GeneratorError::TooFewAgents {
                    n: self.n,
                    seed_agents: self.seed_agents,
                });
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<ProblemInstance, GeneratorError> {
        match self.family {
            Family::UniformRandom => gen_uniform_random(self),
            Family::GraphColoring => gen_graph_coloring(self),
            Family::ScaleFree => gen_scale_free(self),
        }
    }
}

fn random_table(rng: &mut ChaCha8Rng, spec: &GeneratorSpec) -> Vec<Vec<Cost>> {
    (0..spec.domain_size)
        .map(|_| {
            (0..spec.domain_size)
                .map(|_| rng.random_range(spec.cost_low..=spec.cost_high))
                .collect()
        })
        .collect()
}

fn erdos_renyi(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(AgentId, AgentId)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn gen_uniform_random(spec: &GeneratorSpec) -> Result<ProblemInstance, GeneratorError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let edges = erdos_renyi(&mut rng, spec.n, spec.density);
    let mut builder = InstanceBuilder::new(vec![spec.domain_size; spec.n]);
    for (i, j) in edges {
        let table = random_table(&mut rng, spec);
        builder.push_edge(i, j, table);
    }
    Ok(builder.build()?)
}

/// Equal colors on a constrained pair cost one per-edge draw; different
/// colors cost nothing.
pub fn gen_graph_coloring(spec: &GeneratorSpec) -> Result<ProblemInstance, GeneratorError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let edges = erdos_renyi(&mut rng, spec.n, spec.density);
    let d = spec.domain_size;
    let mut builder = InstanceBuilder::new(vec![d; spec.n]);
    for (i, j) in edges {
        let c = rng.random_range(spec.cost_low..=spec.cost_high);
        let table = (0..d)
            .map(|a| (0..d).map(|b| if a == b { c } else { 0 }).collect())
            .collect();
        builder.push_edge(i, j, table);
    }
    Ok(builder.build()?)
}

/// Uniform random labelled tree on `k` nodes, decoded from a random Prüfer
/// sequence.
fn random_tree(rng: &mut ChaCha8Rng, k: usize) -> Vec<(AgentId, AgentId)> {
    if k < 2 {
        return Vec::new();
    }
    let pruefer: Vec<usize> = (0..k - 2).map(|_| rng.random_range(0..k)).collect();
    let mut degree = vec![1usize; k];
    for &p in &pruefer {
        degree[p] += 1;
    }
    let mut edges = Vec::with_capacity(k - 1);
    for &p in &pruefer {
        let leaf = (0..k).find(|&x| degree[x] == 1).expect("a leaf exists");
        edges.push((leaf.min(p), leaf.max(p)));
        degree[leaf] -= 1;
        degree[p] -= 1;
    }
    let rest: Vec<usize> = (0..k).filter(|&x| degree[x] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

pub fn gen_scale_free(spec: &GeneratorSpec) -> Result<ProblemInstance, GeneratorError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // the seed agents are a random subset of the labels
    let mut labels: Vec<AgentId> = (0..spec.n).collect();
    labels.shuffle(&mut rng);
    let mut degree = vec![0usize; spec.n];
    let mut edges: Vec<(AgentId, AgentId)> = Vec::new();
    for (a, b) in random_tree(&mut rng, spec.seed_agents) {
        let (x, y) = (labels[a], labels[b]);
        degree[x] += 1;
        degree[y] += 1;
        edges.push((x, y));
    }
    for pos in spec.seed_agents..spec.n {
        let newcomer = labels[pos];
        let mut pool: Vec<AgentId> = labels[..pos].to_vec();
        let mut targets = Vec::with_capacity(spec.attach);
        for _ in 0..spec.attach {
            let total: usize = pool.iter().map(|&x| degree[x]).sum();
            let pick = if total == 0 {
                rng.random_range(0..pool.len())
            } else {
                let mut r = rng.random_range(0..total);
                let mut idx = 0;
                while r >= degree[pool[idx]] {
                    r -= degree[pool[idx]];
                    idx += 1;
                }
                idx
            };
            targets.push(pool.swap_remove(pick));
        }
        for t in targets {
            degree[t] += 1;
            degree[newcomer] += 1;
            edges.push((newcomer.min(t), newcomer.max(t)));
        }
    }
    let mut builder = InstanceBuilder::new(vec![spec.domain_size; spec.n]);
    for (i, j) in edges {
        let table = random_table(&mut rng, spec);
        builder.push_edge(i, j, table);
    }
    Ok(builder.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn connected(inst: &ProblemInstance) -> bool {
        let mut seen = vec![false; inst.n()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for &b in inst.neighbors(a) {
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn uniform_edge_counts() {
        assert_eq!(GeneratorSpec::uniform(20, 0.0, 1).generate().unwrap().edge_count(), 0);
        assert_eq!(GeneratorSpec::uniform(4, 1.0, 1).generate().unwrap().edge_count(), 6);
    }

    #[test]
    fn uniform_mean_edge_count_matches_binomial() {
        // Binomial(1225, 0.2): mean 245, variance 196; mean of 200 draws has sd 14/sqrt(200)
        let counts: Vec<f64> = (0..200)
            .map(|s| GeneratorSpec::uniform(50, 0.2, s).generate().unwrap().edge_count() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let sd_of_mean = (1225.0f64 * 0.2 * 0.8).sqrt() / (200f64).sqrt();
        assert!((mean - 245.0).abs() <= 3.0 * sd_of_mean, "mean {mean}");
    }

    #[test]
    fn uniform_costs_within_bounds() {
        let inst = GeneratorSpec::uniform(15, 0.5, 3).generate().unwrap();
        for c in inst.constraints() {
            for row in c.rows() {
                assert_eq!(row.len(), 10);
                assert!(row.iter().all(|&x| (1..=100).contains(&x)));
            }
        }
    }

    #[test]
    fn coloring_tables_are_diagonal() {
        let spec = GeneratorSpec {
            density: 0.3,
            ..GeneratorSpec::coloring(30, 9)
        };
        let inst = spec.generate().unwrap();
        assert!(inst.edge_count() > 0);
        for c in inst.constraints() {
            let diag: Vec<Cost> = (0..3).map(|d| c.cost(d, d)).collect();
            assert!(diag.iter().all(|&x| x == diag[0] && (10..=100).contains(&x)));
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        assert_eq!(c.cost(a, b), 0);
                    }
                }
            }
        }
    }

    #[test]
    fn proper_coloring_costs_nothing() {
        // a triangle and a tail are 3-colorable
        let spec = GeneratorSpec {
            density: 1.0,
            ..GeneratorSpec::coloring(3, 4)
        };
        let inst = spec.generate().unwrap();
        assert_eq!(inst.global_cost(&[0, 1, 2]).unwrap(), 0);
        assert!(inst.global_cost(&[0, 0, 2]).unwrap() > 0);
    }

    #[test]
    fn generation_is_deterministic() {
        for spec in [
            GeneratorSpec::coloring(50, 17),
            GeneratorSpec::uniform(50, 0.2, 17),
            GeneratorSpec::scale_free(50, 17),
        ] {
            assert_eq!(spec.generate().unwrap().to_json(), spec.generate().unwrap().to_json());
        }
        assert_ne!(
            GeneratorSpec::uniform(30, 0.2, 1).generate().unwrap(),
            GeneratorSpec::uniform(30, 0.2, 2).generate().unwrap()
        );
    }

    #[test]
    fn random_tree_is_spanning() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 2..12 {
            let edges = random_tree(&mut rng, k);
            assert_eq!(edges.len(), k - 1);
            let inst = edges
                .iter()
                .fold(InstanceBuilder::new(vec![1; k]), |b, &(i, j)| b.edge(i, j, vec![vec![0]]))
                .build()
                .unwrap();
            assert!(connected(&inst));
        }
    }

    #[test]
    fn scale_free_edge_counts() {
        for seed in 0..20 {
            let seed_only = GeneratorSpec::scale_free(10, seed).generate().unwrap();
            assert_eq!(seed_only.edge_count(), 9);
            assert!(connected(&seed_only));
            let full = GeneratorSpec::scale_free(50, seed).generate().unwrap();
            assert_eq!(full.edge_count(), 9 + 3 * 40);
            assert!(connected(&full));
        }
    }

    #[test]
    fn scale_free_degree_is_right_skewed() {
        let skewed = (0..50)
            .filter(|&seed| {
                let inst = GeneratorSpec::scale_free(50, seed).generate().unwrap();
                let max = (0..50).map(|a| inst.degree(a)).max().unwrap() as f64;
                let mean = 2.0 * inst.edge_count() as f64 / 50.0;
                max >= 2.0 * mean
            })
            .count();
        assert!(skewed >= 45, "{skewed}/50 seeds skewed");
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = GeneratorSpec::scale_free(50, 0);
        s.attach = 11;
        assert_eq!(
            s.generate(),
            Err(GeneratorError::Attach {
                attach: 11,
                existing: 10
            })
        );
        let s = GeneratorSpec::scale_free(5, 0);
        assert!(matches!(s.generate(), Err(GeneratorError::TooFewAgents { .. })));
        let s = GeneratorSpec::uniform(5, 1.5, 0);
        assert_eq!(s.generate(), Err(GeneratorError::Density(1.5)));
        let mut s = GeneratorSpec::uniform(5, 0.5, 0);
        s.cost_low = 10;
        s.cost_high = 1;
        assert_eq!(s.generate(), Err(GeneratorError::CostBounds(10, 1)));
    }
}
