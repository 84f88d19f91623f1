use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algo::{AlgoName, Algorithm, Lamdls2Params, Mgm2Params};
use crate::generators::GeneratorSpec;
use crate::problem::ProblemInstance;
use crate::seeds;
use crate::sim::{LatencyModel, Nclo, RunConfig};

/// Post-run verifier selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Monotone,
    TwoOpt,
    Coloring,
}

impl Check {
    pub const ALL: [Check; 3] = [Check::Monotone, Check::TwoOpt, Check::Coloring];

    /// Parses `monotone`, `2opt`, `coloring` or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Check>, String> {
        if s == "all" {
            return Ok(Check::ALL.to_vec());
        }
        s.split(',').map(str::parse).collect()
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::Monotone => "monotone",
            Check::TwoOpt => "2opt",
            Check::Coloring => "coloring",
        })
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "monotone" => Ok(Check::Monotone),
            "2opt" => Ok(Check::TwoOpt),
            "coloring" => Ok(Check::Coloring),
            other => Err(format!("unknown check {other:?} (expected monotone, 2opt, coloring or all)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: AlgoName,
    /// Family and size of the generated instances; the seed field is
    /// replaced per instance.
    pub generator: GeneratorSpec,
    /// Run every instance index on this problem instead of generating one.
    pub fixed_instance: Option<ProblemInstance>,
    pub latency: LatencyModel,
    pub instances: usize,
    pub budget: Nclo,
    pub sample_interval: Nclo,
    /// MGM-2 offerer probability.
    pub q: f64,
    pub docs_value_selection: bool,
    pub seed: u64,
    /// Stop a run after this many steps without a value change.
    pub quiet_steps: Option<u64>,
    pub verify: Vec<Check>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: AlgoName::Lamdls2,
            generator: GeneratorSpec::uniform(50, 0.2, 0),
            fixed_instance: None,
            latency: LatencyModel::Perfect,
            instances: 100,
            budget: 1_000_000,
            sample_interval: 10_000,
            q: 0.5,
            docs_value_selection: true,
            seed: 0,
            quiet_steps: Some(20),
            verify: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.instances == 0 {
            return Err("instances must be at least 1".into());
        }
        if self.budget == 0 || self.sample_interval == 0 {
            return Err("budget and sample interval must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(format!("q must lie in [0, 1], got {}", self.q));
        }
        self.latency.validate()?;
        if self.fixed_instance.is_none() {
            self.generator.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn algorithm(&self) -> Algorithm {
        match self.algorithm {
            AlgoName::Mgm => Algorithm::Mgm,
            AlgoName::Mgm2 => Algorithm::Mgm2(Mgm2Params {
                q: self.q,
                ..Default::default()
            }),
            AlgoName::Lamdls2 => Algorithm::Lamdls2(Lamdls2Params {
                docs_value_selection: self.docs_value_selection,
                ..Default::default()
            }),
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            budget: self.budget,
            sample_interval: self.sample_interval,
            quiet_steps: self.quiet_steps,
        }
    }

    /// Seed of instance `index`; shared by all algorithms.
    pub fn instance_seed(&self, index: usize) -> u64 {
        seeds::mix(&[self.seed, index as u64])
    }

    /// Seed of the algorithm's own randomness on instance `index`.
    pub fn algorithm_seed(&self, index: usize) -> u64 {
        seeds::mix(&[self.seed, index as u64, seeds::tag(self.algorithm.as_str())])
    }
}
