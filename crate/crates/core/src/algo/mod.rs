//! Local search algorithms as engine agents.

pub mod lamdls2;
pub mod mgm;
pub mod mgm2;
pub mod sync;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::problem::{ProblemInstance, Value};
use crate::seeds;
use crate::sim::{self, Agent, DelaySource, LatencyModel, ModelDelays, RunConfig, RunMeta, Trace};

pub use lamdls2::{Lamdls2Agent, Lamdls2Params};
pub use mgm::MgmAgent;
pub use mgm2::{Mgm2Agent, Mgm2Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoName {
    Mgm,
    Mgm2,
    Lamdls2,
}

impl AlgoName {
    pub const ALL: [AlgoName; 3] = [AlgoName::Mgm, AlgoName::Mgm2, AlgoName::Lamdls2];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgoName::Mgm => "mgm",
            AlgoName::Mgm2 => "mgm2",
            AlgoName::Lamdls2 => "lamdls2",
        }
    }
}

impl fmt::Display for AlgoName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgoName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mgm" => Ok(AlgoName::Mgm),
            "mgm2" => Ok(AlgoName::Mgm2),
            "lamdls2" => Ok(AlgoName::Lamdls2),
            other => Err(format!("unknown algorithm {other:?} (expected mgm, mgm2 or lamdls2)")),
        }
    }
}

/// An algorithm together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Mgm,
    Mgm2(Mgm2Params),
    Lamdls2(Lamdls2Params),
}

impl Algorithm {
    pub fn name(&self) -> AlgoName {
        match self {
            Algorithm::Mgm => AlgoName::Mgm,
            Algorithm::Mgm2(_) => AlgoName::Mgm2,
            Algorithm::Lamdls2(_) => AlgoName::Lamdls2,
        }
    }

    /// Defaults: `q = 0.5` for MGM-2, DOCS value selection on for LAMDLS-2.
    pub fn default_for(name: AlgoName) -> Self {
        match name {
            AlgoName::Mgm => Algorithm::Mgm,
            AlgoName::Mgm2 => Algorithm::Mgm2(Mgm2Params::default()),
            AlgoName::Lamdls2 => Algorithm::Lamdls2(Lamdls2Params::default()),
        }
    }
}

/// Everything needed for one run besides the instance.
#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub algorithm: &'a Algorithm,
    pub latency: LatencyModel,
    pub config: RunConfig,
    /// Seeds the agents' initial values and choices, and the network.
    pub seed: u64,
    /// Overrides the random initial assignment.
    pub initial: Option<&'a [Value]>,
}

impl<'a> RunSpec<'a> {
    pub fn new(algorithm: &'a Algorithm, latency: LatencyModel, config: RunConfig, seed: u64) -> Self {
        Self {
            algorithm,
            latency,
            config,
            seed,
            initial: None,
        }
    }

    pub fn with_initial(mut self, initial: &'a [Value]) -> Self {
        self.initial = Some(initial);
        self
    }

    fn meta(&self) -> RunMeta {
        RunMeta {
            seed: self.seed,
            algorithm: self.algorithm.name().to_string(),
            latency: self.latency,
            budget: self.config.budget,
            sample_interval: self.config.sample_interval,
        }
    }
}

/// Runs with delays drawn from `spec.latency`. The network has its
/// own random stream, so changing the latency model leaves the agents'
/// decisions untouched.
pub fn run_algorithm(instance: &ProblemInstance, spec: &RunSpec<'_>) -> Trace {
    let mut delays = ModelDelays {
        model: spec.latency,
        rng: seeds::rng(&[spec.seed, seeds::tag("latency")]),
    };
    run_with_delays(instance, spec, &mut delays)
}

/// Runs with an arbitrary delay source, e.g. an adversarial schedule.
pub fn run_with_delays(
    instance: &ProblemInstance,
    spec: &RunSpec<'_>,
    delays: &mut dyn DelaySource,
) -> Trace {
    let agent_rng = |a: usize| seeds::rng(&[spec.seed, a as u64]);
    let n = instance.n();
    if let Some(init) = spec.initial {
        assert_eq!(init.len(), n, "initial assignment length");
    }
    let start = |a: usize, v: Value| spec.initial.map_or(v, |init| init[a]);
    match spec.algorithm {
        Algorithm::Mgm => {
            let agents = (0..n)
                .map(|a| {
                    let ag = MgmAgent::new(instance, a, agent_rng(a));
                    let v = start(a, ag.value());
                    ag.with_value(v)
                })
                .collect();
            sim::run(instance, agents, delays, &spec.config, spec.meta())
        }
        Algorithm::Mgm2(params) => {
            let agents = (0..n)
                .map(|a| {
                    let ag = Mgm2Agent::new(instance, params, a, agent_rng(a));
                    let v = start(a, ag.value());
                    ag.with_value(v)
                })
                .collect();
            sim::run(instance, agents, delays, &spec.config, spec.meta())
        }
        Algorithm::Lamdls2(params) => {
            let agents = (0..n)
                .map(|a| {
                    let ag = Lamdls2Agent::new(instance, params, a, agent_rng(a));
                    let v = start(a, ag.value());
                    ag.with_value(v)
                })
                .collect();
            sim::run(instance, agents, delays, &spec.config, spec.meta())
        }
    }
}
