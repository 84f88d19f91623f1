//! Communication-aware DCOP toolkit: problem instances and generators, a
//! deterministic NCLO-metered network simulator, the MGM, MGM-2 and LAMDLS-2
//! local search algorithms, and an experiment harness with verifiers.

pub mod algo;
pub mod generators;
pub mod harness;
pub mod problem;
pub mod seeds;
pub mod sim;

pub use problem::{AgentId, Cost, InstanceBuilder, ProblemError, ProblemInstance, Value};
pub use sim::Nclo;
