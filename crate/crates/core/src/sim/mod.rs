//! Deterministic discrete-event execution of message-driven agents over a
//! delayed network, measured in NCLOs (non-concurrent logic operations).

pub mod engine;
pub mod latency;
pub mod trace;

/// Logical time: one NCLO per constraint-table lookup.
pub type Nclo = u64;

pub use engine::{run, Agent, Ctx, DelaySource, ModelDelays, Payload, RunConfig, SendInfo};
pub use latency::{sample_delay, LatencyModel};
pub use trace::{
    cost_curve, dense_curve, nclo_to_within, AgentMeters, Annotation, DensePoint, Move, MoveKind,
    Note, Outcome, RunMeta, Trace,
};
