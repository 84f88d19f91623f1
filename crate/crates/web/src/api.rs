use std::str::FromStr;

use serde::Serialize;

use cadcop::algo::lamdls2::{demo_instance, demo_script};
use cadcop::algo::{run_algorithm, AlgoName, Algorithm, Lamdls2Params, RunSpec};
use cadcop::generators::GeneratorSpec;
use cadcop::harness::verify::{brute_force_optimum, check_2opt, colorings, BRUTE_FORCE_LIMIT};
use cadcop::problem::{AgentId, Cost, ProblemInstance, Value};
use cadcop::sim::{nclo_to_within, LatencyModel, MoveKind, Nclo, RunConfig, Trace};

pub const MAX_AGENTS: usize = 200;
pub const MAX_BUDGET: Nclo = 5_000_000;
pub const MAX_STEPS: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    pub agents: usize,
    pub density: f64,
    pub seed: u64,
}

impl GraphParams {
    fn instance(&self, domain: Option<usize>) -> Result<ProblemInstance, String> {
        if !(2..=MAX_AGENTS).contains(&self.agents) {
            return Err(format!("agents must be between 2 and {MAX_AGENTS}"));
        }
        let mut g = GeneratorSpec::uniform(self.agents, self.density, self.seed);
        if let Some(d) = domain {
            g.domain_size = d;
        }
        g.generate().map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSource {
    Demo,
    Random,
}

impl FromStr for GraphSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "demo" => Ok(GraphSource::Demo),
            "random" => Ok(GraphSource::Random),
            other => Err(format!("unknown graph {other:?} (expected demo or random)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(AgentId, AgentId)>,
}

impl Graph {
    fn of(inst: &ProblemInstance) -> Self {
        Graph {
            n: inst.n(),
            edges: inst.constraints().iter().map(|c| (c.i, c.j)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub algorithm: AlgoName,
    pub points: Vec<(Nclo, Cost)>,
    pub final_cost: Cost,
    pub messages: u64,
    pub idle_nclos: Nclo,
    /// First NCLO within 1% of the run's final cost.
    pub settle_nclo: Nclo,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub graph: Graph,
    pub latency: String,
    pub series: Vec<Series>,
}

fn parse_latency(s: &str) -> Result<LatencyModel, String> {
    let model: LatencyModel = s.parse()?;
    model.validate()?;
    Ok(model)
}

pub fn compare(params: &GraphParams, latency: &str, budget: Nclo) -> Result<CompareReport, String> {
    let latency = parse_latency(latency)?;
    if !(100..=MAX_BUDGET).contains(&budget) {
        return Err(format!("budget must be between 100 and {MAX_BUDGET}"));
    }
    let inst = params.instance(None)?;
    let config = RunConfig::new(budget, budget / 100);
    let series = AlgoName::ALL
        .iter()
        .map(|&name| {
            let algo = Algorithm::default_for(name);
            let trace = run_algorithm(&inst, &RunSpec::new(&algo, latency, config, params.seed));
            Series {
                algorithm: name,
                points: trace.curve.clone(),
                final_cost: final_cost(&inst, &trace),
                messages: trace.messages_total(),
                idle_nclos: trace.idle_total(),
                settle_nclo: nclo_to_within(&trace, &inst, 0.01),
            }
        })
        .collect();
    Ok(CompareReport {
        graph: Graph::of(&inst),
        latency: latency.to_string(),
        series,
    })
}

fn final_cost(inst: &ProblemInstance, trace: &Trace) -> Cost {
    inst.global_cost(&trace.final_assignment()).expect("in-domain values")
}

#[derive(Debug, Clone, Serialize)]
pub struct StepView {
    pub step: u64,
    /// Color per agent; `None` for isolated agents.
    pub colors: Vec<Option<u32>>,
    /// `(offerer, receiver)` pairs that moved or stayed jointly.
    pub pairs: Vec<(AgentId, AgentId)>,
    pub cost: Cost,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColoringReport {
    pub graph: Graph,
    pub initial_cost: Cost,
    pub steps: Vec<StepView>,
}

pub fn coloring(source: GraphSource, params: &GraphParams, latency: &str, steps: u64) -> Result<ColoringReport, String> {
    let latency = parse_latency(latency)?;
    if !(1..=MAX_STEPS).contains(&steps) {
        return Err(format!("steps must be between 1 and {MAX_STEPS}"));
    }
    let (inst, algo) = match source {
        GraphSource::Demo => (
            demo_instance(params.seed),
            Algorithm::Lamdls2(Lamdls2Params {
                docs_value_selection: true,
                docs_script: demo_script(),
            }),
        ),
        GraphSource::Random => (params.instance(None)?, Algorithm::default_for(AlgoName::Lamdls2)),
    };
    // grow the budget until enough steps have been completed
    let mut budget = 20_000;
    let trace = loop {
        let config = RunConfig::new(budget, budget);
        let trace = run_algorithm(&inst, &RunSpec::new(&algo, latency, config, params.seed));
        if trace.max_steps() > steps || budget >= 50 * MAX_BUDGET || inst.edge_count() == 0 {
            break trace;
        }
        budget *= 4;
    };
    let colors = colorings(&trace);
    let mut values = trace.initial.clone();
    let initial_cost = inst.global_cost(&values).expect("valid");
    let mut out = Vec::new();
    for step in 1..=steps {
        let Some(by_agent) = colors.get(&step) else { break };
        for m in trace.moves.iter().filter(|m| m.step == step) {
            for &(a, v) in &m.changes {
                values[a] = v;
            }
        }
        out.push(StepView {
            step,
            colors: (0..inst.n()).map(|a| by_agent.get(&a).copied()).collect(),
            pairs: trace.pairings().filter(|p| p.0 == step).map(|p| (p.1, p.2)).collect(),
            cost: inst.global_cost(&values).expect("valid"),
        });
    }
    Ok(ColoringReport {
        graph: Graph::of(&inst),
        initial_cost,
        steps: out,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Improvement {
    pub changes: Vec<(AgentId, Value)>,
    pub gain: Cost,
}

#[derive(Debug, Clone, Serialize)]
pub struct InspectReport {
    pub graph: Graph,
    pub algorithm: AlgoName,
    pub final_assignment: Vec<Value>,
    pub final_cost: Cost,
    pub optimum: Vec<Value>,
    pub optimum_cost: Cost,
    /// Best single or pair deviation from the final assignment, if any.
    pub improvement: Option<Improvement>,
    pub steps: u64,
    pub bilateral_moves: usize,
    pub unilateral_moves: usize,
}

pub fn inspect(algo: AlgoName, params: &GraphParams, domain: usize, latency: &str) -> Result<InspectReport, String> {
    let latency = parse_latency(latency)?;
    if domain == 0 {
        return Err("domain must have at least one value".into());
    }
    if (domain as f64).powi(params.agents as i32) > BRUTE_FORCE_LIMIT as f64 {
        return Err(format!(
            "{domain}^{} assignments is too many to enumerate (limit {BRUTE_FORCE_LIMIT})",
            params.agents
        ));
    }
    let inst = params.instance(Some(domain))?;
    let algorithm = Algorithm::default_for(algo);
    let config = RunConfig::new(MAX_BUDGET, MAX_BUDGET).until_quiet(30);
    let trace = run_algorithm(&inst, &RunSpec::new(&algorithm, latency, config, params.seed));
    let final_assignment = trace.final_assignment();
    let (optimum, optimum_cost) = brute_force_optimum(&inst).map_err(|e| e.to_string())?;
    let count = |k: MoveKind| trace.moves.iter().filter(|m| m.kind == k).count();
    Ok(InspectReport {
        graph: Graph::of(&inst),
        algorithm: algo,
        final_cost: final_cost(&inst, &trace),
        improvement: check_2opt(&inst, &final_assignment).err().map(|w| Improvement {
            changes: w.changes,
            gain: w.gain,
        }),
        final_assignment,
        optimum,
        optimum_cost,
        steps: trace.max_steps(),
        bilateral_moves: count(MoveKind::Bilateral),
        unilateral_moves: count(MoveKind::Unilateral),
    })
}
