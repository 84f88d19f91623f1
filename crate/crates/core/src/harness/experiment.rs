use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{Check, ExperimentConfig};
use super::verify::{check_2opt, check_monotone, check_proper_coloring};
use crate::algo::{run_algorithm, AlgoName, RunSpec};
use crate::generators::GeneratorError;
use crate::problem::{Cost, ProblemInstance};
use crate::sim::{Nclo, Trace};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("instance {index} (seed {instance_seed}): {source}")]
    Generator {
        index: usize,
        instance_seed: u64,
        source: GeneratorError,
    },
    #[error("run on instance {index} (seed {instance_seed}) stalled with messages still expected")]
    Stalled { index: usize, instance_seed: u64 },
    #[error("{check} check failed on instance {index} (seed {instance_seed}): {detail}")]
    Verification {
        check: Check,
        index: usize,
        instance_seed: u64,
        detail: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone)]
pub struct InstanceRun {
    pub index: usize,
    pub instance_seed: u64,
    pub algorithm_seed: u64,
    pub instance: ProblemInstance,
    pub trace: Trace,
}

impl InstanceRun {
    pub fn final_cost(&self) -> Cost {
        self.instance
            .global_cost(&self.trace.final_assignment())
            .expect("engine keeps values in domain")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalRow {
    pub instance_seed: u64,
    pub final_cost: Cost,
    pub messages_total: u64,
    pub idle_nclos_total: Nclo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub algorithm: AlgoName,
    pub instances: usize,
    /// Mean global cost across instances at every sample point.
    pub mean_curve: Vec<(Nclo, f64)>,
    pub finals: Vec<FinalRow>,
    pub mean_final_cost: f64,
    /// Standard error of the final-cost mean.
    pub sem_final_cost: f64,
    pub messages_total: u64,
    pub idle_nclos_total: Nclo,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub runs: Vec<InstanceRun>,
    pub report: AggregateReport,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation over `sqrt(n)`; zero for fewer than two values.
pub fn sem(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Mean of integers, summed exactly so the result does not depend on order.
fn exact_mean(xs: impl Iterator<Item = u64>, n: usize) -> f64 {
    let total: u128 = xs.map(u128::from).sum();
    total as f64 / n as f64
}

fn run_one(cfg: &ExperimentConfig, index: usize) -> Result<InstanceRun, HarnessError> {
    let instance_seed = cfg.instance_seed(index);
    let instance = match &cfg.fixed_instance {
        Some(inst) => inst.clone(),
        None => cfg
            .generator
            .with_seed(instance_seed)
            .generate()
            .map_err(|source| HarnessError::Generator {
                index,
                instance_seed,
                source,
            })?,
    };
    let algorithm = cfg.algorithm();
    let algorithm_seed = cfg.algorithm_seed(index);
    let spec = RunSpec::new(&algorithm, cfg.latency, cfg.run_config(), algorithm_seed);
    let trace = run_algorithm(&instance, &spec);
    if trace.stalled() {
        return Err(HarnessError::Stalled {
            index,
            instance_seed,
        });
    }
    let run = InstanceRun {
        index,
        instance_seed,
        algorithm_seed,
        instance,
        trace,
    };
    for &check in &cfg.verify {
        verify(&run, check)?;
    }
    Ok(run)
}

fn verify(run: &InstanceRun, check: Check) -> Result<(), HarnessError> {
    let detail = match check {
        Check::Monotone => check_monotone(&run.trace, &run.instance).err().map(|e| e.to_string()),
        Check::TwoOpt => check_2opt(&run.instance, &run.trace.final_assignment())
            .err()
            .map(|w| w.to_string()),
        Check::Coloring => check_proper_coloring(&run.trace, &run.instance)
            .err()
            .map(|e| e.to_string()),
    };
    match detail {
        None => Ok(()),
        Some(detail) => Err(HarnessError::Verification {
            check,
            index: run.index,
            instance_seed: run.instance_seed,
            detail,
        }),
    }
}

/// Generates and runs every instance (in parallel), applies the configured
/// checks, and aggregates. The first failure by instance index is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment, HarnessError> {
    cfg.validate().map_err(HarnessError::Config)?;
    let results: Vec<Result<InstanceRun, HarnessError>> =
        (0..cfg.instances).into_par_iter().map(|i| run_one(cfg, i)).collect();
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let report = aggregate(cfg.algorithm, &runs);
    Ok(Experiment {
        config: cfg.clone(),
        runs,
        report,
    })
}

pub fn aggregate(algorithm: AlgoName, runs: &[InstanceRun]) -> AggregateReport {
    let n = runs.len();
    let finals: Vec<FinalRow> = runs
        .iter()
        .map(|r| FinalRow {
            instance_seed: r.instance_seed,
            final_cost: r.final_cost(),
            messages_total: r.trace.messages_total(),
            idle_nclos_total: r.trace.idle_total(),
        })
        .collect();
    let points = runs.first().map_or(0, |r| r.trace.curve.len());
    let mean_curve = (0..points)
        .map(|k| {
            let t = runs[0].trace.curve[k].0;
            (t, exact_mean(runs.iter().map(|r| r.trace.curve[k].1), n))
        })
        .collect();
    let costs: Vec<f64> = finals.iter().map(|f| f.final_cost as f64).collect();
    AggregateReport {
        algorithm,
        instances: n,
        mean_curve,
        mean_final_cost: exact_mean(finals.iter().map(|f| f.final_cost), n.max(1)),
        sem_final_cost: sem(&costs),
        messages_total: finals.iter().map(|f| f.messages_total).sum(),
        idle_nclos_total: finals.iter().map(|f| f.idle_nclos_total).sum(),
        finals,
    }
}

/// Writes `curve.csv`, `meters.csv`, `finals.csv` and `report.json` into
/// `dir`, creating it if needed.
pub fn write_csv(dir: &Path, exp: &Experiment) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut curve = io::BufWriter::new(fs::File::create(dir.join("curve.csv"))?);
    writeln!(curve, "instance_seed,nclo,global_cost")?;
    for r in &exp.runs {
        for &(t, c) in &r.trace.curve {
            writeln!(curve, "{},{},{}", r.instance_seed, t, c)?;
        }
    }
    curve.flush()?;

    let mut meters = io::BufWriter::new(fs::File::create(dir.join("meters.csv"))?);
    writeln!(meters, "instance_seed,agent,messages_sent,idle_nclos")?;
    for r in &exp.runs {
        for (a, m) in r.trace.meters.iter().enumerate() {
            writeln!(meters, "{},{},{},{}", r.instance_seed, a, m.messages_sent, m.idle_nclos)?;
        }
    }
    meters.flush()?;

    let mut finals = io::BufWriter::new(fs::File::create(dir.join("finals.csv"))?);
    writeln!(finals, "instance_seed,final_cost,messages_total,idle_nclos_total")?;
    for f in &exp.report.finals {
        writeln!(
            finals,
            "{},{},{},{}",
            f.instance_seed, f.final_cost, f.messages_total, f.idle_nclos_total
        )?;
    }
    finals.flush()?;

    let json = serde_json::to_string_pretty(&exp.report).expect("report serializes");
    fs::write(dir.join("report.json"), json + "\n")?;
    Ok(())
}
