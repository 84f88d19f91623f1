use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};

use cadcop::algo::AlgoName;
use cadcop::generators::GeneratorSpec;
use cadcop::harness::{run_experiment, write_csv, Check, ExperimentConfig};
use cadcop::problem::ProblemInstance;
use cadcop::sim::LatencyModel;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Problem {
    Uniform,
    Coloring,
    Scalefree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone)]
struct Checks(Vec<Check>);

impl std::str::FromStr for Checks {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::parse_list(s).map(Checks)
    }
}

/// Run MGM, MGM-2 or LAMDLS-2 on batches of generated DCOP instances over a
/// simulated network and write cost curves and meters as CSV.
#[derive(Debug, Parser)]
#[command(name = "cadcop", version)]
struct Cli {
    #[arg(long, default_value = "lamdls2")]
    algo: AlgoName,
    #[arg(long, value_enum, default_value = "uniform")]
    problem: Problem,
    #[arg(long, default_value_t = 50)]
    agents: usize,
    /// Edge probability; defaults to 0.2 (uniform) or 0.05 (coloring).
    #[arg(long)]
    density: Option<f64>,
    /// Values per agent; defaults to 10, or 3 for coloring.
    #[arg(long)]
    domain: Option<usize>,
    #[arg(long)]
    cost_low: Option<u64>,
    #[arg(long)]
    cost_high: Option<u64>,
    /// none, uniform:UB or poisson:M
    #[arg(long, default_value = "none")]
    latency: LatencyModel,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// NCLO budget per run.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    #[arg(long, default_value_t = 10_000)]
    sample_interval: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// MGM-2 offerer probability.
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    #[arg(long, value_enum, default_value = "on")]
    docs_value_selection: Switch,
    /// Steps without any value change after which a run stops; 0 disables.
    #[arg(long, default_value_t = 20)]
    quiet_steps: u64,
    /// Checks to run on every trace: monotone, 2opt, coloring or all.
    #[arg(long)]
    verify: Option<Checks>,
    /// Use this instance (JSON) for every run instead of generating.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Write the first generated instance as JSON and exit.
    #[arg(long)]
    export_instance: Option<PathBuf>,
    /// Output directory for curve.csv, meters.csv, finals.csv, report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    fn generator(&self) -> GeneratorSpec {
        let mut g = match self.problem {
            Problem::Uniform => GeneratorSpec::uniform(self.agents, 0.2, 0),
            Problem::Coloring => GeneratorSpec::coloring(self.agents, 0),
            Problem::Scalefree => GeneratorSpec::scale_free(self.agents, 0),
        };
        if let Some(p) = self.density {
            g.density = p;
        }
        if let Some(d) = self.domain {
            g.domain_size = d;
        }
        if let Some(c) = self.cost_low {
            g.cost_low = c;
        }
        if let Some(c) = self.cost_high {
            g.cost_high = c;
        }
        g
    }

    fn config(&self) -> Result<ExperimentConfig> {
        let fixed_instance = match &self.instance {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Some(ProblemInstance::from_json(&text).with_context(|| format!("parsing {}", path.display()))?)
            }
            None => None,
        };
        Ok(ExperimentConfig {
            algorithm: self.algo,
            generator: self.generator(),
            fixed_instance,
            latency: self.latency,
            instances: self.instances,
            budget: self.budget,
            sample_interval: self.sample_interval,
            q: self.q,
            docs_value_selection: self.docs_value_selection == Switch::On,
            seed: self.seed,
            quiet_steps: (self.quiet_steps > 0).then_some(self.quiet_steps),
            verify: self.verify.clone().map(|c| c.0).unwrap_or_default(),
        })
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.config()?;
    if let Some(path) = &cli.export_instance {
        if cfg.fixed_instance.is_some() {
            bail!("--export-instance and --instance are mutually exclusive");
        }
        let inst = cfg.generator.with_seed(cfg.instance_seed(0)).generate()?;
        fs::write(path, inst.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
        println!("wrote instance ({} agents, {} constraints) to {}", inst.n(), inst.edge_count(), path.display());
        return Ok(());
    }
    let exp = run_experiment(&cfg)?;
    let r = &exp.report;
    println!(
        "{} on {} instances, latency {}: mean final cost {:.2} (sem {:.2}), {} messages, {} idle nclos",
        r.algorithm, r.instances, cfg.latency, r.mean_final_cost, r.sem_final_cost, r.messages_total, r.idle_nclos_total
    );
    if !cfg.verify.is_empty() {
        let names: Vec<String> = cfg.verify.iter().map(ToString::to_string).collect();
        println!("checks passed: {}", names.join(", "));
    }
    if let Some(dir) = &cli.out {
        write_csv(dir, &exp)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
