use std::fs;
use std::process::Command;

use cadcop::algo::AlgoName;
use cadcop::generators::GeneratorSpec;
use cadcop::harness::{run_experiment, write_csv, Check, ExperimentConfig, HarnessError};
use cadcop::problem::{path3, InstanceBuilder, ProblemInstance};
use cadcop::sim::LatencyModel;

fn small(algorithm: AlgoName) -> ExperimentConfig {
    ExperimentConfig {
        algorithm,
        generator: GeneratorSpec::uniform(12, 0.3, 0),
        latency: LatencyModel::Uniform { ub: 500 },
        instances: 5,
        budget: 400_000,
        sample_interval: 20_000,
        seed: 17,
        verify: if algorithm == AlgoName::Mgm {
            vec![Check::Monotone, Check::Coloring]
        } else {
            Check::ALL.to_vec()
        },
        ..Default::default()
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    for algo in AlgoName::ALL {
        let cfg = small(algo);
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_csv(a.path(), &run_experiment(&cfg).unwrap()).unwrap();
        write_csv(b.path(), &run_experiment(&cfg).unwrap()).unwrap();
        for name in ["curve.csv", "meters.csv", "finals.csv", "report.json"] {
            let x = fs::read(a.path().join(name)).unwrap();
            assert!(!x.is_empty());
            assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{algo} {name}");
        }
    }
}

#[test]
fn curve_file_has_one_row_per_sample() {
    let cfg = small(AlgoName::Mgm);
    let exp = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_csv(dir.path(), &exp).unwrap();
    let text = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("instance_seed,nclo,global_cost"));
    let per_run = (cfg.budget / cfg.sample_interval + 1) as usize;
    assert_eq!(lines.count(), per_run * cfg.instances);
    let meters = fs::read_to_string(dir.path().join("meters.csv")).unwrap();
    assert_eq!(meters.lines().count(), 1 + 12 * cfg.instances);
}

#[test]
fn mean_and_sem_match_the_finals() {
    let exp = run_experiment(&small(AlgoName::Mgm2)).unwrap();
    let costs: Vec<f64> = exp.runs.iter().map(|r| r.final_cost() as f64).collect();
    let n = costs.len() as f64;
    let m = costs.iter().sum::<f64>() / n;
    let sd = (costs.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((exp.report.mean_final_cost - m).abs() < 1e-9);
    assert!((exp.report.sem_final_cost - sd / n.sqrt()).abs() < 1e-9);
}

#[test]
fn instances_without_constraints_cost_nothing() {
    let inst = InstanceBuilder::new(vec![4; 6]).build().unwrap();
    for algo in AlgoName::ALL {
        let cfg = ExperimentConfig {
            fixed_instance: Some(inst.clone()),
            ..small(algo)
        };
        let exp = run_experiment(&cfg).unwrap();
        assert_eq!(exp.report.mean_final_cost, 0.0);
        assert_eq!(exp.report.sem_final_cost, 0.0);
        assert!(exp.report.mean_curve.iter().all(|&(_, c)| c == 0.0));
    }
}

#[test]
fn lamdls2_solves_the_path_instance() {
    let cfg = ExperimentConfig {
        algorithm: AlgoName::Lamdls2,
        fixed_instance: Some(path3()),
        latency: LatencyModel::Perfect,
        instances: 4,
        budget: 5_000,
        sample_interval: 100,
        verify: Check::ALL.to_vec(),
        ..Default::default()
    };
    let exp = run_experiment(&cfg).unwrap();
    assert!(exp.runs.iter().all(|r| r.final_cost() == 3));
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad = [
        ExperimentConfig { instances: 0, ..small(AlgoName::Mgm) },
        ExperimentConfig { q: 1.5, ..small(AlgoName::Mgm2) },
        ExperimentConfig { sample_interval: 0, ..small(AlgoName::Mgm) },
    ];
    for cfg in bad {
        assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))), "{cfg:?}");
    }
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cadcop"))
}

#[test]
fn cli_exports_reuses_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("inst.json");
    let out = cli()
        .args(["--problem", "coloring", "--agents", "20", "--seed", "3", "--export-instance"])
        .arg(&inst_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let inst = ProblemInstance::from_json(&fs::read_to_string(&inst_path).unwrap()).unwrap();
    assert_eq!(inst.n(), 20);

    let results = dir.path().join("results");
    let out = cli()
        .args(["--algo", "mgm2", "--instances", "3", "--budget", "40000", "--latency", "poisson:10"])
        .args(["--verify", "all", "--instance"])
        .arg(&inst_path)
        .arg("--out")
        .arg(&results)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("checks passed: monotone, 2opt, coloring"), "{stdout}");
    let finals = fs::read_to_string(results.join("finals.csv")).unwrap();
    assert_eq!(finals.lines().count(), 4);
}

#[test]
fn cli_reports_bad_arguments() {
    let out = cli().args(["--latency", "sometimes"]).output().unwrap();
    assert!(!out.status.success());
    let out = cli().args(["--verify", "monotone,3opt"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("3opt"));
}
