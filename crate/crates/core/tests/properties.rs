use proptest::prelude::*;

use cadcop::algo::{run_algorithm, AlgoName, Algorithm, Lamdls2Params, Mgm2Params, RunSpec};
use cadcop::generators::GeneratorSpec;
use cadcop::harness::verify::{
    brute_force_optimum, check_2opt, check_gain_consistency, check_monotone, check_proper_coloring,
};
use cadcop::harness::{aggregate, run_experiment, ExperimentConfig};
use cadcop::problem::{ProblemInstance, Value};
use cadcop::sim::{dense_curve, sample_delay, LatencyModel, RunConfig};

fn small_instance() -> impl Strategy<Value = ProblemInstance> {
    (2usize..8, 0.0f64..=1.0, 1usize..4, any::<u64>()).prop_map(|(n, p, d, seed)| {
        let mut g = GeneratorSpec::uniform(n, p, seed);
        g.domain_size = d;
        g.cost_low = 0;
        g.cost_high = 20;
        g.generate().unwrap()
    })
}

fn with_assignment() -> impl Strategy<Value = (ProblemInstance, Vec<Value>)> {
    small_instance().prop_flat_map(|inst| {
        let values: Vec<_> = inst.domain_sizes().iter().map(|&d| 0..d).collect();
        (Just(inst), values)
    })
}

fn latency() -> impl Strategy<Value = LatencyModel> {
    prop_oneof![
        Just(LatencyModel::Perfect),
        (0u64..3_000).prop_map(|ub| LatencyModel::Uniform { ub }),
        (0.0f64..30.0).prop_map(|m| LatencyModel::Poisson { m }),
    ]
}

fn algorithm() -> impl Strategy<Value = Algorithm> {
    prop_oneof![
        Just(Algorithm::Mgm),
        (0.0f64..=1.0).prop_map(|q| Algorithm::Mgm2(Mgm2Params {
            q,
            ..Default::default()
        })),
        Just(Algorithm::Lamdls2(Lamdls2Params {
            docs_value_selection: false,
            ..Default::default()
        })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn cost_lookup_is_symmetric((inst, vals) in with_assignment()) {
        for con in inst.constraints() {
            let (i, j) = (con.i, con.j);
            prop_assert_eq!(inst.cost(i, j, vals[i], vals[j]), inst.cost(j, i, vals[j], vals[i]));
        }
    }

    #[test]
    fn unilateral_gain_is_the_global_improvement((inst, vals) in with_assignment(), pick in any::<prop::sample::Index>()) {
        let a = pick.index(inst.n());
        let (v, gain) = inst.best_unilateral(a, vals[a], &vals).unwrap();
        let mut after = vals.clone();
        after[a] = v;
        let before = inst.global_cost(&vals).unwrap();
        prop_assert_eq!(before - inst.global_cost(&after).unwrap(), gain);
        // no other value does better
        for d in 0..inst.domain_size(a) {
            after[a] = d;
            prop_assert!(inst.global_cost(&after).unwrap() + gain >= before);
        }
    }

    #[test]
    fn bilateral_gain_is_the_global_improvement((inst, vals) in with_assignment(), pick in any::<prop::sample::Index>()) {
        prop_assume!(inst.edge_count() > 0);
        let con = &inst.constraints()[pick.index(inst.edge_count())];
        let (i, j) = (con.i, con.j);
        let (vi, vj, gain) = inst.best_bilateral(i, j, vals[i], vals[j], &vals).unwrap();
        let before = inst.global_cost(&vals).unwrap();
        let mut trial = vals.clone();
        trial[i] = vi;
        trial[j] = vj;
        prop_assert_eq!(before - inst.global_cost(&trial).unwrap(), gain);
        let mut best = before;
        for di in 0..inst.domain_size(i) {
            for dj in 0..inst.domain_size(j) {
                trial[i] = di;
                trial[j] = dj;
                best = best.min(inst.global_cost(&trial).unwrap());
            }
        }
        prop_assert_eq!(before - best, gain);
        if gain == 0 {
            prop_assert_eq!((vi, vj), (vals[i], vals[j]));
        }
    }

    #[test]
    fn optimum_is_2opt_and_a_lower_bound((inst, vals) in with_assignment()) {
        let (opt, cost) = brute_force_optimum(&inst).unwrap();
        prop_assert_eq!(inst.global_cost(&opt).unwrap(), cost);
        prop_assert!(check_2opt(&inst, &opt).is_ok());
        prop_assert!(inst.global_cost(&vals).unwrap() >= cost);
        if let Err(w) = check_2opt(&inst, &vals) {
            let mut better = vals.clone();
            for &(a, v) in &w.changes {
                better[a] = v;
            }
            prop_assert_eq!(inst.global_cost(&vals).unwrap() - inst.global_cost(&better).unwrap(), w.gain);
        }
    }

    #[test]
    fn json_round_trip(inst in small_instance()) {
        let back = ProblemInstance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn generators_are_deterministic(n in 10usize..40, p in 0.0f64..0.5, seed in any::<u64>(), family in 0u8..3) {
        let spec = match family {
            0 => GeneratorSpec::uniform(n, p, seed),
            1 => GeneratorSpec::coloring(n, seed),
            _ => GeneratorSpec::scale_free(n, seed),
        };
        prop_assert_eq!(spec.generate().unwrap().to_json(), spec.generate().unwrap().to_json());
    }

    #[test]
    fn delays_stay_in_range(ub in 0u64..10_000, transit in 0usize..500, seed in any::<u64>()) {
        let mut rng = cadcop::seeds::rng(&[seed]);
        let d = sample_delay(&LatencyModel::Uniform { ub }, transit, &mut rng);
        prop_assert!(d <= ub);
        prop_assert_eq!(sample_delay(&LatencyModel::Poisson { m: 0.0 }, transit, &mut rng), 0);
        prop_assert_eq!(sample_delay(&LatencyModel::Perfect, transit, &mut rng), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_are_monotone_consistent_and_deterministic(
        inst in small_instance(),
        algo in algorithm(),
        lat in latency(),
        seed in any::<u64>(),
    ) {
        let spec = RunSpec::new(&algo, lat, RunConfig::new(60_000, 5_000), seed);
        let trace = run_algorithm(&inst, &spec);
        prop_assert!(!trace.stalled());
        prop_assert!(check_monotone(&trace, &inst).is_ok());
        prop_assert_eq!(check_gain_consistency(&trace, &inst), vec![]);
        prop_assert!(check_proper_coloring(&trace, &inst).is_ok());
        for m in &trace.meters {
            prop_assert_eq!(m.idle_nclos + m.busy_nclos, m.final_clock);
        }
        // dense curve agrees with a full recomputation
        for p in dense_curve(&trace, &inst).iter().step_by(7) {
            prop_assert_eq!(p.cost, inst.global_cost(&trace.assignment_at(p.nclo)).unwrap());
        }
        prop_assert_eq!(run_algorithm(&inst, &spec), trace);
    }

    #[test]
    fn lamdls2_neighbors_stay_within_one_step(inst in small_instance(), lat in latency(), seed in any::<u64>()) {
        let algo = Algorithm::Lamdls2(Lamdls2Params::default());
        let trace = run_algorithm(&inst, &RunSpec::new(&algo, lat, RunConfig::new(80_000, 10_000), seed));
        prop_assert!(!trace.stalled());
        for con in inst.constraints() {
            let (a, b) = (trace.meters[con.i].steps, trace.meters[con.j].steps);
            prop_assert!(a.abs_diff(b) <= 1, "{} vs {}", a, b);
        }
    }
}

#[test]
fn aggregation_ignores_run_order() {
    let cfg = ExperimentConfig {
        algorithm: AlgoName::Mgm2,
        generator: GeneratorSpec::uniform(15, 0.3, 0),
        instances: 6,
        budget: 50_000,
        sample_interval: 5_000,
        ..Default::default()
    };
    let exp = run_experiment(&cfg).unwrap();
    let mut reversed = exp.runs.clone();
    reversed.reverse();
    let a = aggregate(AlgoName::Mgm2, &exp.runs);
    let b = aggregate(AlgoName::Mgm2, &reversed);
    assert_eq!(a.mean_curve, b.mean_curve);
    assert_eq!(a.mean_final_cost, b.mean_final_cost);
    assert_eq!(a.messages_total, b.messages_total);
    assert_eq!(a.idle_nclos_total, b.idle_nclos_total);
    assert!((a.sem_final_cost - b.sem_final_cost).abs() < 1e-9);
}

#[test]
fn triangle_pairings_cover_every_ordered_pair() {
    let inst = GeneratorSpec::uniform(3, 1.0, 5).generate().unwrap();
    let algo = Algorithm::Lamdls2(Lamdls2Params::default());
    for seed in 0..20 {
        let trace = run_algorithm(&inst, &RunSpec::new(&algo, LatencyModel::Perfect, RunConfig::new(10_000_000, 1_000_000), seed));
        let steps = trace.max_steps();
        assert!(steps >= 50, "only {steps} steps");
        let pairs: std::collections::BTreeSet<_> = trace
            .pairings()
            .filter(|p| p.0 <= 60)
            .map(|p| (p.1, p.2))
            .collect();
        assert_eq!(pairs.len(), 6, "seed {seed}: {pairs:?}");
    }
}
