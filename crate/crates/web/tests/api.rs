use std::collections::BTreeSet;

use cadcop_web::api::{coloring, compare, inspect, GraphParams, GraphSource};
use cadcop::algo::AlgoName;

fn params(agents: usize, density: f64, seed: u64) -> GraphParams {
    GraphParams { agents, density, seed }
}

#[test]
fn compare_returns_three_monotone_curves() {
    let r = compare(&params(30, 0.2, 4), "uniform:200", 100_000).unwrap();
    assert_eq!(r.series.len(), 3);
    for s in &r.series {
        assert_eq!(s.points.len(), 101);
        assert!(s.points.windows(2).all(|w| w[1].1 <= w[0].1), "{}", s.algorithm);
        assert_eq!(s.points.last().unwrap().1, s.final_cost);
        assert!(s.settle_nclo <= 100_000);
    }
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["series"][2]["algorithm"], "lamdls2");
    assert_eq!(json["latency"], "uniform:200");
}

#[test]
fn compare_rejects_out_of_range_input() {
    assert!(compare(&params(30, 0.2, 0), "sometimes", 10_000).is_err());
    assert!(compare(&params(30, 0.2, 0), "none", 10).is_err());
    assert!(compare(&params(1_000, 0.2, 0), "none", 10_000).is_err());
    assert!(compare(&params(30, 1.5, 0), "none", 10_000).is_err());
}

#[test]
fn demo_coloring_matches_the_scripted_ids() {
    let r = coloring(GraphSource::Demo, &params(0, 0.0, 0), "none", 3).unwrap();
    assert_eq!(r.graph.n, 6);
    assert_eq!(r.steps.len(), 3);
    let step2: Vec<_> = r.steps[1].colors.iter().map(|c| c.unwrap()).collect();
    assert_eq!(step2, vec![3, 2, 1, 1, 2, 3]);
    let pairs: BTreeSet<_> = r.steps[0].pairs.iter().copied().collect();
    assert_eq!(pairs, BTreeSet::from([(0, 2), (1, 3)]));
    assert!(r.steps.windows(2).all(|w| w[1].cost <= w[0].cost));
    assert!(r.steps[0].cost <= r.initial_cost);
}

#[test]
fn random_coloring_is_proper_each_step() {
    let r = coloring(GraphSource::Random, &params(25, 0.25, 9), "poisson:5", 10).unwrap();
    assert_eq!(r.steps.len(), 10);
    for s in &r.steps {
        for &(a, b) in &r.graph.edges {
            assert_ne!(s.colors[a], s.colors[b], "step {}", s.step);
        }
    }
}

#[test]
fn inspect_reports_gap_to_optimum() {
    for algo in AlgoName::ALL {
        let r = inspect(algo, &params(7, 0.5, 2), 3, "uniform:50").unwrap();
        assert!(r.final_cost >= r.optimum_cost);
        if algo != AlgoName::Mgm {
            assert!(r.improvement.is_none(), "{algo}: {:?}", r.improvement);
        }
        if r.final_cost == r.optimum_cost {
            assert!(r.improvement.is_none());
        }
    }
    assert!(inspect(AlgoName::Mgm, &params(20, 0.5, 2), 10, "none").is_err());
    assert!(inspect(AlgoName::Mgm, &params(4, 0.5, 2), 0, "none").is_err());
}
