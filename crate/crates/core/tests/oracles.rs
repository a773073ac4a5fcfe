mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{feature_mismatch, graph_violations, reference_features, Naive};
use msglon::lon::{BasinAssignment, Lon, LonConfig, LonFeatures};
use msglon::msg::{reference_radius, MsgInstance};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn local_optima_are_hill_climb_endpoints() {
    for seed in 0..10 {
        let inst = MsgInstance::random(2, 20, seed).unwrap();
        let (climbed, worst) = Naive::of(&inst).climb_optima();
        let analytic: BTreeSet<usize> = inst.local_optima().indices.into_iter().collect();
        assert_eq!(analytic, climbed, "seed {seed}");
        assert!(worst < 1e-6, "seed {seed}: endpoint {worst} from a center");
    }
}

#[test]
fn owners_follow_merge_chains() {
    for seed in 0..5 {
        let inst = MsgInstance::random(3, 150, seed).unwrap();
        let naive = Naive::of(&inst);
        let basins = BasinAssignment::build(&inst);
        for i in 0..inst.len() {
            assert_eq!(basins.owner(i), naive.owner(i), "seed {seed} component {i}");
        }
    }
}

#[test]
fn assign_point_matches_merge_chain_oracle() {
    let mut rng = msglon::rng::stream(99, "test-points", 0);
    for seed in 0..10 {
        let inst = MsgInstance::random(2, 20, seed).unwrap();
        let naive = Naive::of(&inst);
        let basins = BasinAssignment::build(&inst);
        for _ in 0..1000 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            assert_eq!(basins.assign_point(&inst, &x).unwrap(), naive.assign(&x));
        }
    }
}

#[test]
fn features_match_graph_library() {
    for seed in 0..20 {
        let inst = MsgInstance::random(2, 100, seed).unwrap();
        let lon = Lon::build(&inst, &LonConfig::defaults(2, 100, seed));
        let ours = LonFeatures::compute(&lon);
        let theirs = reference_features(&lon);
        assert_eq!(feature_mismatch(&ours, &theirs), None, "seed {seed}");
    }
}

#[test]
fn generated_lons_satisfy_graph_invariants() {
    for seed in 0..40 {
        let d = 2 + (seed % 2) as usize;
        let m = 50 * d;
        let inst = MsgInstance::random(d, m, seed).unwrap();
        let lon = Lon::build(&inst, &LonConfig::defaults(d, m, seed));
        assert_eq!(graph_violations(&lon), Vec::<String>::new(), "seed {seed}");
    }
}

/// Basin probabilities of the clipped ball around optimum `node`, by a dense
/// grid over the ball, keyed by target node.
fn grid_weights(naive: &Naive, lon: &Lon, node: usize, r: f64, res: usize) -> BTreeMap<usize, f64> {
    let by_component: BTreeMap<usize, usize> =
        lon.nodes.iter().enumerate().map(|(k, n)| (n.component, k)).collect();
    let c = &lon.nodes[node].center;
    let mut counts = BTreeMap::new();
    let mut inside = 0usize;
    for a in 0..res {
        for b in 0..res {
            let u = -r + 2.0 * r * (a as f64 + 0.5) / res as f64;
            let v = -r + 2.0 * r * (b as f64 + 0.5) / res as f64;
            if u * u + v * v > r * r {
                continue;
            }
            inside += 1;
            let x = [(c[0] + u).clamp(0.0, 1.0), (c[1] + v).clamp(0.0, 1.0)];
            let target = by_component[&naive.assign(&x)];
            if target != node {
                *counts.entry(target).or_insert(0usize) += 1;
            }
        }
    }
    counts.into_iter().map(|(k, n)| (k, n as f64 / inside as f64)).collect()
}

fn edge_map(lon: &Lon, node: usize) -> BTreeMap<usize, f64> {
    lon.edges.iter().filter(|e| e.source == node).map(|e| (e.target, e.weight)).collect()
}

#[test]
fn edge_weights_match_grid_integration() {
    let (d, m, s) = (2, 100, 10_000);
    let inst = MsgInstance::random(d, m, 3).unwrap();
    let naive = Naive::of(&inst);
    let r = reference_radius(d, m);
    let lon = Lon::build(&inst, &LonConfig { samples: s, radius: r, seed: 11 });
    for node in 0..lon.nodes.len().min(12) {
        let expected = grid_weights(&naive, &lon, node, r, 300);
        let got = edge_map(&lon, node);
        let targets: BTreeSet<usize> = expected.keys().chain(got.keys()).copied().collect();
        for t in targets {
            let p = expected.get(&t).copied().unwrap_or(0.0);
            let w = got.get(&t).copied().unwrap_or(0.0);
            let se = (p * (1.0 - p) / s as f64).sqrt();
            // Grid discretization adds a small bias on top of sampling noise.
            assert!((w - p).abs() <= 3.0 * se + 2e-3, "node {node} -> {t}: sampled {w}, grid {p}");
        }
    }
}

#[test]
fn doubling_samples_stays_within_binomial_error() {
    let (d, m) = (2, 100);
    let inst = MsgInstance::random(d, m, 8).unwrap();
    let r = reference_radius(d, m);
    let a = Lon::build(&inst, &LonConfig { samples: 5_000, radius: r, seed: 1 });
    let b = Lon::build(&inst, &LonConfig { samples: 10_000, radius: r, seed: 2 });
    assert_eq!(a.nodes, b.nodes);
    for node in 0..a.nodes.len() {
        let (ea, eb) = (edge_map(&a, node), edge_map(&b, node));
        let targets: BTreeSet<usize> = ea.keys().chain(eb.keys()).copied().collect();
        for t in targets {
            let (wa, wb) = (ea.get(&t).copied().unwrap_or(0.0), eb.get(&t).copied().unwrap_or(0.0));
            let p = (wa + wb) / 2.0;
            let se = (p * (1.0 - p) * (1.0 / 5_000.0 + 1.0 / 10_000.0)).sqrt();
            assert!((wa - wb).abs() <= 4.0 * se + 2e-4, "node {node} -> {t}: {wa} vs {wb}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn small_random_lons_are_well_formed(seed in any::<u64>(), d in 1usize..4, m in 2usize..40) {
        let inst = MsgInstance::random(d, m, seed).unwrap();
        let lon = Lon::build(&inst, &LonConfig { samples: 200, radius: reference_radius(d, m), seed });
        prop_assert_eq!(graph_violations(&lon), Vec::<String>::new());
        let f = LonFeatures::compute(&lon);
        prop_assert_eq!(feature_mismatch(&f, &reference_features(&lon)), None);
        let naive = Naive::of(&inst);
        let basins = BasinAssignment::build(&inst);
        for i in 0..m {
            prop_assert_eq!(basins.owner(i), naive.owner(i));
        }
    }
}
