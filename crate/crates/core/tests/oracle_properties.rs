//! Observation propagation: soundness against exact conditioning, the
//! call bound, idempotence and order independence.

mod common;

use proptest::prelude::*;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use catchment::inference::{certain_inference, probabilistic_inference, TieProbabilities};
use catchment::oracles::{
    apply_oracles, enumerate_worlds, exact_conditional_distribution, OracleSet, Provenance,
};
use catchment::rgraph::RGraph;
use catchment::topology::{IngressId, NodeId};
use common::{random_rgraph, random_ties};

/// Observations of `count` nodes, read off one sampled world.
fn observe(g: &RGraph, t: &TieProbabilities, count: usize, seed: u64) -> Vec<(NodeId, IngressId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let worlds = enumerate_worlds(g, t).unwrap();
    let pick = WeightedIndex::new(worlds.iter().map(|w| w.prob)).unwrap();
    let w = &worlds[pick.sample(&mut rng)];
    let mut nodes: Vec<usize> = g.counted().filter(|&i| w.routes[i].is_some()).collect();
    nodes.shuffle(&mut rng);
    nodes
        .into_iter()
        .take(count)
        .map(|i| (g.id(i), g.ingresses()[w.routes[i].unwrap()].clone()))
        .collect()
}

fn set(pairs: &[(NodeId, IngressId)]) -> OracleSet {
    let mut o = OracleSet::new();
    for (n, m) in pairs {
        o.insert(*n, m.clone(), Provenance::Synthetic).unwrap();
    }
    o
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagated_routes_are_implied(m in 2usize..=3, extra in 2usize..=10, count in 1usize..=4, seed in any::<u64>()) {
        let g = random_rgraph(m, extra, seed);
        let t = random_ties(&g, seed);
        let obs = observe(&g, &t, count, seed);
        let o = set(&obs);
        let f = certain_inference(&g).unwrap();
        let pi = probabilistic_inference(&g, &f, &t).unwrap();
        let out = apply_oracles(&g, &f, &pi, &o).unwrap();
        let exact = exact_conditional_distribution(&g, &t, &o).unwrap();
        prop_assert!(out.set_route_calls <= g.counted().count());
        for i in g.counted() {
            if let Some(k) = out.f.get(i) {
                prop_assert!((exact.prob(i, k) - 1.0).abs() < 1e-9, "node {} fixed to {}", g.id(i), k);
                prop_assert_eq!(out.pi.prob(i, k), 1.0);
            }
        }
        for (n, mm) in &obs {
            prop_assert_eq!(out.f.route_of(&g, *n), Some(mm));
        }
    }

    #[test]
    fn applying_twice_changes_nothing(m in 2usize..=3, extra in 2usize..=10, count in 1usize..=4, seed in any::<u64>()) {
        let g = random_rgraph(m, extra, seed);
        let t = random_ties(&g, seed);
        let o = set(&observe(&g, &t, count, seed));
        let f = certain_inference(&g).unwrap();
        let pi = probabilistic_inference(&g, &f, &t).unwrap();
        let once = apply_oracles(&g, &f, &pi, &o).unwrap();
        let twice = apply_oracles(&g, &once.f, &once.pi, &o).unwrap();
        prop_assert_eq!(&twice.f, &once.f);
        prop_assert_eq!(&twice.pi, &once.pi);
        prop_assert_eq!(twice.set_route_calls, 0);
    }

    #[test]
    fn order_does_not_matter(m in 2usize..=3, extra in 2usize..=10, count in 2usize..=5, seed in any::<u64>()) {
        let g = random_rgraph(m, extra, seed);
        let t = random_ties(&g, seed);
        let mut obs = observe(&g, &t, count, seed);
        let f = certain_inference(&g).unwrap();
        let pi = probabilistic_inference(&g, &f, &t).unwrap();
        let base = apply_oracles(&g, &f, &pi, &set(&obs)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..4 {
            obs.shuffle(&mut rng);
            let other = apply_oracles(&g, &f, &pi, &set(&obs)).unwrap();
            prop_assert_eq!(&other.f, &base.f);
        }
    }
}
