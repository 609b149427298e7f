//! Random routing graphs and tie weights for property tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use catchment::inference::TieProbabilities;
use catchment::rgraph::RGraph;
use catchment::topology::{IngressId, NodeId};

/// Random DAG rooted at node 0 with `ingresses` attached nodes `1..=k`
/// and `extra` further nodes, each with one to three earlier parents.
pub fn random_rgraph(ingresses: usize, extra: usize, seed: u64) -> RGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = ingresses as u32;
    let total = k + extra as u32;
    let mut g = RGraph::new(
        (0..=total).map(NodeId),
        NodeId(0),
        (1..=ingresses).map(|m| IngressId::new(format!("m{m}"))).collect(),
        (1..=k).map(|i| (NodeId(i), i as usize - 1)),
        [],
    )
    .unwrap();
    for i in 1..=k {
        g.add_edge(NodeId(0), NodeId(i)).unwrap();
    }
    for i in k + 1..=total {
        let want = rng.gen_range(1..=3.min(i - 1));
        let mut parents: Vec<u32> = Vec::new();
        while parents.len() < want as usize {
            let p = rng.gen_range(1..i);
            if !parents.contains(&p) {
                parents.push(p);
            }
        }
        for p in parents {
            g.add_edge(NodeId(p), NodeId(i)).unwrap();
        }
    }
    g
}

/// Random routing graph whose non-root part is a polytree: a node with
/// several parents takes them from different undirected components.
pub fn random_polytree(ingresses: usize, extra: usize, seed: u64) -> RGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = ingresses as u32;
    let total = k + extra as u32;
    let mut g = RGraph::new(
        (0..=total).map(NodeId),
        NodeId(0),
        (1..=ingresses).map(|m| IngressId::new(format!("m{m}"))).collect(),
        (1..=k).map(|i| (NodeId(i), i as usize - 1)),
        [],
    )
    .unwrap();
    let mut comp: Vec<u32> = (0..=total).collect();
    fn find(c: &mut [u32], x: u32) -> u32 {
        let mut r = x;
        while c[r as usize] != r {
            r = c[r as usize];
        }
        c[x as usize] = r;
        r
    }
    for i in 1..=k {
        g.add_edge(NodeId(0), NodeId(i)).unwrap();
    }
    for i in k + 1..=total {
        let want = rng.gen_range(1..=2);
        let mut chosen: Vec<u32> = Vec::new();
        for _ in 0..8 {
            if chosen.len() == want {
                break;
            }
            let p = rng.gen_range(1..i);
            let cp = find(&mut comp, p);
            if chosen.iter().any(|&q| find(&mut comp, q) == cp) {
                continue;
            }
            chosen.push(p);
        }
        for &p in &chosen {
            g.add_edge(NodeId(p), NodeId(i)).unwrap();
            let (a, b) = (find(&mut comp, p), find(&mut comp, i));
            comp[a as usize] = b;
        }
    }
    g
}

/// Random tie weights, bounded away from zero.
pub fn random_ties(g: &RGraph, seed: u64) -> TieProbabilities {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::new();
    for i in 0..g.node_count() {
        let ps = g.parents(i);
        if ps.len() < 2 {
            continue;
        }
        let raw: Vec<f64> = ps.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        for (k, &p) in ps.iter().enumerate().skip(1) {
            weights.push((g.id(p), g.id(i), raw[k] / s));
        }
    }
    TieProbabilities::from_weights(g, &weights).unwrap()
}
