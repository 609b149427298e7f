use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NodeId, Relationship, Topology};
use crate::error::{Error, Result};

/// Parameters of the synthetic topology generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub nodes: usize,
    /// Target average degree. The edge count is
    /// `max(nodes - 1, round(nodes * avg_degree / 2))`.
    pub avg_degree: f64,
    /// Fraction of the non-tree links that are peerings.
    pub p2p_fraction: f64,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn target_edges(&self) -> usize {
        let want = (self.nodes as f64 * self.avg_degree / 2.0).round() as usize;
        want.max(self.nodes.saturating_sub(1))
    }
}

/// Generates a connected hierarchical topology with nodes `1..=nodes`.
///
/// Every node other than `1` gets a provider with a smaller id, so the
/// customer-provider digraph is acyclic and the graph connected. The
/// remaining links join random pairs, as peerings with probability
/// `p2p_fraction` and otherwise with the smaller id as provider.
pub fn generate_random_topology(params: &GeneratorParams) -> Result<Topology> {
    let n = params.nodes;
    if n == 0 {
        return Err(Error::Generation("node count must be positive".into()));
    }
    if !(params.avg_degree.is_finite() && params.avg_degree >= 0.0) {
        return Err(Error::Generation("average degree must be non-negative".into()));
    }
    if !(0.0..=1.0).contains(&params.p2p_fraction) {
        return Err(Error::Generation("p2p fraction must lie in [0, 1]".into()));
    }
    let target = params.target_edges();
    let max_edges = n * (n - 1) / 2;
    if target > max_edges {
        return Err(Error::Generation(format!(
            "{target} edges requested but only {max_edges} pairs exist"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut topology = Topology::new();
    let id = |i: usize| NodeId(i as u32 + 1);
    topology.add_node(id(0));
    // endpoint multiset for preferential attachment
    let mut endpoints: Vec<usize> = vec![0];
    for i in 1..n {
        let provider = if rng.gen_bool(0.5) {
            rng.gen_range(0..i)
        } else {
            *endpoints.choose(&mut rng).expect("non-empty")
        };
        topology.add_edge(id(provider), id(i), Relationship::P2c)?;
        endpoints.push(provider);
        endpoints.push(i);
    }

    let add_extra = |topology: &mut Topology, a: usize, b: usize, rng: &mut ChaCha8Rng| {
        let (lo, hi) = (a.min(b), a.max(b));
        let rel = if rng.gen_bool(params.p2p_fraction) {
            Relationship::P2p
        } else {
            Relationship::P2c
        };
        topology
            .add_edge(id(lo), id(hi), rel)
            .expect("pair checked non-adjacent");
    };

    let remaining = target - topology.edge_count();
    if remaining * 2 > max_edges - topology.edge_count() {
        // dense request: draw from the explicit complement
        let mut free: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| topology.relationship(id(a), id(b)).is_none())
            .collect();
        free.shuffle(&mut rng);
        for (a, b) in free.into_iter().take(remaining) {
            add_extra(&mut topology, a, b, &mut rng);
        }
    } else {
        while topology.edge_count() < target {
            let a = if rng.gen_bool(0.5) {
                rng.gen_range(0..n)
            } else {
                *endpoints.choose(&mut rng).expect("non-empty")
            };
            let b = rng.gen_range(0..n);
            if a == b || topology.relationship(id(a), id(b)).is_some() {
                continue;
            }
            add_extra(&mut topology, a, b, &mut rng);
            endpoints.push(a);
            endpoints.push(b);
        }
    }
    Ok(topology)
}
