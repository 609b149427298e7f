//! Small reference instances used by tests, examples and the CLI.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::inference::TieProbabilities;
use crate::rgraph::RGraph;
use crate::topology::{
    attach_destination, derive_vf_policies, generate_random_topology, AugmentedTopology,
    DestinationSpec, GeneratorParams, IngressId, NodeId, Relationship, Topology,
};

/// Provider -> customer links of the eight-node example.
const FIGURE1_LINKS: [(u32, u32); 9] = [
    (1, 3),
    (1, 4),
    (2, 4),
    (2, 5),
    (4, 6),
    (1, 7),
    (3, 7),
    (5, 8),
    (6, 8),
];

/// Customer-provider hierarchy over nodes 1..=8 without policies.
pub fn figure1_base() -> Topology {
    let mut t = Topology::new();
    for (p, c) in FIGURE1_LINKS {
        t.add_edge(NodeId(p), NodeId(c), Relationship::P2c)
            .expect("fixture links are consistent");
    }
    t
}

/// The eight-node example with valley-free policies; the destination (id 9)
/// is a customer of n1 (ingress `m1`) and n2 (ingress `m2`).
pub fn figure1_topology() -> AugmentedTopology {
    let t = derive_vf_policies(&figure1_base());
    attach_destination(&t, &DestinationSpec::new([(NodeId(1), "m1"), (NodeId(2), "m2")]))
        .expect("fixture destination is valid")
}

/// Random valley-free instance: a generated topology of `nodes` nodes and
/// a new destination with `ingresses` ingress points `m1, m2, ...`, each
/// attached to one or two distinct random nodes.
pub fn random_instance(
    nodes: usize,
    avg_degree: f64,
    ingresses: usize,
    seed: u64,
) -> Result<AugmentedTopology> {
    if ingresses == 0 || ingresses > nodes {
        return Err(Error::Input(format!(
            "cannot attach {ingresses} ingress points to {nodes} nodes"
        )));
    }
    let params = GeneratorParams {
        nodes,
        avg_degree,
        p2p_fraction: 0.3,
        seed,
    };
    let t = derive_vf_policies(&generate_random_topology(&params)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut sizes: Vec<usize> = (0..ingresses).map(|_| 1 + usize::from(rng.gen_bool(0.3))).collect();
    if sizes.iter().sum::<usize>() > nodes {
        sizes.fill(1);
    }
    let total = sizes.iter().sum();
    let mut picked = sample(&mut rng, nodes, total).into_iter().map(|i| NodeId(i as u32 + 1));
    let mut pairs = Vec::new();
    for (m, k) in sizes.into_iter().enumerate() {
        for n in picked.by_ref().take(k) {
            pairs.push((n, format!("m{}", m + 1)));
        }
    }
    attach_destination(&t, &DestinationSpec::new(pairs))
}

/// Routing graph of [`figure1_topology`], written out by hand.
pub fn figure1_rgraph() -> RGraph {
    let root = NodeId(9);
    let mut g = RGraph::new(
        (1..=9).map(NodeId),
        root,
        vec![IngressId::new("m1"), IngressId::new("m2")],
        [(NodeId(1), 0), (NodeId(2), 1)],
        [],
    )
    .expect("fixture graph is valid");
    g.add_edge(root, NodeId(1)).unwrap();
    g.add_edge(root, NodeId(2)).unwrap();
    for (p, c) in FIGURE1_LINKS {
        g.add_edge(NodeId(p), NodeId(c)).unwrap();
    }
    g
}

const A: NodeId = NodeId(10);
const B: NodeId = NodeId(11);

fn two_ingress_base(extra: impl IntoIterator<Item = NodeId>) -> RGraph {
    let root = NodeId(0);
    let mut g = RGraph::new(
        [root, A, B].into_iter().chain(extra),
        root,
        vec![IngressId::new("m1"), IngressId::new("m2")],
        [(A, 0), (B, 1)],
        [],
    )
    .expect("fixture graph is valid");
    g.add_edge(root, A).unwrap();
    g.add_edge(root, B).unwrap();
    g
}

/// Objective is not supermodular: n1 reaches `m1` through node 10 with
/// probability `p`, n2 takes n1's route with probability `q` and otherwise
/// `m2` through node 11.
pub fn nonsupermodular_example(p: f64, q: f64) -> (RGraph, TieProbabilities) {
    let (n1, n2) = (NodeId(1), NodeId(2));
    let mut g = two_ingress_base([n1, n2]);
    for (a, b) in [(A, n1), (B, n1), (n1, n2), (B, n2)] {
        g.add_edge(a, b).unwrap();
    }
    let t = TieProbabilities::from_weights(
        &g,
        &[(A, n1, p), (B, n1, 1.0 - p), (n1, n2, q), (B, n2, 1.0 - q)],
    )
    .expect("weights are normalized");
    (g, t)
}

/// Objective is not submodular: n1 and n2 pick `m1` independently with
/// probabilities `p1` and `p2`; n3 follows one of them with equal weight.
/// Returns the probability `w` that n1 and n2 agree.
pub fn nonsubmodular_example(p1: f64, p2: f64) -> (RGraph, TieProbabilities, f64) {
    let (n1, n2, n3) = (NodeId(1), NodeId(2), NodeId(3));
    let mut g = two_ingress_base([n1, n2, n3]);
    for (a, b) in [(A, n1), (B, n1), (A, n2), (B, n2), (n1, n3), (n2, n3)] {
        g.add_edge(a, b).unwrap();
    }
    let t = TieProbabilities::from_weights(
        &g,
        &[(A, n1, p1), (B, n1, 1.0 - p1), (A, n2, p2), (B, n2, 1.0 - p2)],
    )
    .expect("weights are normalized");
    let w = p1 * p2 + (1.0 - p1) * (1.0 - p2);
    (g, t, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_instances_attach_every_ingress() {
        for seed in 0..30 {
            let aug = random_instance(5, 2.0, 3, seed).unwrap();
            assert_eq!(aug.ingresses.len(), 3);
            for m in 0..3 {
                assert!(aug.attachments.values().any(|&x| x == m));
            }
            assert_eq!(aug.real_nodes().count(), 5);
        }
        assert!(random_instance(2, 1.0, 3, 0).is_err());
    }
}
