use super::RGraph;
use crate::error::Result;
use crate::sim::{run_bgp, SimResult};
use crate::topology::AugmentedTopology;

/// Builds the routing graph from one seeded simulation run.
///
/// For each node, every RIB next hop with the node's highest local
/// preference becomes a parent. The RIB holds every advertisement at the
/// fixed point regardless of how ties were broken, so the result does not
/// depend on `seed`.
pub fn build_rgraph(aug: &AugmentedTopology, seed: u64) -> Result<RGraph> {
    let sim = run_bgp(aug, seed)?;
    build_rgraph_from_sim(aug, &sim)
}

pub fn build_rgraph_from_sim(aug: &AugmentedTopology, sim: &SimResult) -> Result<RGraph> {
    let topo = &aug.topology;
    let mut g = RGraph::new(
        topo.nodes(),
        aug.n_dst,
        aug.ingresses.clone(),
        aug.ingress_map.iter().map(|(&n, &m)| (n, m)),
        aug.virtual_nodes.iter().copied(),
    )?;
    for (&node, rib) in &sim.ribs {
        let mut best_neighbors = Vec::new();
        let mut max_q = f64::NEG_INFINITY;
        for path in rib {
            let Some(k) = path.next_hop() else { continue };
            let q = topo.local_pref(node, k)?;
            if q < max_q {
                continue;
            } else if q > max_q {
                best_neighbors.clear();
                max_q = q;
            }
            best_neighbors.push(k);
        }
        let child = g.require(node)?;
        for k in best_neighbors {
            let parent = g.require(k)?;
            g.add_edge_idx(parent, child);
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::topology::{
        attach_destination, derive_vf_policies, DestinationSpec, NodeId, Relationship, Topology,
    };

    #[test]
    fn figure1_edges() {
        let aug = fixtures::figure1_topology();
        let g = build_rgraph(&aug, 0).unwrap();
        let d = aug.n_dst.0;
        let mut expected: Vec<(NodeId, NodeId)> = [
            (d, 1),
            (d, 2),
            (1, 3),
            (1, 4),
            (2, 4),
            (2, 5),
            (4, 6),
            (1, 7),
            (3, 7),
            (5, 8),
            (6, 8),
        ]
        .iter()
        .map(|&(a, b)| (NodeId(a), NodeId(b)))
        .collect();
        expected.sort();
        assert_eq!(g.edges(), expected);
        assert_eq!(g, fixtures::figure1_rgraph());
    }

    #[test]
    fn chain_reversed() {
        let mut t = Topology::new();
        t.add_edge(NodeId(1), NodeId(2), Relationship::P2c).unwrap();
        t.add_edge(NodeId(2), NodeId(3), Relationship::P2c).unwrap();
        let t = derive_vf_policies(&t);
        let aug = attach_destination(&t, &DestinationSpec::new([(NodeId(3), "m1")])).unwrap();
        let g = build_rgraph(&aug, 5).unwrap();
        assert_eq!(
            g.edges(),
            vec![
                (NodeId(2), NodeId(1)),
                (NodeId(3), NodeId(2)),
                (NodeId(4), NodeId(3))
            ]
        );
    }

    #[test]
    fn seed_invariant_on_figure1() {
        let aug = fixtures::figure1_topology();
        let g0 = build_rgraph(&aug, 0).unwrap();
        for seed in 1..30 {
            assert_eq!(build_rgraph(&aug, seed).unwrap(), g0);
        }
    }
}
