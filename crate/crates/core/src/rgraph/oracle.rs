//! Exhaustive eligible-path oracle.
//!
//! Runs its own small path-vector fixpoint (sequential sweeps in node-id
//! order) under every combination of tie-break decisions and collects the
//! union of best paths. It shares no code with the simulator or the
//! routing-graph builder, so it can be used to check them.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::sim::Path;
use crate::topology::{AugmentedTopology, NodeId};

/// Largest number of real nodes the oracle accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 14;
const MAX_ASSIGNMENTS: usize = 1 << 18;

type Routes = BTreeMap<NodeId, Vec<NodeId>>;

struct Settled {
    routes: Routes,
    /// Nodes with more than one top-preference candidate, and those candidates.
    ties: BTreeMap<NodeId, Vec<NodeId>>,
}

fn candidates(aug: &AugmentedTopology, routes: &Routes, i: NodeId) -> Result<Vec<NodeId>> {
    let topo = &aug.topology;
    let mut best_q = f64::NEG_INFINITY;
    let mut tied = Vec::new();
    for (k, _) in topo.neighbors(i) {
        let Some(pk) = routes.get(&k) else { continue };
        if pk.contains(&i) {
            continue;
        }
        if k != aug.n_dst && !topo.exports(k, pk[1], i)? {
            continue;
        }
        let q = topo.local_pref(i, k)?;
        if q > best_q {
            best_q = q;
            tied.clear();
        }
        if q == best_q {
            tied.push(k);
        }
    }
    Ok(tied)
}

fn settle(aug: &AugmentedTopology, designated: &BTreeMap<NodeId, NodeId>) -> Result<Settled> {
    let nodes: Vec<NodeId> = aug.topology.nodes().filter(|&n| n != aug.n_dst).collect();
    let mut routes: Routes = BTreeMap::new();
    routes.insert(aug.n_dst, vec![aug.n_dst]);
    let cap = 4 * nodes.len() + 10;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        if sweeps > cap {
            return Err(Error::NonConvergence { rounds: cap });
        }
        let mut changed = false;
        for &i in &nodes {
            let tied = candidates(aug, &routes, i)?;
            let new = if tied.is_empty() {
                None
            } else {
                let pick = designated
                    .get(&i)
                    .filter(|d| tied.contains(d))
                    .copied()
                    .unwrap_or(tied[0]);
                let mut p = vec![i];
                p.extend_from_slice(&routes[&pick]);
                Some(p)
            };
            if routes.get(&i) != new.as_ref() {
                changed = true;
                match new {
                    Some(p) => routes.insert(i, p),
                    None => routes.remove(&i),
                };
            }
        }
        if !changed {
            break;
        }
    }
    let mut ties = BTreeMap::new();
    for &i in &nodes {
        let tied = candidates(aug, &routes, i)?;
        if tied.len() > 1 {
            ties.insert(i, tied);
        }
    }
    Ok(Settled { routes, ties })
}

/// Eligible paths of every node except the destination.
pub fn brute_force_all_eligible_paths(
    aug: &AugmentedTopology,
) -> Result<BTreeMap<NodeId, BTreeSet<Path>>> {
    let real = aug.real_nodes().count();
    if real > BRUTE_FORCE_MAX_NODES {
        return Err(Error::Capacity(format!(
            "exhaustive tie-break enumeration limited to {BRUTE_FORCE_MAX_NODES} nodes, got {real}"
        )));
    }
    let mut out: BTreeMap<NodeId, BTreeSet<Path>> = aug
        .topology
        .nodes()
        .filter(|&n| n != aug.n_dst)
        .map(|n| (n, BTreeSet::new()))
        .collect();
    let mut pending = vec![BTreeMap::new()];
    let mut explored = 0usize;
    while let Some(designated) = pending.pop() {
        explored += 1;
        if explored > MAX_ASSIGNMENTS {
            return Err(Error::Capacity(format!(
                "more than {MAX_ASSIGNMENTS} tie-break assignments"
            )));
        }
        let settled = settle(aug, &designated)?;
        let open = settled
            .ties
            .iter()
            .find(|(n, _)| !designated.contains_key(*n));
        match open {
            Some((&node, choices)) => {
                for &c in choices {
                    let mut next = designated.clone();
                    next.insert(node, c);
                    pending.push(next);
                }
            }
            None => {
                for (node, p) in settled.routes {
                    if node != aug.n_dst {
                        out.entry(node).or_default().insert(Path(p));
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn brute_force_eligible_paths(aug: &AugmentedTopology, node: NodeId) -> Result<BTreeSet<Path>> {
    let mut all = brute_force_all_eligible_paths(aug)?;
    all.remove(&node).ok_or_else(|| Error::lookup("node", node))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::topology::{
        attach_destination, derive_vf_policies, DestinationSpec, Relationship, Topology,
    };

    #[test]
    fn chain_single_path() {
        let mut t = Topology::new();
        t.add_edge(NodeId(1), NodeId(2), Relationship::P2c).unwrap();
        let t = derive_vf_policies(&t);
        let aug = attach_destination(&t, &DestinationSpec::new([(NodeId(2), "m1")])).unwrap();
        let got = brute_force_eligible_paths(&aug, NodeId(1)).unwrap();
        assert_eq!(got, BTreeSet::from([Path::from([1, 2, 3])]));
    }

    #[test]
    fn figure1_node4() {
        let aug = fixtures::figure1_topology();
        let d = aug.n_dst.0;
        let got = brute_force_eligible_paths(&aug, NodeId(4)).unwrap();
        assert_eq!(
            got,
            BTreeSet::from([Path::from([4, 1, d]), Path::from([4, 2, d])])
        );
        let got = brute_force_eligible_paths(&aug, NodeId(8)).unwrap();
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn size_guard() {
        let t = crate::topology::generate_random_topology(&crate::topology::GeneratorParams {
            nodes: 20,
            avg_degree: 2.0,
            p2p_fraction: 0.2,
            seed: 1,
        })
        .unwrap();
        let t = derive_vf_policies(&t);
        let aug = attach_destination(&t, &DestinationSpec::new([(NodeId(5), "m1")])).unwrap();
        assert!(matches!(
            brute_force_eligible_paths(&aug, NodeId(1)),
            Err(Error::Capacity(_))
        ));
    }
}
