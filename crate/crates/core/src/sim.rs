//! Seeded path-vector simulation of BGP route propagation under the
//! topology's local preferences and export policies.
//!
//! Propagation runs in synchronous rounds until no best path changes. A
//! node ranks the routes in its RIB by local preference, then (optionally)
//! by path length, then by a per-neighbor pseudo-random priority drawn from
//! a ChaCha stream keyed by `(seed, node)`. Among equally preferred
//! neighbors the choice is therefore uniform and independent across nodes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{AugmentedTopology, IngressId, NodeId};

/// A path `[i, x, ..., y, n_dst]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(pub Vec<NodeId>);

impl Path {
    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The neighbor the path was learned from.
    pub fn next_hop(&self) -> Option<NodeId> {
        self.0.get(1).copied()
    }

    /// The node just before the destination.
    pub fn last_hop(&self) -> Option<NodeId> {
        let n = self.0.len();
        (n >= 2).then(|| self.0[n - 2])
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl<const N: usize> From<[u32; N]> for Path {
    fn from(v: [u32; N]) -> Self {
        Path(v.iter().map(|&x| NodeId(x)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    /// Prefer shorter paths among equally preferred routes before the
    /// random tie-break.
    pub shortest_path: bool,
}

impl SimConfig {
    pub fn seeded(seed: u64) -> Self {
        SimConfig {
            seed,
            shortest_path: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Every route each node holds at the fixed point.
    pub ribs: BTreeMap<NodeId, Vec<Path>>,
    pub best_paths: BTreeMap<NodeId, Path>,
    pub seed: u64,
    /// Synchronous rounds until the fixed point.
    pub rounds: usize,
}

struct Neighbor {
    idx: usize,
    pref: f64,
    priority: u64,
}

type IdxPath = Arc<Vec<usize>>;

/// Runs the strict model (no path-length criterion).
pub fn run_bgp(aug: &AugmentedTopology, seed: u64) -> Result<SimResult> {
    run_bgp_with(aug, &SimConfig::seeded(seed))
}

pub fn run_bgp_with(aug: &AugmentedTopology, config: &SimConfig) -> Result<SimResult> {
    let topo = &aug.topology;
    let ids: Vec<NodeId> = topo.nodes().collect();
    let index: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let dst = *index
        .get(&aug.n_dst)
        .ok_or_else(|| Error::lookup("node", aug.n_dst))?;

    let mut adj: Vec<Vec<Neighbor>> = Vec::with_capacity(ids.len());
    for &node in &ids {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(u64::from(node.0));
        let mut nbrs = Vec::with_capacity(topo.degree(node));
        for (k, _) in topo.neighbors(node) {
            let pref = if node == aug.n_dst {
                0.0
            } else {
                topo.local_pref(node, k)?
            };
            nbrs.push(Neighbor {
                idx: index[&k],
                pref,
                priority: rng.gen(),
            });
        }
        adj.push(nbrs);
    }

    let exports = |from_idx: usize, path: &[usize], to_idx: usize| -> Result<bool> {
        if from_idx == dst {
            return Ok(true);
        }
        let learned = path[1];
        topo.exports(ids[from_idx], ids[learned], ids[to_idx])
    };

    let n = ids.len();
    let mut best: Vec<Option<IdxPath>> = vec![None; n];
    best[dst] = Some(Arc::new(vec![dst]));
    let mut dirty = vec![false; n];
    for nb in &adj[dst] {
        dirty[nb.idx] = true;
    }
    let max_rounds = 2 * n + 2;
    let mut rounds = 0;
    loop {
        let active: Vec<usize> = (0..n).filter(|&i| dirty[i] && i != dst).collect();
        if active.is_empty() {
            break;
        }
        rounds += 1;
        if rounds > max_rounds {
            return Err(Error::NonConvergence { rounds: max_rounds });
        }
        dirty.iter_mut().for_each(|d| *d = false);
        let mut updates = Vec::new();
        for &i in &active {
            let chosen = select_best(i, &adj[i], &best, config.shortest_path, &exports)?;
            let new = chosen.map(|j| {
                let pj = best[j].as_ref().expect("candidate has a path");
                let mut p = Vec::with_capacity(pj.len() + 1);
                p.push(i);
                p.extend_from_slice(pj);
                Arc::new(p)
            });
            if new != best[i] {
                updates.push((i, new));
            }
        }
        for (i, new) in updates {
            best[i] = new;
            for nb in &adj[i] {
                dirty[nb.idx] = true;
            }
        }
    }

    let to_path = |p: &[usize]| Path(p.iter().map(|&x| ids[x]).collect());
    let mut ribs = BTreeMap::new();
    let mut best_paths = BTreeMap::new();
    for i in 0..n {
        if i == dst {
            continue;
        }
        let mut rib = Vec::new();
        for nb in &adj[i] {
            if let Some(pj) = &best[nb.idx] {
                if !pj.contains(&i) && exports(nb.idx, pj, i)? {
                    let mut p = vec![i];
                    p.extend_from_slice(pj);
                    rib.push(to_path(&p));
                }
            }
        }
        ribs.insert(ids[i], rib);
        if let Some(p) = &best[i] {
            best_paths.insert(ids[i], to_path(p));
        }
    }
    Ok(SimResult {
        ribs,
        best_paths,
        seed: config.seed,
        rounds,
    })
}

fn select_best(
    i: usize,
    nbrs: &[Neighbor],
    best: &[Option<IdxPath>],
    shortest_path: bool,
    exports: &impl Fn(usize, &[usize], usize) -> Result<bool>,
) -> Result<Option<usize>> {
    let mut chosen: Option<(&Neighbor, usize)> = None;
    for nb in nbrs {
        let Some(pj) = &best[nb.idx] else { continue };
        if pj.contains(&i) || !exports(nb.idx, pj, i)? {
            continue;
        }
        let better = match chosen {
            None => true,
            Some((c, clen)) => {
                if nb.pref != c.pref {
                    nb.pref > c.pref
                } else if shortest_path && pj.len() != clen {
                    pj.len() < clen
                } else {
                    (nb.priority, nb.idx) < (c.priority, c.idx)
                }
            }
        };
        if better {
            chosen = Some((nb, pj.len()));
        }
    }
    Ok(chosen.map(|(nb, _)| nb.idx))
}

/// Maps each real node with a route to the ingress point of the last hop
/// of its best path.
pub fn simulated_catchment(
    result: &SimResult,
    aug: &AugmentedTopology,
) -> Result<BTreeMap<NodeId, IngressId>> {
    let mut out = BTreeMap::new();
    for (&node, path) in &result.best_paths {
        if !aug.is_real(node) {
            continue;
        }
        let m = ingress_of(path, aug)?;
        out.insert(node, aug.ingresses[m].clone());
    }
    Ok(out)
}

pub(crate) fn ingress_of(path: &Path, aug: &AugmentedTopology) -> Result<usize> {
    let last = path
        .last_hop()
        .ok_or_else(|| Error::Consistency(format!("path `{path}` has no last hop")))?;
    aug.ingress_map.get(&last).copied().ok_or_else(|| {
        Error::Consistency(format!(
            "best path `{path}` enters the destination through unattached node {last}"
        ))
    })
}

/// Exports the simulation as `node,best_path,ingress` CSV.
pub fn write_sim_csv(result: &SimResult, aug: &AugmentedTopology) -> Result<String> {
    let mut out = String::from("node,best_path,ingress\n");
    for (node, path) in &result.best_paths {
        if !aug.is_real(*node) {
            continue;
        }
        let m = ingress_of(path, aug)?;
        out.push_str(&format!("{node},{path},{}\n", aug.ingresses[m]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::topology::{
        attach_destination, derive_vf_policies, DestinationSpec, Relationship, Topology,
    };

    fn chain() -> AugmentedTopology {
        // A is a provider of B; the destination is a customer of B.
        let mut t = Topology::new();
        t.add_edge(NodeId(1), NodeId(2), Relationship::P2c).unwrap();
        let t = derive_vf_policies(&t);
        attach_destination(&t, &DestinationSpec::new([(NodeId(2), "m1")])).unwrap()
    }

    #[test]
    fn chain_best_path() {
        let aug = chain();
        let r = run_bgp(&aug, 1).unwrap();
        assert_eq!(r.best_paths[&NodeId(1)], Path::from([1, 2, 3]));
        assert_eq!(r.best_paths[&NodeId(2)], Path::from([2, 3]));
        let c = simulated_catchment(&r, &aug).unwrap();
        assert_eq!(c[&NodeId(1)], IngressId::from("m1"));
    }

    #[test]
    fn deterministic_per_seed() {
        let aug = fixtures::figure1_topology();
        for seed in 0..10 {
            assert_eq!(run_bgp(&aug, seed).unwrap(), run_bgp(&aug, seed).unwrap());
        }
    }

    #[test]
    fn best_path_in_rib_and_loop_free() {
        let aug = fixtures::figure1_topology();
        for seed in 0..20 {
            let r = run_bgp(&aug, seed).unwrap();
            for (node, p) in &r.best_paths {
                assert!(r.ribs[node].contains(p));
                let mut seen = p.0.clone();
                seen.sort();
                seen.dedup();
                assert_eq!(seen.len(), p.len());
                assert_eq!(*p.0.last().unwrap(), aug.n_dst);
            }
        }
    }

    #[test]
    fn unset_policy_is_an_error() {
        let mut t = Topology::new();
        t.add_edge(NodeId(1), NodeId(2), Relationship::P2c).unwrap();
        let aug = attach_destination(&t, &DestinationSpec::new([(NodeId(2), "m1")])).unwrap();
        assert!(matches!(run_bgp(&aug, 0), Err(Error::Policy(_))));
    }

    #[test]
    fn unreachable_node_has_no_route() {
        // 3 is a peer of 2 only and 2's route comes from a peer: not exported.
        let mut t = Topology::new();
        t.add_edge(NodeId(1), NodeId(2), Relationship::P2p).unwrap();
        t.add_edge(NodeId(2), NodeId(3), Relationship::P2p).unwrap();
        let t = derive_vf_policies(&t);
        let spec = DestinationSpec {
            attachments: vec![crate::topology::Attachment {
                neighbor: NodeId(1),
                ingress: "m1".into(),
                relationship: Relationship::P2p,
            }],
            ..DestinationSpec::new([(NodeId(1), "m1")])
        };
        let aug = attach_destination(&t, &spec).unwrap();
        let r = run_bgp(&aug, 0).unwrap();
        assert!(r.best_paths.contains_key(&NodeId(1)));
        assert!(!r.best_paths.contains_key(&NodeId(2)));
        assert!(r.ribs[&NodeId(3)].is_empty());
    }

    #[test]
    fn csv_export() {
        let aug = chain();
        let r = run_bgp(&aug, 0).unwrap();
        assert_eq!(
            write_sim_csv(&r, &aug).unwrap(),
            "node,best_path,ingress\n1,1 2 3,m1\n2,2 3,m1\n"
        );
    }
}
