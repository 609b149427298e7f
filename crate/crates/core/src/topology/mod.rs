//! AS-level topologies annotated with business relationships and routing
//! policies.
//!
//! A [`Topology`] stores one relationship label per directed adjacency
//! (`ℓ_ij`, the role of `j` as seen from `i`), the local preference `q_ij`
//! that `i` assigns to routes learned from `j`, and the export policy
//! `h_ijk` that decides whether `i` re-advertises a route learned from `j`
//! to `k`.

mod caida;
mod destination;
mod format;
mod generate;

use std::collections::BTreeMap;
#[cfg(test)]
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use caida::parse_caida_asrel;
pub use destination::{
    apply_prepending, attach_destination, Attachment, AugmentedTopology, DestinationSpec,
    IngressId, Origin,
};
pub use format::{parse_topology, write_topology};
pub use generate::{generate_random_topology, GeneratorParams};

/// Identifier of a node (an AS number, or a synthetic id for virtual nodes).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.trim().parse().map(NodeId)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// Business relationship of a neighbor, seen from the local node.
///
/// `C2p` on `i -> j` means `i` is a customer of `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relationship {
    C2p,
    P2p,
    P2c,
}

impl Relationship {
    /// The label of the same link seen from the other endpoint.
    pub fn reverse(self) -> Self {
        match self {
            Relationship::C2p => Relationship::P2c,
            Relationship::P2p => Relationship::P2p,
            Relationship::P2c => Relationship::C2p,
        }
    }

    /// Valley-free local preference: customer routes over peer routes over
    /// provider routes.
    pub fn vf_preference(self) -> f64 {
        match self {
            Relationship::P2c => 3.0,
            Relationship::P2p => 2.0,
            Relationship::C2p => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relationship::C2p => "c2p",
            Relationship::P2p => "p2p",
            Relationship::P2c => "p2c",
        }
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relationship {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "c2p" => Ok(Relationship::C2p),
            "p2p" => Ok(Relationship::P2p),
            "p2c" => Ok(Relationship::P2c),
            other => Err(Error::lookup("relationship", other)),
        }
    }
}

/// Export policies `H`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExportPolicy {
    /// `h_ijk = 1` iff `ℓ_ik = p2c` or `ℓ_ij = p2c`.
    ValleyFree,
    /// Explicit `(i, j, k) -> h_ijk` table. Missing entries are unset.
    Table(BTreeMap<(NodeId, NodeId, NodeId), bool>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policies {
    pub local_pref: BTreeMap<(NodeId, NodeId), f64>,
    pub export: ExportPolicy,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    adjacency: BTreeMap<NodeId, BTreeMap<NodeId, Relationship>>,
    policies: Option<Policies>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: NodeId) {
        self.adjacency.entry(node).or_default();
    }

    /// Adds the link `a - b` where `rel` is `ℓ_ab`. Re-adding an identical
    /// link is a no-op; a different label is a conflict.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, rel: Relationship) -> Result<()> {
        if a == b {
            return Err(Error::Input(format!("self-loop on node {a}")));
        }
        if let Some(existing) = self.relationship(a, b) {
            if existing != rel {
                return Err(Error::Conflict { a, b });
            }
            return Ok(());
        }
        self.adjacency.entry(a).or_default().insert(b, rel);
        self.adjacency.entry(b).or_default().insert(a, rel.reverse());
        Ok(())
    }

    pub(crate) fn remove_edge(&mut self, a: NodeId, b: NodeId) {
        if let Some(n) = self.adjacency.get_mut(&a) {
            n.remove(&b);
        }
        if let Some(n) = self.adjacency.get_mut(&b) {
            n.remove(&a);
        }
        if let Some(p) = self.policies.as_mut() {
            p.local_pref.remove(&(a, b));
            p.local_pref.remove(&(b, a));
            if let ExportPolicy::Table(t) = &mut p.export {
                t.retain(|&(i, j, k), _| {
                    !((i == a && (j == b || k == b)) || (i == b && (j == a || k == a)))
                });
            }
        }
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.adjacency.contains_key(&node)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn max_node_id(&self) -> Option<NodeId> {
        self.adjacency.keys().next_back().copied()
    }

    /// Neighbors of `node` with `ℓ_node,neighbor`, ordered by id.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = (NodeId, Relationship)> + '_ {
        self.adjacency
            .get(&node)
            .into_iter()
            .flat_map(|n| n.iter().map(|(&k, &r)| (k, r)))
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency.get(&node).map_or(0, |n| n.len())
    }

    pub fn relationship(&self, a: NodeId, b: NodeId) -> Option<Relationship> {
        self.adjacency.get(&a).and_then(|n| n.get(&b)).copied()
    }

    /// Each undirected link once, as `(a, b, ℓ_ab)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, Relationship)> + '_ {
        self.adjacency.iter().flat_map(|(&a, n)| {
            n.iter()
                .filter(move |(&b, _)| a < b)
                .map(move |(&b, &r)| (a, b, r))
        })
    }

    pub fn policies(&self) -> Option<&Policies> {
        self.policies.as_ref()
    }

    pub fn has_policies(&self) -> bool {
        self.policies.is_some()
    }

    pub fn set_policies(&mut self, policies: Policies) {
        self.policies = Some(policies);
    }

    pub fn clear_policies(&mut self) {
        self.policies = None;
    }

    /// `q_ij`.
    pub fn local_pref(&self, i: NodeId, j: NodeId) -> Result<f64> {
        let p = self
            .policies
            .as_ref()
            .ok_or_else(|| Error::Policy("local preferences are not set".into()))?;
        p.local_pref
            .get(&(i, j))
            .copied()
            .ok_or_else(|| Error::Policy(format!("no local preference for {i} -> {j}")))
    }

    /// `h_ijk`: whether `i` exports to `k` a route learned from `j`.
    pub fn exports(&self, i: NodeId, j: NodeId, k: NodeId) -> Result<bool> {
        let p = self
            .policies
            .as_ref()
            .ok_or_else(|| Error::Policy("export policies are not set".into()))?;
        match &p.export {
            ExportPolicy::ValleyFree => {
                let to = self
                    .relationship(i, k)
                    .ok_or_else(|| Error::Policy(format!("{i} and {k} are not adjacent")))?;
                let from = self
                    .relationship(i, j)
                    .ok_or_else(|| Error::Policy(format!("{i} and {j} are not adjacent")))?;
                Ok(to == Relationship::P2c || from == Relationship::P2c)
            }
            ExportPolicy::Table(t) => t
                .get(&(i, j, k))
                .copied()
                .ok_or_else(|| Error::Policy(format!("no export policy for ({i}, {j}, {k})"))),
        }
    }

    /// Checks that policies are defined exactly on existing adjacencies and
    /// that neighbors of equal preference share their export behaviour.
    pub fn validate(&self) -> Result<()> {
        for (&a, n) in &self.adjacency {
            for (&b, &r) in n {
                if self.relationship(b, a) != Some(r.reverse()) {
                    return Err(Error::Conflict { a, b });
                }
            }
        }
        let Some(p) = &self.policies else {
            return Ok(());
        };
        for &(i, j) in p.local_pref.keys() {
            if self.relationship(i, j).is_none() {
                return Err(Error::Policy(format!(
                    "local preference defined for non-edge {i} -> {j}"
                )));
            }
        }
        for (&i, n) in &self.adjacency {
            for &j in n.keys() {
                self.local_pref(i, j)?;
            }
        }
        if let ExportPolicy::Table(t) = &p.export {
            for &(i, j, k) in t.keys() {
                if self.relationship(i, j).is_none() || self.relationship(i, k).is_none() {
                    return Err(Error::Policy(format!(
                        "export policy defined for non-adjacent triple ({i}, {j}, {k})"
                    )));
                }
            }
            for (&i, n) in &self.adjacency {
                let neigh: Vec<NodeId> = n.keys().copied().collect();
                for &j in &neigh {
                    for &l in &neigh {
                        if j >= l || self.local_pref(i, j)? != self.local_pref(i, l)? {
                            continue;
                        }
                        for &k in &neigh {
                            if k == j || k == l {
                                continue;
                            }
                            if self.exports(i, j, k)? != self.exports(i, l, k)? {
                                return Err(Error::Policy(format!(
                                    "node {i} treats equally preferred neighbors {j} and {l} differently towards {k}"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Sets `Q` and `H` for one new link from its relationship, using the
    /// valley-free rules. No-op when the topology carries no policies.
    pub(crate) fn extend_policies_for_edge(&mut self, a: NodeId, b: NodeId) {
        let Some(mut p) = self.policies.take() else {
            return;
        };
        for (i, j) in [(a, b), (b, a)] {
            if let Some(r) = self.relationship(i, j) {
                p.local_pref.insert((i, j), r.vf_preference());
            }
        }
        if let ExportPolicy::Table(t) = &mut p.export {
            for (i, new) in [(a, b), (b, a)] {
                let neigh: Vec<(NodeId, Relationship)> = self.neighbors(i).collect();
                let rel_new = self.relationship(i, new).expect("edge just added");
                for &(k, rel_k) in &neigh {
                    if k == new {
                        continue;
                    }
                    let vf = |from: Relationship, to: Relationship| {
                        to == Relationship::P2c || from == Relationship::P2c
                    };
                    t.insert((i, new, k), vf(rel_new, rel_k));
                    t.insert((i, k, new), vf(rel_k, rel_new));
                }
            }
        }
        self.policies = Some(p);
    }
}

/// Assigns valley-free policies: `q` = 3/2/1 for customer/peer/provider
/// neighbors, and exports customer routes to everyone and other routes to
/// customers only.
pub fn derive_vf_policies(topology: &Topology) -> Topology {
    let mut out = topology.clone();
    let mut local_pref = BTreeMap::new();
    for (&i, n) in &topology.adjacency {
        for (&j, &r) in n {
            local_pref.insert((i, j), r.vf_preference());
        }
    }
    out.policies = Some(Policies {
        local_pref,
        export: ExportPolicy::ValleyFree,
    });
    out
}

/// Nodes reachable from `start` in the undirected link graph.
#[cfg(test)]
pub(crate) fn component_of(topology: &Topology, start: NodeId) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        stack.extend(topology.neighbors(n).map(|(k, _)| k));
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u32) -> NodeId {
        NodeId(v)
    }

    #[test]
    fn antisymmetric_labels() {
        let mut t = Topology::new();
        t.add_edge(n(1), n(2), Relationship::P2c).unwrap();
        t.add_edge(n(2), n(3), Relationship::P2p).unwrap();
        assert_eq!(t.relationship(n(2), n(1)), Some(Relationship::C2p));
        assert_eq!(t.relationship(n(3), n(2)), Some(Relationship::P2p));
        t.validate().unwrap();
    }

    #[test]
    fn conflicting_edge_is_rejected() {
        let mut t = Topology::new();
        t.add_edge(n(1), n(2), Relationship::P2c).unwrap();
        t.add_edge(n(2), n(1), Relationship::C2p).unwrap();
        assert_eq!(
            t.add_edge(n(1), n(2), Relationship::P2p),
            Err(Error::Conflict { a: n(1), b: n(2) })
        );
    }

    #[test]
    fn vf_preferences_and_exports() {
        let mut t = Topology::new();
        // 1 is provider of 2, peer of 3, customer of 4.
        t.add_edge(n(1), n(2), Relationship::P2c).unwrap();
        t.add_edge(n(1), n(3), Relationship::P2p).unwrap();
        t.add_edge(n(1), n(4), Relationship::C2p).unwrap();
        let t = derive_vf_policies(&t);
        assert_eq!(t.local_pref(n(1), n(2)).unwrap(), 3.0);
        assert_eq!(t.local_pref(n(1), n(3)).unwrap(), 2.0);
        assert_eq!(t.local_pref(n(1), n(4)).unwrap(), 1.0);
        // learned from customer: exported to everyone
        assert!(t.exports(n(1), n(2), n(3)).unwrap());
        assert!(t.exports(n(1), n(2), n(4)).unwrap());
        // learned from provider: customers only
        assert!(t.exports(n(1), n(4), n(2)).unwrap());
        assert!(!t.exports(n(1), n(4), n(3)).unwrap());
        // learned from peer: customers only
        assert!(!t.exports(n(1), n(3), n(4)).unwrap());
        t.validate().unwrap();
    }

    #[test]
    fn unset_policies_error() {
        let mut t = Topology::new();
        t.add_edge(n(1), n(2), Relationship::P2c).unwrap();
        assert!(matches!(t.local_pref(n(1), n(2)), Err(Error::Policy(_))));
        assert!(matches!(t.exports(n(1), n(2), n(2)), Err(Error::Policy(_))));
    }

    #[test]
    fn inconsistent_table_is_rejected() {
        let mut t = Topology::new();
        t.add_edge(n(1), n(2), Relationship::P2c).unwrap();
        t.add_edge(n(1), n(3), Relationship::P2c).unwrap();
        t.add_edge(n(1), n(4), Relationship::C2p).unwrap();
        let mut table = BTreeMap::new();
        for j in [2, 3, 4] {
            for k in [2, 3, 4] {
                if j != k {
                    table.insert((n(1), n(j), n(k)), true);
                }
            }
            for (a, b) in [(j, 1)] {
                table.insert((n(a), n(b), n(b)), true);
            }
        }
        table.insert((n(1), n(3), n(4)), false);
        let mut local_pref = BTreeMap::new();
        for (a, b, r) in t.edges().collect::<Vec<_>>() {
            local_pref.insert((a, b), r.vf_preference());
            local_pref.insert((b, a), r.reverse().vf_preference());
        }
        t.set_policies(Policies {
            local_pref,
            export: ExportPolicy::Table(table),
        });
        assert!(matches!(t.validate(), Err(Error::Policy(_))));
    }
}
