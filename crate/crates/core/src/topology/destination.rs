//! Destination scenarios: the destination node, its ingress points, MOAS
//! stitching and prepending chains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{NodeId, Relationship, Topology};
use crate::error::{Error, Result};

/// Name of an ingress point of the destination.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IngressId(pub String);

impl IngressId {
    pub fn new(name: impl Into<String>) -> Self {
        IngressId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for IngressId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for IngressId {
    fn from(s: &str) -> Self {
        IngressId(s.to_owned())
    }
}

/// One neighbor of the destination and the ingress point it connects
/// through. `relationship` is the label of the link seen from the
/// destination (`c2p`: the destination is the customer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub neighbor: NodeId,
    pub ingress: IngressId,
    #[serde(default = "default_relationship")]
    pub relationship: Relationship,
}

fn default_relationship() -> Relationship {
    Relationship::C2p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// A fresh destination node attached to `attachments`.
    NewNode,
    /// A virtual destination stitched to existing origin ASes; each origin
    /// becomes one ingress point.
    Moas(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DestinationSpec {
    pub ingresses: Vec<IngressId>,
    pub attachments: Vec<Attachment>,
    pub origin: Origin,
    /// Explicit id for the destination node; defaults to one past the
    /// largest id in the topology.
    pub dst_id: Option<NodeId>,
}

impl DestinationSpec {
    /// Single-origin spec from `(neighbor, ingress)` pairs, with the
    /// destination as customer of each neighbor.
    pub fn new<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (NodeId, S)>,
        S: Into<String>,
    {
        let mut ingresses: Vec<IngressId> = Vec::new();
        let mut attachments = Vec::new();
        for (neighbor, name) in pairs {
            let ingress = IngressId::new(name);
            if !ingresses.contains(&ingress) {
                ingresses.push(ingress.clone());
            }
            attachments.push(Attachment {
                neighbor,
                ingress,
                relationship: Relationship::C2p,
            });
        }
        DestinationSpec {
            ingresses,
            attachments,
            origin: Origin::NewNode,
            dst_id: None,
        }
    }

    /// MOAS spec: each origin is its own ingress point, named by its id.
    pub fn moas(origins: &[NodeId]) -> Self {
        let mut spec = DestinationSpec::new(origins.iter().map(|&o| (o, o.to_string())));
        spec.origin = Origin::Moas(origins.to_vec());
        spec
    }
}

/// A topology extended with the destination node and its ingress points.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedTopology {
    pub topology: Topology,
    pub n_dst: NodeId,
    pub ingresses: Vec<IngressId>,
    /// Nodes adjacent to `n_dst`, mapped to the index of their ingress
    /// point in `ingresses`. With prepending the chain head stands in for
    /// the original neighbors.
    pub ingress_map: BTreeMap<NodeId, usize>,
    /// The original `neighbor ▷ ingress` relation.
    pub attachments: BTreeMap<NodeId, usize>,
    pub virtual_nodes: BTreeSet<NodeId>,
    /// Prepending chains per ingress index, ordered from `n_dst` outwards.
    pub chains: BTreeMap<usize, Vec<NodeId>>,
}

impl AugmentedTopology {
    pub fn ingress_index(&self, ingress: &IngressId) -> Option<usize> {
        self.ingresses.iter().position(|m| m == ingress)
    }

    /// Whether `node` is a node of the original topology.
    pub fn is_real(&self, node: NodeId) -> bool {
        node != self.n_dst && !self.virtual_nodes.contains(&node)
    }

    pub fn real_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.topology.nodes().filter(move |&n| self.is_real(n))
    }

    pub(crate) fn next_free_id(&self) -> NodeId {
        NodeId(self.topology.max_node_id().map_or(0, |n| n.0 + 1))
    }
}

pub fn attach_destination(topology: &Topology, spec: &DestinationSpec) -> Result<AugmentedTopology> {
    if spec.ingresses.is_empty() || spec.attachments.is_empty() {
        return Err(Error::Spec("destination needs at least one ingress point".into()));
    }
    let distinct: BTreeSet<&IngressId> = spec.ingresses.iter().collect();
    if distinct.len() != spec.ingresses.len() {
        return Err(Error::Spec("ingress ids must be distinct".into()));
    }
    let n_dst = match spec.dst_id {
        Some(id) if topology.contains(id) => {
            return Err(Error::Spec(format!("destination id {id} already in topology")))
        }
        Some(id) => id,
        None => NodeId(topology.max_node_id().map_or(0, |n| n.0 + 1)),
    };

    let mut attachments: BTreeMap<NodeId, usize> = BTreeMap::new();
    for a in &spec.attachments {
        if !topology.contains(a.neighbor) {
            return Err(Error::lookup("node", a.neighbor));
        }
        let idx = spec
            .ingresses
            .iter()
            .position(|m| *m == a.ingress)
            .ok_or_else(|| Error::lookup("ingress", &a.ingress))?;
        if let Some(prev) = attachments.insert(a.neighbor, idx) {
            if prev != idx {
                return Err(Error::Spec(format!(
                    "node {} attached to both {} and {}",
                    a.neighbor, spec.ingresses[prev], a.ingress
                )));
            }
        }
    }
    if let Origin::Moas(origins) = &spec.origin {
        for o in origins {
            if !attachments.contains_key(o) {
                return Err(Error::Spec(format!("MOAS origin {o} has no attachment")));
            }
        }
    }

    let mut out = topology.clone();
    out.add_node(n_dst);
    for a in &spec.attachments {
        out.add_edge(n_dst, a.neighbor, a.relationship)?;
        out.extend_policies_for_edge(n_dst, a.neighbor);
    }
    if let Origin::Moas(origins) = &spec.origin {
        // an origin prefers its own announcement over anything it learns
        if let Some(p) = out.policies.as_mut() {
            for &o in origins {
                let top = p
                    .local_pref
                    .range((o, NodeId(0))..=(o, NodeId(u32::MAX)))
                    .map(|(_, &q)| q)
                    .fold(f64::NEG_INFINITY, f64::max);
                p.local_pref.insert((o, n_dst), top + 1.0);
            }
        }
    }
    let mut virtual_nodes = BTreeSet::new();
    if matches!(spec.origin, Origin::Moas(_)) {
        virtual_nodes.insert(n_dst);
    }
    Ok(AugmentedTopology {
        topology: out,
        n_dst,
        ingresses: spec.ingresses.clone(),
        ingress_map: attachments.clone(),
        attachments,
        virtual_nodes,
        chains: BTreeMap::new(),
    })
}

/// Inserts `k` virtual nodes between `n_dst` and the neighbors of
/// `ingress`, modelling `k` extra prepends on that ingress point.
pub fn apply_prepending(
    aug: &AugmentedTopology,
    ingress: &IngressId,
    k: usize,
) -> Result<AugmentedTopology> {
    let m = aug
        .ingress_index(ingress)
        .ok_or_else(|| Error::lookup("ingress", ingress))?;
    if k == 0 {
        return Ok(aug.clone());
    }
    let mut out = aug.clone();
    let heads: Vec<NodeId> = aug
        .ingress_map
        .iter()
        .filter(|&(_, &idx)| idx == m)
        .map(|(&n, _)| n)
        .collect();
    let mut next = aug.next_free_id().0;
    let chain: Vec<NodeId> = (0..k)
        .map(|_| {
            let id = NodeId(next);
            next += 1;
            id
        })
        .collect();
    for &v in &chain {
        out.topology.add_node(v);
        out.virtual_nodes.insert(v);
    }
    // keep the MOAS origin preference on the re-attached links
    let origin_prefs: Vec<(NodeId, Option<f64>)> = heads
        .iter()
        .map(|&h| {
            let q = aug
                .topology
                .policies()
                .and_then(|p| p.local_pref.get(&(h, aug.n_dst)).copied());
            (h, q)
        })
        .collect();
    let mut tail_rels = Vec::new();
    for &h in &heads {
        let rel = aug
            .topology
            .relationship(aug.n_dst, h)
            .expect("ingress head adjacent to n_dst");
        out.topology.remove_edge(aug.n_dst, h);
        out.ingress_map.remove(&h);
        tail_rels.push((h, rel));
    }
    let mut prev = aug.n_dst;
    for &v in &chain {
        out.topology.add_edge(prev, v, Relationship::C2p)?;
        out.topology.extend_policies_for_edge(prev, v);
        prev = v;
    }
    for (h, rel) in tail_rels {
        out.topology.add_edge(prev, h, rel)?;
        out.topology.extend_policies_for_edge(prev, h);
    }
    if let Some(p) = out.topology.policies.as_mut() {
        for (h, q) in origin_prefs {
            if let Some(q) = q {
                if aug.virtual_nodes.contains(&aug.n_dst) && !aug.virtual_nodes.contains(&h) {
                    p.local_pref.insert((h, prev), q);
                }
            }
        }
    }
    out.ingress_map.insert(chain[0], m);
    out.chains.entry(m).or_default().splice(0..0, chain);
    Ok(out)
}
