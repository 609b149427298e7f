//! The routing graph: a DAG rooted at the destination whose directed paths
//! are exactly the eligible paths of every node.
//!
//! An edge `k -> i` means `k` is an eligible next hop of `i`: `k`
//! advertises a route to `i`, and `i` assigns `k` its highest local
//! preference among all advertisers.

mod build;
mod io;
mod oracle;
mod order;
mod paths;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::topology::{IngressId, NodeId};

pub use build::{build_rgraph, build_rgraph_from_sim};
pub use io::{parse_rgraph, write_dot, write_edge_list};
pub use oracle::{brute_force_all_eligible_paths, brute_force_eligible_paths, BRUTE_FORCE_MAX_NODES};
pub use order::{topological_order, TopologicalOrder};
pub use paths::{enumerate_rpaths, RPaths};

#[derive(Debug, Clone, PartialEq)]
pub struct RGraph {
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    ingresses: Vec<IngressId>,
    attachment: Vec<Option<usize>>,
    is_virtual: Vec<bool>,
}

impl RGraph {
    /// Creates an edgeless graph over `nodes`.
    ///
    /// `attachments` maps nodes adjacent to the root to ingress indices;
    /// `virtual_nodes` are excluded from catchment counts.
    pub fn new(
        nodes: impl IntoIterator<Item = NodeId>,
        root: NodeId,
        ingresses: Vec<IngressId>,
        attachments: impl IntoIterator<Item = (NodeId, usize)>,
        virtual_nodes: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self> {
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        let index: HashMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let root = *index.get(&root).ok_or_else(|| Error::lookup("node", root))?;
        let n = nodes.len();
        let mut attachment = vec![None; n];
        for (node, m) in attachments {
            let i = *index.get(&node).ok_or_else(|| Error::lookup("node", node))?;
            if m >= ingresses.len() {
                return Err(Error::lookup("ingress", m));
            }
            attachment[i] = Some(m);
        }
        let mut is_virtual = vec![false; n];
        for v in virtual_nodes {
            let i = *index.get(&v).ok_or_else(|| Error::lookup("node", v))?;
            is_virtual[i] = true;
        }
        is_virtual[root] = true;
        Ok(RGraph {
            nodes,
            index,
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
            root,
            ingresses,
            attachment,
            is_virtual,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Node ids, indexed by the dense node index used throughout the crate.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn id(&self, idx: usize) -> NodeId {
        self.nodes[idx]
    }

    pub fn idx(&self, node: NodeId) -> Option<usize> {
        self.index.get(&node).copied()
    }

    pub(crate) fn require(&self, node: NodeId) -> Result<usize> {
        self.idx(node).ok_or_else(|| Error::lookup("node", node))
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_id(&self) -> NodeId {
        self.nodes[self.root]
    }

    pub fn parents(&self, idx: usize) -> &[usize] {
        &self.parents[idx]
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    pub fn ingresses(&self) -> &[IngressId] {
        &self.ingresses
    }

    pub fn ingress_index(&self, m: &IngressId) -> Option<usize> {
        self.ingresses.iter().position(|x| x == m)
    }

    /// Ingress index of a node adjacent to the root.
    pub fn attachment(&self, idx: usize) -> Option<usize> {
        self.attachment[idx]
    }

    pub fn is_virtual(&self, idx: usize) -> bool {
        self.is_virtual[idx]
    }

    /// Real nodes: neither the root nor virtual.
    pub fn counted(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| !self.is_virtual[i])
    }

    /// All edges as `(parent, child)` ids, ordered.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out: Vec<(NodeId, NodeId)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| ps.iter().map(move |&p| (self.nodes[p], self.nodes[c])))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn has_edge(&self, parent: NodeId, child: NodeId) -> bool {
        match (self.idx(parent), self.idx(child)) {
            (Some(p), Some(c)) => self.parents[c].contains(&p),
            _ => false,
        }
    }

    pub fn add_edge(&mut self, parent: NodeId, child: NodeId) -> Result<()> {
        let p = self.require(parent)?;
        let c = self.require(child)?;
        self.add_edge_idx(p, c);
        Ok(())
    }

    pub(crate) fn add_edge_idx(&mut self, p: usize, c: usize) {
        if let Err(pos) = self.parents[c].binary_search(&p) {
            self.parents[c].insert(pos, p);
        }
        if let Err(pos) = self.children[p].binary_search(&c) {
            self.children[p].insert(pos, c);
        }
    }

    pub fn remove_edge(&mut self, parent: NodeId, child: NodeId) -> Result<()> {
        let p = self.require(parent)?;
        let c = self.require(child)?;
        self.remove_edge_idx(p, c);
        Ok(())
    }

    pub(crate) fn remove_edge_idx(&mut self, p: usize, c: usize) {
        self.parents[c].retain(|&x| x != p);
        self.children[p].retain(|&x| x != c);
    }

    /// Ingress a parent contributes to `child`: the attachment of `child`
    /// when the parent is the root.
    pub(crate) fn root_route(&self, child: usize) -> Option<usize> {
        self.attachment[child]
    }

    /// Inserts a chain of virtual nodes between the root and the nodes
    /// attached to ingress `m`. The chain head becomes the attached node.
    pub fn insert_chain(&mut self, m: usize, chain: &[NodeId]) -> Result<()> {
        if chain.is_empty() {
            return Ok(());
        }
        if m >= self.ingresses.len() {
            return Err(Error::lookup("ingress", m));
        }
        for v in chain {
            if self.index.contains_key(v) {
                return Err(Error::Input(format!("chain node {v} already exists")));
            }
        }
        let heads: Vec<usize> = self.children[self.root]
            .iter()
            .copied()
            .filter(|&c| self.attachment[c] == Some(m))
            .collect();
        // rebuild with the chain nodes added; indices shift
        let mut g = RGraph::new(
            self.nodes.iter().copied().chain(chain.iter().copied()),
            self.root_id(),
            self.ingresses.clone(),
            self.attachment
                .iter()
                .enumerate()
                .filter(|(i, a)| a.is_some() && !heads.contains(i))
                .map(|(i, a)| (self.nodes[i], a.unwrap())),
            self.nodes
                .iter()
                .enumerate()
                .filter(|&(i, _)| self.is_virtual[i])
                .map(|(_, &n)| n)
                .chain(chain.iter().copied()),
        )?;
        let head_ids: Vec<NodeId> = heads.iter().map(|&h| self.nodes[h]).collect();
        for (p, c) in self.edges() {
            if p == self.root_id() && head_ids.contains(&c) {
                continue;
            }
            g.add_edge(p, c)?;
        }
        let mut prev = self.root_id();
        for &v in chain {
            g.add_edge(prev, v)?;
            prev = v;
        }
        for &h in &head_ids {
            g.add_edge(prev, h)?;
        }
        let first = g.require(chain[0])?;
        g.attachment[first] = Some(m);
        *self = g;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn edge_bookkeeping() {
        let mut g = fixtures::figure1_rgraph();
        assert_eq!(g.edge_count(), 11);
        assert!(g.has_edge(NodeId(3), NodeId(7)));
        g.remove_edge(NodeId(3), NodeId(7)).unwrap();
        assert!(!g.has_edge(NodeId(3), NodeId(7)));
        assert_eq!(g.children(g.idx(NodeId(3)).unwrap()), &[] as &[usize]);
        g.add_edge(NodeId(3), NodeId(7)).unwrap();
        assert_eq!(g, fixtures::figure1_rgraph());
        assert_eq!(g.counted().count(), 8);
    }
}
