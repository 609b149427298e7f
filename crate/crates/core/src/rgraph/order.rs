use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::RGraph;
use crate::error::{Error, Result};
use crate::topology::NodeId;

/// Node indices such that every parent precedes its children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologicalOrder(Vec<usize>);

impl TopologicalOrder {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn ids(&self, g: &RGraph) -> Vec<NodeId> {
        self.0.iter().map(|&i| g.id(i)).collect()
    }

    /// Whether `seq` lists every node of `g` once, parents first.
    pub fn is_valid(g: &RGraph, seq: &[NodeId]) -> bool {
        if seq.len() != g.node_count() {
            return false;
        }
        let mut pos = vec![usize::MAX; g.node_count()];
        for (k, &n) in seq.iter().enumerate() {
            match g.idx(n) {
                Some(i) if pos[i] == usize::MAX => pos[i] = k,
                _ => return false,
            }
        }
        (0..g.node_count()).all(|c| g.parents(c).iter().all(|&p| pos[p] < pos[c]))
    }
}

/// Kahn's algorithm; among ready nodes the smallest id goes first.
pub fn topological_order(g: &RGraph) -> Result<TopologicalOrder> {
    let n = g.node_count();
    let mut indegree: Vec<usize> = (0..n).map(|i| g.parents(i).len()).collect();
    // node indices are sorted by id, so the index order is the id order
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in g.children(i) {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).expect("some node left");
        return Err(Error::Cycle(g.id(stuck)));
    }
    Ok(TopologicalOrder(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn figure1_numbering_is_valid() {
        let g = fixtures::figure1_rgraph();
        let order = topological_order(&g).unwrap();
        let root = g.root_id();
        let mut expected = vec![root];
        expected.extend((1..=8).map(NodeId));
        assert!(TopologicalOrder::is_valid(&g, &expected));
        assert_eq!(order.ids(&g), expected);
    }

    #[test]
    fn single_node() {
        let g = RGraph::new([NodeId(0)], NodeId(0), vec![], [], []).unwrap();
        assert_eq!(topological_order(&g).unwrap().ids(&g), vec![NodeId(0)]);
    }

    #[test]
    fn cycle_is_structural_error() {
        let mut g = fixtures::figure1_rgraph();
        g.add_edge(NodeId(8), NodeId(4)).unwrap();
        assert!(matches!(topological_order(&g), Err(Error::Cycle(_))));
    }

    #[test]
    fn invalid_sequences_rejected() {
        let g = fixtures::figure1_rgraph();
        let root = g.root_id();
        let mut seq = vec![root];
        seq.extend([1, 2, 3, 6, 4, 5, 7, 8].map(NodeId));
        assert!(!TopologicalOrder::is_valid(&g, &seq));
        seq.pop();
        assert!(!TopologicalOrder::is_valid(&g, &seq));
    }
}
