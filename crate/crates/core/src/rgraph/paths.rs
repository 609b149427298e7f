use std::collections::BTreeSet;

use super::RGraph;
use crate::error::Result;
use crate::sim::Path;
use crate::topology::NodeId;

/// Paths encoded in the routing graph for one node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RPaths {
    pub paths: BTreeSet<Path>,
    /// Set when enumeration stopped at the limit.
    pub overflow: bool,
}

/// Enumerates every path from `node` to the root along reversed edges, in
/// `[node, ..., root]` form, stopping after `limit` paths.
pub fn enumerate_rpaths(g: &RGraph, node: NodeId, limit: usize) -> Result<RPaths> {
    let start = g.require(node)?;
    let mut out = RPaths::default();
    if start == g.root() {
        return Ok(out);
    }
    // (node, next parent slot to try)
    let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
    while let Some(&(top, slot)) = stack.last() {
        if top == g.root() {
            if out.paths.len() == limit {
                out.overflow = true;
                break;
            }
            out.paths
                .insert(Path(stack.iter().map(|&(i, _)| g.id(i)).collect()));
            stack.pop();
            continue;
        }
        match g.parents(top).get(slot) {
            Some(&p) => {
                if let Some(last) = stack.last_mut() {
                    last.1 += 1;
                }
                stack.push((p, 0));
            }
            None => {
                stack.pop();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn set(g: &RGraph, paths: &[&[u32]]) -> BTreeSet<Path> {
        let root = g.root_id();
        paths
            .iter()
            .map(|p| {
                let mut v: Vec<NodeId> = p.iter().map(|&x| NodeId(x)).collect();
                v.push(root);
                Path(v)
            })
            .collect()
    }

    #[test]
    fn figure1_rows() {
        let g = fixtures::figure1_rgraph();
        let got = enumerate_rpaths(&g, NodeId(8), 100).unwrap();
        assert!(!got.overflow);
        assert_eq!(got.paths, set(&g, &[&[8, 5, 2], &[8, 6, 4, 1], &[8, 6, 4, 2]]));
        assert_eq!(
            enumerate_rpaths(&g, NodeId(3), 100).unwrap().paths,
            set(&g, &[&[3, 1]])
        );
        assert_eq!(
            enumerate_rpaths(&g, NodeId(7), 100).unwrap().paths,
            set(&g, &[&[7, 1], &[7, 3, 1]])
        );
    }

    #[test]
    fn limit_sets_overflow() {
        let g = fixtures::figure1_rgraph();
        let got = enumerate_rpaths(&g, NodeId(8), 2).unwrap();
        assert!(got.overflow);
        assert_eq!(got.paths.len(), 2);
        let exact = enumerate_rpaths(&g, NodeId(8), 3).unwrap();
        assert!(!exact.overflow);
    }

    #[test]
    fn disconnected_node_has_no_paths() {
        let mut g = fixtures::figure1_rgraph();
        g.remove_edge(NodeId(1), NodeId(3)).unwrap();
        assert!(enumerate_rpaths(&g, NodeId(3), 10).unwrap().paths.is_empty());
    }
}
