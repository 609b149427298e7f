use super::{parent_route, RoutingFunction};
use crate::error::Result;
use crate::rgraph::{topological_order, RGraph};

/// Nodes whose every best path leaves through the same ingress.
///
/// Processed parents-first; a node is certain when all of its parents
/// agree on one route. A parent that is the root contributes the child's
/// own attachment.
pub fn certain_inference(g: &RGraph) -> Result<RoutingFunction> {
    let order = topological_order(g)?;
    let mut f = RoutingFunction::unknown(g.node_count());
    for &i in order.indices() {
        if i == g.root() || g.parents(i).is_empty() {
            continue;
        }
        let mut route = None;
        let mut agreed = true;
        for &p in g.parents(i) {
            match (parent_route(g, &f, p, i), route) {
                (None, _) => {
                    agreed = false;
                    break;
                }
                (Some(m), None) => route = Some(m),
                (Some(m), Some(r)) if m != r => {
                    agreed = false;
                    break;
                }
                _ => {}
            }
        }
        if agreed {
            f.set(i, route);
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::topology::NodeId;

    #[test]
    fn figure1_table() {
        let g = fixtures::figure1_rgraph();
        let f = certain_inference(&g).unwrap();
        let got: Vec<String> = (1..=8)
            .map(|n| f.route_of(&g, NodeId(n)).map_or("0".into(), |m| m.0.clone()))
            .collect();
        assert_eq!(got, ["m1", "m2", "m1", "0", "m2", "0", "m1", "0"]);
        assert_eq!(f.certain_count(&g), 5);
        assert_eq!(f.get(g.root()), None);
    }

    #[test]
    fn orphan_stays_unknown() {
        let mut g = fixtures::figure1_rgraph();
        g.remove_edge(NodeId(1), NodeId(3)).unwrap();
        let f = certain_inference(&g).unwrap();
        assert_eq!(f.get(g.idx(NodeId(3)).unwrap()), None);
        // a parent without a route leaves its children undecided
        assert_eq!(f.get(g.idx(NodeId(7)).unwrap()), None);
    }
}
