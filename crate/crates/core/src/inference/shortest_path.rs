use crate::error::Result;
use crate::rgraph::{topological_order, RGraph};

/// Keeps only the parents on minimum-length paths to the root.
pub fn shortest_path_transform(g: &RGraph) -> Result<RGraph> {
    let order = topological_order(g)?;
    let mut len = vec![usize::MAX; g.node_count()];
    len[g.root()] = 0;
    let mut out = g.clone();
    for &i in order.indices() {
        if i == g.root() {
            continue;
        }
        let best = g
            .parents(i)
            .iter()
            .map(|&j| len[j].saturating_add(1))
            .min()
            .unwrap_or(usize::MAX);
        len[i] = best;
        for &j in g.parents(i) {
            if len[j].saturating_add(1) > best {
                out.remove_edge_idx(j, i);
            }
        }
    }
    Ok(out)
}
