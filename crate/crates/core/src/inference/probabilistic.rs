use super::{parent_dist, PiState, RouteProbabilities, RoutingFunction, TieProbabilities};
use crate::error::{Error, Result};
use crate::rgraph::{topological_order, RGraph};

/// Forward recursion `π_i(m) = Σ_j p_ij π_j(m)` in topological order.
///
/// Certain nodes get an indicator distribution. Nodes without a route to
/// the root keep an all-zero distribution.
pub fn probabilistic_inference(
    g: &RGraph,
    f: &RoutingFunction,
    p: &TieProbabilities,
) -> Result<RouteProbabilities> {
    p.validate(g)?;
    if f.len() != g.node_count() {
        return Err(Error::Input("routing function does not match graph".into()));
    }
    let order = topological_order(g)?;
    let mut pi = RouteProbabilities::zeros(g.node_count(), g.ingresses().len());
    forward(g, f, p, &mut pi, order.indices());
    Ok(pi)
}

/// Recomputes `pi` for `nodes` (already in topological order).
pub(crate) fn forward(
    g: &RGraph,
    f: &RoutingFunction,
    p: &TieProbabilities,
    pi: &mut RouteProbabilities,
    nodes: &[usize],
) {
    let k = g.ingresses().len();
    for &i in nodes {
        if i == g.root() {
            continue;
        }
        if let Some(m) = f.get(i) {
            pi.set_certain(i, m);
            continue;
        }
        let mut dist = vec![0.0; k];
        for (&j, &w) in g.parents(i).iter().zip(p.get(i)) {
            for (d, q) in dist.iter_mut().zip(parent_dist(g, pi, j, i).iter()) {
                *d += w * q;
            }
        }
        let state = if dist.iter().any(|&x| x > 0.0) {
            PiState::Forward
        } else {
            PiState::Unreachable
        };
        pi.set_dist(i, dist, state);
    }
}
