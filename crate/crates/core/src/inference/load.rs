use std::collections::BTreeMap;

use serde::Serialize;

use super::{RouteProbabilities, RoutingFunction};
use crate::error::{Error, Result};
use crate::rgraph::RGraph;
use crate::topology::{IngressId, NodeId};

/// Traffic volume `T_i` originated by each node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrafficModel {
    volumes: BTreeMap<NodeId, f64>,
}

impl TrafficModel {
    /// One unit per real node.
    pub fn uniform(g: &RGraph) -> Self {
        TrafficModel {
            volumes: g.counted().map(|i| (g.id(i), 1.0)).collect(),
        }
    }

    pub fn new(volumes: impl IntoIterator<Item = (NodeId, f64)>) -> Result<Self> {
        let volumes: BTreeMap<NodeId, f64> = volumes.into_iter().collect();
        for (n, &v) in &volumes {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Input(format!("invalid traffic {v} at node {n}")));
            }
        }
        Ok(TrafficModel { volumes })
    }

    pub fn volume(&self, node: NodeId) -> f64 {
        self.volumes.get(&node).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.volumes.values().sum()
    }
}

/// `load(m) = Σ_i T_i π_i(m)`.
pub fn expected_load(
    g: &RGraph,
    pi: &RouteProbabilities,
    traffic: &TrafficModel,
) -> Result<BTreeMap<IngressId, f64>> {
    if pi.node_count() != g.node_count() {
        return Err(Error::Input("route probabilities do not match graph".into()));
    }
    let mut load = vec![0.0; g.ingresses().len()];
    for (&node, &t) in &traffic.volumes {
        let i = g.require(node)?;
        for (l, p) in load.iter_mut().zip(pi.dist(i)) {
            *l += t * p;
        }
    }
    Ok(g.ingresses().iter().cloned().zip(load).collect())
}

/// Catchment size range consistent with the certain routes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub lower: usize,
    pub upper: usize,
}

/// `lower(m)` counts nodes certain to use `m`; `upper(m)` is `total`
/// minus the nodes certain to use another ingress.
pub fn catchment_bounds(
    f: &RoutingFunction,
    g: &RGraph,
    total: usize,
) -> BTreeMap<IngressId, Bounds> {
    let mut lower = vec![0usize; g.ingresses().len()];
    for i in f.certain_nodes(g) {
        lower[f.get(i).expect("certain")] += 1;
    }
    let certain: usize = lower.iter().sum();
    g.ingresses()
        .iter()
        .zip(&lower)
        .map(|(m, &lo)| {
            let upper = total.saturating_sub(certain - lo);
            (m.clone(), Bounds { lower: lo, upper })
        })
        .collect()
}

/// Real nodes with a route to the root.
pub(crate) fn reachable_count(g: &RGraph) -> usize {
    let mut seen = vec![false; g.node_count()];
    let mut stack = vec![g.root()];
    seen[g.root()] = true;
    while let Some(i) = stack.pop() {
        for &c in g.children(i) {
            if !seen[c] {
                seen[c] = true;
                stack.push(c);
            }
        }
    }
    g.counted().filter(|&i| seen[i]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::inference::{certain_inference, probabilistic_inference, TieProbabilities};

    #[test]
    fn figure1_loads() {
        let g = fixtures::figure1_rgraph();
        let f = certain_inference(&g).unwrap();
        let pi = probabilistic_inference(&g, &f, &TieProbabilities::uniform(&g)).unwrap();
        let load = expected_load(&g, &pi, &TrafficModel::uniform(&g)).unwrap();
        assert!((load[&IngressId::new("m1")] - 4.25).abs() < 1e-12);
        assert!((load[&IngressId::new("m2")] - 3.75).abs() < 1e-12);
    }

    #[test]
    fn negative_traffic_rejected() {
        assert!(matches!(
            TrafficModel::new([(NodeId(1), -1.0)]),
            Err(Error::Input(_))
        ));
        assert!(TrafficModel::new([(NodeId(1), f64::NAN)]).is_err());
    }

    #[test]
    fn figure1_bounds() {
        let g = fixtures::figure1_rgraph();
        let f = certain_inference(&g).unwrap();
        assert_eq!(reachable_count(&g), 8);
        let b = catchment_bounds(&f, &g, 8);
        assert_eq!(b[&IngressId::new("m1")], Bounds { lower: 3, upper: 6 });
        assert_eq!(b[&IngressId::new("m2")], Bounds { lower: 2, upper: 5 });
    }
}
