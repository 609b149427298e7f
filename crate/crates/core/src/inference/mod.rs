//! Route inference on the routing graph: certain routes, route
//! probabilities, the shortest-path preference transform, expected loads
//! and catchment bounds.

mod certain;
mod load;
mod probabilistic;
mod shortest_path;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rgraph::RGraph;
use crate::topology::{IngressId, NodeId};

pub use certain::certain_inference;
pub use load::{catchment_bounds, expected_load, Bounds, TrafficModel};
pub(crate) use load::reachable_count;
pub(crate) use probabilistic::forward;
pub use probabilistic::probabilistic_inference;
pub use shortest_path::shortest_path_transform;

/// Absolute tolerance for probability comparisons.
pub const PROB_TOL: f64 = 1e-9;

/// Certain route per node: `Some(ingress index)` or unknown.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoutingFunction {
    routes: Vec<Option<usize>>,
}

impl RoutingFunction {
    pub fn unknown(node_count: usize) -> Self {
        RoutingFunction {
            routes: vec![None; node_count],
        }
    }

    pub fn get(&self, idx: usize) -> Option<usize> {
        self.routes[idx]
    }

    pub(crate) fn set(&mut self, idx: usize, route: Option<usize>) {
        self.routes[idx] = route;
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn route_of<'g>(&self, g: &'g RGraph, node: NodeId) -> Option<&'g IngressId> {
        let idx = g.idx(node)?;
        self.routes[idx].map(|m| &g.ingresses()[m])
    }

    /// Real nodes with a certain route.
    pub fn certain_nodes<'a>(&'a self, g: &'a RGraph) -> impl Iterator<Item = usize> + 'a {
        g.counted().filter(move |&i| self.routes[i].is_some())
    }

    pub fn certain_count(&self, g: &RGraph) -> usize {
        self.certain_nodes(g).count()
    }

    /// `node -> ingress name`, `"0"` for uncertain, real nodes only.
    pub fn to_map(&self, g: &RGraph) -> BTreeMap<NodeId, String> {
        g.counted()
            .map(|i| {
                let v = self.routes[i].map_or_else(|| "0".to_owned(), |m| g.ingresses()[m].0.clone());
                (g.id(i), v)
            })
            .collect()
    }
}

/// Provenance of a node's route distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PiState {
    /// Computed by forward propagation.
    Forward,
    /// Fixed to a single ingress by an oracle or an oracle-driven inference.
    Certain,
    /// Left untouched while applying oracles; does not reflect them.
    PreOracle,
    /// No route to the destination.
    Unreachable,
}

/// `π_i(m)` for every node and ingress.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteProbabilities {
    probs: Vec<Vec<f64>>,
    state: Vec<PiState>,
}

impl RouteProbabilities {
    pub(crate) fn zeros(node_count: usize, ingress_count: usize) -> Self {
        RouteProbabilities {
            probs: vec![vec![0.0; ingress_count]; node_count],
            state: vec![PiState::Unreachable; node_count],
        }
    }

    pub fn dist(&self, idx: usize) -> &[f64] {
        &self.probs[idx]
    }

    pub fn prob(&self, idx: usize, m: usize) -> f64 {
        self.probs[idx][m]
    }

    pub fn state(&self, idx: usize) -> PiState {
        self.state[idx]
    }

    pub(crate) fn set_dist(&mut self, idx: usize, dist: Vec<f64>, state: PiState) {
        self.probs[idx] = dist;
        self.state[idx] = state;
    }

    pub(crate) fn set_certain(&mut self, idx: usize, m: usize) {
        self.probs[idx].iter_mut().for_each(|p| *p = 0.0);
        self.probs[idx][m] = 1.0;
        self.state[idx] = PiState::Certain;
    }

    pub(crate) fn mark_pre_oracle(&mut self) {
        for s in &mut self.state {
            if *s == PiState::Forward {
                *s = PiState::PreOracle;
            }
        }
    }

    /// Whether the node carries no probability mass.
    pub fn is_empty(&self, idx: usize) -> bool {
        self.probs[idx].iter().all(|&p| p == 0.0)
    }

    pub fn mass(&self, idx: usize) -> f64 {
        self.probs[idx].iter().sum()
    }

    pub fn node_count(&self) -> usize {
        self.probs.len()
    }

    /// Expected catchment size per ingress over real nodes.
    pub fn expected_catchment(&self, g: &RGraph) -> Vec<f64> {
        let mut out = vec![0.0; g.ingresses().len()];
        for i in g.counted() {
            for (m, p) in self.probs[i].iter().enumerate() {
                out[m] += p;
            }
        }
        out
    }
}

/// Tie-break distribution `p_ij` over each node's parents, aligned with
/// [`RGraph::parents`].
#[derive(Debug, Clone, PartialEq)]
pub struct TieProbabilities {
    weights: Vec<Vec<f64>>,
}

impl TieProbabilities {
    /// `p_ij = 1 / |P_i|`.
    pub fn uniform(g: &RGraph) -> Self {
        TieProbabilities {
            weights: (0..g.node_count())
                .map(|i| {
                    let k = g.parents(i).len();
                    vec![1.0 / k as f64; k]
                })
                .collect(),
        }
    }

    /// Explicit weights per edge; edges without a weight share the
    /// remaining mass of their node equally.
    pub fn from_weights(g: &RGraph, weights: &[(NodeId, NodeId, f64)]) -> Result<Self> {
        let mut explicit: Vec<Vec<Option<f64>>> =
            (0..g.node_count()).map(|i| vec![None; g.parents(i).len()]).collect();
        for &(p, c, w) in weights {
            let ci = g.require(c)?;
            let pi = g.require(p)?;
            let slot = g
                .parents(ci)
                .iter()
                .position(|&x| x == pi)
                .ok_or_else(|| Error::Input(format!("no edge {p} -> {c}")))?;
            explicit[ci][slot] = Some(w);
        }
        let weights = explicit
            .into_iter()
            .map(|ws| {
                let fixed: f64 = ws.iter().flatten().sum();
                let free = ws.iter().filter(|w| w.is_none()).count();
                let share = if free > 0 {
                    (1.0 - fixed) / free as f64
                } else {
                    0.0
                };
                ws.into_iter().map(|w| w.unwrap_or(share)).collect()
            })
            .collect();
        let t = TieProbabilities { weights };
        t.validate(g)?;
        Ok(t)
    }

    pub fn get(&self, idx: usize) -> &[f64] {
        &self.weights[idx]
    }

    /// Weights must be non-negative and sum to one for every node with
    /// parents.
    pub fn validate(&self, g: &RGraph) -> Result<()> {
        if self.weights.len() != g.node_count() {
            return Err(Error::Input("tie probabilities do not match graph".into()));
        }
        for (i, ws) in self.weights.iter().enumerate() {
            if ws.len() != g.parents(i).len() {
                return Err(Error::Input(format!(
                    "tie probabilities of node {} do not match its parents",
                    g.id(i)
                )));
            }
            if ws.is_empty() {
                continue;
            }
            if ws.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::Input(format!(
                    "negative tie probability at node {}",
                    g.id(i)
                )));
            }
            let s: f64 = ws.iter().sum();
            if (s - 1.0).abs() > PROB_TOL {
                return Err(Error::Input(format!(
                    "tie probabilities of node {} sum to {s}",
                    g.id(i)
                )));
            }
        }
        Ok(())
    }

    /// Restricts to a subgraph of `g` with the same nodes and renormalizes.
    pub fn restrict(&self, full: &RGraph, sub: &RGraph) -> Self {
        let weights = (0..sub.node_count())
            .map(|i| {
                let ws: Vec<f64> = sub
                    .parents(i)
                    .iter()
                    .map(|p| {
                        let slot = full.parents(i).iter().position(|x| x == p);
                        slot.map_or(0.0, |s| self.weights[i][s])
                    })
                    .collect();
                let s: f64 = ws.iter().sum();
                if s > 0.0 {
                    ws.iter().map(|w| w / s).collect()
                } else {
                    let k = ws.len();
                    vec![1.0 / k as f64; k]
                }
            })
            .collect();
        TieProbabilities { weights }
    }
}

/// Ingress a parent contributes to `child`: the root passes on the child's
/// attachment, any other parent its own certain route.
pub(crate) fn parent_route(g: &RGraph, f: &RoutingFunction, parent: usize, child: usize) -> Option<usize> {
    if parent == g.root() {
        g.root_route(child)
    } else {
        f.get(parent)
    }
}

/// Distribution a parent contributes to `child`.
pub(crate) fn parent_dist<'a>(
    g: &RGraph,
    pi: &'a RouteProbabilities,
    parent: usize,
    child: usize,
) -> std::borrow::Cow<'a, [f64]> {
    if parent == g.root() {
        let mut d = vec![0.0; g.ingresses().len()];
        if let Some(m) = g.root_route(child) {
            d[m] = 1.0;
        }
        std::borrow::Cow::Owned(d)
    } else {
        std::borrow::Cow::Borrowed(pi.dist(parent))
    }
}
