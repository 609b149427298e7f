//! Measurement planning: which nodes to observe, under a budget, to
//! maximize the expected number of nodes with a certain route.

mod objective;
mod search;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{RouteProbabilities, RoutingFunction, TieProbabilities};
use crate::rgraph::RGraph;
use crate::topology::NodeId;

pub use objective::{conditional_nc, expected_nc, ObjectiveMode};
pub use search::{exhaustive_plan, greedy_plan, random_plans};

/// Per-node importance `w_i` and measurement cost `c_i`, both defaulting
/// to one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjectiveWeights {
    weights: BTreeMap<NodeId, f64>,
    costs: BTreeMap<NodeId, f64>,
}

impl ObjectiveWeights {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn new(
        weights: impl IntoIterator<Item = (NodeId, f64)>,
        costs: impl IntoIterator<Item = (NodeId, f64)>,
    ) -> Result<Self> {
        let w = ObjectiveWeights {
            weights: weights.into_iter().collect(),
            costs: costs.into_iter().collect(),
        };
        for (n, &v) in w.weights.iter().chain(&w.costs) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Input(format!("invalid weight or cost {v} at node {n}")));
            }
        }
        Ok(w)
    }

    pub fn weight(&self, node: NodeId) -> f64 {
        self.weights.get(&node).copied().unwrap_or(1.0)
    }

    pub fn cost(&self, node: NodeId) -> f64 {
        self.costs.get(&node).copied().unwrap_or(1.0)
    }

    fn has_unit_costs(&self) -> bool {
        self.costs.values().all(|&c| c == 1.0)
    }
}

/// Limits on exact evaluation, which enumerates every joint parent choice
/// and every outcome of the measured set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactGuard {
    pub max_measured: usize,
    pub max_nodes: usize,
}

impl Default for ExactGuard {
    fn default() -> Self {
        ExactGuard {
            max_measured: 6,
            max_nodes: crate::oracles::EXACT_MAX_NODES,
        }
    }
}

/// Everything the objective depends on.
#[derive(Debug, Clone, Copy)]
pub struct PlanInput<'a> {
    pub g: &'a RGraph,
    pub f: &'a RoutingFunction,
    pub pi: &'a RouteProbabilities,
    pub ties: &'a TieProbabilities,
    pub weights: &'a ObjectiveWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementPlan {
    /// Selected nodes in the order they were chosen.
    pub selected: Vec<NodeId>,
    /// Objective after each selection.
    pub values: Vec<f64>,
    /// Objective with nothing measured.
    pub initial: f64,
    pub candidates: Vec<NodeId>,
    pub budget: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MeasurementPlan {
    /// Objective of the full plan.
    pub fn value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.initial)
    }

    /// `rank,node,expected_nc_after`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,node,expected_nc_after\n");
        for (k, (n, v)) in self.selected.iter().zip(&self.values).enumerate() {
            let _ = writeln!(out, "{},{},{}", k + 1, n, v);
        }
        out
    }
}

/// Candidate indices, checked against the graph; the root and virtual
/// nodes cannot be measured.
fn resolve_candidates(g: &RGraph, candidates: &[NodeId]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(candidates.len());
    for &c in candidates {
        let i = g.require(c)?;
        if g.is_virtual(i) {
            return Err(Error::Input(format!("node {c} cannot be measured")));
        }
        out.push(i);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
