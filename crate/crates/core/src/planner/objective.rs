use std::collections::HashMap;

use super::{resolve_candidates, ExactGuard, PlanInput};
use crate::error::{Error, Result};
use crate::inference::{forward, RouteProbabilities, RoutingFunction};
use crate::oracles::{apply_oracles, enumerate_worlds, OracleSet, Provenance};
use crate::rgraph::topological_order;
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectiveMode {
    /// Exact outcome probabilities by enumerating parent choices.
    Exact,
    /// Outcome probabilities from forward propagation after each
    /// observation.
    #[default]
    Approx,
}

/// Weighted number of real nodes with a certain route once `assignment`
/// is observed.
pub fn conditional_nc(input: &PlanInput<'_>, assignment: &OracleSet) -> Result<f64> {
    let out = apply_oracles(input.g, input.f, input.pi, assignment).map_err(|e| match e {
        Error::Contradiction { node, ingress, .. } => {
            Error::InfeasibleOracle(format!("node {node} cannot route through {ingress}"))
        }
        e => e,
    })?;
    Ok(nc(input, &out.f))
}

pub(super) fn nc(input: &PlanInput<'_>, f: &RoutingFunction) -> f64 {
    f.certain_nodes(input.g)
        .map(|i| input.weights.weight(input.g.id(i)))
        .sum()
}

/// Expected weighted certain count when the nodes in `measured` are
/// observed, averaged over their joint outcomes.
pub fn expected_nc(
    input: &PlanInput<'_>,
    measured: &[NodeId],
    mode: ObjectiveMode,
    guard: &ExactGuard,
) -> Result<f64> {
    match mode {
        ObjectiveMode::Exact => exact_expected_nc(input, measured, guard),
        ObjectiveMode::Approx => {
            let idx = resolve_candidates(input.g, measured)?;
            let mut branches = Branches::new(input)?;
            for &j in &idx {
                branches = branches.observe(input, j)?;
            }
            Ok(branches.value(input))
        }
    }
}

fn exact_expected_nc(input: &PlanInput<'_>, measured: &[NodeId], guard: &ExactGuard) -> Result<f64> {
    let g = input.g;
    let real = g.counted().count();
    if measured.len() > guard.max_measured || real > guard.max_nodes {
        return Err(Error::Capacity(format!(
            "exact objective limited to {} measured nodes on {} nodes, got {} on {}",
            guard.max_measured,
            guard.max_nodes,
            measured.len(),
            real
        )));
    }
    let idx = resolve_candidates(g, measured)?;
    let worlds = enumerate_worlds(g, input.ties)?;
    let mut outcomes: HashMap<Vec<Option<usize>>, f64> = HashMap::new();
    for w in &worlds {
        let x: Vec<Option<usize>> = idx.iter().map(|&i| w.routes[i]).collect();
        *outcomes.entry(x).or_default() += w.prob;
    }
    let mut total = 0.0;
    for (x, prob) in outcomes {
        let mut o = OracleSet::new();
        for (&i, r) in idx.iter().zip(&x) {
            if let Some(m) = r {
                o.insert(g.id(i), g.ingresses()[*m].clone(), Provenance::Synthetic)?;
            }
        }
        total += prob * conditional_nc(input, &o)?;
    }
    Ok(total)
}

/// Outcome branches of the observations made so far, merged when they
/// lead to the same certain routes.
pub(super) struct Branches {
    items: Vec<Branch>,
}

struct Branch {
    prob: f64,
    f: RoutingFunction,
    pi: RouteProbabilities,
}

impl Branches {
    pub(super) fn new(input: &PlanInput<'_>) -> Result<Self> {
        Ok(Branches {
            items: vec![Branch {
                prob: 1.0,
                f: input.f.clone(),
                pi: input.pi.clone(),
            }],
        })
    }

    pub(super) fn value(&self, input: &PlanInput<'_>) -> f64 {
        self.items.iter().map(|b| b.prob * nc(input, &b.f)).sum()
    }

    /// Objective after additionally observing `j`, without building the
    /// new branches.
    pub(super) fn value_with(&self, input: &PlanInput<'_>, j: usize) -> Result<f64> {
        let mut total = 0.0;
        for b in &self.items {
            for (f, q) in outcomes(input, b, j)? {
                total += b.prob * q * nc(input, &f);
            }
        }
        Ok(total)
    }

    /// Splits every branch on the outcome of `j`. Each outcome's certain
    /// routes come from oracle propagation; the other nodes' distributions
    /// are recomputed by forward propagation from the certain ones, which
    /// ignores what an observation says about a node's ancestors.
    pub(super) fn observe(self, input: &PlanInput<'_>, j: usize) -> Result<Self> {
        let mut merged: HashMap<RoutingFunction, f64> = HashMap::new();
        let mut order: Vec<RoutingFunction> = Vec::new();
        for b in &self.items {
            for (f, q) in outcomes(input, b, j)? {
                let p = b.prob * q;
                if p <= 0.0 {
                    continue;
                }
                match merged.get_mut(&f) {
                    Some(acc) => *acc += p,
                    None => {
                        merged.insert(f.clone(), p);
                        order.push(f);
                    }
                }
            }
        }
        let topo = topological_order(input.g)?;
        let items = order
            .into_iter()
            .map(|f| {
                let prob = merged[&f];
                let mut pi = RouteProbabilities::zeros(input.g.node_count(), input.g.ingresses().len());
                forward(input.g, &f, input.ties, &mut pi, topo.indices());
                Branch { prob, f, pi }
            })
            .collect();
        Ok(Branches { items })
    }
}

/// Certain routes and probability of each outcome of observing `j` in
/// branch `b`. Mass the branch gives to no route keeps the branch as is.
fn outcomes(input: &PlanInput<'_>, b: &Branch, j: usize) -> Result<Vec<(RoutingFunction, f64)>> {
    let g = input.g;
    let mut out = Vec::new();
    let mut mass = 0.0;
    for m in 0..g.ingresses().len() {
        let q = b.pi.prob(j, m);
        if q <= 0.0 {
            continue;
        }
        mass += q;
        if b.f.get(j) == Some(m) {
            out.push((b.f.clone(), q));
            continue;
        }
        let mut o = OracleSet::new();
        o.insert(g.id(j), g.ingresses()[m].clone(), Provenance::Synthetic)?;
        let applied = apply_oracles(g, &b.f, &b.pi, &o)?;
        out.push((applied.f, q));
    }
    let rest = 1.0 - mass;
    if rest > 1e-12 {
        out.push((b.f.clone(), rest));
    }
    Ok(out)
}
