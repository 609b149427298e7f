use super::OracleSet;
use crate::error::{Error, Result};
use crate::inference::{PiState, RouteProbabilities, TieProbabilities};
use crate::rgraph::RGraph;

/// Largest number of real nodes accepted for exact enumeration.
pub const EXACT_MAX_NODES: usize = 14;
const MAX_WORLDS: usize = 1 << 20;

/// One joint outcome of every node's parent choice.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub prob: f64,
    /// Ingress used by each node, `None` without a route.
    pub routes: Vec<Option<usize>>,
}

/// Every combination of parent choices with non-zero probability, where
/// each node independently picks parent `j` with probability `p_ij`.
pub fn enumerate_worlds(g: &RGraph, p: &TieProbabilities) -> Result<Vec<World>> {
    p.validate(g)?;
    let real = g.counted().count();
    if real > EXACT_MAX_NODES {
        return Err(Error::Capacity(format!(
            "exact enumeration limited to {EXACT_MAX_NODES} nodes, got {real}"
        )));
    }
    let n = g.node_count();
    let choosers: Vec<usize> = (0..n).filter(|&i| g.parents(i).len() > 1).collect();
    let mut count: usize = 1;
    for &i in &choosers {
        count = count
            .checked_mul(g.parents(i).len())
            .filter(|&c| c <= MAX_WORLDS)
            .ok_or_else(|| Error::Capacity(format!("more than {MAX_WORLDS} parent combinations")))?;
    }
    // slot[i]: index into parents(i) currently chosen
    let mut slot = vec![0usize; n];
    let mut worlds = Vec::with_capacity(count);
    loop {
        let prob: f64 = choosers.iter().map(|&i| p.get(i)[slot[i]]).product();
        if prob > 0.0 {
            let routes = (0..n).map(|i| trace(g, &slot, i)).collect();
            worlds.push(World { prob, routes });
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == choosers.len() {
                return Ok(worlds);
            }
            let i = choosers[k];
            slot[i] += 1;
            if slot[i] < g.parents(i).len() {
                break;
            }
            slot[i] = 0;
            k += 1;
        }
    }
}

/// Follows chosen parents up to the root.
fn trace(g: &RGraph, slot: &[usize], start: usize) -> Option<usize> {
    let mut i = start;
    loop {
        if i == g.root() {
            return None;
        }
        let next = *g.parents(i).get(slot[i])?;
        if next == g.root() {
            return g.attachment(i);
        }
        i = next;
    }
}

/// Distribution of every node's route conditioned on the observations.
pub fn exact_conditional_distribution(
    g: &RGraph,
    p: &TieProbabilities,
    oracles: &OracleSet,
) -> Result<RouteProbabilities> {
    let observed = oracles.resolve(g)?;
    let worlds = enumerate_worlds(g, p)?;
    let k = g.ingresses().len();
    let mut acc = vec![vec![0.0; k]; g.node_count()];
    let mut total = 0.0;
    for w in &worlds {
        if observed.iter().any(|&(i, m)| w.routes[i] != Some(m)) {
            continue;
        }
        total += w.prob;
        for (a, r) in acc.iter_mut().zip(&w.routes) {
            if let Some(m) = r {
                a[*m] += w.prob;
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::InfeasibleOracle(
            "observations have zero probability".into(),
        ));
    }
    let mut pi = RouteProbabilities::zeros(g.node_count(), k);
    for (i, mut d) in acc.into_iter().enumerate() {
        if i == g.root() {
            continue;
        }
        d.iter_mut().for_each(|x| *x /= total);
        let state = if d.iter().any(|&x| x > 0.0) {
            PiState::Forward
        } else {
            PiState::Unreachable
        };
        pi.set_dist(i, d, state);
    }
    Ok(pi)
}
