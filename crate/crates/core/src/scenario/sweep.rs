use rayon::prelude::*;

use super::pipeline::{assemble, infer, load_oracles, ScenarioReport};
use super::Scenario;
use crate::error::{Error, Result};
use crate::rgraph::build_rgraph;
use crate::topology::{IngressId, NodeId};

/// Reports for `0..=k_max` extra prepends on `ingress`.
///
/// The routing graph is built once; each variant inserts a chain of `k`
/// virtual nodes above the ingress and reruns the later steps. Prepending
/// only matters with the shortest-path preference, without it the routes
/// of original nodes are the same for every `k`. Planner and simulation
/// requests are ignored.
pub fn prepending_sweep(s: &Scenario, ingress: &IngressId, k_max: i64) -> Result<Vec<ScenarioReport>> {
    if k_max < 0 {
        return Err(Error::Input(format!("k_max must be non-negative, got {k_max}")));
    }
    let mut s = s.clone();
    s.planner = None;
    s.simulation = None;
    let aug = s.augmented()?;
    let m = aug
        .ingress_index(ingress)
        .ok_or_else(|| Error::lookup("ingress", ingress))?;
    let oracles = load_oracles(&s).map_err(|e| e.in_step("load oracles"))?;
    let base = build_rgraph(&aug, s.seed).map_err(|e| e.in_step("routing graph"))?;
    let first_free = aug.next_free_id().0;

    (0..=k_max as usize)
        .into_par_iter()
        .map(|k| {
            let mut g = base.clone();
            let mut algorithms = vec!["build-rgraph".to_owned()];
            if k > 0 {
                let chain: Vec<NodeId> = (0..k as u32).map(|d| NodeId(first_free + d)).collect();
                g.insert_chain(m, &chain).map_err(|e| e.in_step("prepend"))?;
                algorithms.push("insert-chain".into());
            }
            let st = infer(&s, g, algorithms, oracles.as_ref())?;
            assemble(&s, st, None, (k > 0).then(|| (ingress.clone(), k)))
        })
        .collect()
}
