use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::OracleSet;
use crate::error::{Error, Result};
use crate::inference::{PiState, RouteProbabilities, TieProbabilities};
use crate::rgraph::{topological_order, RGraph};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub pi: RouteProbabilities,
    /// Samples consistent with the observations.
    pub accepted: usize,
    pub trials: usize,
}

/// Route frequencies over `trials` independent parent-choice samples,
/// keeping only samples that agree with `oracles`.
///
/// Trials are split into fixed chunks with their own random stream, so the
/// estimate depends on `seed` but not on the thread count.
pub fn monte_carlo_inference(
    g: &RGraph,
    p: &TieProbabilities,
    trials: usize,
    seed: u64,
    oracles: Option<&OracleSet>,
) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return Err(Error::Input("at least one trial is required".into()));
    }
    p.validate(g)?;
    let observed = match oracles {
        Some(o) => o.resolve(g)?,
        None => Vec::new(),
    };
    let order = topological_order(g)?;
    let n = g.node_count();
    let k = g.ingresses().len();
    let chunks = trials.div_ceil(CHUNK);
    let (counts, accepted) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let size = CHUNK.min(trials - c * CHUNK);
            let mut counts = vec![0u64; n * k];
            let mut accepted = 0usize;
            let mut routes = vec![None; n];
            for _ in 0..size {
                for &i in order.indices() {
                    routes[i] = sample_route(g, p, &routes, i, &mut rng);
                }
                if observed.iter().any(|&(i, m)| routes[i] != Some(m)) {
                    continue;
                }
                accepted += 1;
                for (i, r) in routes.iter().enumerate() {
                    if let Some(m) = r {
                        counts[i * k + m] += 1;
                    }
                }
            }
            (counts, accepted)
        })
        .reduce(
            || (vec![0u64; n * k], 0),
            |(mut a, x), (b, y)| {
                a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
                (a, x + y)
            },
        );
    if accepted == 0 {
        return Err(Error::InfeasibleOracle(format!(
            "all {trials} samples contradict the observations"
        )));
    }
    let mut pi = RouteProbabilities::zeros(n, k);
    for i in 0..n {
        if i == g.root() {
            continue;
        }
        let d: Vec<f64> = (0..k)
            .map(|m| counts[i * k + m] as f64 / accepted as f64)
            .collect();
        let state = if d.iter().any(|&x| x > 0.0) {
            PiState::Forward
        } else {
            PiState::Unreachable
        };
        pi.set_dist(i, d, state);
    }
    Ok(MonteCarloEstimate {
        pi,
        accepted,
        trials,
    })
}

fn sample_route(
    g: &RGraph,
    p: &TieProbabilities,
    routes: &[Option<usize>],
    i: usize,
    rng: &mut ChaCha8Rng,
) -> Option<usize> {
    if i == g.root() {
        return None;
    }
    let parents = g.parents(i);
    let j = match parents.len() {
        0 => return None,
        1 => parents[0],
        _ => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = parents[parents.len() - 1];
            for (&j, &w) in parents.iter().zip(p.get(i)) {
                acc += w;
                if u < acc {
                    pick = j;
                    break;
                }
            }
            pick
        }
    };
    if j == g.root() {
        g.attachment(i)
    } else {
        routes[j]
    }
}
