use rayon::prelude::*;
use serde::Serialize;

use super::pipeline::{infer, Stages};
use super::{InferenceMode, Scenario};
use crate::error::{Error, Result};
use crate::inference::{catchment_bounds, reachable_count};
use crate::rgraph::build_rgraph;
use crate::sim::{run_bgp_with, simulated_catchment, SimConfig};
use crate::topology::{AugmentedTopology, IngressId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngressComparison {
    pub ingress: IngressId,
    /// Sum of route probabilities over real nodes.
    pub predicted: f64,
    pub mean: f64,
    pub std_error: f64,
    pub within_3se: bool,
    pub lower: usize,
    pub upper: usize,
    /// Runs whose catchment fell outside `[lower, upper]`.
    pub outside_bounds: usize,
    /// Cumulative moving average of the simulated catchment.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationComparison {
    pub runs: usize,
    pub first_seed: u64,
    pub ingresses: Vec<IngressComparison>,
    /// `(run, node)` pairs where a certain route disagreed with the run.
    pub certain_violations: usize,
}

impl SimulationComparison {
    pub fn all_within_bounds(&self) -> bool {
        self.ingresses.iter().all(|c| c.outside_bounds == 0)
    }

    pub fn all_within_3se(&self) -> bool {
        self.ingresses.iter().all(|c| c.within_3se)
    }
}

/// Simulates `runs` seeds (`seed`, `seed + 1`, ...) and compares the
/// catchments with the forward prediction and the certain bounds. Runs
/// the probabilistic steps whatever the scenario's mode, since
/// observations do not apply to the simulated runs.
pub fn compare_with_simulation(s: &Scenario, runs: usize) -> Result<SimulationComparison> {
    let aug = s.augmented()?;
    let g = build_rgraph(&aug, s.seed).map_err(|e| e.in_step("routing graph"))?;
    let mut plain = s.clone();
    plain.mode = InferenceMode::Probabilistic;
    let st = infer(&plain, g, Vec::new(), None)?;
    compare_stages(s, &aug, &st, runs)
}

pub(super) fn compare_stages(
    s: &Scenario,
    aug: &AugmentedTopology,
    st: &Stages,
    runs: usize,
) -> Result<SimulationComparison> {
    if runs == 0 {
        return Err(Error::Input("at least one simulation run is required".into()));
    }
    let g = &st.g;
    let pi = st.pi0.as_ref().ok_or_else(|| {
        Error::Input("simulation comparison needs a probabilistic mode".into())
    })?;
    let predicted = pi.expected_catchment(g);
    let bounds = catchment_bounds(&st.f0, g, reachable_count(g));
    let sp = s.shortest_path_enabled();
    let k = g.ingresses().len();

    // per run: catchment sizes and certain-route disagreements
    let per_run: Vec<(Vec<usize>, usize)> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let config = SimConfig {
                seed: s.seed.wrapping_add(r as u64),
                shortest_path: sp,
            };
            let sim = run_bgp_with(aug, &config)?;
            let catchment = simulated_catchment(&sim, aug)?;
            let mut sizes = vec![0usize; k];
            let mut violations = 0;
            for (node, m) in &catchment {
                let idx = aug.ingress_index(m).expect("known ingress");
                sizes[idx] += 1;
                let i = g.require(*node)?;
                if st.f0.get(i).is_some_and(|c| c != idx) {
                    violations += 1;
                }
            }
            Ok((sizes, violations))
        })
        .collect::<Result<_>>()?;

    let ingresses = g
        .ingresses()
        .iter()
        .enumerate()
        .map(|(m, name)| {
            let xs: Vec<f64> = per_run.iter().map(|(s, _)| s[m] as f64).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = if xs.len() > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let std_error = (var / n).sqrt();
            let mut acc = 0.0;
            let trace = xs
                .iter()
                .enumerate()
                .map(|(r, x)| {
                    acc += x;
                    acc / (r + 1) as f64
                })
                .collect();
            let b = bounds[name];
            IngressComparison {
                ingress: name.clone(),
                predicted: predicted[m],
                mean,
                std_error,
                within_3se: (mean - predicted[m]).abs() <= 3.0 * std_error + 1e-9,
                lower: b.lower,
                upper: b.upper,
                outside_bounds: per_run
                    .iter()
                    .filter(|(s, _)| s[m] < b.lower || s[m] > b.upper)
                    .count(),
                trace,
            }
        })
        .collect();
    Ok(SimulationComparison {
        runs,
        first_seed: s.seed,
        ingresses,
        certain_violations: per_run.iter().map(|(_, v)| v).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure1() -> Scenario {
        Scenario::from_toml(
            "[topology]\nfixture = \"figure1\"\n\
             [[destination.ingress]]\nname = \"m1\"\nnodes = [1]\n\
             [[destination.ingress]]\nname = \"m2\"\nnodes = [2]\n",
        )
        .unwrap()
    }

    #[test]
    fn single_run_trace() {
        let c = compare_with_simulation(&figure1(), 1).unwrap();
        assert_eq!(c.runs, 1);
        for i in &c.ingresses {
            assert_eq!(i.trace.len(), 1);
            assert_eq!(i.std_error, 0.0);
        }
        assert!(compare_with_simulation(&figure1(), 0).is_err());
    }

    #[test]
    fn figure1_agrees() {
        let c = compare_with_simulation(&figure1(), 400).unwrap();
        assert_eq!(c.certain_violations, 0);
        assert!(c.all_within_bounds());
        assert!(c.all_within_3se(), "{c:?}");
        let m1 = &c.ingresses[0];
        assert!((m1.predicted - 4.25).abs() < 1e-12);
        assert_eq!((m1.lower, m1.upper), (3, 6));
    }
}
