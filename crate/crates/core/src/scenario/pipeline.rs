use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::info;
use serde::Serialize;

use super::compare::{compare_stages, SimulationComparison};
use super::{InferenceMode, Scenario};
use crate::error::{Error, Result};
use crate::inference::{
    catchment_bounds, certain_inference, expected_load, probabilistic_inference, reachable_count,
    shortest_path_transform, Bounds, RouteProbabilities, RoutingFunction, TieProbabilities,
    TrafficModel,
};
use crate::oracles::{
    apply_oracles_with, exact_conditional_distribution, monte_carlo_inference, parse_oracles,
    OraclePolicy, OracleSet,
};
use crate::planner::{
    exhaustive_plan, expected_nc, greedy_plan, random_plans, ExactGuard, MeasurementPlan,
    ObjectiveMode, ObjectiveWeights, PlanInput,
};
use crate::rgraph::{build_rgraph, RGraph};
use crate::topology::{AugmentedTopology, IngressId, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub observations: usize,
    /// Nodes whose route was fixed while propagating the observations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set_route_calls: Option<usize>,
    pub skipped: Vec<String>,
    /// `exact` or `monte-carlo` when distributions were conditioned.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanSummary {
    pub greedy: MeasurementPlan,
    /// Mean objective over random sets of the same size.
    pub random_mean: Option<f64>,
    pub random_plans: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhaustive: Option<MeasurementPlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub mode: InferenceMode,
    pub shortest_path: bool,
    /// Steps executed, in order.
    pub algorithms: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prepend: Option<(IngressId, usize)>,
    pub real_nodes: usize,
    pub reachable_nodes: usize,
    pub routing_graph_edges: usize,
    pub certain_nodes: usize,
    pub certain_catchment: BTreeMap<IngressId, usize>,
    pub bounds: BTreeMap<IngressId, Bounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_catchment: Option<BTreeMap<IngressId, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_load: Option<BTreeMap<IngressId, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracles: Option<OracleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationComparison>,
    /// Certain route per real node, `0` when uncertain.
    pub routes: BTreeMap<NodeId, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub summary: ScenarioSummary,
    pub graph: RGraph,
    pub f: RoutingFunction,
    pub pi: Option<RouteProbabilities>,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    /// `node,f[,pi_<m>...,pi_state]` over real nodes.
    pub fn to_csv(&self) -> String {
        let g = &self.graph;
        let mut out = String::from("node,f");
        if self.pi.is_some() {
            for m in g.ingresses() {
                let _ = write!(out, ",pi_{m}");
            }
            out.push_str(",pi_state");
        }
        out.push('\n');
        let mut rows: Vec<usize> = g.counted().collect();
        rows.sort_by_key(|&i| g.id(i));
        for i in rows {
            let f = self.f.get(i).map_or("0", |m| g.ingresses()[m].as_str());
            let _ = write!(out, "{},{f}", g.id(i));
            if let Some(pi) = &self.pi {
                for p in pi.dist(i) {
                    let _ = write!(out, ",{p}");
                }
                let state = serde_json::to_value(pi.state(i)).expect("state serializes");
                let _ = write!(out, ",{}", state.as_str().unwrap_or_default());
            }
            out.push('\n');
        }
        out
    }
}

/// Output of the inference steps on one routing graph.
pub(super) struct Stages {
    pub g: RGraph,
    pub algorithms: Vec<String>,
    /// Certain routes before observations.
    pub f0: RoutingFunction,
    /// Forward route probabilities before observations.
    pub pi0: Option<RouteProbabilities>,
    pub f: RoutingFunction,
    pub pi: Option<RouteProbabilities>,
    pub oracles: Option<OracleSummary>,
}

pub(super) fn load_oracles(s: &Scenario) -> Result<Option<OracleSet>> {
    if !s.mode.uses_oracles() {
        return Ok(None);
    }
    let path = s.oracles.as_ref().ok_or_else(|| {
        Error::Input(format!("mode {} needs an oracle file", s.mode))
    })?;
    parse_oracles(&s.read(path)?).map(Some)
}

/// Steps after the routing graph: optional shortest-path transform,
/// certain routes, then whatever the mode adds.
pub(super) fn infer(
    s: &Scenario,
    mut g: RGraph,
    mut algorithms: Vec<String>,
    oracles: Option<&OracleSet>,
) -> Result<Stages> {
    if s.shortest_path_enabled() {
        g = shortest_path_transform(&g).map_err(|e| e.in_step("shortest-path transform"))?;
        algorithms.push("shortest-path-transform".into());
    }
    let f0 = certain_inference(&g).map_err(|e| e.in_step("certain inference"))?;
    algorithms.push("certain-inference".into());
    if s.mode == InferenceMode::Certain {
        return Ok(Stages {
            g,
            algorithms,
            f: f0.clone(),
            f0,
            pi0: None,
            pi: None,
            oracles: None,
        });
    }
    let ties = TieProbabilities::uniform(&g);
    let pi0 =
        probabilistic_inference(&g, &f0, &ties).map_err(|e| e.in_step("probabilistic inference"))?;
    algorithms.push("probabilistic-inference".into());
    let (f, pi, summary) = match s.mode {
        InferenceMode::Certain => unreachable!(),
        InferenceMode::Probabilistic => (f0.clone(), pi0.clone(), None),
        InferenceMode::CertainOracles => {
            let o = oracles.expect("oracle modes load observations");
            let policy = if s.skip_conflicting_oracles {
                OraclePolicy::SkipConflicts
            } else {
                OraclePolicy::Strict
            };
            let out = apply_oracles_with(&g, &f0, &pi0, o, policy)
                .map_err(|e| e.in_step("apply oracles"))?;
            algorithms.push("apply-oracles".into());
            let summary = OracleSummary {
                observations: o.len(),
                set_route_calls: Some(out.set_route_calls),
                skipped: out.skipped.iter().map(|e| e.to_string()).collect(),
                conditioning: None,
                accepted_samples: None,
            };
            (out.f, out.pi, Some(summary))
        }
        InferenceMode::ProbabilisticOracles => {
            let o = oracles.expect("oracle modes load observations");
            let (pi, kind, accepted) = match exact_conditional_distribution(&g, &ties, o) {
                Ok(pi) => (pi, "exact", None),
                Err(Error::Capacity(_)) => {
                    let est = monte_carlo_inference(&g, &ties, s.monte_carlo_trials, s.seed, Some(o))
                        .map_err(|e| e.in_step("conditioning"))?;
                    (est.pi, "monte-carlo", Some(est.accepted))
                }
                Err(e) => return Err(e.in_step("conditioning")),
            };
            algorithms.push(format!("conditioning:{kind}"));
            let summary = OracleSummary {
                observations: o.len(),
                set_route_calls: None,
                skipped: Vec::new(),
                conditioning: Some(kind),
                accepted_samples: accepted,
            };
            (f0.clone(), pi, Some(summary))
        }
    };
    Ok(Stages {
        g,
        algorithms,
        f0,
        pi0: Some(pi0),
        f,
        pi: Some(pi),
        oracles: summary,
    })
}

fn load_traffic(s: &Scenario, g: &RGraph) -> Result<TrafficModel> {
    let Some(path) = &s.traffic else {
        return Ok(TrafficModel::uniform(g));
    };
    let text = s.read(path)?;
    let mut volumes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || (idx == 0 && line.starts_with("node")) {
            continue;
        }
        let (n, v) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(idx + 1, "expected `node,volume`"))?;
        let node: NodeId = n
            .trim()
            .parse()
            .map_err(|e| Error::parse(idx + 1, format!("bad node id: {e}")))?;
        let vol: f64 = v
            .trim()
            .parse()
            .map_err(|e| Error::parse(idx + 1, format!("bad volume: {e}")))?;
        volumes.push((node, vol));
    }
    TrafficModel::new(volumes)
}

fn plan(s: &Scenario, st: &Stages) -> Result<Option<PlanSummary>> {
    let Some(cfg) = &s.planner else {
        return Ok(None);
    };
    let pi = st.pi.as_ref().ok_or_else(|| {
        Error::Input("planning needs route probabilities; pick a probabilistic or oracle mode".into())
    })?;
    let g = &st.g;
    let ties = TieProbabilities::uniform(g);
    let weights = ObjectiveWeights::unit();
    let input = PlanInput {
        g,
        f: &st.f,
        pi,
        ties: &ties,
        weights: &weights,
    };
    let candidates: Vec<NodeId> = match &cfg.candidates {
        Some(c) => c.clone(),
        None => g.counted().map(|i| g.id(i)).collect(),
    };
    let greedy = greedy_plan(&input, &candidates, cfg.budget)?;
    let guard = ExactGuard::default();
    let random_mean = if cfg.random_plans == 0 {
        None
    } else {
        let sets = random_plans(&candidates, cfg.budget.floor() as usize, cfg.random_plans, s.seed);
        let mut total = 0.0;
        for set in &sets {
            total += expected_nc(&input, set, ObjectiveMode::Approx, &guard)?;
        }
        Some(total / sets.len() as f64)
    };
    let exhaustive = if cfg.exhaustive {
        Some(exhaustive_plan(&input, &candidates, cfg.budget, &guard)?)
    } else {
        None
    };
    Ok(Some(PlanSummary {
        greedy,
        random_mean,
        random_plans: cfg.random_plans,
        exhaustive,
    }))
}

/// Turns inference stages into a report; `aug` is needed for the
/// simulation comparison.
pub(super) fn assemble(
    s: &Scenario,
    st: Stages,
    aug: Option<&AugmentedTopology>,
    prepend: Option<(IngressId, usize)>,
) -> Result<ScenarioReport> {
    let g = &st.g;
    let reachable = reachable_count(g);
    let mut certain_catchment: BTreeMap<IngressId, usize> =
        g.ingresses().iter().map(|m| (m.clone(), 0)).collect();
    for i in st.f.certain_nodes(g) {
        let m = &g.ingresses()[st.f.get(i).expect("certain")];
        *certain_catchment.get_mut(m).expect("known ingress") += 1;
    }
    let (expected_catchment, load) = match &st.pi {
        Some(pi) => {
            let traffic = load_traffic(s, g).map_err(|e| e.in_step("traffic"))?;
            let ec = g.ingresses().iter().cloned().zip(pi.expected_catchment(g)).collect();
            (Some(ec), Some(expected_load(g, pi, &traffic).map_err(|e| e.in_step("traffic"))?))
        }
        None => (None, None),
    };
    let plan = plan(s, &st).map_err(|e| e.in_step("planner"))?;
    let simulation = match (&s.simulation, aug) {
        (Some(cfg), Some(aug)) => Some(
            compare_stages(s, aug, &st, cfg.runs).map_err(|e| e.in_step("simulation"))?,
        ),
        (Some(_), None) => {
            return Err(Error::Input("simulation needs the augmented topology".into()))
                .map_err(|e| e.in_step("simulation"))
        }
        _ => None,
    };
    let summary = ScenarioSummary {
        name: s.name.clone(),
        mode: s.mode,
        shortest_path: s.shortest_path_enabled(),
        algorithms: st.algorithms.clone(),
        prepend,
        real_nodes: g.counted().count(),
        reachable_nodes: reachable,
        routing_graph_edges: g.edge_count(),
        certain_nodes: st.f.certain_count(g),
        certain_catchment,
        bounds: catchment_bounds(&st.f, g, reachable),
        expected_catchment,
        expected_load: load,
        oracles: st.oracles.clone(),
        plan,
        simulation,
        routes: st.f.to_map(g),
    };
    Ok(ScenarioReport {
        summary,
        graph: st.g,
        f: st.f,
        pi: st.pi,
    })
}

/// Runs the scenario end to end: routing graph, optional shortest-path
/// transform, certain routes, and the probabilistic and observation steps
/// the mode calls for.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioReport> {
    let aug = s.augmented()?;
    let oracles = load_oracles(s).map_err(|e| e.in_step("load oracles"))?;
    let g = build_rgraph(&aug, s.seed).map_err(|e| e.in_step("routing graph"))?;
    info!(
        "{}: routing graph with {} nodes and {} edges",
        s.name,
        g.node_count(),
        g.edge_count()
    );
    let st = infer(s, g, vec!["build-rgraph".into()], oracles.as_ref())?;
    assemble(s, st, Some(&aug), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{write_oracles, OracleSet};

    fn figure1(mode: &str) -> Scenario {
        Scenario::from_toml(&format!(
            "name = \"fig1\"\nmode = \"{mode}\"\n[topology]\nfixture = \"figure1\"\n\
             [[destination.ingress]]\nname = \"m1\"\nnodes = [1]\n\
             [[destination.ingress]]\nname = \"m2\"\nnodes = [2]\n"
        ))
        .unwrap()
    }

    fn with_oracles(mut s: Scenario, pairs: &[(u32, &str)]) -> (Scenario, tempfile::NamedTempFile) {
        let set = OracleSet::from_pairs(pairs.iter().map(|&(n, m)| (NodeId(n), m))).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(file.path(), write_oracles(&set)).unwrap();
        s.oracles = Some(file.path().to_path_buf());
        (s, file)
    }

    fn routes(r: &ScenarioReport) -> Vec<(u32, String)> {
        r.summary.routes.iter().map(|(n, m)| (n.0, m.clone())).collect()
    }

    #[test]
    fn certain_row_reproduces_figure1() {
        let r = run_scenario(&figure1("certain")).unwrap();
        assert_eq!(r.summary.algorithms, ["build-rgraph", "certain-inference"]);
        let want: Vec<(u32, String)> = [
            (1, "m1"),
            (2, "m2"),
            (3, "m1"),
            (4, "0"),
            (5, "m2"),
            (6, "0"),
            (7, "m1"),
            (8, "0"),
        ]
        .iter()
        .map(|&(n, m)| (n, m.to_owned()))
        .collect();
        assert_eq!(routes(&r), want);
        assert!(r.pi.is_none() && r.summary.expected_load.is_none());
        assert_eq!(r.summary.bounds[&IngressId::new("m1")], Bounds { lower: 3, upper: 6 });
        assert!(r.to_csv().starts_with("node,f\n1,m1\n"));
    }

    #[test]
    fn probabilistic_row_adds_loads() {
        let r = run_scenario(&figure1("probabilistic")).unwrap();
        assert_eq!(r.summary.algorithms.last().unwrap(), "probabilistic-inference");
        let load = r.summary.expected_load.as_ref().unwrap();
        assert!((load[&IngressId::new("m1")] - 4.25).abs() < 1e-12);
        assert!((load[&IngressId::new("m2")] - 3.75).abs() < 1e-12);
        assert!(r.to_csv().contains("8,0,0.25,0.75,forward"));
    }

    #[test]
    fn oracle_rows() {
        let (s, _g) = with_oracles(figure1("certain-oracles"), &[(6, "m2")]);
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.summary.algorithms.last().unwrap(), "apply-oracles");
        let m = &r.summary.routes;
        assert_eq!(m[&NodeId(4)], "m2");
        assert_eq!(m[&NodeId(8)], "m2");

        let (s, _g) = with_oracles(figure1("probabilistic-oracles"), &[(8, "m1")]);
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.summary.algorithms.last().unwrap(), "conditioning:exact");
        let pi = r.pi.as_ref().unwrap();
        let n6 = r.graph.idx(NodeId(6)).unwrap();
        // only the n5 branch is ruled out; n6 -> n8 with n4 on m1
        assert!((pi.prob(n6, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_oracle_file() {
        let mut s = figure1("certain-oracles");
        assert!(matches!(run_scenario(&s), Err(Error::Scenario { step: "load oracles", .. })));
        s.oracles = Some("/nonexistent/oracles.csv".into());
        assert!(run_scenario(&s).is_err());
    }

    #[test]
    fn deterministic_report() {
        let mut s = figure1("probabilistic");
        s.planner = Some(super::super::PlannerConfig {
            budget: 2.0,
            candidates: None,
            random_plans: 20,
            exhaustive: true,
        });
        s.simulation = Some(super::super::SimulationConfig { runs: 20 });
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_csv(), b.to_csv());
        let plan = a.summary.plan.as_ref().unwrap();
        assert_eq!(plan.greedy.selected[0], NodeId(4));
        assert!(plan.exhaustive.as_ref().unwrap().value() >= plan.greedy.value() - 1e-12);
    }
}
