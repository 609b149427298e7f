//! Self-check suites run by `catchment validate`, plus planner helpers
//! shared with `catchment plan`.

use std::fmt;
use std::time::Instant;

use anyhow::{anyhow, Result};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use catchment::fixtures;
use catchment::inference::{
    certain_inference, probabilistic_inference, shortest_path_transform, TieProbabilities,
};
use catchment::oracles::{
    apply_oracles, enumerate_worlds, exact_conditional_distribution, OracleSet, Provenance,
};
use catchment::planner::{
    exhaustive_plan, expected_nc, random_plans, ExactGuard, MeasurementPlan, ObjectiveMode,
    ObjectiveWeights, PlanInput,
};
use catchment::rgraph::{
    brute_force_all_eligible_paths, build_rgraph, enumerate_rpaths, topological_order, RGraph,
};
use catchment::scenario::{compare_with_simulation, Scenario, ScenarioReport};
use catchment::sim::{run_bgp, simulated_catchment};
use catchment::topology::{AugmentedTopology, NodeId};

const TOL: f64 = 1e-9;

/// Certain-route function under test, `None` for uncertain.
type Certain = fn(&RGraph) -> catchment::Result<Vec<Option<usize>>>;

fn reference_certain(g: &RGraph) -> catchment::Result<Vec<Option<usize>>> {
    let f = certain_inference(g)?;
    Ok((0..g.node_count()).map(|i| f.get(i)).collect())
}

/// Negative control: takes the first parent's route and ignores the rest.
fn first_parent_certain(g: &RGraph) -> catchment::Result<Vec<Option<usize>>> {
    let mut f = vec![None; g.node_count()];
    for &i in topological_order(g)?.indices() {
        let Some(&p) = g.parents(i).first() else { continue };
        f[i] = if p == g.root() { g.attachment(i) } else { f[p] };
    }
    Ok(f)
}

pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
    pub seconds: f64,
    pub note: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} {:>6} checks, {} failures, {:.2}s",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            self.failures.len(),
            self.seconds
        )?;
        if let Some(n) = &self.note {
            write!(f, " ({n})")?;
        }
        for msg in self.failures.iter().take(5) {
            write!(f, "\n     {msg}")?;
        }
        if self.failures.len() > 5 {
            write!(f, "\n     ... {} more", self.failures.len() - 5)?;
        }
        Ok(())
    }
}

struct Sizes {
    instances: usize,
    sim_seeds: u64,
    sim_nodes: usize,
    sim_runs: usize,
}

/// Runs every suite; `full` uses the larger sweep sizes.
pub fn run_all(full: bool, inject_bug: bool, seed: u64) -> Vec<SuiteResult> {
    let sizes = if full {
        Sizes {
            instances: 200,
            sim_seeds: 50,
            sim_nodes: 200,
            sim_runs: 1000,
        }
    } else {
        Sizes {
            instances: 20,
            sim_seeds: 10,
            sim_nodes: 60,
            sim_runs: 200,
        }
    };
    let certain: Certain = if inject_bug {
        first_parent_certain
    } else {
        reference_certain
    };
    let suites: Vec<(&'static str, Box<dyn Fn() -> Outcome>)> = vec![
        ("figure1", Box::new(move || figure1(certain))),
        ("eligible-paths", Box::new({
            let n = sizes.instances;
            move || eligible_paths(n, seed)
        })),
        ("certain-soundness", Box::new({
            let (n, s) = (sizes.instances.min(100), sizes.sim_seeds);
            move || soundness(certain, n, s, seed)
        })),
        ("probabilistic-exact", Box::new({
            let n = sizes.instances;
            move || probabilistic_exact(n, seed)
        })),
        ("oracle-propagation", Box::new({
            let n = sizes.instances;
            move || oracle_propagation(n, seed)
        })),
        ("shortest-path-monotone", Box::new({
            let n = sizes.instances.min(100);
            move || shortest_path_monotone(certain, n, seed)
        })),
        ("planner-margins", Box::new(planner_margins)),
        ("mean-coincidence", Box::new({
            let (n, r) = (sizes.sim_nodes, sizes.sim_runs);
            move || mean_coincidence(n, r, seed)
        })),
    ];
    suites
        .into_iter()
        .map(|(name, run)| {
            let t = Instant::now();
            let out = run();
            let (checks, failures, note) = match out {
                Ok(o) => o,
                Err(e) => (0, vec![format!("error: {e:#}")], None),
            };
            SuiteResult {
                name,
                checks,
                failures,
                seconds: t.elapsed().as_secs_f64(),
                note,
            }
        })
        .collect()
}

type Outcome = Result<(usize, Vec<String>, Option<String>)>;

/// Random instance with 4 to 12 nodes and two or three ingresses.
fn small_instance(k: usize, seed: u64) -> catchment::Result<AugmentedTopology> {
    let s = seed.wrapping_add(k as u64);
    fixtures::random_instance(4 + k % 9, 2.5, 2 + k % 2, s)
}

fn figure1(certain: Certain) -> Outcome {
    let aug = fixtures::figure1_topology();
    let g = build_rgraph(&aug, 0)?;
    let mut failures = Vec::new();
    let mut edges = g.edges();
    edges.sort_unstable();
    let mut want: Vec<(NodeId, NodeId)> = [
        (9, 1),
        (9, 2),
        (1, 3),
        (1, 4),
        (2, 4),
        (2, 5),
        (4, 6),
        (1, 7),
        (3, 7),
        (5, 8),
        (6, 8),
    ]
    .iter()
    .map(|&(a, b)| (NodeId(a), NodeId(b)))
    .collect();
    want.sort_unstable();
    if edges != want {
        failures.push(format!("routing graph edges {edges:?}"));
    }
    let f = certain(&g)?;
    let expect = ["m1", "m2", "m1", "0", "m2", "0", "m1", "0"];
    for (n, want) in (1..=8).zip(expect) {
        let i = g.idx(NodeId(n)).expect("fixture node");
        let got = f[i].map_or("0", |m| g.ingresses()[m].as_str());
        if got != want {
            failures.push(format!("f(n{n}) = {got}, expected {want}"));
        }
    }
    Ok((9, failures, None))
}

fn eligible_paths(instances: usize, seed: u64) -> Outcome {
    let results: Vec<Result<(usize, Vec<String>)>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let aug = small_instance(k, seed)?;
            let g = build_rgraph(&aug, seed)?;
            let brute = brute_force_all_eligible_paths(&aug)?;
            let mut fails = Vec::new();
            for (node, paths) in &brute {
                let r = enumerate_rpaths(&g, *node, 1 << 16)?;
                if r.overflow || &r.paths != paths {
                    fails.push(format!("instance {k}: paths of node {node} differ"));
                }
            }
            Ok((brute.len(), fails))
        })
        .collect();
    fold(results)
}

fn soundness(certain: Certain, instances: usize, seeds: u64, seed: u64) -> Outcome {
    let results: Vec<Result<(usize, Vec<String>)>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let aug = small_instance(k, seed)?;
            let g = build_rgraph(&aug, seed)?;
            let f = certain(&g)?;
            let mut fails = Vec::new();
            let mut checks = 0;
            for s in 0..seeds {
                let sim = run_bgp(&aug, seed.wrapping_add(s))?;
                let catchment = simulated_catchment(&sim, &aug)?;
                for i in g.counted() {
                    let Some(m) = f[i] else { continue };
                    checks += 1;
                    let got = catchment.get(&g.id(i));
                    if got != Some(&g.ingresses()[m]) {
                        fails.push(format!(
                            "instance {k}, seed {s}: node {} certain on {} but routed via {got:?}",
                            g.id(i),
                            g.ingresses()[m]
                        ));
                    }
                }
            }
            Ok((checks, fails))
        })
        .collect();
    fold(results)
}

fn probabilistic_exact(instances: usize, seed: u64) -> Outcome {
    let results: Vec<Result<(usize, Vec<String>)>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let aug = small_instance(k, seed)?;
            let g = build_rgraph(&aug, seed)?;
            let t = TieProbabilities::uniform(&g);
            let f = certain_inference(&g)?;
            let pi = probabilistic_inference(&g, &f, &t)?;
            let exact = exact_conditional_distribution(&g, &t, &OracleSet::new())?;
            let mut fails = Vec::new();
            for i in g.counted() {
                for m in 0..g.ingresses().len() {
                    let d = (pi.prob(i, m) - exact.prob(i, m)).abs();
                    if d > TOL {
                        fails.push(format!("instance {k}: node {} off by {d:e}", g.id(i)));
                    }
                }
            }
            Ok((g.counted().count(), fails))
        })
        .collect();
    fold(results)
}

/// Observations drawn from one sampled world, so they are consistent.
fn sample_oracles(g: &RGraph, t: &TieProbabilities, rng: &mut ChaCha8Rng) -> Result<Option<OracleSet>> {
    let worlds = enumerate_worlds(g, t)?;
    let dist = WeightedIndex::new(worlds.iter().map(|w| w.prob)).map_err(|e| anyhow!("{e}"))?;
    let w = &worlds[dist.sample(rng)];
    let routed: Vec<usize> = g.counted().filter(|&i| w.routes[i].is_some()).collect();
    if routed.is_empty() {
        return Ok(None);
    }
    let k = rng.gen_range(1..=3).min(routed.len());
    let mut set = OracleSet::new();
    for j in sample(rng, routed.len(), k) {
        let i = routed[j];
        let m = w.routes[i].expect("routed");
        set.insert(g.id(i), g.ingresses()[m].clone(), Provenance::Synthetic)?;
    }
    Ok(Some(set))
}

/// Propagated routes must hold in every world consistent with the
/// observations, within the call bound. Nodes that are determined by the
/// observations but not reached by propagation are counted separately.
fn oracle_propagation(instances: usize, seed: u64) -> Outcome {
    let results: Vec<Result<(usize, Vec<String>, usize)>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let aug = small_instance(k, seed)?;
            let g = build_rgraph(&aug, seed)?;
            let t = TieProbabilities::uniform(&g);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let Some(oracles) = sample_oracles(&g, &t, &mut rng)? else {
                return Ok((0, Vec::new(), 0));
            };
            let f = certain_inference(&g)?;
            let pi = probabilistic_inference(&g, &f, &t)?;
            let out = apply_oracles(&g, &f, &pi, &oracles)?;
            let exact = exact_conditional_distribution(&g, &t, &oracles)?;
            let mut fails = Vec::new();
            let mut missed = 0;
            let real = g.counted().count();
            if out.set_route_calls > real {
                fails.push(format!("instance {k}: {} route fixes for {real} nodes", out.set_route_calls));
            }
            for i in g.counted() {
                match out.f.get(i) {
                    Some(m) if exact.prob(i, m) < 1.0 - TOL => fails.push(format!(
                        "instance {k}: node {} fixed to {} with conditional probability {}",
                        g.id(i),
                        g.ingresses()[m],
                        exact.prob(i, m)
                    )),
                    None if exact.dist(i).iter().any(|&p| p >= 1.0 - TOL) => missed += 1,
                    _ => {}
                }
            }
            Ok((real + 1, fails, missed))
        })
        .collect();
    let mut missed = 0;
    let mut gap_instances = 0;
    let folded: Vec<Result<(usize, Vec<String>)>> = results
        .into_iter()
        .map(|r| {
            r.map(|(c, f, m)| {
                missed += m;
                gap_instances += usize::from(m > 0);
                (c, f)
            })
        })
        .collect();
    let (checks, fails, _) = fold(folded)?;
    let note = format!("determined but not propagated: {missed} nodes in {gap_instances} instances");
    Ok((checks, fails, Some(note)))
}

fn shortest_path_monotone(certain: Certain, instances: usize, seed: u64) -> Outcome {
    let results: Vec<Result<(usize, Vec<String>)>> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let aug = fixtures::random_instance(10 + k % 30, 3.0, 2 + k % 2, seed.wrapping_add(k as u64))?;
            let g = build_rgraph(&aug, seed)?;
            let sp = shortest_path_transform(&g)?;
            let count = |g: &RGraph, f: &[Option<usize>]| g.counted().filter(|&i| f[i].is_some()).count();
            let before = count(&g, &certain(&g)?);
            let after = count(&sp, &certain(&sp)?);
            let fails = if after < before {
                vec![format!("instance {k}: {before} certain nodes before, {after} after")]
            } else {
                Vec::new()
            };
            Ok((1, fails))
        })
        .collect();
    fold(results)
}

fn planner_margins() -> Outcome {
    let guard = ExactGuard::default();
    let weights = ObjectiveWeights::unit();
    let margins = |g: &RGraph, t: &TieProbabilities| -> Result<(f64, f64)> {
        let f = certain_inference(g)?;
        let pi = probabilistic_inference(g, &f, t)?;
        let input = PlanInput {
            g,
            f: &f,
            pi: &pi,
            ties: t,
            weights: &weights,
        };
        let e = |xs: &[u32]| {
            let xs: Vec<NodeId> = xs.iter().map(|&x| NodeId(x)).collect();
            expected_nc(&input, &xs, ObjectiveMode::Exact, &guard)
        };
        Ok((e(&[1])? - e(&[])?, e(&[1, 2])? - e(&[2])?))
    };
    let mut fails = Vec::new();
    let mut check = |what: &str, got: f64, want: f64| {
        if (got - want).abs() > TOL {
            fails.push(format!("{what} = {got}, expected {want}"));
        }
    };
    let (p, q) = (0.6, 0.5);
    let (g, t) = fixtures::nonsupermodular_example(p, q);
    let (a, b) = margins(&g, &t)?;
    check("example 1 first margin", a, 1.0 + (1.0 - p));
    check("example 1 second margin", b, 1.0 - p * q);
    let (g, t, w) = fixtures::nonsubmodular_example(0.5, 0.5);
    let (a, b) = margins(&g, &t)?;
    check("example 2 first margin", a, 1.0);
    check("example 2 second margin", b, 1.0 + w);
    Ok((4, fails, None))
}

fn mean_coincidence(nodes: usize, runs: usize, seed: u64) -> Outcome {
    let s = Scenario::from_toml(&format!(
        "name = \"synthetic\"\nseed = {seed}\nmode = \"probabilistic\"\n\
         [topology]\ngenerate = {{ nodes = {nodes}, avg_degree = 3.0, p2p_fraction = 0.3, seed = {seed} }}\n\
         [[destination.ingress]]\nname = \"m1\"\nnodes = [{a}]\n\
         [[destination.ingress]]\nname = \"m2\"\nnodes = [{b}]\n",
        a = nodes / 3,
        b = 2 * nodes / 3,
    ))?;
    let c = compare_with_simulation(&s, runs)?;
    let mut fails = Vec::new();
    for i in &c.ingresses {
        if !i.within_3se {
            fails.push(format!(
                "{}: simulated {:.3} ± {:.3}, predicted {:.3}",
                i.ingress, i.mean, i.std_error, i.predicted
            ));
        }
        if i.outside_bounds > 0 {
            fails.push(format!("{}: {} runs outside [{}, {}]", i.ingress, i.outside_bounds, i.lower, i.upper));
        }
    }
    if c.certain_violations > 0 {
        fails.push(format!("{} certain routes contradicted", c.certain_violations));
    }
    let note = c
        .ingresses
        .iter()
        .map(|i| format!("{} {:.2} vs {:.2}", i.ingress, i.mean, i.predicted))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((2 * c.runs, fails, Some(note)))
}

fn fold(results: Vec<Result<(usize, Vec<String>)>>) -> Outcome {
    let mut checks = 0;
    let mut fails = Vec::new();
    for r in results {
        let (c, f) = r?;
        checks += c;
        fails.extend(f);
    }
    Ok((checks, fails, None))
}

fn plan_input<'a>(
    r: &'a ScenarioReport,
    ties: &'a TieProbabilities,
    weights: &'a ObjectiveWeights,
) -> Result<PlanInput<'a>> {
    let pi = r
        .pi
        .as_ref()
        .ok_or_else(|| anyhow!("planning needs route probabilities"))?;
    Ok(PlanInput {
        g: &r.graph,
        f: &r.f,
        pi,
        ties,
        weights,
    })
}

/// Mean objective of `count` random sets for each size `1..=max_k`.
pub fn random_baseline(
    r: &ScenarioReport,
    pool: &[NodeId],
    max_k: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let ties = TieProbabilities::uniform(&r.graph);
    let weights = ObjectiveWeights::unit();
    let input = plan_input(r, &ties, &weights)?;
    let guard = ExactGuard::default();
    (1..=max_k)
        .map(|k| {
            let sets = random_plans(pool, k, count, seed.wrapping_add(k as u64));
            let mut total = 0.0;
            for s in &sets {
                total += expected_nc(&input, s, ObjectiveMode::Approx, &guard)?;
            }
            Ok(total / sets.len() as f64)
        })
        .collect()
}

pub fn exhaustive(
    r: &ScenarioReport,
    pool: &[NodeId],
    budget: f64,
    guard: &ExactGuard,
) -> Result<MeasurementPlan> {
    let ties = TieProbabilities::uniform(&r.graph);
    let weights = ObjectiveWeights::unit();
    let input = plan_input(r, &ties, &weights)?;
    Ok(exhaustive_plan(&input, pool, budget, guard)?)
}
