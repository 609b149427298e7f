use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::objective::Branches;
use super::{
    expected_nc, resolve_candidates, ExactGuard, MeasurementPlan, ObjectiveMode, PlanInput,
};
use crate::error::{Error, Result};
use crate::topology::NodeId;

const TIE_TOL: f64 = 1e-12;
const MAX_EXHAUSTIVE_EVALUATIONS: u128 = 1 << 20;

/// Greedy selection: repeatedly adds the affordable candidate with the
/// largest approximate objective, smallest id on ties.
pub fn greedy_plan(
    input: &PlanInput<'_>,
    candidates: &[NodeId],
    budget: f64,
) -> Result<MeasurementPlan> {
    if !(budget >= 0.0) {
        return Err(Error::Input(format!("invalid budget {budget}")));
    }
    let g = input.g;
    let pool = resolve_candidates(g, candidates)?;
    let mut branches = Branches::new(input)?;
    let initial = branches.value(input);
    let mut plan = MeasurementPlan {
        selected: Vec::new(),
        values: Vec::new(),
        initial,
        candidates: pool.iter().map(|&i| g.id(i)).collect(),
        budget,
        note: None,
    };
    if pool.is_empty() && budget > 0.0 {
        plan.note = Some("no candidate nodes".into());
        return Ok(plan);
    }
    let mut remaining = pool;
    let mut spent = 0.0;
    loop {
        let affordable: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&j| spent + input.weights.cost(g.id(j)) <= budget + TIE_TOL)
            .collect();
        if affordable.is_empty() {
            break;
        }
        let scores = affordable
            .par_iter()
            .map(|&j| branches.value_with(input, j))
            .collect::<Result<Vec<f64>>>()?;
        // `affordable` is sorted by index, hence by id
        let mut best = 0;
        for k in 1..scores.len() {
            if scores[k] > scores[best] + TIE_TOL {
                best = k;
            }
        }
        let j = affordable[best];
        branches = branches.observe(input, j)?;
        spent += input.weights.cost(g.id(j));
        remaining.retain(|&x| x != j);
        plan.selected.push(g.id(j));
        plan.values.push(scores[best]);
    }
    Ok(plan)
}

/// Best set by exact evaluation of every affordable subset. Among equal
/// values the lexicographically smallest set wins.
pub fn exhaustive_plan(
    input: &PlanInput<'_>,
    candidates: &[NodeId],
    budget: f64,
    guard: &ExactGuard,
) -> Result<MeasurementPlan> {
    if !(budget >= 0.0) {
        return Err(Error::Input(format!("invalid budget {budget}")));
    }
    let g = input.g;
    let pool: Vec<NodeId> = resolve_candidates(g, candidates)?
        .into_iter()
        .map(|i| g.id(i))
        .collect();
    let max_size = if input.weights.has_unit_costs() {
        pool.len().min(budget.floor() as usize)
    } else {
        pool.len()
    };
    let subsets: u128 = (0..=max_size).map(|k| binomial(pool.len(), k)).sum();
    let outcomes = (g.ingresses().len() as u128 + 1).saturating_pow(max_size as u32);
    if max_size > guard.max_measured
        || subsets.saturating_mul(outcomes) > MAX_EXHAUSTIVE_EVALUATIONS
    {
        return Err(Error::Capacity(format!(
            "exhaustive search over {subsets} subsets of up to {max_size} nodes exceeds the guard"
        )));
    }
    let initial = expected_nc(input, &[], ObjectiveMode::Exact, guard)?;
    let mut best: (f64, Vec<NodeId>) = (initial, Vec::new());
    let mut subset = Vec::new();
    let mut found = Vec::new();
    collect_subsets(&pool, 0, max_size, &mut subset, &mut found);
    for s in found {
        let cost: f64 = s.iter().map(|&n| input.weights.cost(n)).sum();
        if cost > budget + TIE_TOL {
            continue;
        }
        let v = expected_nc(input, &s, ObjectiveMode::Exact, guard)?;
        if v > best.0 + TIE_TOL || ((v - best.0).abs() <= TIE_TOL && better_tie(&s, &best.1)) {
            best = (v, s);
        }
    }
    let values = (1..=best.1.len())
        .map(|k| expected_nc(input, &best.1[..k], ObjectiveMode::Exact, guard))
        .collect::<Result<Vec<f64>>>()?;
    Ok(MeasurementPlan {
        selected: best.1,
        values,
        initial,
        candidates: pool,
        budget,
        note: None,
    })
}

/// Larger sets first (the objective never decreases), then lexicographic.
fn better_tie(a: &[NodeId], b: &[NodeId]) -> bool {
    a.len() > b.len() || (a.len() == b.len() && a < b)
}

fn collect_subsets(
    pool: &[NodeId],
    start: usize,
    max: usize,
    cur: &mut Vec<NodeId>,
    out: &mut Vec<Vec<NodeId>>,
) {
    if !cur.is_empty() {
        out.push(cur.clone());
    }
    if cur.len() == max {
        return;
    }
    for k in start..pool.len() {
        cur.push(pool[k]);
        collect_subsets(pool, k + 1, max, cur, out);
        cur.pop();
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `count` uniformly random candidate sets of size `min(budget, |Y|)`.
pub fn random_plans(candidates: &[NodeId], budget: usize, count: usize, seed: u64) -> Vec<Vec<NodeId>> {
    let mut pool = candidates.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let k = budget.min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut s: Vec<NodeId> = sample(&mut rng, pool.len(), k)
                .into_iter()
                .map(|i| pool[i])
                .collect();
            s.sort_unstable();
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::inference::{certain_inference, probabilistic_inference, TieProbabilities};
    use crate::planner::ObjectiveWeights;

    fn figure1_plan<R>(run: impl FnOnce(&PlanInput<'_>) -> R) -> R {
        let g = fixtures::figure1_rgraph();
        let t = TieProbabilities::uniform(&g);
        let f = certain_inference(&g).unwrap();
        let pi = probabilistic_inference(&g, &f, &t).unwrap();
        let w = ObjectiveWeights::unit();
        run(&PlanInput {
            g: &g,
            f: &f,
            pi: &pi,
            ties: &t,
            weights: &w,
        })
    }

    fn ids(xs: &[u32]) -> Vec<NodeId> {
        xs.iter().map(|&x| NodeId(x)).collect()
    }

    #[test]
    fn zero_budget_and_full_budget() {
        figure1_plan(|input| {
            let y = ids(&[4, 6, 8]);
            let empty = greedy_plan(input, &y, 0.0).unwrap();
            assert!(empty.selected.is_empty());
            assert_eq!(empty.value(), 5.0);
            let full = greedy_plan(input, &y, 5.0).unwrap();
            let mut sel = full.selected.clone();
            sel.sort();
            assert_eq!(sel, y);
            assert!(full.values.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            let none = greedy_plan(input, &[], 2.0).unwrap();
            assert!(none.note.is_some());
        });
    }

    #[test]
    fn figure1_first_pick() {
        // n4 and n6 each resolve the other and, on m2, n8 as well: 7.5;
        // n8 only helps when it reports m1: 6.5. The tie goes to n4.
        figure1_plan(|input| {
            let plan = greedy_plan(input, &ids(&[1, 2, 3, 4, 5, 6, 7, 8]), 1.0).unwrap();
            assert_eq!(plan.selected, ids(&[4]));
            assert_eq!(plan.to_csv(), "rank,node,expected_nc_after\n1,4,7.5\n");
        });
    }

    #[test]
    fn exhaustive_dominates_greedy() {
        figure1_plan(|input| {
            let y = ids(&[3, 4, 6, 8]);
            let guard = ExactGuard::default();
            let opt = exhaustive_plan(input, &y, 2.0, &guard).unwrap();
            let greedy = greedy_plan(input, &y, 2.0).unwrap();
            let gv = expected_nc(input, &greedy.selected, ObjectiveMode::Exact, &guard).unwrap();
            assert!(opt.value() + 1e-12 >= gv);
            assert_eq!(opt.selected.len(), 2);
        });
    }

    #[test]
    fn random_sets_have_budget_size() {
        let y = ids(&[1, 2, 3, 4]);
        let plans = random_plans(&y, 2, 10, 3);
        assert_eq!(plans.len(), 10);
        assert!(plans.iter().all(|p| p.len() == 2 && p.iter().all(|n| y.contains(n))));
        assert_eq!(plans, random_plans(&y, 2, 10, 3));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(3, 5), 0);
    }
}
