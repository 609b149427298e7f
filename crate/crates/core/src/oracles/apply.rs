use log::warn;

use super::OracleSet;
use crate::error::{Error, Result};
use crate::inference::{parent_dist, parent_route, RouteProbabilities, RoutingFunction};
use crate::rgraph::RGraph;

/// What to do with an observation that conflicts with the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OraclePolicy {
    #[default]
    Strict,
    /// Log and skip contradictory or infeasible observations.
    SkipConflicts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub f: RoutingFunction,
    pub pi: RouteProbabilities,
    /// Number of nodes whose route was fixed, observed or inferred.
    pub set_route_calls: usize,
    /// Observations dropped under [`OraclePolicy::SkipConflicts`].
    pub skipped: Vec<Error>,
}

/// Fixes the route of every observed node and propagates the consequences:
/// a node whose only parent able to carry its route is `j` pins `j`, and a
/// node whose parents all share a certain route inherits it.
///
/// Distributions of nodes that stay uncertain are left as they were and
/// flagged [`crate::inference::PiState::PreOracle`].
pub fn apply_oracles(
    g: &RGraph,
    f: &RoutingFunction,
    pi: &RouteProbabilities,
    oracles: &OracleSet,
) -> Result<OracleOutcome> {
    apply_oracles_with(g, f, pi, oracles, OraclePolicy::Strict)
}

pub fn apply_oracles_with(
    g: &RGraph,
    f: &RoutingFunction,
    pi: &RouteProbabilities,
    oracles: &OracleSet,
    policy: OraclePolicy,
) -> Result<OracleOutcome> {
    let resolved = oracles.resolve(g)?;
    let mut run = Propagation {
        g,
        f: f.clone(),
        pi: pi.clone(),
        calls: 0,
        queue: Vec::new(),
    };
    let mut skipped = Vec::new();
    for (i, m) in resolved {
        let problem = match run.f.get(i) {
            Some(existing) if existing == m => continue,
            Some(existing) => Some(Error::Contradiction {
                node: g.id(i),
                ingress: g.ingresses()[m].0.clone(),
                existing: g.ingresses()[existing].0.clone(),
            }),
            None if run.pi.prob(i, m) <= 0.0 => Some(Error::InfeasibleOracle(format!(
                "node {} cannot route through {}",
                g.id(i),
                g.ingresses()[m]
            ))),
            None => None,
        };
        match (problem, policy) {
            (Some(e), OraclePolicy::Strict) => return Err(e),
            (Some(e), OraclePolicy::SkipConflicts) => {
                warn!("skipping observation: {e}");
                skipped.push(e);
            }
            (None, _) => {
                run.set_route(i, m);
                run.drain();
            }
        }
    }
    if !oracles.is_empty() {
        run.pi.mark_pre_oracle();
    }
    Ok(OracleOutcome {
        f: run.f,
        pi: run.pi,
        set_route_calls: run.calls,
        skipped,
    })
}

struct Propagation<'g> {
    g: &'g RGraph,
    f: RoutingFunction,
    pi: RouteProbabilities,
    calls: usize,
    /// Newly certain nodes whose neighbourhood is still to be examined.
    queue: Vec<usize>,
}

impl Propagation<'_> {
    fn set_route(&mut self, i: usize, m: usize) {
        debug_assert!(self.f.get(i).is_none());
        self.calls += 1;
        self.f.set(i, Some(m));
        self.pi.set_certain(i, m);
        self.queue.push(i);
    }

    fn drain(&mut self) {
        while let Some(i) = self.queue.pop() {
            self.check_parents(i);
            let g = self.g;
            for &c in g.children(i) {
                match self.f.get(c) {
                    None => {
                        if let Some(m) = self.common_parent_route(c) {
                            self.set_route(c, m);
                        }
                    }
                    // a sibling parent may have just been ruled out
                    Some(_) => self.check_parents(c),
                }
            }
        }
    }

    /// Pins the only parent of certain node `i` that can carry its route.
    fn check_parents(&mut self, i: usize) {
        let Some(m) = self.f.get(i) else { return };
        let g = self.g;
        let mut candidates = g
            .parents(i)
            .iter()
            .copied()
            .filter(|&j| parent_dist(g, &self.pi, j, i)[m] > 0.0);
        let (Some(j), None) = (candidates.next(), candidates.next()) else {
            return;
        };
        if j != g.root() && self.f.get(j).is_none() {
            self.set_route(j, m);
        }
    }

    fn common_parent_route(&self, c: usize) -> Option<usize> {
        let mut route = None;
        for &p in self.g.parents(c) {
            let r = parent_route(self.g, &self.f, p, c)?;
            match route {
                None => route = Some(r),
                Some(x) if x != r => return None,
                _ => {}
            }
        }
        route
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::inference::{certain_inference, probabilistic_inference, PiState, TieProbabilities};
    use crate::topology::NodeId;

    fn base(g: &RGraph) -> (RoutingFunction, RouteProbabilities) {
        let f = certain_inference(g).unwrap();
        let pi = probabilistic_inference(g, &f, &TieProbabilities::uniform(g)).unwrap();
        (f, pi)
    }

    fn routes(g: &RGraph, out: &OracleOutcome) -> Vec<String> {
        (1..=8)
            .map(|n| out.f.route_of(g, NodeId(n)).map_or("0".into(), |m| m.0.clone()))
            .collect()
    }

    #[test]
    fn measuring_n4_fixes_n6() {
        let g = fixtures::figure1_rgraph();
        let (f, pi) = base(&g);
        let o = OracleSet::from_pairs([(NodeId(4), "m1")]).unwrap();
        let out = apply_oracles(&g, &f, &pi, &o).unwrap();
        assert_eq!(routes(&g, &out), ["m1", "m2", "m1", "m1", "m2", "m1", "m1", "0"]);
        assert_eq!(out.set_route_calls, 2);
        assert_eq!(out.pi.state(g.idx(NodeId(8)).unwrap()), PiState::PreOracle);
    }

    #[test]
    fn measuring_n8() {
        let g = fixtures::figure1_rgraph();
        let (f, pi) = base(&g);
        let o = OracleSet::from_pairs([(NodeId(8), "m1")]).unwrap();
        let out = apply_oracles(&g, &f, &pi, &o).unwrap();
        assert_eq!(routes(&g, &out), ["m1", "m2", "m1", "m1", "m2", "m1", "m1", "m1"]);
        assert!(out.set_route_calls <= g.node_count());

        let o = OracleSet::from_pairs([(NodeId(8), "m2")]).unwrap();
        let out = apply_oracles(&g, &f, &pi, &o).unwrap();
        assert_eq!(out.f.get(g.idx(NodeId(6)).unwrap()), None);
        assert_eq!(out.set_route_calls, 1);
    }

    #[test]
    fn measuring_n6_fixes_n4() {
        let g = fixtures::figure1_rgraph();
        let (f, pi) = base(&g);
        let o = OracleSet::from_pairs([(NodeId(6), "m2")]).unwrap();
        let out = apply_oracles(&g, &f, &pi, &o).unwrap();
        assert_eq!(out.f.route_of(&g, NodeId(4)).unwrap().as_str(), "m2");
        // n8 has parents n5 and n6, both now on m2
        assert_eq!(out.f.route_of(&g, NodeId(8)).unwrap().as_str(), "m2");
    }

    #[test]
    fn contradiction_and_infeasible() {
        let g = fixtures::figure1_rgraph();
        let (f, pi) = base(&g);
        let o = OracleSet::from_pairs([(NodeId(3), "m2")]).unwrap();
        assert!(matches!(
            apply_oracles(&g, &f, &pi, &o),
            Err(Error::Contradiction { .. })
        ));
        let out = apply_oracles_with(&g, &f, &pi, &o, OraclePolicy::SkipConflicts).unwrap();
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.f, f);

        let mut g2 = g.clone();
        g2.remove_edge(NodeId(1), NodeId(3)).unwrap();
        let (f2, pi2) = base(&g2);
        let o = OracleSet::from_pairs([(NodeId(3), "m1")]).unwrap();
        assert!(matches!(
            apply_oracles(&g2, &f2, &pi2, &o),
            Err(Error::InfeasibleOracle(_))
        ));
    }

    #[test]
    fn idempotent() {
        let g = fixtures::figure1_rgraph();
        let (f, pi) = base(&g);
        let o = OracleSet::from_pairs([(NodeId(8), "m1")]).unwrap();
        let once = apply_oracles(&g, &f, &pi, &o).unwrap();
        let twice = apply_oracles(&g, &once.f, &once.pi, &o).unwrap();
        assert_eq!(twice.f, once.f);
        assert_eq!(twice.pi, once.pi);
        assert_eq!(twice.set_route_calls, 0);
    }
}
