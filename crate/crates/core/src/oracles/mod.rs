//! Measurement oracles: observed node-to-ingress assignments, their
//! propagation through the routing graph, and exact and sampled
//! conditional distributions used to check that propagation.

mod apply;
mod exact;
mod monte_carlo;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rgraph::RGraph;
use crate::topology::{IngressId, NodeId};

pub use apply::{apply_oracles, apply_oracles_with, OracleOutcome, OraclePolicy};
pub use exact::{enumerate_worlds, exact_conditional_distribution, World, EXACT_MAX_NODES};
pub use monte_carlo::{monte_carlo_inference, MonteCarloEstimate};

/// Where an observation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    BgpRib,
    Traceroute,
    Ping,
    Synthetic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::BgpRib => "bgp-rib",
            Provenance::Traceroute => "traceroute",
            Provenance::Ping => "ping",
            Provenance::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bgp-rib" => Ok(Provenance::BgpRib),
            "traceroute" => Ok(Provenance::Traceroute),
            "ping" => Ok(Provenance::Ping),
            "synthetic" => Ok(Provenance::Synthetic),
            other => Err(Error::Input(format!("unknown provenance `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Oracle {
    pub node: NodeId,
    pub ingress: IngressId,
    pub provenance: Provenance,
}

/// Observed assignments, at most one ingress per node, kept in insertion
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OracleSet {
    entries: Vec<Oracle>,
    by_node: BTreeMap<NodeId, usize>,
}

impl OracleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an observation. Repeating an identical assignment is a no-op;
    /// a different ingress for the same node is a contradiction.
    pub fn insert(&mut self, node: NodeId, ingress: IngressId, provenance: Provenance) -> Result<()> {
        if let Some(&k) = self.by_node.get(&node) {
            let existing = &self.entries[k];
            if existing.ingress != ingress {
                return Err(Error::Contradiction {
                    node,
                    ingress: ingress.0,
                    existing: existing.ingress.0.clone(),
                });
            }
            return Ok(());
        }
        self.by_node.insert(node, self.entries.len());
        self.entries.push(Oracle {
            node,
            ingress,
            provenance,
        });
        Ok(())
    }

    /// One observation per node on a measured path (traceroute or BGP
    /// path); every node on a best path uses the same ingress.
    pub fn insert_path(
        &mut self,
        path: &[NodeId],
        ingress: IngressId,
        provenance: Provenance,
    ) -> Result<()> {
        for &n in path {
            self.insert(n, ingress.clone(), provenance)?;
        }
        Ok(())
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, S)>,
        S: Into<String>,
    {
        let mut o = OracleSet::new();
        for (n, m) in pairs {
            o.insert(n, IngressId::new(m), Provenance::Synthetic)?;
        }
        Ok(o)
    }

    pub fn get(&self, node: NodeId) -> Option<&IngressId> {
        self.by_node.get(&node).map(|&k| &self.entries[k].ingress)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Oracle> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(node index, ingress index)` pairs; every node and ingress must
    /// exist in `g` and the root cannot be observed.
    pub fn resolve(&self, g: &RGraph) -> Result<Vec<(usize, usize)>> {
        self.entries
            .iter()
            .map(|o| {
                let i = g.require(o.node)?;
                if i == g.root() {
                    return Err(Error::Input("the destination cannot be observed".into()));
                }
                let m = g
                    .ingress_index(&o.ingress)
                    .ok_or_else(|| Error::lookup("ingress", &o.ingress))?;
                Ok((i, m))
            })
            .collect()
    }
}

/// Parses `node,ingress[,provenance]` and `path:<nodes>,ingress[,provenance]`
/// lines. Path observations default to `traceroute`, others to `synthetic`.
pub fn parse_oracles(text: &str) -> Result<OracleSet> {
    let mut out = OracleSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with("node,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::parse(line_no, "expected `node,ingress[,provenance]`"));
        }
        let ingress = IngressId::new(fields[1]);
        let node = |s: &str| -> Result<NodeId> {
            s.parse()
                .map_err(|e| Error::parse(line_no, format!("bad node id `{s}`: {e}")))
        };
        if let Some(path) = fields[0].strip_prefix("path:") {
            let nodes = path.split_whitespace().map(node).collect::<Result<Vec<_>>>()?;
            if nodes.is_empty() {
                return Err(Error::parse(line_no, "empty path"));
            }
            let prov = match fields.get(2) {
                Some(p) => p.parse().map_err(|e: Error| Error::parse(line_no, e.to_string()))?,
                None => Provenance::Traceroute,
            };
            out.insert_path(&nodes, ingress, prov)?;
        } else {
            let prov = match fields.get(2) {
                Some(p) => p.parse().map_err(|e: Error| Error::parse(line_no, e.to_string()))?,
                None => Provenance::Synthetic,
            };
            out.insert(node(fields[0])?, ingress, prov)?;
        }
    }
    Ok(out)
}

pub fn write_oracles(o: &OracleSet) -> String {
    let mut out = String::from("node,ingress,provenance\n");
    for e in o.iter() {
        out.push_str(&format!("{},{},{}\n", e.node, e.ingress, e.provenance));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_lines_and_paths() {
        let text = "node,ingress,provenance\n4,m1,ping\npath:8 6,m1\n# note\n";
        let o = parse_oracles(text).unwrap();
        assert_eq!(o.len(), 3);
        assert_eq!(o.get(NodeId(6)).unwrap().as_str(), "m1");
        let kinds: Vec<Provenance> = o.iter().map(|e| e.provenance).collect();
        assert_eq!(
            kinds,
            [Provenance::Ping, Provenance::Traceroute, Provenance::Traceroute]
        );
        assert_eq!(parse_oracles(&write_oracles(&o)).unwrap(), o);
    }

    #[test]
    fn conflicting_entries() {
        let err = parse_oracles("4,m1\n4,m2\n").unwrap_err();
        assert!(matches!(err, Error::Contradiction { .. }));
        assert!(matches!(
            parse_oracles("4,m1,radar\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse_oracles("4\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn resolve_checks_graph() {
        let g = crate::fixtures::figure1_rgraph();
        let o = OracleSet::from_pairs([(NodeId(4), "m1")]).unwrap();
        assert_eq!(o.resolve(&g).unwrap(), vec![(g.idx(NodeId(4)).unwrap(), 0)]);
        let bad = OracleSet::from_pairs([(NodeId(4), "m3")]).unwrap();
        assert!(matches!(bad.resolve(&g), Err(Error::Lookup { .. })));
        let root = OracleSet::from_pairs([(NodeId(9), "m1")]).unwrap();
        assert!(root.resolve(&g).is_err());
    }
}
