//! Canonical text serialization of a [`Topology`].
//!
//! ```text
//! # catchment-topology v1
//! node 1
//! edge 1 2 p2c          # a b ℓ_ab, a < b
//! policy vf | policy table
//! pref 1 2 3            # i j q_ij
//! export 1 2 3 1        # i j k h_ijk (table policies only)
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{ExportPolicy, NodeId, Policies, Relationship, Topology};
use crate::error::{Error, Result};

pub const HEADER: &str = "# catchment-topology v1";

pub fn write_topology(topology: &Topology) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for node in topology.nodes() {
        let _ = writeln!(out, "node {node}");
    }
    for (a, b, r) in topology.edges() {
        let _ = writeln!(out, "edge {a} {b} {r}");
    }
    if let Some(p) = topology.policies() {
        match &p.export {
            ExportPolicy::ValleyFree => out.push_str("policy vf\n"),
            ExportPolicy::Table(_) => out.push_str("policy table\n"),
        }
        for (&(i, j), q) in &p.local_pref {
            let _ = writeln!(out, "pref {i} {j} {q}");
        }
        if let ExportPolicy::Table(t) = &p.export {
            for (&(i, j, k), &h) in t {
                let _ = writeln!(out, "export {i} {j} {k} {}", u8::from(h));
            }
        }
    }
    out
}

pub fn parse_topology(text: &str) -> Result<Topology> {
    let mut topology = Topology::new();
    let mut policy: Option<ExportPolicy> = None;
    let mut local_pref = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let node = |s: &str| -> Result<NodeId> {
            s.parse()
                .map_err(|e| Error::parse(line_no, format!("bad node id `{s}`: {e}")))
        };
        let arity = |n: usize| -> Result<()> {
            if fields.len() == n {
                Ok(())
            } else {
                Err(Error::parse(
                    line_no,
                    format!("`{}` expects {} fields", fields[0], n - 1),
                ))
            }
        };
        match fields[0] {
            "node" => {
                arity(2)?;
                topology.add_node(node(fields[1])?);
            }
            "edge" => {
                arity(4)?;
                let rel: Relationship = fields[3]
                    .parse()
                    .map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
                topology
                    .add_edge(node(fields[1])?, node(fields[2])?, rel)
                    .map_err(|e| match e {
                        Error::Input(m) => Error::parse(line_no, m),
                        other => other,
                    })?;
            }
            "policy" => {
                arity(2)?;
                policy = Some(match fields[1] {
                    "vf" => ExportPolicy::ValleyFree,
                    "table" => ExportPolicy::Table(BTreeMap::new()),
                    other => {
                        return Err(Error::parse(line_no, format!("unknown policy `{other}`")))
                    }
                });
            }
            "pref" => {
                arity(4)?;
                let q: f64 = fields[3]
                    .parse()
                    .map_err(|e| Error::parse(line_no, format!("bad preference: {e}")))?;
                local_pref.insert((node(fields[1])?, node(fields[2])?), q);
            }
            "export" => {
                arity(5)?;
                let Some(ExportPolicy::Table(t)) = policy.as_mut() else {
                    return Err(Error::parse(
                        line_no,
                        "`export` lines require a preceding `policy table`",
                    ));
                };
                let h = match fields[4] {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(Error::parse(line_no, format!("bad export flag `{other}`")))
                    }
                };
                t.insert((node(fields[1])?, node(fields[2])?, node(fields[3])?), h);
            }
            other => return Err(Error::parse(line_no, format!("unknown record `{other}`"))),
        }
    }
    match policy {
        Some(export) => topology.set_policies(Policies { local_pref, export }),
        None if !local_pref.is_empty() => {
            return Err(Error::Policy("`pref` lines without a `policy` line".into()))
        }
        None => {}
    }
    topology.validate()?;
    Ok(topology)
}
