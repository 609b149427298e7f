//! Routing-graph text formats.
//!
//! The edge list carries one `parent child [weight]` pair per line. Graph
//! metadata rides in directive comments so plain edge-list tools can read
//! the file unchanged:
//!
//! ```text
//! # catchment-rgraph v1
//! # root 9
//! # ingress m1 1
//! # ingress m2 2
//! # virtual 10
//! 9 1
//! 1 3 0.5
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::RGraph;
use crate::error::{Error, Result};
use crate::topology::{IngressId, NodeId};

pub fn write_edge_list(g: &RGraph) -> String {
    let mut out = String::from("# catchment-rgraph v1\n");
    let _ = writeln!(out, "# root {}", g.root_id());
    for (m, name) in g.ingresses().iter().enumerate() {
        let _ = write!(out, "# ingress {name}");
        for i in 0..g.node_count() {
            if g.attachment(i) == Some(m) {
                let _ = write!(out, " {}", g.id(i));
            }
        }
        out.push('\n');
    }
    for i in 0..g.node_count() {
        if g.is_virtual(i) && i != g.root() {
            let _ = writeln!(out, "# virtual {}", g.id(i));
        }
    }
    for i in 0..g.node_count() {
        if g.parents(i).is_empty() && g.children(i).is_empty() && i != g.root() {
            let _ = writeln!(out, "# node {}", g.id(i));
        }
    }
    for (p, c) in g.edges() {
        let _ = writeln!(out, "{p} {c}");
    }
    out
}

/// Parses an edge list; returns the graph and any per-edge weights given
/// as a third column.
pub fn parse_rgraph(text: &str) -> Result<(RGraph, Vec<(NodeId, NodeId, f64)>)> {
    let mut root = None;
    let mut ingresses: Vec<IngressId> = Vec::new();
    let mut attachments = Vec::new();
    let mut virtuals = Vec::new();
    let mut nodes = BTreeSet::new();
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let node = |s: &str| -> Result<NodeId> {
            s.parse()
                .map_err(|e| Error::parse(line_no, format!("bad node id `{s}`: {e}")))
        };
        if let Some(directive) = line.strip_prefix('#') {
            let fields: Vec<&str> = directive.split_whitespace().collect();
            match fields.first().copied() {
                Some("root") if fields.len() == 2 => {
                    let r = node(fields[1])?;
                    nodes.insert(r);
                    root = Some(r);
                }
                Some("ingress") if fields.len() >= 2 => {
                    let m = ingresses.len();
                    ingresses.push(IngressId::new(fields[1]));
                    for f in &fields[2..] {
                        let n = node(f)?;
                        nodes.insert(n);
                        attachments.push((n, m));
                    }
                }
                Some("virtual") if fields.len() == 2 => {
                    let v = node(fields[1])?;
                    nodes.insert(v);
                    virtuals.push(v);
                }
                Some("node") if fields.len() == 2 => {
                    nodes.insert(node(fields[1])?);
                }
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::parse(line_no, "expected `parent child [weight]`"));
        }
        let (p, c) = (node(fields[0])?, node(fields[1])?);
        nodes.insert(p);
        nodes.insert(c);
        edges.push((p, c));
        if let Some(w) = fields.get(2) {
            let w: f64 = w
                .parse()
                .map_err(|e| Error::parse(line_no, format!("bad weight `{w}`: {e}")))?;
            weights.push((p, c, w));
        }
    }
    let root = root.ok_or_else(|| Error::parse(0, "missing `# root` directive"))?;
    let mut g = RGraph::new(nodes, root, ingresses, attachments, virtuals)?;
    for (p, c) in edges {
        g.add_edge(p, c)?;
    }
    Ok((g, weights))
}

/// Graphviz description; attached nodes are labelled with their ingress.
pub fn write_dot(g: &RGraph) -> String {
    let mut out = String::from("digraph rgraph {\n  rankdir=TB;\n");
    for i in 0..g.node_count() {
        let id = g.id(i);
        if i == g.root() {
            let _ = writeln!(out, "  \"{id}\" [shape=doublecircle,label=\"n_dst\"];");
        } else if let Some(m) = g.attachment(i) {
            let _ = writeln!(
                out,
                "  \"{id}\" [shape=box,label=\"{id} ({})\"];",
                g.ingresses()[m]
            );
        } else if g.is_virtual(i) {
            let _ = writeln!(out, "  \"{id}\" [style=dashed];");
        }
    }
    for (p, c) in g.edges() {
        let _ = writeln!(out, "  \"{p}\" -> \"{c}\";");
    }
    out.push_str("}\n");
    out
}
