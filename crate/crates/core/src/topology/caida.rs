use super::{NodeId, Relationship, Topology};
use crate::error::{Error, Result};

/// Parses a CAIDA serial-1 AS-relationship file.
///
/// Each non-comment line is `<as1>|<as2>|<rel>`; `-1` makes `as1` the
/// provider of `as2`, `0` makes them peers. Serial-2 files carry a fourth
/// `source` column, which is ignored. Policies are left unset.
pub fn parse_caida_asrel(text: &str) -> Result<Topology> {
    let mut topology = Topology::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected `as1|as2|rel`, got `{line}`"),
            ));
        }
        let as1: NodeId = fields[0]
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad AS number `{}`: {e}", fields[0])))?;
        let as2: NodeId = fields[1]
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad AS number `{}`: {e}", fields[1])))?;
        let rel = match fields[2].trim() {
            "-1" => Relationship::P2c,
            "0" => Relationship::P2p,
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("unsupported relationship `{other}` (expected -1 or 0)"),
                ))
            }
        };
        topology.add_edge(as1, as2, rel).map_err(|e| match e {
            Error::Input(msg) => Error::parse(line_no, msg),
            other => other,
        })?;
    }
    Ok(topology)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provider_customer_line() {
        let t = parse_caida_asrel("1|2|-1\n").unwrap();
        assert_eq!(t.edge_count(), 1);
        assert_eq!(t.relationship(NodeId(1), NodeId(2)), Some(Relationship::P2c));
        assert_eq!(t.relationship(NodeId(2), NodeId(1)), Some(Relationship::C2p));
        assert!(!t.has_policies());
    }

    #[test]
    fn peer_line() {
        let t = parse_caida_asrel("1|2|0").unwrap();
        assert_eq!(t.relationship(NodeId(1), NodeId(2)), Some(Relationship::P2p));
        assert_eq!(t.relationship(NodeId(2), NodeId(1)), Some(Relationship::P2p));
    }

    #[test]
    fn comments_and_serial2() {
        let text = "# source: topology\n# another\n1|2|-1|bgp\n\n2|3|0|mlp\n";
        let t = parse_caida_asrel(text).unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.edge_count(), 2);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_caida_asrel("1|2|-1\n1|x|0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_caida_asrel("# c\n1|2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_caida_asrel("1|2|1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn duplicate_conflicting_edge() {
        let err = parse_caida_asrel("1|2|-1\n2|1|-1\n").unwrap_err();
        assert_eq!(
            err,
            Error::Conflict {
                a: NodeId(2),
                b: NodeId(1)
            }
        );
        // identical duplicate is fine
        parse_caida_asrel("1|2|-1\n1|2|-1\n").unwrap();
    }
}
