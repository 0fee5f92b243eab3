//! Line-oriented text format for networks.
//!
//! ```text
//! nodes N
//! node <id> <role>          # role: free | z0 | z1
//! edge <dst> <src> <weight> # src influences dst
//! ```
//!
//! Blank lines and `#` comments are ignored. Weights are written with full
//! precision, so save followed by load reproduces the network exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Network, NetworkError, NodeRole};

fn parse_error(line: usize, message: impl Into<String>) -> NetworkError {
    NetworkError::Parse { line, message: message.into() }
}

/// Parses a network from its text representation.
pub fn parse_network(text: &str) -> Result<Network, NetworkError> {
    let mut n: Option<usize> = None;
    let mut roles: Vec<Option<NodeRole>> = Vec::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut edge_lines: Vec<usize> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap();
        match keyword {
            "nodes" => {
                if n.is_some() {
                    return Err(parse_error(lineno, "repeated nodes header"));
                }
                let count: usize = parts
                    .next()
                    .ok_or_else(|| parse_error(lineno, "nodes header needs a count"))?
                    .parse()
                    .map_err(|_| parse_error(lineno, "invalid node count"))?;
                roles = vec![None; count];
                n = Some(count);
            }
            "node" => {
                let n = n.ok_or_else(|| parse_error(lineno, "node line before nodes header"))?;
                let id: usize = parts
                    .next()
                    .ok_or_else(|| parse_error(lineno, "node line needs an id"))?
                    .parse()
                    .map_err(|_| parse_error(lineno, "invalid node id"))?;
                if id >= n {
                    return Err(parse_error(lineno, format!("node id {id} out of range")));
                }
                let role = match parts.next() {
                    Some("free") => NodeRole::Free,
                    Some("z0") => NodeRole::Zealot0,
                    Some("z1") => NodeRole::Zealot1,
                    Some(other) => {
                        return Err(parse_error(lineno, format!("unknown role {other:?}")))
                    }
                    None => return Err(parse_error(lineno, "node line needs a role")),
                };
                if roles[id].is_some() {
                    return Err(parse_error(lineno, format!("node {id} declared twice")));
                }
                roles[id] = Some(role);
            }
            "edge" => {
                let n = n.ok_or_else(|| parse_error(lineno, "edge line before nodes header"))?;
                let dst: usize = parts
                    .next()
                    .ok_or_else(|| parse_error(lineno, "edge line needs dst src weight"))?
                    .parse()
                    .map_err(|_| parse_error(lineno, "invalid dst id"))?;
                let src: usize = parts
                    .next()
                    .ok_or_else(|| parse_error(lineno, "edge line needs dst src weight"))?
                    .parse()
                    .map_err(|_| parse_error(lineno, "invalid src id"))?;
                let weight: f64 = parts
                    .next()
                    .ok_or_else(|| parse_error(lineno, "edge line needs dst src weight"))?
                    .parse()
                    .map_err(|_| parse_error(lineno, "invalid weight"))?;
                if dst >= n || src >= n {
                    return Err(parse_error(lineno, "edge endpoint out of range"));
                }
                if dst == src {
                    return Err(parse_error(lineno, format!("self-loop on node {dst}")));
                }
                if !weight.is_finite() {
                    return Err(parse_error(lineno, "weight must be finite"));
                }
                if weight < 0.0 {
                    return Err(parse_error(lineno, format!("negative weight {weight}")));
                }
                edges.push((dst, src, weight));
                edge_lines.push(lineno);
            }
            other => return Err(parse_error(lineno, format!("unknown keyword {other:?}"))),
        }
        if parts.next().is_some() {
            return Err(parse_error(lineno, "trailing tokens"));
        }
    }

    let n = n.ok_or_else(|| parse_error(0, "missing nodes header"))?;
    let roles: Vec<NodeRole> = roles
        .into_iter()
        .enumerate()
        .map(|(id, role)| role.ok_or_else(|| parse_error(0, format!("node {id} never declared"))))
        .collect::<Result<_, _>>()?;

    let net = match Network::from_edges(n, roles, &edges) {
        Ok(net) => net,
        Err(NetworkError::DuplicateEdge { dst, src }) => {
            let lineno = edges
                .iter()
                .zip(&edge_lines)
                .filter(|((d, s, _), _)| *d == dst && *s == src)
                .map(|(_, &l)| l)
                .last()
                .unwrap_or(0);
            return Err(parse_error(lineno, format!("duplicate edge ({dst}, {src})")));
        }
        Err(e) => return Err(e),
    };
    let report = net.validate();
    if !report.is_empty() {
        return Err(NetworkError::Invalid(report));
    }
    Ok(net)
}

/// Renders a network in the text format. The output always round-trips
/// through [`parse_network`] to an identical network.
pub fn render_network(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "nodes {}", net.n());
    for id in 0..net.n() {
        let _ = writeln!(out, "node {} {}", id, net.role(id));
    }
    for (dst, src, w) in net.edges() {
        let _ = writeln!(out, "edge {dst} {src} {w}");
    }
    out
}

/// Loads a network file, rejecting malformed lines (with their line number)
/// and invariant violations.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network, NetworkError> {
    let text = fs::read_to_string(path)?;
    parse_network(&text)
}

/// Writes a network file; see [`render_network`].
pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<(), NetworkError> {
    fs::write(path, render_network(net))?;
    Ok(())
}
