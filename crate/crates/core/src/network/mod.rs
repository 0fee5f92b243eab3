//! Directed weighted influence networks with free nodes and zealots.
//!
//! An edge `(dst, src, w)` means `src` exerts influence `w > 0` over `dst`.
//! Zealots never receive influence; their opinions are pinned (0-zealots hold
//! opinion 0, 1-zealots hold opinion 1). Free nodes hold a binary opinion that
//! evolves under the voter dynamics.

mod generate;
mod io;

pub use generate::{barabasi_albert, complete, erdos_renyi, WeightLaw};
pub use io::{load_network, save_network};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Free,
    Zealot0,
    Zealot1,
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRole::Free => write!(f, "free"),
            NodeRole::Zealot0 => write!(f, "z0"),
            NodeRole::Zealot1 => write!(f, "z1"),
        }
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("node index {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("role list has {roles} entries for {n} nodes")]
    RoleCountMismatch { roles: usize, n: usize },
    #[error("edge ({dst}, {src}) has non-finite weight")]
    NonFiniteWeight { dst: usize, src: usize },
    #[error("edge ({dst}, {src}) has negative weight {weight}")]
    NegativeWeight { dst: usize, src: usize, weight: f64 },
    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },
    #[error("duplicate edge ({dst}, {src})")]
    DuplicateEdge { dst: usize, src: usize },
    #[error("invalid network: {0}")]
    Invalid(ValidationReport),
    #[error("{0}")]
    BadParameters(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Structural violation found by [`Network::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A free node with no incoming edges has an undefined update rule.
    IsolatedFreeNode { node: usize },
    /// Zealots never change opinion, so influence onto them is meaningless.
    ZealotReceivesInfluence { zealot: usize, src: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IsolatedFreeNode { node } => {
                write!(f, "free node {node} has in-degree 0")
            }
            Violation::ZealotReceivesInfluence { zealot, src } => {
                write!(f, "zealot {zealot} receives influence from {src}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "no violations");
        }
        let mut first = true;
        for v in &self.violations {
            if !first {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

/// Aggregate zealot influence on each free node, in free-slot order.
///
/// For free node `i`, `z0[slot]` is the total weight of edges from 0-zealots
/// into `i` and `z1[slot]` the total from 1-zealots. The in-degree satisfies
/// `d_i = (free in-weight) + z0 + z1`.
#[derive(Debug, Clone)]
pub struct ZealotInfluence {
    pub free_ids: Vec<usize>,
    pub z0: Vec<f64>,
    pub z1: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    roles: Vec<NodeRole>,
    /// `in_edges[i]` lists `(src, w)` sorted by `src`; `w > 0` always.
    in_edges: Vec<Vec<(usize, f64)>>,
    /// `out_edges[j]` lists `(dst, w)` sorted by `dst`; mirror of `in_edges`.
    out_edges: Vec<Vec<(usize, f64)>>,
    /// Total incoming weight per node (the in-degree `d_i`).
    in_weight: Vec<f64>,
    free: Vec<usize>,
    free_slot: Vec<Option<usize>>,
    edge_count: usize,
}

impl Network {
    /// Builds a network from a directed edge list. Each entry `(dst, src, w)`
    /// gives `src` influence `w` over `dst`. Zero-weight entries are dropped
    /// (an edge is present exactly when its weight is positive). Structural
    /// nonsense (bad indices, self-loops, negative or non-finite weights,
    /// duplicates) is rejected here; semantic violations such as influence
    /// onto a zealot are left for [`Network::validate`] to report.
    pub fn from_edges(
        n: usize,
        roles: Vec<NodeRole>,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self, NetworkError> {
        if roles.len() != n {
            return Err(NetworkError::RoleCountMismatch { roles: roles.len(), n });
        }
        let mut in_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(dst, src, w) in edges {
            if dst >= n {
                return Err(NetworkError::NodeOutOfRange { node: dst, n });
            }
            if src >= n {
                return Err(NetworkError::NodeOutOfRange { node: src, n });
            }
            if !w.is_finite() {
                return Err(NetworkError::NonFiniteWeight { dst, src });
            }
            if w < 0.0 {
                return Err(NetworkError::NegativeWeight { dst, src, weight: w });
            }
            if dst == src {
                return Err(NetworkError::SelfLoop { node: dst });
            }
            if w > 0.0 {
                in_edges[dst].push((src, w));
            }
        }
        let mut edge_count = 0;
        for (dst, row) in in_edges.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(src, _)| src);
            if row.windows(2).any(|p| p[0].0 == p[1].0) {
                let src = row
                    .windows(2)
                    .find(|p| p[0].0 == p[1].0)
                    .map(|p| p[0].0)
                    .unwrap();
                return Err(NetworkError::DuplicateEdge { dst, src });
            }
            edge_count += row.len();
        }
        let mut out_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (dst, row) in in_edges.iter().enumerate() {
            for &(src, w) in row {
                out_edges[src].push((dst, w));
            }
        }
        for row in &mut out_edges {
            row.sort_unstable_by_key(|&(dst, _)| dst);
        }
        let in_weight = in_edges
            .iter()
            .map(|row| row.iter().map(|&(_, w)| w).sum())
            .collect();
        let mut free = Vec::new();
        let mut free_slot = vec![None; n];
        for (i, role) in roles.iter().enumerate() {
            if *role == NodeRole::Free {
                free_slot[i] = Some(free.len());
                free.push(i);
            }
        }
        Ok(Network {
            n,
            roles,
            in_edges,
            out_edges,
            in_weight,
            free,
            free_slot,
            edge_count,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn role(&self, node: usize) -> NodeRole {
        self.roles[node]
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    pub fn is_free(&self, node: usize) -> bool {
        self.roles[node] == NodeRole::Free
    }

    /// Free node ids in ascending order.
    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    /// Dense index of a free node, if it is free.
    pub fn free_slot(&self, node: usize) -> Option<usize> {
        self.free_slot[node]
    }

    pub fn zealot_count(&self, role: NodeRole) -> usize {
        self.roles.iter().filter(|r| **r == role).count()
    }

    /// Incoming edges `(src, w)` of `node`, sorted by `src`.
    pub fn in_edges(&self, node: usize) -> &[(usize, f64)] {
        &self.in_edges[node]
    }

    /// Outgoing edges `(dst, w)` of `node`, sorted by `dst`.
    pub fn out_edges(&self, node: usize) -> &[(usize, f64)] {
        &self.out_edges[node]
    }

    /// In-degree `d_i`: total incoming weight of `node`.
    pub fn in_weight(&self, node: usize) -> f64 {
        self.in_weight[node]
    }

    /// Weight of the edge `src -> node`, or 0 when absent.
    pub fn weight(&self, node: usize, src: usize) -> f64 {
        match self.in_edges[node].binary_search_by_key(&src, |&(s, _)| s) {
            Ok(pos) => self.in_edges[node][pos].1,
            Err(_) => 0.0,
        }
    }

    /// Number of directed edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Iterates all directed edges as `(dst, src, w)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.in_edges
            .iter()
            .enumerate()
            .flat_map(|(dst, row)| row.iter().map(move |&(src, w)| (dst, src, w)))
    }

    /// Reports semantic violations: free nodes with no influence sources and
    /// influence directed at zealots. An empty report means the network is
    /// ready for the solvers and the simulator.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (node, role) in self.roles.iter().enumerate() {
            match role {
                NodeRole::Free => {
                    if self.in_edges[node].is_empty() {
                        violations.push(Violation::IsolatedFreeNode { node });
                    }
                }
                NodeRole::Zealot0 | NodeRole::Zealot1 => {
                    for &(src, _) in &self.in_edges[node] {
                        violations.push(Violation::ZealotReceivesInfluence { zealot: node, src });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// Aggregate 0-zealot and 1-zealot influence on each free node.
    pub fn zealot_influence(&self) -> Result<ZealotInfluence, NetworkError> {
        let report = self.validate();
        if !report.is_empty() {
            return Err(NetworkError::Invalid(report));
        }
        let mut z0 = vec![0.0; self.free.len()];
        let mut z1 = vec![0.0; self.free.len()];
        for (slot, &node) in self.free.iter().enumerate() {
            for &(src, w) in &self.in_edges[node] {
                match self.roles[src] {
                    NodeRole::Zealot0 => z0[slot] += w,
                    NodeRole::Zealot1 => z1[slot] += w,
                    NodeRole::Free => {}
                }
            }
        }
        Ok(ZealotInfluence { free_ids: self.free.clone(), z0, z1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roles(spec: &str) -> Vec<NodeRole> {
        spec.chars()
            .map(|c| match c {
                'f' => NodeRole::Free,
                '0' => NodeRole::Zealot0,
                '1' => NodeRole::Zealot1,
                _ => panic!("bad role char"),
            })
            .collect()
    }

    #[test]
    fn rejects_self_loop() {
        let err = Network::from_edges(2, roles("ff"), &[(0, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, NetworkError::SelfLoop { node: 0 }));
    }

    #[test]
    fn rejects_negative_weight() {
        let err = Network::from_edges(2, roles("ff"), &[(0, 1, -0.5)]).unwrap_err();
        assert!(matches!(err, NetworkError::NegativeWeight { .. }));
    }

    #[test]
    fn rejects_duplicate_edge() {
        let err = Network::from_edges(2, roles("ff"), &[(0, 1, 1.0), (0, 1, 2.0)]).unwrap_err();
        assert!(matches!(err, NetworkError::DuplicateEdge { dst: 0, src: 1 }));
    }

    #[test]
    fn drops_zero_weight_edges() {
        let net = Network::from_edges(2, roles("f0"), &[(0, 1, 0.0)]).unwrap();
        assert_eq!(net.edge_count(), 0);
        assert_eq!(net.weight(0, 1), 0.0);
    }

    #[test]
    fn validate_reports_isolated_free_node() {
        let net = Network::from_edges(2, roles("ff"), &[(1, 0, 1.0)]).unwrap();
        let report = net.validate();
        assert_eq!(report.violations, vec![Violation::IsolatedFreeNode { node: 0 }]);
    }

    #[test]
    fn validate_reports_influence_on_zealot() {
        let net = Network::from_edges(2, roles("f0"), &[(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        let report = net.validate();
        assert_eq!(
            report.violations,
            vec![Violation::ZealotReceivesInfluence { zealot: 1, src: 0 }]
        );
    }

    #[test]
    fn validate_accepts_complete_graph() {
        let net = complete(4, 1, 1).unwrap();
        assert!(net.validate().is_empty());
    }

    #[test]
    fn zealot_influence_sums_by_role() {
        // Free node 0 hears a 0-zealot with weight 1 and a 1-zealot with weight 3.
        let net = Network::from_edges(3, roles("f01"), &[(0, 1, 1.0), (0, 2, 3.0)]).unwrap();
        let inf = net.zealot_influence().unwrap();
        assert_eq!(inf.free_ids, vec![0]);
        assert_eq!(inf.z0, vec![1.0]);
        assert_eq!(inf.z1, vec![3.0]);
        assert_eq!(net.in_weight(0), 4.0);
    }

    #[test]
    fn zealot_influence_requires_valid_network() {
        let net = Network::from_edges(2, roles("ff"), &[(1, 0, 1.0)]).unwrap();
        assert!(matches!(net.zealot_influence(), Err(NetworkError::Invalid(_))));
    }

    #[test]
    fn edge_lookup_and_iteration_agree() {
        let net =
            Network::from_edges(3, roles("ff0"), &[(0, 1, 0.5), (0, 2, 1.5), (1, 0, 2.0)]).unwrap();
        assert_eq!(net.weight(0, 2), 1.5);
        assert_eq!(net.weight(2, 0), 0.0);
        let collected: Vec<_> = net.edges().collect();
        assert_eq!(collected, vec![(0, 1, 0.5), (0, 2, 1.5), (1, 0, 2.0)]);
        assert_eq!(net.out_edges(0), &[(1, 2.0)]);
        assert_eq!(net.in_weight(0), 2.0);
    }
}
