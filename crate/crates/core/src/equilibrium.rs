//! Equilibrium solvers for the voter model with zealots.
//!
//! `solve_opinions` computes the expected equilibrium opinion of every free
//! node: free node `i` updates at unit rate and adopts opinion 1 with
//! probability `d_i^{-1} sum_j w_ij x_j`, so the expectations satisfy
//!
//! ```text
//! d_i x_i - sum_{j free} w_ij x_j = z1_i
//! ```
//!
//! `solve_activation` computes the equilibrium probability `q_ij` that the
//! endpoints of an edge disagree. For free pairs these satisfy the linear
//! system
//!
//! ```text
//! q_ij (d_i + d_j) - sum_{k free, k != i,j} (w_ik q_jk + w_jk q_ik)
//!     = (z0_j - z1_j) x_i + (z0_i - z1_i) x_j + z1_i + z1_j
//! ```
//!
//! while a free-zealot pair has the closed form `q_ij = x_i` (0-zealot) or
//! `1 - x_i` (1-zealot). Aggregating `q` over directed edges with at least
//! one free endpoint gives the active-link density `rho` and its weighted
//! variant `rho_w`.

use thiserror::Error;

use crate::linsolve::{LinSolveError, SparseSystem};
use crate::network::{Network, NodeRole, ValidationReport};

/// Keep dense factorizations for systems the size of the opinion system on a
/// few hundred free nodes, or the pair system on ~70 free nodes.
const DENSE_OPINIONS: usize = 300;
const DENSE_PAIRS: usize = 2500;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Max-norm residual the solution must reach, relative to the right-hand
    /// side scale.
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-10 }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("network is empty")]
    EmptyNetwork,
    #[error("invalid network: {0}")]
    InvalidNetwork(ValidationReport),
    #[error("free nodes {nodes:?} form a component with no zealot influence; the equilibrium is not unique")]
    NoZealotInfluence { nodes: Vec<usize> },
    #[error("linear solve failed: {0}")]
    LinSolve(#[from] LinSolveError),
    #[error("node {node} is not free")]
    NotFree { node: usize },
    #[error("{0}")]
    BadParameters(String),
}

/// Equilibrium expected opinions.
#[derive(Debug, Clone)]
pub struct OpinionEquilibrium {
    free_ids: Vec<usize>,
    x_free: Vec<f64>,
    /// Mean over free nodes (0 when there are none).
    pub x_bar_free: f64,
    /// Mean over the whole population, zealots included.
    pub x_bar: f64,
    /// Opinion diversity `4 x_bar (1 - x_bar)`.
    pub sigma: f64,
}

impl OpinionEquilibrium {
    pub fn free_ids(&self) -> &[usize] {
        &self.free_ids
    }

    /// Equilibrium opinions of free nodes, in free-slot order.
    pub fn x_free(&self) -> &[f64] {
        &self.x_free
    }

    /// Expected equilibrium opinion of any node: pinned for zealots.
    pub fn x_star(&self, net: &Network, node: usize) -> f64 {
        match net.role(node) {
            NodeRole::Free => self.x_free[net.free_slot(node).unwrap()],
            NodeRole::Zealot0 => 0.0,
            NodeRole::Zealot1 => 1.0,
        }
    }
}

/// Equilibrium disagreement probabilities and active-link densities.
#[derive(Debug, Clone)]
pub struct ActivationEquilibrium {
    /// Opinion equilibrium the pair system was built on.
    pub opinions: OpinionEquilibrium,
    /// `q` for unordered free pairs, triangular layout over free slots.
    q_free: Vec<f64>,
    /// Mean of `q` over directed edges (every edge has a free destination).
    pub rho: f64,
    /// Weight-weighted mean of `q` over directed edges.
    pub rho_w: f64,
    /// Sum of `q` over directed edges divided by `n (n - 1)`: the all-pairs
    /// normalization used by the complete-graph closed form.
    pub rho_pairs: f64,
}

fn pair_index(a: usize, b: usize) -> usize {
    debug_assert!(a < b);
    b * (b - 1) / 2 + a
}

impl ActivationEquilibrium {
    /// Disagreement probability for a pair of distinct nodes, at least one
    /// free. Zealot-zealot pairs have no dynamics and return `None`.
    pub fn q(&self, net: &Network, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return None;
        }
        match (net.free_slot(i), net.free_slot(j)) {
            (Some(a), Some(b)) => {
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                Some(self.q_free[pair_index(a, b)])
            }
            (Some(_), None) => {
                let x = self.opinions.x_star(net, i);
                match net.role(j) {
                    NodeRole::Zealot0 => Some(x),
                    NodeRole::Zealot1 => Some(1.0 - x),
                    NodeRole::Free => unreachable!(),
                }
            }
            (None, Some(_)) => self.q(net, j, i),
            (None, None) => None,
        }
    }
}

fn require_nonempty_valid(net: &Network) -> Result<(), SolveError> {
    if net.n() == 0 {
        return Err(SolveError::EmptyNetwork);
    }
    let report = net.validate();
    if !report.is_empty() {
        return Err(SolveError::InvalidNetwork(report));
    }
    Ok(())
}

/// Free nodes not reachable from zealot influence make the opinion system
/// singular (their subsystem is a Laplacian with zero row sums). Influence is
/// anchored at nodes with direct zealot in-weight and propagates along edges.
fn unanchored_free_nodes(net: &Network, z0: &[f64], z1: &[f64]) -> Vec<usize> {
    let free = net.free_nodes();
    let mut anchored = vec![false; free.len()];
    let mut queue: Vec<usize> = Vec::new();
    for slot in 0..free.len() {
        if z0[slot] + z1[slot] > 0.0 {
            anchored[slot] = true;
            queue.push(slot);
        }
    }
    while let Some(slot) = queue.pop() {
        let node = free[slot];
        for &(dst, _) in net.out_edges(node) {
            if let Some(dslot) = net.free_slot(dst) {
                if !anchored[dslot] {
                    anchored[dslot] = true;
                    queue.push(dslot);
                }
            }
        }
    }
    free.iter()
        .zip(&anchored)
        .filter(|(_, ok)| !**ok)
        .map(|(&node, _)| node)
        .collect()
}

pub fn solve_opinions(net: &Network) -> Result<OpinionEquilibrium, SolveError> {
    solve_opinions_with(net, &SolverOptions::default())
}

pub fn solve_opinions_with(
    net: &Network,
    opts: &SolverOptions,
) -> Result<OpinionEquilibrium, SolveError> {
    require_nonempty_valid(net)?;
    let influence = net.zealot_influence().expect("validated above");
    let free = net.free_nodes();
    let z1_nodes = net.zealot_count(NodeRole::Zealot1) as f64;
    if free.is_empty() {
        let x_bar = z1_nodes / net.n() as f64;
        return Ok(OpinionEquilibrium {
            free_ids: Vec::new(),
            x_free: Vec::new(),
            x_bar_free: 0.0,
            x_bar,
            sigma: 4.0 * x_bar * (1.0 - x_bar),
        });
    }

    let unanchored = unanchored_free_nodes(net, &influence.z0, &influence.z1);
    if !unanchored.is_empty() {
        return Err(SolveError::NoZealotInfluence { nodes: unanchored });
    }

    let mut off: Vec<Vec<(usize, f64)>> = vec![Vec::new(); free.len()];
    let mut diag = vec![0.0; free.len()];
    for (slot, &node) in free.iter().enumerate() {
        diag[slot] = net.in_weight(node);
        for &(src, w) in net.in_edges(node) {
            if let Some(sslot) = net.free_slot(src) {
                off[slot].push((sslot, -w));
            }
        }
    }
    let sys = SparseSystem { diag, off, rhs: influence.z1.clone() };
    let mut x = sys.solve(opts.tolerance, DENSE_OPINIONS)?;
    for v in &mut x {
        debug_assert!(*v > -1e-8 && *v < 1.0 + 1e-8);
        *v = v.clamp(0.0, 1.0);
    }

    let f = free.len() as f64;
    let x_bar_free = x.iter().sum::<f64>() / f;
    let x_bar = (f * x_bar_free + z1_nodes) / net.n() as f64;
    Ok(OpinionEquilibrium {
        free_ids: free.to_vec(),
        x_free: x,
        x_bar_free,
        x_bar,
        sigma: 4.0 * x_bar * (1.0 - x_bar),
    })
}

pub fn solve_activation(net: &Network) -> Result<ActivationEquilibrium, SolveError> {
    solve_activation_with(net, &SolverOptions::default())
}

pub fn solve_activation_with(
    net: &Network,
    opts: &SolverOptions,
) -> Result<ActivationEquilibrium, SolveError> {
    let opinions = solve_opinions_with(net, opts)?;
    let influence = net.zealot_influence().expect("validated in solve_opinions");
    let free = net.free_nodes();
    let f = free.len();
    let x = opinions.x_free();

    let pairs = f * (f - 1) / 2;
    let mut q_free = vec![0.0; pairs];
    if pairs > 0 {
        let mut diag = vec![0.0; pairs];
        let mut off: Vec<Vec<(usize, f64)>> = vec![Vec::new(); pairs];
        let mut rhs = vec![0.0; pairs];
        for b in 1..f {
            for a in 0..b {
                let p = pair_index(a, b);
                let (i, j) = (free[a], free[b]);
                diag[p] = net.in_weight(i) + net.in_weight(j);
                rhs[p] = (influence.z0[b] - influence.z1[b]) * x[a]
                    + (influence.z0[a] - influence.z1[a]) * x[b]
                    + influence.z1[a]
                    + influence.z1[b];
                for &(src, w) in net.in_edges(i) {
                    if let Some(k) = net.free_slot(src) {
                        if k != b {
                            let (lo, hi) = if k < b { (k, b) } else { (b, k) };
                            off[p].push((pair_index(lo, hi), -w));
                        }
                    }
                }
                for &(src, w) in net.in_edges(j) {
                    if let Some(k) = net.free_slot(src) {
                        if k != a {
                            let (lo, hi) = if k < a { (k, a) } else { (a, k) };
                            off[p].push((pair_index(lo, hi), -w));
                        }
                    }
                }
            }
        }
        let sys = SparseSystem { diag, off, rhs };
        q_free = sys.solve(opts.tolerance, DENSE_PAIRS)?;
        for v in &mut q_free {
            debug_assert!(*v > -1e-8 && *v < 1.0 + 1e-8);
            *v = v.clamp(0.0, 1.0);
        }
    }

    // Every directed edge has a free destination, so the counted edge set is
    // the whole edge list: free-free pairs enter once per direction, a
    // free-zealot pair once (the direction into the free node).
    let mut q_sum = 0.0;
    let mut wq_sum = 0.0;
    let mut w_sum = 0.0;
    for (dst, src, w) in net.edges() {
        let a = net.free_slot(dst).expect("edges into zealots rejected by validation");
        let q = match net.free_slot(src) {
            Some(b) => {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                q_free[pair_index(lo, hi)]
            }
            None => match net.role(src) {
                NodeRole::Zealot0 => x[a],
                NodeRole::Zealot1 => 1.0 - x[a],
                NodeRole::Free => unreachable!(),
            },
        };
        q_sum += q;
        wq_sum += w * q;
        w_sum += w;
    }
    let edges = net.edge_count();
    let rho = if edges > 0 { q_sum / edges as f64 } else { 0.0 };
    let rho_w = if w_sum > 0.0 { wq_sum / w_sum } else { 0.0 };
    let n = net.n() as f64;
    let rho_pairs = if net.n() > 1 { q_sum / (n * (n - 1.0)) } else { 0.0 };

    Ok(ActivationEquilibrium { opinions, q_free, rho, rho_w, rho_pairs })
}

/// Rate at which free node `i` comes to agree with `j` (`lambda`) and to
/// disagree with `j` (`mu`), given the equilibrium opinions and disagreement
/// probabilities. Node `i` updates at unit rate; each term is the probability
/// that the update aligns or misaligns the pair.
pub fn transition_rates(
    net: &Network,
    act: &ActivationEquilibrium,
    i: usize,
    j: usize,
) -> Result<(f64, f64), SolveError> {
    if !net.is_free(i) {
        return Err(SolveError::NotFree { node: i });
    }
    if i == j || j >= net.n() {
        return Err(SolveError::BadParameters(format!("invalid pair ({i}, {j})")));
    }
    let d = net.in_weight(i);
    let x_j = act.opinions.x_star(net, j);
    let mut z0_i = 0.0;
    let mut z1_i = 0.0;
    let mut align = 0.0;
    let mut misalign = 0.0;
    for &(src, w) in net.in_edges(i) {
        match net.role(src) {
            NodeRole::Free => {
                if src != j {
                    let q_js = act.q(net, j, src).expect("src is free");
                    align += w * (1.0 - q_js);
                    misalign += w * q_js;
                }
            }
            NodeRole::Zealot0 => z0_i += w,
            NodeRole::Zealot1 => z1_i += w,
        }
    }
    // Copying j directly always aligns; for a zealot j that event is already
    // part of the zealot-influence terms below.
    if net.is_free(j) {
        align += net.weight(i, j);
    }
    let lambda = (align + z1_i * x_j + z0_i * (1.0 - x_j)) / d;
    let mu = (misalign + z1_i * (1.0 - x_j) + z0_i * x_j) / d;
    Ok((lambda, mu))
}

/// Reconstructs `q_ij` from the transition rates of the two-state
/// (agree/disagree) chain. Each endpoint's clock contributes proportionally
/// to its in-degree, matching the pair system's aggregation; zealots carry no
/// clock. Agrees with the solver's `q` up to solver tolerance.
pub fn two_state_q(
    net: &Network,
    act: &ActivationEquilibrium,
    i: usize,
    j: usize,
) -> Result<f64, SolveError> {
    if i == j || i >= net.n() || j >= net.n() {
        return Err(SolveError::BadParameters(format!("invalid pair ({i}, {j})")));
    }
    if !net.is_free(i) && !net.is_free(j) {
        return Err(SolveError::BadParameters(format!(
            "pair ({i}, {j}) has no free endpoint"
        )));
    }
    let mut to_disagree = 0.0;
    let mut total = 0.0;
    for (u, v) in [(i, j), (j, i)] {
        if net.is_free(u) {
            let (lambda, mu) = transition_rates(net, act, u, v)?;
            let d = net.in_weight(u);
            to_disagree += d * mu;
            total += d * (lambda + mu);
        }
    }
    Ok(to_disagree / total)
}

/// Opinion diversity on the complete unweighted network: `4 z0 z1 / (z0+z1)^2`.
pub fn sigma_complete(z0: f64, z1: f64) -> Result<f64, SolveError> {
    if !(z0 >= 0.0) || !(z1 >= 0.0) {
        return Err(SolveError::BadParameters("zealot counts must be nonnegative".into()));
    }
    let s = z0 + z1;
    if s == 0.0 {
        return Err(SolveError::BadParameters(
            "diversity needs at least one zealot".into(),
        ));
    }
    Ok(4.0 * z0 * z1 / (s * s))
}

/// Active-link density on the complete unweighted network with `n` users,
/// normalized by all `n (n-1)` ordered pairs:
/// `2 z0 z1 (n - z0 - z1) / ((n-1)(z0+z1)(z0+z1+1))`.
pub fn rho_complete(n: f64, z0: f64, z1: f64) -> Result<f64, SolveError> {
    if !(z0 >= 0.0) || !(z1 >= 0.0) {
        return Err(SolveError::BadParameters("zealot counts must be nonnegative".into()));
    }
    let s = z0 + z1;
    if s == 0.0 {
        return Err(SolveError::BadParameters(
            "active-link density needs at least one zealot".into(),
        ));
    }
    if !(n > 1.0) || s > n {
        return Err(SolveError::BadParameters(format!(
            "population {n} must exceed 1 and hold {s} zealots"
        )));
    }
    Ok(2.0 * z0 * z1 * (n - s) / ((n - 1.0) * s * (s + 1.0)))
}
