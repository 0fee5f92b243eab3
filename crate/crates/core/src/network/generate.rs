//! Seeded network generators. A fixed seed reproduces the network exactly:
//! role placement and weight draws consume one deterministic RNG stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::{Network, NetworkError, NodeRole};

/// Distribution of edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightLaw {
    /// Uniform on [0, 1).
    Uniform01,
    /// Exponential with mean 1.
    ExponentialMean1,
    /// Constant 1 (unweighted).
    ConstantOne,
}

impl WeightLaw {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            WeightLaw::Uniform01 => rng.random::<f64>(),
            WeightLaw::ExponentialMean1 => Exp::new(1.0).unwrap().sample(rng),
            WeightLaw::ConstantOne => 1.0,
        }
    }
}

fn check_counts(n: usize, z0_count: usize, z1_count: usize) -> Result<(), NetworkError> {
    if z0_count + z1_count > n {
        return Err(NetworkError::BadParameters(format!(
            "zealot counts {z0_count}+{z1_count} exceed {n} nodes"
        )));
    }
    // A lone free node can never acquire an influence source.
    if z0_count + z1_count < n && n < 2 {
        return Err(NetworkError::BadParameters(
            "a network with free nodes needs at least 2 nodes".into(),
        ));
    }
    Ok(())
}

/// Draws `z0_count + z1_count` distinct zealot positions uniformly at random.
fn place_zealots(n: usize, z0_count: usize, z1_count: usize, rng: &mut ChaCha8Rng) -> Vec<NodeRole> {
    let mut roles = vec![NodeRole::Free; n];
    let picks = rand::seq::index::sample(rng, n, z0_count + z1_count);
    for (k, node) in picks.into_iter().enumerate() {
        roles[node] = if k < z0_count { NodeRole::Zealot0 } else { NodeRole::Zealot1 };
    }
    roles
}

/// Directed Erdos-Renyi network: every admissible ordered pair `(i, j)` with
/// `i` free and `j != i` carries an edge `j -> i` with probability `density`,
/// weighted by `law`. Free rows that come out empty are redrawn, which
/// conditions each row on having at least one influence source.
pub fn erdos_renyi(
    n: usize,
    density: f64,
    z0_count: usize,
    z1_count: usize,
    law: WeightLaw,
    seed: u64,
) -> Result<Network, NetworkError> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(NetworkError::BadParameters(format!(
            "density must lie in (0, 1], got {density}"
        )));
    }
    check_counts(n, z0_count, z1_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let roles = place_zealots(n, z0_count, z1_count, &mut rng);
    let mut edges = Vec::new();
    for i in 0..n {
        if roles[i] != NodeRole::Free {
            continue;
        }
        let start = edges.len();
        loop {
            for j in 0..n {
                if j == i {
                    continue;
                }
                if rng.random::<f64>() < density {
                    edges.push((i, j, law.sample(&mut rng)));
                }
            }
            if edges.len() > start {
                break;
            }
        }
    }
    Network::from_edges(n, roles, &edges)
}

/// Barabasi-Albert skeleton realized as a directed network. The undirected
/// skeleton starts from a clique on the first `m` nodes; each later node
/// attaches to `m` distinct targets chosen proportionally to degree. Every
/// undirected edge becomes two directed edges with independent weights, and
/// directions into zealots are dropped.
pub fn barabasi_albert(
    n: usize,
    m: usize,
    z0_count: usize,
    z1_count: usize,
    law: WeightLaw,
    seed: u64,
) -> Result<Network, NetworkError> {
    if m == 0 || m >= n {
        return Err(NetworkError::BadParameters(format!(
            "attachment count m={m} must satisfy 1 <= m < n={n}"
        )));
    }
    check_counts(n, z0_count, z1_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let roles = place_zealots(n, z0_count, z1_count, &mut rng);

    let mut skeleton: Vec<(usize, usize)> = Vec::new();
    // One entry per edge endpoint; sampling an entry uniformly is sampling a
    // node proportionally to its degree.
    let mut endpoints: Vec<usize> = Vec::new();
    for u in 0..m {
        for v in (u + 1)..m {
            skeleton.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    for u in m..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m {
            let t = if endpoints.is_empty() {
                rng.random_range(0..u)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            skeleton.push((u, t));
            endpoints.push(u);
            endpoints.push(t);
        }
    }

    let mut edges = Vec::new();
    for &(u, v) in &skeleton {
        if roles[u] == NodeRole::Free {
            edges.push((u, v, law.sample(&mut rng)));
        }
        if roles[v] == NodeRole::Free {
            edges.push((v, u, law.sample(&mut rng)));
        }
    }
    Network::from_edges(n, roles, &edges)
}

/// Complete unweighted network: every node influences every free node with
/// weight 1. Roles are assigned deterministically: nodes `0..z0_count` are
/// 0-zealots, the next `z1_count` are 1-zealots, the rest are free.
pub fn complete(n: usize, z0_count: usize, z1_count: usize) -> Result<Network, NetworkError> {
    check_counts(n, z0_count, z1_count)?;
    let mut roles = vec![NodeRole::Free; n];
    for node in 0..z0_count {
        roles[node] = NodeRole::Zealot0;
    }
    for node in z0_count..z0_count + z1_count {
        roles[node] = NodeRole::Zealot1;
    }
    let mut edges = Vec::new();
    for i in 0..n {
        if roles[i] != NodeRole::Free {
            continue;
        }
        for j in 0..n {
            if j != i {
                edges.push((i, j, 1.0));
            }
        }
    }
    Network::from_edges(n, roles, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_has_full_in_rows() {
        let net = complete(4, 1, 1).unwrap();
        assert_eq!(net.free_count(), 2);
        for &i in net.free_nodes() {
            assert_eq!(net.in_edges(i).len(), 3);
            assert_eq!(net.in_weight(i), 3.0);
        }
        assert!(net.validate().is_empty());
    }

    #[test]
    fn complete_with_no_free_nodes_has_no_edges() {
        let net = complete(3, 3, 0).unwrap();
        assert_eq!(net.edge_count(), 0);
        assert!(net.validate().is_empty());
    }

    #[test]
    fn erdos_renyi_is_deterministic_in_seed() {
        let a = erdos_renyi(30, 0.2, 4, 3, WeightLaw::Uniform01, 99).unwrap();
        let b = erdos_renyi(30, 0.2, 4, 3, WeightLaw::Uniform01, 99).unwrap();
        assert_eq!(a.roles(), b.roles());
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
    }

    #[test]
    fn erdos_renyi_with_unit_density_and_constant_law_is_complete() {
        let net = erdos_renyi(10, 1.0, 2, 2, WeightLaw::ConstantOne, 5).unwrap();
        for &i in net.free_nodes() {
            assert_eq!(net.in_edges(i).len(), 9);
            assert!(net.in_edges(i).iter().all(|&(_, w)| w == 1.0));
        }
    }

    #[test]
    fn erdos_renyi_generates_valid_networks_even_at_low_density() {
        for seed in 0..20 {
            let net = erdos_renyi(12, 0.05, 2, 2, WeightLaw::Uniform01, seed).unwrap();
            assert!(net.validate().is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn erdos_renyi_edge_count_concentrates() {
        // Admissible pairs: one per (free i, j != i). With conditioning on
        // nonempty rows the count stays within 5 sigma of the binomial mean.
        let n = 100;
        let density = 0.1;
        let net = erdos_renyi(n, density, 12, 9, WeightLaw::Uniform01, 4242).unwrap();
        let admissible = (net.free_count() * (n - 1)) as f64;
        let mean = admissible * density;
        let sd = (admissible * density * (1.0 - density)).sqrt();
        let count = net.edge_count() as f64;
        assert!((count - mean).abs() < 5.0 * sd, "count {count} vs mean {mean}");
    }

    #[test]
    fn erdos_renyi_rejects_bad_density() {
        assert!(erdos_renyi(5, 0.0, 1, 1, WeightLaw::Uniform01, 1).is_err());
        assert!(erdos_renyi(5, 1.5, 1, 1, WeightLaw::Uniform01, 1).is_err());
    }

    #[test]
    fn barabasi_albert_skeleton_density_near_tenth() {
        // Clique on m nodes plus m edges per later node: 10 + 95*5 = 485
        // undirected edges, 970 directed, out of 9900 ordered pairs.
        let net = barabasi_albert(100, 5, 0, 0, WeightLaw::ConstantOne, 7).unwrap();
        assert_eq!(net.edge_count(), 970);
        let density = net.edge_count() as f64 / (100.0 * 99.0);
        assert!((density - 0.098).abs() < 1e-3, "density {density}");
    }

    #[test]
    fn barabasi_albert_drops_zealot_directions() {
        let net = barabasi_albert(50, 3, 5, 5, WeightLaw::ExponentialMean1, 11).unwrap();
        assert!(net.validate().is_empty());
        for node in 0..50 {
            if !net.is_free(node) {
                assert!(net.in_edges(node).is_empty());
            }
        }
    }

    #[test]
    fn barabasi_albert_is_deterministic_in_seed() {
        let a = barabasi_albert(40, 2, 3, 3, WeightLaw::Uniform01, 123).unwrap();
        let b = barabasi_albert(40, 2, 3, 3, WeightLaw::Uniform01, 123).unwrap();
        assert_eq!(a.roles(), b.roles());
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
    }

    #[test]
    fn barabasi_albert_rejects_bad_m() {
        assert!(barabasi_albert(10, 0, 1, 1, WeightLaw::Uniform01, 1).is_err());
        assert!(barabasi_albert(10, 10, 1, 1, WeightLaw::Uniform01, 1).is_err());
    }

    #[test]
    fn zealot_placement_is_uniform_without_replacement() {
        let net = erdos_renyi(20, 0.5, 6, 4, WeightLaw::ConstantOne, 3).unwrap();
        assert_eq!(net.zealot_count(NodeRole::Zealot0), 6);
        assert_eq!(net.zealot_count(NodeRole::Zealot1), 4);
    }
}
