//! Zealot-placement optimizers with a backfire effect.
//!
//! Planting `z1` committed 1-nodes provokes `alpha * z1` committed 0-nodes
//! in response, so a size-`n` complete graph ends up with `z0 + alpha*z1`
//! zealots of opinion 0, `z1` zealots of opinion 1 and
//! `n - z0 - (1+alpha)*z1` free nodes. The budget is exhausted at
//! `z1_max = (n - z0) / (1 + alpha)`.
//!
//! Three complete-graph problems have closed-form or near-closed-form
//! solutions (target mean opinion, maximum opinion diversity, maximum pair
//! activity). General networks are handled by projected gradient descent on
//! per-node influence weights of added 1-zealots.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::equilibrium::{rho_complete, solve_opinions, SolveError};
use crate::network::Network;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("target is unattainable: reachable mean opinions are [{lo}, {hi})")]
    Unattainable { lo: f64, hi: f64 },
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Complete-graph intervention parameters. Counts are continuous so that
/// optima can sit between integers; `z1_star_rounded` restores integrality.
#[derive(Debug, Clone, Copy)]
pub struct BackfireSpec {
    pub n: f64,
    pub z0: f64,
    pub alpha: f64,
}

impl BackfireSpec {
    pub fn new(n: f64, z0: f64, alpha: f64) -> Result<Self, OptimizeError> {
        if !(n.is_finite() && z0.is_finite() && alpha.is_finite()) {
            return Err(OptimizeError::BadParameters("non-finite parameter".into()));
        }
        if n < 2.0 {
            return Err(OptimizeError::BadParameters(format!("need n >= 2, got {n}")));
        }
        if !(0.0..=1.0).contains(&(z0 / n)) {
            return Err(OptimizeError::BadParameters(format!(
                "z0 must lie in [0, n], got z0 = {z0} with n = {n}"
            )));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(OptimizeError::BadParameters(format!(
                "alpha must lie in [0, 1), got {alpha}"
            )));
        }
        Ok(BackfireSpec { n, z0, alpha })
    }

    /// Largest feasible number of planted 1-zealots.
    pub fn z1_max(&self) -> f64 {
        (self.n - self.z0) / (1.0 + self.alpha)
    }

    /// Total zealot mass after planting `z1`.
    fn s(&self, z1: f64) -> f64 {
        self.z0 + (1.0 + self.alpha) * z1
    }

    /// Equilibrium mean opinion after planting `z1`. On the complete graph
    /// the free-node and population means coincide. With no zealots at all
    /// the dynamics absorb at consensus; 0 is reported by convention.
    pub fn x_bar(&self, z1: f64) -> f64 {
        let s = self.s(z1);
        if s == 0.0 {
            0.0
        } else {
            z1 / s
        }
    }

    /// Opinion diversity `4 x (1 - x)` after planting `z1`.
    pub fn sigma(&self, z1: f64) -> f64 {
        let x = self.x_bar(z1);
        4.0 * x * (1.0 - x)
    }

    /// Stationary disagreement probability of a free pair after planting
    /// `z1`: `2 (z0 + alpha z1) z1 / (s (s + 1))`. The network-level active
    /// edge density is this probability scaled by `free / (n - 1)`.
    pub fn activity(&self, z1: f64) -> f64 {
        let s = self.s(z1);
        if s == 0.0 {
            0.0
        } else {
            2.0 * (self.z0 + self.alpha * z1) * z1 / (s * (s + 1.0))
        }
    }

    fn post(&self, z1: f64) -> PostIntervention {
        let x_bar = self.x_bar(z1);
        // The committed total is rebuilt exactly as the density formula sees
        // it: a saturated budget can overshoot n by a rounding ulp, and the
        // clamped composition has no free nodes, hence no active edges.
        let z0_post = self.z0 + self.alpha * z1;
        let total = z0_post + z1;
        let free = (self.n - total).max(0.0);
        let rho = if total == 0.0 || free == 0.0 {
            0.0
        } else {
            rho_complete(self.n, z0_post, z1).expect("feasible composition")
        };
        PostIntervention {
            z0: z0_post,
            z1,
            free,
            x_bar,
            sigma: 4.0 * x_bar * (1.0 - x_bar),
            rho,
        }
    }
}

/// Network composition and equilibrium statistics after an intervention.
#[derive(Debug, Clone, Copy)]
pub struct PostIntervention {
    /// Committed 0-nodes including the backfire response.
    pub z0: f64,
    pub z1: f64,
    pub free: f64,
    pub x_bar: f64,
    pub sigma: f64,
    /// Equilibrium active edge density of the complete graph.
    pub rho: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizationResult {
    /// Continuous optimizer of the problem.
    pub z1_star: f64,
    /// Best feasible integer near `z1_star` (floor or ceiling, judged by the
    /// problem's own objective; ties go to the smaller count).
    pub z1_star_rounded: u64,
    pub objective_at_star: f64,
    /// Statistics at the continuous optimizer.
    pub post_intervention: PostIntervention,
}

/// Picks the better of floor/ceiling of `z1_star`, both clipped to the
/// feasible integer range.
fn round_candidate(
    z1_star: f64,
    z1_max: f64,
    better: impl Fn(f64, f64) -> bool,
) -> u64 {
    let cap = z1_max.floor().max(0.0);
    let lo = z1_star.floor().clamp(0.0, cap);
    let hi = z1_star.ceil().clamp(0.0, cap);
    if hi > lo && better(hi, lo) {
        hi as u64
    } else {
        lo as u64
    }
}

/// Finds the planting budget whose equilibrium mean opinion is closest to
/// `lambda`.
///
/// The mean `z1 / (z0 + (1+alpha) z1)` increases in `z1`, so the target is
/// met exactly at `lambda z0 / (1 - (1+alpha) lambda)` when that is feasible
/// and the attainability boundary otherwise. Ties in the rounding step go to
/// the smaller count.
pub fn solve_p1_target(spec: &BackfireSpec, lambda: f64) -> Result<OptimizationResult, OptimizeError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(OptimizeError::BadParameters(format!(
            "target mean opinion must lie in [0, 1], got {lambda}"
        )));
    }
    let z1_max = spec.z1_max();
    let z1_star = if spec.z0 == 0.0 {
        // Any positive budget yields the constant mean 1/(1+alpha); an empty
        // one yields the consensus convention 0.
        let with_budget = (1.0 / (1.0 + spec.alpha) - lambda).abs();
        if z1_max > 0.0 && with_budget < lambda {
            z1_max
        } else {
            0.0
        }
    } else {
        // Written as (1 - lambda) - lambda alpha so that at lambda = 1/2 the
        // candidate is bit-for-bit the diversity optimum z0 / (1 - alpha):
        // the halves scale out of the division exactly.
        let d = (1.0 - lambda) - lambda * spec.alpha;
        if d > 0.0 {
            (lambda * spec.z0 / d).min(z1_max)
        } else {
            z1_max
        }
    };
    let miss = |z1: f64| (spec.x_bar(z1) - lambda).abs();
    Ok(OptimizationResult {
        z1_star,
        z1_star_rounded: round_candidate(z1_star, z1_max, |a, b| miss(a) < miss(b)),
        objective_at_star: miss(z1_star),
        post_intervention: spec.post(z1_star),
    })
}

/// Maximizes the opinion diversity `sigma = 4 x (1 - x)` over the planting
/// budget.
///
/// Diversity peaks where the two zealot masses balance, `z1 = z0/(1-alpha)`,
/// reaching `sigma = 1` exactly; when the budget binds first the mean stays
/// below one half and the saturated budget is optimal.
pub fn solve_p2_diversity_complete(spec: &BackfireSpec) -> Result<OptimizationResult, OptimizeError> {
    let z1_max = spec.z1_max();
    let z1_star = if spec.z0 == 0.0 {
        // sigma is the constant 4 alpha / (1+alpha)^2 for any positive
        // budget; it vanishes (consensus) for an empty one.
        if spec.alpha > 0.0 && z1_max > 0.0 {
            z1_max
        } else {
            0.0
        }
    } else {
        (spec.z0 / (1.0 - spec.alpha)).min(z1_max)
    };
    Ok(OptimizationResult {
        z1_star,
        z1_star_rounded: round_candidate(z1_star, z1_max, |a, b| spec.sigma(a) > spec.sigma(b)),
        objective_at_star: spec.sigma(z1_star),
        post_intervention: spec.post(z1_star),
    })
}

/// Maximizes the free-pair activity [`BackfireSpec::activity`] over the
/// planting budget.
///
/// The derivative's sign is a quadratic in `z1`,
/// `2(1+alpha)(alpha(z0+1) - z0) z1^2 + 4 alpha z0 (z0+1) z1 + 2 z0^2 (z0+1)`,
/// so the objective either increases over the whole budget (saturate) or
/// rises to the quadratic's unique positive root and falls after it.
pub fn solve_p3_active_complete(spec: &BackfireSpec) -> Result<OptimizationResult, OptimizeError> {
    let z1_max = spec.z1_max();
    let (n0, a) = (spec.z0, spec.alpha);
    let z1_star = if n0 == 0.0 {
        // activity = 2 alpha z1 / ((1+alpha)(s+1)): increasing, so saturate.
        if a > 0.0 && z1_max > 0.0 {
            z1_max
        } else {
            0.0
        }
    } else {
        let a2 = 2.0 * (1.0 + a) * (a * (n0 + 1.0) - n0);
        let a1 = 4.0 * a * n0 * (n0 + 1.0);
        let a0 = 2.0 * n0 * n0 * (n0 + 1.0);
        if a2 >= 0.0 {
            // All derivative coefficients are nonnegative: monotone rise.
            z1_max
        } else {
            // Downward parabola with positive value at 0: one positive root,
            // and both formula terms are negative so no cancellation.
            let disc = a1 * a1 - 4.0 * a2 * a0;
            let root = (-a1 - disc.sqrt()) / (2.0 * a2);
            root.min(z1_max)
        }
    };
    Ok(OptimizationResult {
        z1_star,
        z1_star_rounded: round_candidate(z1_star, z1_max, |a, b| {
            spec.activity(a) > spec.activity(b)
        }),
        objective_at_star: spec.activity(z1_star),
        post_intervention: spec.post(z1_star),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct GeneralDiversityOptions {
    /// Stop once `|x_bar - 1/2|` falls below this.
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for GeneralDiversityOptions {
    fn default() -> Self {
        GeneralDiversityOptions { tolerance: 1e-9, max_iters: 1000 }
    }
}

#[derive(Debug, Clone)]
pub struct GeneralDiversityResult {
    /// Free node ids, aligned with `influence` and `x_free`.
    pub free_ids: Vec<usize>,
    /// Optimized aggregate weight from the support onto each free node. Any
    /// split of `influence[i]` across the support nodes realizes the same
    /// equilibrium, so only the aggregate is reported.
    pub influence: Vec<f64>,
    pub x_free: Vec<f64>,
    pub x_bar: f64,
    pub sigma: f64,
    pub iterations: usize,
    /// Whether `|x_bar - 1/2|` reached the tolerance.
    pub at_target: bool,
}

/// Maximizes opinion diversity on an arbitrary network by choosing the
/// outgoing influence weights of a designated set of 1-zealots (the support).
///
/// Every support node must already hold role `Zealot1`. Their outgoing
/// weights are the decision variables, existing edges included, so a plan may
/// lower current support influence as well as raise it. Only the aggregate
/// weight `v_i >= 0` received by each free node matters to the dynamics: the
/// equilibrium system becomes `(A + diag(v)) x = b + v` where `A x = b` is
/// the opinion system with support edges removed. The population mean
/// increases in every `v_i`, so diversity `4 x_bar (1 - x_bar)` is maximized
/// by driving the mean to one half, which projected gradient descent does on
/// `(x_bar - 1/2)^2` with the adjoint gradient
/// `2 (x_bar - 1/2) (1 - x_i) y_i / n`, `y = A^{-T} 1`.
///
/// When zeroing the support already leaves the mean at or above one half the
/// zero vector is optimal and returned directly; when even unbounded
/// influence cannot lift the mean to one half the problem is reported as
/// unattainable with the achievable range.
pub fn solve_p_diversity_general(
    net: &Network,
    support: &[usize],
    options: &GeneralDiversityOptions,
) -> Result<GeneralDiversityResult, OptimizeError> {
    if !(options.tolerance > 0.0) {
        return Err(OptimizeError::BadParameters("tolerance must be positive".into()));
    }
    let base = solve_opinions(net)?;
    let support: std::collections::BTreeSet<usize> = support.iter().copied().collect();
    if support.is_empty() {
        return Err(OptimizeError::BadParameters("support must name at least one 1-zealot".into()));
    }
    for &s in &support {
        if s >= net.n() || net.role(s) != crate::network::NodeRole::Zealot1 {
            return Err(OptimizeError::BadParameters(format!(
                "support node {s} is not a 1-zealot"
            )));
        }
    }
    let free_ids = base.free_ids().to_vec();
    let f = free_ids.len();
    let n = net.n() as f64;
    if f == 0 {
        return Err(OptimizeError::Degenerate("no free nodes to influence".into()));
    }
    let influence = net.zealot_influence().expect("validated by the base solve");
    if influence.z0.iter().all(|&w| w == 0.0) {
        return Err(OptimizeError::Degenerate(
            "no 0-zealot influence anywhere: every positive plan absorbs at consensus 1".into(),
        ));
    }
    let z1_count = net.zealot_count(crate::network::NodeRole::Zealot1) as f64;
    let hi = (f as f64 + z1_count) / n;

    // Base system over free nodes in free-slot order, support edges removed:
    // their weight moves into the decision variable.
    let mut a0 = DMatrix::<f64>::zeros(f, f);
    let mut b0 = DVector::<f64>::zeros(f);
    let mut v0 = DVector::<f64>::zeros(f);
    for (slot, &i) in free_ids.iter().enumerate() {
        let from_support: f64 = net
            .in_edges(i)
            .iter()
            .filter(|(src, _)| support.contains(src))
            .map(|&(_, w)| w)
            .sum();
        a0[(slot, slot)] = net.in_weight(i) - from_support;
        for &(src, w) in net.in_edges(i) {
            if let Some(src_slot) = net.free_slot(src) {
                a0[(slot, src_slot)] -= w;
            }
        }
        b0[slot] = influence.z1[slot] - from_support;
        v0[slot] = from_support;
    }

    // With v = 0 the support may have been the only anchor of some free
    // component, leaving the matrix singular; such trial points are invalid
    // rather than fatal.
    let try_eval = |v: &DVector<f64>| -> Option<(DVector<f64>, f64)> {
        let mut a = a0.clone();
        for j in 0..f {
            a[(j, j)] += v[j];
        }
        let x = a.lu().solve(&(&b0 + v))?;
        let x_bar = (x.sum() + z1_count) / n;
        Some((x, x_bar))
    };

    let done = |v: Vec<f64>, x: Vec<f64>, x_bar: f64, iterations: usize, tol: f64| {
        GeneralDiversityResult {
            free_ids: free_ids.clone(),
            influence: v,
            x_free: x,
            x_bar,
            sigma: 4.0 * x_bar * (1.0 - x_bar),
            iterations,
            at_target: (x_bar - 0.5).abs() <= tol,
        }
    };

    // The mean is lowest with the support silenced. When that point is
    // solvable and already at or above one half, zeroing the support is
    // optimal; its mean also stands in for the infeasibility report.
    let floor = try_eval(&DVector::zeros(f));
    if let Some((x, x_bar)) = &floor {
        if *x_bar >= 0.5 {
            return Ok(done(vec![0.0; f], x.as_slice().to_vec(), *x_bar, 0, options.tolerance));
        }
    }
    if hi <= 0.5 {
        let lo = floor.map(|(_, x_bar)| x_bar).unwrap_or(base.x_bar);
        return Err(OptimizeError::Unattainable { lo, hi });
    }

    // Start from the network as given: existing support weights reproduce the
    // base solve. A support with no edges yet starts from the silenced point,
    // or from unit influence when that point is singular.
    let (mut v, mut x, mut x_bar) = if v0.amax() > 0.0 {
        (v0, DVector::from_column_slice(base.x_free()), base.x_bar)
    } else if let Some((x, x_bar)) = floor {
        (DVector::zeros(f), x, x_bar)
    } else {
        let ones = DVector::from_element(f, 1.0);
        let (x, x_bar) = try_eval(&ones).expect("unit influence on every free node anchors all");
        (ones, x, x_bar)
    };
    let mut eta = 1.0f64;
    let mut iterations = 0;
    while iterations < options.max_iters {
        let eps = x_bar - 0.5;
        if eps.abs() <= options.tolerance {
            break;
        }
        iterations += 1;
        // Adjoint pass for the gradient of (x_bar - 1/2)^2.
        let mut a = a0.clone();
        for j in 0..f {
            a[(j, j)] += v[j];
        }
        let y = a
            .transpose()
            .lu()
            .solve(&DVector::from_element(f, 1.0))
            .expect("transpose of a nonsingular matrix");
        let grad = DVector::from_fn(f, |j, _| 2.0 * eps * (1.0 - x[j]) * y[j] / n);

        let g_cur = eps * eps;
        let mut accepted = false;
        for _ in 0..200 {
            let w = DVector::from_fn(f, |j, _| (v[j] - eta * grad[j]).max(0.0));
            let d = &w - &v;
            if d.amax() == 0.0 {
                break;
            }
            let Some((x_new, x_bar_new)) = try_eval(&w) else {
                eta *= 0.5;
                continue;
            };
            let g_new = (x_bar_new - 0.5).powi(2);
            if g_new <= g_cur + 1e-4 * grad.dot(&d) {
                v = w;
                x = x_new;
                x_bar = x_bar_new;
                eta = (eta * 2.0).min(1e18);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(done(v.as_slice().to_vec(), x.as_slice().to_vec(), x_bar, iterations, options.tolerance))
}
