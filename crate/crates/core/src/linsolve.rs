//! Shared linear-system machinery for the equilibrium solvers.
//!
//! Both solvers produce row-wise diagonally dominant systems (strictly
//! dominant on every row reachable from zealot influence), so a dense LU
//! factorization is used for small systems and Gauss-Seidel sweeps above the
//! dense threshold.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinSolveError {
    #[error("linear system is singular")]
    Singular,
    #[error("iterative solve stalled at residual {residual:e} after {iterations} sweeps")]
    NoConvergence { residual: f64, iterations: usize },
}

/// Row-major sparse system `(diag + off) x = rhs`.
pub(crate) struct SparseSystem {
    pub diag: Vec<f64>,
    /// Off-diagonal entries per row as `(column, coefficient)`.
    pub off: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Max-norm residual of `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n() {
            let mut r = self.diag[i] * x[i] - self.rhs[i];
            for &(j, c) in &self.off[i] {
                r += c * x[j];
            }
            worst = worst.max(r.abs());
        }
        worst
    }

    /// Solves the system to the requested max-norm residual. Systems with at
    /// most `dense_threshold` unknowns go through a dense LU factorization;
    /// larger ones run Gauss-Seidel sweeps.
    pub fn solve(&self, tolerance: f64, dense_threshold: usize) -> Result<Vec<f64>, LinSolveError> {
        let n = self.n();
        if n == 0 {
            return Ok(Vec::new());
        }
        let x = if n <= dense_threshold {
            self.solve_dense()?
        } else {
            self.solve_gauss_seidel(tolerance)?
        };
        let scale = self.rhs.iter().fold(1.0f64, |acc, b| acc.max(b.abs()));
        if self.residual(&x) > tolerance * scale {
            return Err(LinSolveError::NoConvergence {
                residual: self.residual(&x),
                iterations: 0,
            });
        }
        Ok(x)
    }

    fn solve_dense(&self) -> Result<Vec<f64>, LinSolveError> {
        let n = self.n();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = self.diag[i];
            for &(j, c) in &self.off[i] {
                a[(i, j)] += c;
            }
        }
        let b = DVector::from_column_slice(&self.rhs);
        let lu = a.lu();
        lu.solve(&b).map(|x| x.as_slice().to_vec()).ok_or(LinSolveError::Singular)
    }

    fn solve_gauss_seidel(&self, tolerance: f64) -> Result<Vec<f64>, LinSolveError> {
        let n = self.n();
        let scale = self.rhs.iter().fold(1.0f64, |acc, b| acc.max(b.abs()));
        let mut x = vec![0.0; n];
        let max_sweeps = 100_000;
        for sweep in 0..max_sweeps {
            for i in 0..n {
                if self.diag[i] == 0.0 {
                    return Err(LinSolveError::Singular);
                }
                let mut s = self.rhs[i];
                for &(j, c) in &self.off[i] {
                    s -= c * x[j];
                }
                x[i] = s / self.diag[i];
            }
            // Residual checks cost as much as sweeps; thin them out once warm.
            if (sweep < 64 || sweep % 8 == 0) && self.residual(&x) <= tolerance * scale {
                return Ok(x);
            }
        }
        Err(LinSolveError::NoConvergence { residual: self.residual(&x), iterations: max_sweeps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_system() -> SparseSystem {
        // [ 4 -1 ] [x0]   [3]
        // [ -2 5 ] [x1] = [1]  -> x = (16/18, 10/18)... solve exactly below.
        SparseSystem {
            diag: vec![4.0, 5.0],
            off: vec![vec![(1, -1.0)], vec![(0, -2.0)]],
            rhs: vec![3.0, 1.0],
        }
    }

    #[test]
    fn dense_and_iterative_agree() {
        let sys = small_system();
        let dense = sys.solve(1e-12, 10).unwrap();
        let iter = sys.solve(1e-12, 0).unwrap();
        for (a, b) in dense.iter().zip(&iter) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(sys.residual(&dense) < 1e-12);
    }

    #[test]
    fn singular_system_is_reported() {
        let sys = SparseSystem {
            diag: vec![1.0, 1.0],
            off: vec![vec![(1, -1.0)], vec![(0, -1.0)]],
            rhs: vec![0.5, 0.0],
        };
        assert!(matches!(sys.solve(1e-12, 10), Err(LinSolveError::Singular)));
    }

    #[test]
    fn empty_system_is_trivial() {
        let sys = SparseSystem { diag: vec![], off: vec![], rhs: vec![] };
        assert!(sys.solve(1e-12, 10).unwrap().is_empty());
    }
}
