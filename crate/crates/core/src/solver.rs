//! SMO-style solver for the dual problems shared by SVDD and OC-SVM:
//!
//! ```text
//! minimize   ½ αᵀ Q α + pᵀ α
//! subject to Σ α_i = 1,  0 ≤ α_i ≤ upper
//! ```
//!
//! Each step moves mass between the maximal KKT-violating pair and solves the
//! two-variable subproblem in closed form.

use nalgebra::{DMatrix, DVector};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// Dual coefficients above this are support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct SolverParams {
    /// Stop once the largest pairwise violation, relative to the largest
    /// diagonal entry of `Q`, falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub alpha: DVector<f64>,
    /// `Q α + p` at the solution.
    pub gradient: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub max_violation: f64,
}

/// Whether `value` lies strictly inside `(0, upper)`.
pub fn is_free(value: f64, upper: f64) -> bool {
    let eps = SUPPORT_THRESHOLD.max(upper * 1e-12);
    value > eps && value < upper - eps
}

/// Solves the box-and-simplex QP. `upper * n >= 1` is required for
/// feasibility; callers check it. Initialization is uniform `1/n`.
pub fn solve(q: &DMatrix<f64>, p: &DVector<f64>, upper: f64, params: &SolverParams) -> Solution {
    let n = q.nrows();
    assert_eq!(q.ncols(), n);
    assert_eq!(p.len(), n);
    assert!(n > 0 && upper * n as f64 >= 1.0 - 1e-12);

    let mut alpha = DVector::from_element(n, 1.0 / n as f64);
    let mut grad = q * &alpha + p;
    let scale = q.diagonal().amax().max(f64::MIN_POSITIVE);
    let tol = params.tolerance * scale;

    let mut iterations = 0;
    let mut violation = f64::INFINITY;
    while iterations < params.max_iterations {
        // i: can increase and has the smallest gradient
        // j: can decrease and has the largest gradient
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..n {
            if alpha[t] < upper && grad[t] < g_min {
                g_min = grad[t];
                i = t;
            }
            if alpha[t] > 0.0 && grad[t] > g_max {
                g_max = grad[t];
                j = t;
            }
        }
        violation = if i == usize::MAX || j == usize::MAX {
            0.0
        } else {
            g_max - g_min
        };
        if violation < tol {
            break;
        }
        iterations += 1;

        let curvature = (q[(i, i)] + q[(j, j)] - 2.0 * q[(i, j)]).max(1e-12 * scale);
        let step = ((g_max - g_min) / curvature)
            .min(upper - alpha[i])
            .min(alpha[j]);
        if step <= 0.0 {
            break;
        }
        alpha[i] += step;
        alpha[j] -= step;
        // snap onto the bounds to keep the free/bounded sets exact
        if upper - alpha[i] <= f64::EPSILON * upper {
            alpha[i] = upper;
        }
        if alpha[j] <= f64::EPSILON * upper {
            alpha[j] = 0.0;
        }
        grad.axpy(step, &q.column(i), 1.0);
        grad.axpy(-step, &q.column(j), 1.0);
    }

    // refresh to shed accumulated drift
    let grad = q * &alpha + p;
    let objective = 0.5 * alpha.dot(&(q * &alpha)) + p.dot(&alpha);
    Solution {
        alpha,
        gradient: grad,
        objective,
        iterations,
        max_violation: violation / scale,
    }
}
