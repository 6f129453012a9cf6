//! Test-only oracles, independent of the library's solver paths.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Euclidean projection onto `{Σ α = 1, 0 ≤ α ≤ upper}` by bisection on the
/// shift `τ` in `α_i = clip(v_i − τ, 0, upper)`.
pub fn project_simplex_box(v: &DVector<f64>, upper: f64) -> DVector<f64> {
    let mut lo = v.min() - upper - 1.0;
    let mut hi = v.max() + 1.0;
    let mass = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, upper)).sum::<f64>();
    while hi - lo > f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.map(|x| (x - tau).clamp(0.0, upper))
}

/// Accelerated projected gradient for `min ½ αᵀQα + pᵀα` over the simplex
/// box, run until the iterates stop moving.
pub fn qp_oracle(q: &DMatrix<f64>, p: &DVector<f64>, upper: f64) -> DVector<f64> {
    let n = q.nrows();
    let lipschitz = q.clone().symmetric_eigenvalues().max().max(1e-12);
    let step = 1.0 / lipschitz;
    let objective = |a: &DVector<f64>| 0.5 * a.dot(&(q * a)) + p.dot(a);

    let mut x = project_simplex_box(&DVector::from_element(n, 1.0 / n as f64), upper);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut f_prev = objective(&x);
    for _ in 0..50_000 {
        let grad = q * &y + p;
        let x_next = project_simplex_box(&(&y - grad * step), upper);
        let f_next = objective(&x_next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if f_next > f_prev {
            // adaptive restart
            y = x.clone();
            t = 1.0;
            continue;
        }
        let moved = (&x_next - &x).amax();
        y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
        x = x_next;
        t = t_next;
        f_prev = f_next;
        if moved < 1e-15 {
            break;
        }
    }
    match polish(q, p, upper, &x) {
        Some(exact) if objective(&exact) <= objective(&x) => exact,
        _ => x,
    }
}

/// Solve the KKT system exactly on the active set suggested by `x`:
/// `Q_FF α_F − ν 1 = −p_F − upper·Q_FU 1`, `Σ α_F = 1 − upper·|U|`.
/// Returns `None` if the result leaves the box.
fn polish(
    q: &DMatrix<f64>,
    p: &DVector<f64>,
    upper: f64,
    x: &DVector<f64>,
) -> Option<DVector<f64>> {
    let eps = 1e-9 * upper;
    let at_upper: Vec<usize> = (0..x.len()).filter(|&i| x[i] >= upper - eps).collect();
    let free: Vec<usize> = (0..x.len())
        .filter(|&i| x[i] > eps && x[i] < upper - eps)
        .collect();
    let m = free.len();
    if m == 0 {
        return None;
    }
    let mut a = DMatrix::zeros(m + 1, m + 1);
    let mut b = DVector::zeros(m + 1);
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            a[(r, c)] = q[(i, j)];
        }
        a[(r, m)] = -1.0;
        a[(m, r)] = 1.0;
        b[r] = -p[i] - upper * at_upper.iter().map(|&j| q[(i, j)]).sum::<f64>();
    }
    b[m] = 1.0 - upper * at_upper.len() as f64;
    let sol = a.svd(true, true).solve(&b, 1e-14).ok()?;
    let mut out = DVector::zeros(x.len());
    for &i in &at_upper {
        out[i] = upper;
    }
    for (r, &i) in free.iter().enumerate() {
        if sol[r] < -1e-12 || sol[r] > upper + 1e-12 {
            return None;
        }
        out[i] = sol[r].clamp(0.0, upper);
    }
    Some(out)
}

/// SVDD dual value `Σ α_i K_ii − αᵀKα`.
pub fn svdd_dual_value(k: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    k.diagonal().dot(alpha) - alpha.dot(&(k * alpha))
}

/// OC-SVM dual value `½ αᵀKα`.
pub fn ocsvm_dual_value(k: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    0.5 * alpha.dot(&(k * alpha))
}

/// Direct pairwise kernel evaluation, no norm expansion.
pub fn dense_gram(x: &DMatrix<f64>, sigma: Option<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (x.row(i), x.row(j));
        match sigma {
            None => a.dot(&b),
            Some(s) => (-(a - b).norm_squared() / (2.0 * s * s)).exp(),
        }
    })
}

/// Oracle SVDD solution: maximize the dual, i.e. minimize `αᵀKα − diag(K)ᵀα`.
pub fn svdd_oracle(k: &DMatrix<f64>, c: f64) -> DVector<f64> {
    qp_oracle(&(k * 2.0), &(-k.diagonal()), c.min(1.0))
}

pub fn ocsvm_oracle(k: &DMatrix<f64>, c: f64) -> DVector<f64> {
    let n = k.nrows();
    qp_oracle(k, &DVector::zeros(n), (1.0 / (c * n as f64)).min(1.0))
}

/// Central finite-difference gradient of a scalar function of a matrix.
pub fn finite_difference<F: Fn(&DMatrix<f64>) -> f64>(
    f: F,
    at: &DMatrix<f64>,
    h: f64,
) -> DMatrix<f64> {
    let mut grad = DMatrix::zeros(at.nrows(), at.ncols());
    for i in 0..at.nrows() {
        for j in 0..at.ncols() {
            let mut plus = at.clone();
            plus[(i, j)] += h;
            let mut minus = at.clone();
            minus[(i, j)] -= h;
            grad[(i, j)] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
    }
    grad
}

/// Brute-force `L(Q) = Σ α_i‖Qx_i‖² − ΣΣ α_i α_j (Qx_i)ᵀ(Qx_j)` with explicit loops.
pub fn lagrangian_loops(x: &DMatrix<f64>, q: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    let n = x.nrows();
    let proj: Vec<DVector<f64>> = (0..n).map(|i| q * x.row(i).transpose()).collect();
    let mut total = 0.0;
    for i in 0..n {
        total += alpha[i] * proj[i].norm_squared();
        for j in 0..n {
            total -= alpha[i] * alpha[j] * proj[i].dot(&proj[j]);
        }
    }
    total
}

/// Brute-force `Ψ(Q) = Tr(Q X λλᵀ Xᵀ Qᵀ)` with `X` as `D x n` columns.
pub fn psi_trace(x: &DMatrix<f64>, q: &DMatrix<f64>, lambda: &DVector<f64>) -> f64 {
    let xt = x.transpose();
    let inner = q * &xt * lambda * lambda.transpose() * xt.transpose() * q.transpose();
    inner.trace()
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const C_GRID: [f64; 5] = [0.01, 0.05, 0.1, 0.2, 0.3];
pub const SIGMA_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3];

/// A random QP instance: `n <= 25` points in `D <= 5`, a kernel, and a `C`
/// from the default grid that is feasible for SVDD at this `n`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x: DMatrix<f64>,
    pub sigma: Option<f64>,
    pub c: f64,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = if rng.random_bool(0.5) {
        None
    } else {
        Some(SIGMA_GRID[rng.random_range(0..SIGMA_GRID.len())])
    };
    let feasible: Vec<f64> = C_GRID
        .iter()
        .copied()
        .filter(|&c| c * 25.0 >= 1.0)
        .collect();
    let c = feasible[rng.random_range(0..feasible.len())];
    let min_n = (1.0 / c).ceil() as usize;
    let n = rng.random_range(min_n.max(2)..=25);
    let d = rng.random_range(1..=5);
    // coordinates on the kernel's own length scale so the Gram matrix is
    // neither the identity nor all ones
    let scale = sigma.unwrap_or(1.0) * rng.random_range(0.5..3.0);
    let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0) * scale);
    Instance { x, sigma, c }
}

/// Relative error of `a` against the reference `b`. The denominator is
/// floored at 1e-6 of the kernel's scale: a linear OC-SVM whose data
/// surrounds the origin has optimum exactly 0.
pub fn relative_error(a: f64, b: f64, k: &DMatrix<f64>) -> f64 {
    (a - b).abs() / b.abs().max(1e-6 * k.diagonal().max())
}
