//! Support Vector Data Description: the smallest (soft) hypersphere around
//! the target data in kernel feature space.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gram_self, kernel_column, KernelSpec};
use crate::model::{Decision, Scored};
use crate::solver::{self, is_free, SolverParams, SUPPORT_THRESHOLD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "SvddFile", try_from = "SvddFile")]
pub struct SvddModel {
    /// Dual coefficients for every training sample.
    pub alphas: Vec<f64>,
    pub support_indices: Vec<usize>,
    /// Training rows with `α > 1e-10`, in training order.
    pub support_vectors: DMatrix<f64>,
    pub r_squared: f64,
    pub c: f64,
    pub kernel: KernelSpec,
    /// `ΣΣ α_i α_j K(x_i, x_j)` over the support vectors.
    pub center_self_term: f64,
    /// Distances within this band above `r_squared` count as boundary ties.
    pub boundary_tolerance: f64,
}

/// Solver output for a precomputed Gram matrix.
#[derive(Clone, Debug)]
pub struct SvddDual {
    pub alpha: DVector<f64>,
    /// `Σ α_i K_ii − αᵀ K α` (the maximized dual value).
    pub objective: f64,
    pub iterations: usize,
    pub tolerance: f64,
}

pub fn check_c(c: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if !c.is_finite() || (c * n as f64) < 1.0 - 1e-12 {
        return Err(Error::InfeasibleC {
            c,
            reason: format!(
                "SVDD needs C >= 1/n = {:.6} for n = {n} (the coefficients sum to 1 and are capped at C)",
                1.0 / n as f64
            ),
        });
    }
    Ok(())
}

/// Maximizes `Σ α_i K_ii − αᵀ K α` over `Σ α = 1, 0 ≤ α ≤ C`.
pub fn solve_dual(gram: &DMatrix<f64>, c: f64, params: &SolverParams) -> Result<SvddDual> {
    let n = gram.nrows();
    check_c(c, n)?;
    let q = gram * 2.0;
    let p = -gram.diagonal();
    let upper = c.min(1.0);
    let sol = solver::solve(&q, &p, upper, params);
    Ok(SvddDual {
        alpha: sol.alpha,
        objective: -sol.objective,
        iterations: sol.iterations,
        tolerance: 2.0 * params.tolerance * q.diagonal().amax(),
    })
}

pub fn train_svdd(data: &DMatrix<f64>, c: f64, kernel: KernelSpec) -> Result<SvddModel> {
    train_svdd_with(data, c, kernel, &SolverParams::default())
}

pub fn train_svdd_with(
    data: &DMatrix<f64>,
    c: f64,
    kernel: KernelSpec,
    params: &SolverParams,
) -> Result<SvddModel> {
    kernel.validate()?;
    check_c(c, data.nrows())?;
    let gram = gram_self(&kernel, data);
    let dual = solve_dual(&gram, c, params)?;
    Ok(SvddModel::from_dual(data, &gram, &dual, c, kernel))
}

impl SvddModel {
    pub(crate) fn from_dual(
        data: &DMatrix<f64>,
        gram: &DMatrix<f64>,
        dual: &SvddDual,
        c: f64,
        kernel: KernelSpec,
    ) -> SvddModel {
        let alpha = &dual.alpha;
        let support_indices: Vec<usize> = (0..alpha.len())
            .filter(|&i| alpha[i] > SUPPORT_THRESHOLD)
            .collect();
        let sv_alpha = DVector::from_iterator(
            support_indices.len(),
            support_indices.iter().map(|&i| alpha[i]),
        );
        let k_sv = gram.select_columns(&support_indices);
        let k_sv_sv = k_sv.select_rows(&support_indices);
        let center_self_term = sv_alpha.dot(&(&k_sv_sv * &sv_alpha));
        let cross = &k_sv * &sv_alpha;
        let dist2 = |i: usize| (gram[(i, i)] - 2.0 * cross[i] + center_self_term).max(0.0);

        let upper = c.min(1.0);
        let free: Vec<f64> = support_indices
            .iter()
            .filter(|&&i| is_free(alpha[i], upper))
            .map(|&i| dist2(i))
            .collect();
        let r_squared = if free.is_empty() {
            support_indices
                .iter()
                .map(|&i| dist2(i))
                .fold(0.0, f64::max)
        } else {
            free.iter().sum::<f64>() / free.len() as f64
        };

        SvddModel {
            alphas: alpha.iter().copied().collect(),
            support_vectors: data.select_rows(&support_indices),
            support_indices,
            r_squared,
            c,
            kernel,
            center_self_term,
            boundary_tolerance: dual.tolerance,
        }
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    fn support_alphas(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.support_indices.len(),
            self.support_indices.iter().map(|&i| self.alphas[i]),
        )
    }

    /// `‖φ(x) − a‖²`, clamped at zero.
    pub fn distance2(&self, x: &[f64]) -> Result<f64> {
        let k = kernel_column(&self.kernel, &self.support_vectors, x)?;
        let kxx = match self.kernel {
            KernelSpec::Linear => x.iter().map(|v| v * v).sum(),
            KernelSpec::Rbf { .. } => 1.0,
        };
        Ok((kxx - 2.0 * k.dot(&self.support_alphas()) + self.center_self_term).max(0.0))
    }

    /// Margin `r² − d²`; positive inside. Boundary ties are targets.
    pub fn classify(&self, x: &[f64]) -> Result<Scored> {
        let d2 = self.distance2(x)?;
        let score = self.r_squared - d2;
        let decision = if score >= -self.boundary_tolerance {
            Decision::Target
        } else {
            Decision::Outlier
        };
        Ok(Scored { decision, score })
    }

    /// Hypersphere center `Σ α_i x_i`; only meaningful for the linear kernel.
    pub fn linear_center(&self) -> Option<DVector<f64>> {
        match self.kernel {
            KernelSpec::Linear => Some(self.support_vectors.transpose() * self.support_alphas()),
            KernelSpec::Rbf { .. } => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct SvddFile {
    #[serde(rename = "type")]
    kind: String,
    kernel: KernelSpec,
    c: f64,
    alphas: Vec<f64>,
    support_vectors: Vec<Vec<f64>>,
    r_squared: f64,
    center_self_term: f64,
    boundary_tolerance: f64,
}

impl From<SvddModel> for SvddFile {
    fn from(m: SvddModel) -> Self {
        SvddFile {
            kind: "svdd".into(),
            kernel: m.kernel,
            c: m.c,
            support_vectors: rows_of(&m.support_vectors),
            alphas: m.alphas,
            r_squared: m.r_squared,
            center_self_term: m.center_self_term,
            boundary_tolerance: m.boundary_tolerance,
        }
    }
}

impl TryFrom<SvddFile> for SvddModel {
    type Error = String;

    fn try_from(f: SvddFile) -> std::result::Result<Self, String> {
        if f.kind != "svdd" {
            return Err(format!("expected type \"svdd\", found {:?}", f.kind));
        }
        let support_indices = support_indices_of(&f.alphas);
        let support_vectors = matrix_of(&f.support_vectors, support_indices.len())?;
        Ok(SvddModel {
            alphas: f.alphas,
            support_indices,
            support_vectors,
            r_squared: f.r_squared,
            c: f.c,
            kernel: f.kernel,
            center_self_term: f.center_self_term,
            boundary_tolerance: f.boundary_tolerance,
        })
    }
}

pub(crate) fn support_indices_of(alphas: &[f64]) -> Vec<usize> {
    (0..alphas.len())
        .filter(|&i| alphas[i] > SUPPORT_THRESHOLD)
        .collect()
}

pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn matrix_of(
    rows: &[Vec<f64>],
    expected_rows: usize,
) -> std::result::Result<DMatrix<f64>, String> {
    if rows.len() != expected_rows {
        return Err(format!(
            "{} support vectors stored but {expected_rows} coefficients exceed the support threshold",
            rows.len()
        ));
    }
    let dim = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != dim) {
        return Err("support vectors have unequal lengths".into());
    }
    Ok(DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]))
}
