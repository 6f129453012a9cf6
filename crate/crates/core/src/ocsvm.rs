//! One-Class SVM: a maximum-margin hyperplane separating the target data
//! from the origin in kernel feature space.
//!
//! The box bound on the dual coefficients is `1 / (C n)`, so `C` plays the
//! role usually called ν.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gram_self, kernel_column, KernelSpec};
use crate::model::{Decision, Scored};
use crate::solver::{self, is_free, SolverParams};
use crate::svdd::{matrix_of, rows_of, support_indices_of};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "OcSvmFile", try_from = "OcSvmFile")]
pub struct OcSvmModel {
    pub alphas: Vec<f64>,
    pub support_indices: Vec<usize>,
    pub support_vectors: DMatrix<f64>,
    pub rho: f64,
    pub c: f64,
    pub kernel: KernelSpec,
    pub boundary_tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct OcSvmDual {
    pub alpha: DVector<f64>,
    /// `½ αᵀ K α` (minimized).
    pub objective: f64,
    pub iterations: usize,
    pub tolerance: f64,
}

pub fn box_bound(c: f64, n: usize) -> f64 {
    1.0 / (c * n as f64)
}

pub fn check_c(c: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InfeasibleC {
            c,
            reason: "OC-SVM needs 0 < C <= 1 (the box bound 1/(C n) must admit coefficients summing to 1)"
                .into(),
        });
    }
    Ok(())
}

/// Minimizes `½ αᵀ K α` over `Σ α = 1, 0 ≤ α ≤ 1/(C n)`.
pub fn solve_dual(gram: &DMatrix<f64>, c: f64, params: &SolverParams) -> Result<OcSvmDual> {
    let n = gram.nrows();
    check_c(c, n)?;
    let upper = box_bound(c, n).min(1.0);
    let sol = solver::solve(gram, &DVector::zeros(n), upper, params);
    Ok(OcSvmDual {
        alpha: sol.alpha,
        objective: sol.objective,
        iterations: sol.iterations,
        tolerance: 2.0 * params.tolerance * gram.diagonal().amax(),
    })
}

pub fn train_ocsvm(data: &DMatrix<f64>, c: f64, kernel: KernelSpec) -> Result<OcSvmModel> {
    train_ocsvm_with(data, c, kernel, &SolverParams::default())
}

pub fn train_ocsvm_with(
    data: &DMatrix<f64>,
    c: f64,
    kernel: KernelSpec,
    params: &SolverParams,
) -> Result<OcSvmModel> {
    kernel.validate()?;
    check_c(c, data.nrows())?;
    let gram = gram_self(&kernel, data);
    let dual = solve_dual(&gram, c, params)?;
    let n = data.nrows();
    let upper = box_bound(c, n).min(1.0);
    let alpha = &dual.alpha;

    let support_indices = support_indices_of(alpha.as_slice());
    let sv_alpha = DVector::from_iterator(
        support_indices.len(),
        support_indices.iter().map(|&i| alpha[i]),
    );
    // decision values Σ_s α_s K(x_s, x_i) for every training sample
    let f = gram.select_columns(&support_indices) * &sv_alpha;

    let free: Vec<f64> = (0..n)
        .filter(|&i| is_free(alpha[i], upper))
        .map(|i| f[i])
        .collect();
    let rho = if !free.is_empty() {
        free.iter().sum::<f64>() / free.len() as f64
    } else {
        // at-bound samples satisfy f <= ρ, zero-weight samples f >= ρ
        let lower = (0..n)
            .filter(|&i| alpha[i] >= upper)
            .map(|i| f[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let upper_side = (0..n)
            .filter(|&i| alpha[i] <= 0.0)
            .map(|i| f[i])
            .fold(f64::INFINITY, f64::min);
        match (lower.is_finite(), upper_side.is_finite()) {
            (true, true) => 0.5 * (lower + upper_side),
            (true, false) => lower,
            (false, true) => upper_side,
            (false, false) => f.mean(),
        }
    };

    Ok(OcSvmModel {
        alphas: alpha.iter().copied().collect(),
        support_vectors: data.select_rows(&support_indices),
        support_indices,
        rho,
        c,
        kernel,
        boundary_tolerance: dual.tolerance,
    })
}

impl OcSvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    /// `Σ α_i K(x_i, x) − ρ`; non-negative means target.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let k = kernel_column(&self.kernel, &self.support_vectors, x)?;
        let weighted: f64 = self
            .support_indices
            .iter()
            .zip(k.iter())
            .map(|(&i, kv)| self.alphas[i] * kv)
            .sum();
        Ok(weighted - self.rho)
    }

    pub fn classify(&self, x: &[f64]) -> Result<Scored> {
        let score = self.decision_value(x)?;
        let decision = if score >= -self.boundary_tolerance {
            Decision::Target
        } else {
            Decision::Outlier
        };
        Ok(Scored { decision, score })
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct OcSvmFile {
    #[serde(rename = "type")]
    kind: String,
    kernel: KernelSpec,
    c: f64,
    alphas: Vec<f64>,
    support_vectors: Vec<Vec<f64>>,
    rho: f64,
    boundary_tolerance: f64,
}

impl From<OcSvmModel> for OcSvmFile {
    fn from(m: OcSvmModel) -> Self {
        OcSvmFile {
            kind: "ocsvm".into(),
            kernel: m.kernel,
            c: m.c,
            support_vectors: rows_of(&m.support_vectors),
            alphas: m.alphas,
            rho: m.rho,
            boundary_tolerance: m.boundary_tolerance,
        }
    }
}

impl TryFrom<OcSvmFile> for OcSvmModel {
    type Error = String;

    fn try_from(f: OcSvmFile) -> std::result::Result<Self, String> {
        if f.kind != "ocsvm" {
            return Err(format!("expected type \"ocsvm\", found {:?}", f.kind));
        }
        let support_indices = support_indices_of(&f.alphas);
        let support_vectors = matrix_of(&f.support_vectors, support_indices.len())?;
        Ok(OcSvmModel {
            alphas: f.alphas,
            support_indices,
            support_vectors,
            rho: f.rho,
            c: f.c,
            kernel: f.kernel,
            boundary_tolerance: f.boundary_tolerance,
        })
    }
}
