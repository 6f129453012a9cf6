//! Subspace SVDD: learns a `d x D` projection `Q` jointly with an SVDD model
//! in the projected space.
//!
//! Training alternates between solving linear SVDD on `Q X` and the gradient
//! step `Q ← Q − η (∇L + β ∇Ψ)`, where
//!
//! * `L(Q) = Σ α_i ‖Q x_i‖² − ΣΣ α_i α_j (Q x_i)ᵀ(Q x_j)` is the SVDD dual
//!   at fixed α, with `∇L = 2 Q X (diag(α) − ααᵀ) Xᵀ`;
//! * `Ψ(Q) = ‖Q X λ‖²` is the variance regularizer, with `∇Ψ = 2 Q X λλᵀ Xᵀ`.
//!
//! `Q` is not re-orthonormalized between steps.

use log::debug;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{gram_self, kernel_column, KernelSpec};
use crate::model::Scored;
use crate::pca::principal_axes;
use crate::solver::{is_free, SolverParams};
use crate::svdd::{self, SvddModel};

pub const DEFAULT_MAX_ITERS: usize = 50;
const CONVERGENCE_TOLERANCE: f64 = 1e-6;

/// Which regularizer weights `λ` feed `Ψ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `λ = 0`: no regularization.
    Plain,
    /// `λ_i = 1` for every sample.
    R1,
    /// `λ_i = α_i` on the free support vectors, zero elsewhere.
    R2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelMode {
    Linear,
    /// Linear S-SVDD on an explicit RBF embedding of the training data
    /// (centered kernel eigenmap, extended to new samples Nyström-style).
    NonlinearRbf {
        sigma: f64,
    },
}

#[derive(Clone, Debug)]
pub enum QInit {
    /// Leading `d` principal axes of the (embedded) training data.
    Pca,
    Given(DMatrix<f64>),
}

#[derive(Clone, Debug)]
pub struct SsvddParams {
    pub c: f64,
    pub d: usize,
    pub eta: f64,
    pub beta: f64,
    pub variant: Variant,
    pub kernel_mode: KernelMode,
    pub max_iters: usize,
    pub init: QInit,
}

impl SsvddParams {
    pub fn new(c: f64, d: usize, eta: f64, beta: f64, variant: Variant) -> Self {
        SsvddParams {
            c,
            d,
            eta,
            beta,
            variant,
            kernel_mode: KernelMode::Linear,
            max_iters: DEFAULT_MAX_ITERS,
            init: QInit::Pca,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "SsvddFile", try_from = "SsvddFile")]
pub struct SsvddModel {
    pub q: DMatrix<f64>,
    pub inner: SvddModel,
    pub variant: Variant,
    pub eta: f64,
    pub beta: f64,
    pub kernel_mode: KernelMode,
    pub embedding: Option<RbfEmbedding>,
    pub iterations_run: usize,
    /// SVDD dual objective in the subspace, one entry per iteration.
    pub objective_history: Vec<f64>,
}

/// `λ` for the chosen variant.
pub fn compute_lambda(variant: Variant, alphas: &DVector<f64>, c: f64) -> DVector<f64> {
    let n = alphas.len();
    match variant {
        Variant::Plain => DVector::zeros(n),
        Variant::R1 => DVector::from_element(n, 1.0),
        Variant::R2 => {
            let upper = c.min(1.0);
            alphas.map(|a| if is_free(a, upper) { a } else { 0.0 })
        }
    }
}

/// `L(Q)` at fixed α; `data` holds one sample per row.
pub fn lagrangian(data: &DMatrix<f64>, q: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    let y = data * q.transpose();
    let weighted: f64 = (0..y.nrows())
        .map(|i| alpha[i] * y.row(i).norm_squared())
        .sum();
    let center = y.transpose() * alpha;
    weighted - center.norm_squared()
}

/// `∇L = 2 Q X (diag(α) − ααᵀ) Xᵀ`.
pub fn lagrangian_gradient(
    data: &DMatrix<f64>,
    q: &DMatrix<f64>,
    alpha: &DVector<f64>,
) -> DMatrix<f64> {
    // with rows as samples: 2 [ Yᵀ diag(α) X − (Yᵀα)(Xᵀα)ᵀ ],  Y = X Qᵀ
    let y = data * q.transpose();
    let mut y_weighted = y.transpose();
    for (i, mut col) in y_weighted.column_iter_mut().enumerate() {
        col *= alpha[i];
    }
    let y_alpha = y.transpose() * alpha;
    let x_alpha = data.transpose() * alpha;
    (y_weighted * data - y_alpha * x_alpha.transpose()) * 2.0
}

/// `Ψ(Q) = Tr(Q X λλᵀ Xᵀ Qᵀ) = ‖Q X λ‖²`.
pub fn psi(data: &DMatrix<f64>, q: &DMatrix<f64>, lambda: &DVector<f64>) -> f64 {
    (q * (data.transpose() * lambda)).norm_squared()
}

/// `∇Ψ = 2 Q X λλᵀ Xᵀ`.
pub fn psi_gradient(data: &DMatrix<f64>, q: &DMatrix<f64>, lambda: &DVector<f64>) -> DMatrix<f64> {
    let x_lambda = data.transpose() * lambda;
    (q * &x_lambda) * x_lambda.transpose() * 2.0
}

/// One gradient step on `Q`.
pub fn update_q(
    data: &DMatrix<f64>,
    q: &DMatrix<f64>,
    alpha: &DVector<f64>,
    lambda: &DVector<f64>,
    eta: f64,
    beta: f64,
) -> DMatrix<f64> {
    let grad = lagrangian_gradient(data, q, alpha) + psi_gradient(data, q, lambda) * beta;
    q - grad * eta
}

pub fn train_ssvdd(data: &DMatrix<f64>, params: &SsvddParams) -> Result<SsvddModel> {
    let n = data.nrows();
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    svdd::check_c(params.c, n)?;
    if !(params.eta >= 0.0 && params.eta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be finite and non-negative, got {}",
            params.eta
        )));
    }
    if !(params.beta >= 0.0 && params.beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "regularizer weight must be finite and non-negative, got {}",
            params.beta
        )));
    }
    if params.max_iters == 0 {
        return Err(Error::InvalidParameter(
            "max_iters must be at least 1".into(),
        ));
    }

    let embedding = match params.kernel_mode {
        KernelMode::Linear => None,
        KernelMode::NonlinearRbf { sigma } => Some(RbfEmbedding::fit(data, sigma)?),
    };
    let x = match &embedding {
        Some(e) => e.train_coordinates(),
        None => data.clone(),
    };
    let dim = x.ncols();
    if params.d == 0 || params.d > dim {
        return Err(Error::InvalidParameter(format!(
            "subspace dimensionality d = {} must lie in 1..={dim}",
            params.d
        )));
    }

    let mut q = match &params.init {
        QInit::Pca => principal_axes(&x, params.d).components,
        QInit::Given(q0) => {
            if q0.shape() != (params.d, dim) {
                return Err(Error::DimensionMismatch {
                    expected: params.d * dim,
                    found: q0.nrows() * q0.ncols(),
                });
            }
            q0.clone()
        }
    };

    let solver = SolverParams::default();
    let mut history = Vec::with_capacity(params.max_iters);
    let mut iterations_run = 0;
    for iteration in 1..=params.max_iters {
        let y = &x * q.transpose();
        let gram = gram_self(&KernelSpec::Linear, &y);
        let dual = svdd::solve_dual(&gram, params.c, &solver)?;
        history.push(dual.objective);

        let lambda = compute_lambda(params.variant, &dual.alpha, params.c);
        let next = update_q(&x, &q, &dual.alpha, &lambda, params.eta, params.beta);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration });
        }
        let change = (&next - &q).norm();
        let scale = q.norm();
        q = next;
        iterations_run = iteration;
        debug!(
            "S-SVDD iteration {iteration}: objective {:.6e}, |dQ|/|Q| {:.3e}",
            dual.objective,
            change / scale
        );
        if scale == 0.0 || change / scale < CONVERGENCE_TOLERANCE {
            break;
        }
    }

    let y = &x * q.transpose();
    let gram = gram_self(&KernelSpec::Linear, &y);
    let dual = svdd::solve_dual(&gram, params.c, &solver)?;
    let inner = SvddModel::from_dual(&y, &gram, &dual, params.c, KernelSpec::Linear);

    Ok(SsvddModel {
        q,
        inner,
        variant: params.variant,
        eta: params.eta,
        beta: params.beta,
        kernel_mode: params.kernel_mode,
        embedding,
        iterations_run,
        objective_history: history,
    })
}

impl SsvddModel {
    pub fn d(&self) -> usize {
        self.q.nrows()
    }

    /// Dimensionality of the raw samples this model scores.
    pub fn dim(&self) -> usize {
        match &self.embedding {
            Some(e) => e.train.ncols(),
            None => self.q.ncols(),
        }
    }

    /// Coordinates of `x` in the learned subspace.
    pub fn transform(&self, x: &[f64]) -> Result<DVector<f64>> {
        let v = match &self.embedding {
            Some(e) => e.embed(x)?,
            None => {
                if x.len() != self.q.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: self.q.ncols(),
                        found: x.len(),
                    });
                }
                DVector::from_column_slice(x)
            }
        };
        Ok(&self.q * v)
    }

    pub fn classify(&self, x: &[f64]) -> Result<Scored> {
        let y = self.transform(x)?;
        self.inner.classify(y.as_slice())
    }
}

/// Explicit finite-dimensional map whose inner products reproduce the
/// centered RBF Gram matrix of the training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbfEmbedding {
    pub sigma: f64,
    #[serde(with = "row_major")]
    pub train: DMatrix<f64>,
    /// Column means of the training Gram matrix.
    pub column_means: Vec<f64>,
    pub grand_mean: f64,
    /// `U Λ^{-1/2}` for the retained eigenpairs, `n x r`.
    #[serde(with = "row_major")]
    pub projection: DMatrix<f64>,
}

impl RbfEmbedding {
    pub fn fit(data: &DMatrix<f64>, sigma: f64) -> Result<Self> {
        let kernel = KernelSpec::rbf(sigma)?;
        let n = data.nrows();
        let k = gram_self(&kernel, data);
        let column_means: Vec<f64> = (0..n).map(|j| k.column(j).mean()).collect();
        let grand_mean = column_means.iter().sum::<f64>() / n as f64;
        let centered = DMatrix::from_fn(n, n, |i, j| {
            k[(i, j)] - column_means[i] - column_means[j] + grand_mean
        });
        let eig = SymmetricEigen::new(centered);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top = eig.eigenvalues[order[0]].max(0.0);
        let keep: Vec<usize> = order
            .into_iter()
            .filter(|&i| eig.eigenvalues[i] > top * 1e-10 && eig.eigenvalues[i] > 0.0)
            .collect();
        if keep.is_empty() {
            return Err(Error::InvalidParameter(
                "RBF embedding has no variance (all training samples coincide at this sigma)"
                    .into(),
            ));
        }
        let mut projection = eig.eigenvectors.select_columns(&keep);
        for (c, &i) in keep.iter().enumerate() {
            let s = eig.eigenvalues[i].sqrt();
            projection.column_mut(c).unscale_mut(s);
        }
        Ok(RbfEmbedding {
            sigma,
            train: data.clone(),
            column_means,
            grand_mean,
            projection,
        })
    }

    pub fn rank(&self) -> usize {
        self.projection.ncols()
    }

    fn kernel(&self) -> KernelSpec {
        KernelSpec::Rbf { sigma: self.sigma }
    }

    /// Embedded training rows (`n x r`).
    pub fn train_coordinates(&self) -> DMatrix<f64> {
        let n = self.train.nrows();
        let k = gram_self(&self.kernel(), &self.train);
        let centered = DMatrix::from_fn(n, n, |i, j| {
            k[(i, j)] - self.column_means[i] - self.column_means[j] + self.grand_mean
        });
        centered * &self.projection
    }

    pub fn embed(&self, x: &[f64]) -> Result<DVector<f64>> {
        let k = kernel_column(&self.kernel(), &self.train, x)?;
        let mean_k = k.mean();
        let centered = DVector::from_fn(k.len(), |i, _| {
            k[i] - self.column_means[i] - mean_k + self.grand_mean
        });
        Ok(self.projection.transpose() * centered)
    }
}

mod row_major {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Flat {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        Flat {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().iter().copied().collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let f = Flat::deserialize(d)?;
        if f.data.len() != f.rows * f.cols {
            return Err(serde::de::Error::custom("matrix data length mismatch"));
        }
        Ok(DMatrix::from_row_slice(f.rows, f.cols, &f.data))
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct SsvddFile {
    #[serde(rename = "type")]
    kind: String,
    variant: Variant,
    /// Row-major `d x D`.
    q: Vec<f64>,
    eta: f64,
    beta: f64,
    d: usize,
    d_input: usize,
    kernel_mode: KernelMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<RbfEmbedding>,
    inner: SvddModel,
    iterations_run: usize,
    objective_history: Vec<f64>,
}

impl From<SsvddModel> for SsvddFile {
    fn from(m: SsvddModel) -> Self {
        SsvddFile {
            kind: "ssvdd".into(),
            variant: m.variant,
            q: m.q.transpose().iter().copied().collect(),
            eta: m.eta,
            beta: m.beta,
            d: m.q.nrows(),
            d_input: m.q.ncols(),
            kernel_mode: m.kernel_mode,
            embedding: m.embedding,
            inner: m.inner,
            iterations_run: m.iterations_run,
            objective_history: m.objective_history,
        }
    }
}

impl TryFrom<SsvddFile> for SsvddModel {
    type Error = String;

    fn try_from(f: SsvddFile) -> std::result::Result<Self, String> {
        if f.kind != "ssvdd" {
            return Err(format!("expected type \"ssvdd\", found {:?}", f.kind));
        }
        if f.q.len() != f.d * f.d_input {
            return Err("q length disagrees with d and d_input".into());
        }
        if f.inner.dim() != f.d && !f.inner.support_indices.is_empty() {
            return Err("inner model dimensionality differs from d".into());
        }
        if matches!(f.kernel_mode, KernelMode::NonlinearRbf { .. }) != f.embedding.is_some() {
            return Err("kernel_mode and embedding disagree".into());
        }
        Ok(SsvddModel {
            q: DMatrix::from_row_slice(f.d, f.d_input, &f.q),
            inner: f.inner,
            variant: f.variant,
            eta: f.eta,
            beta: f.beta,
            kernel_mode: f.kernel_mode,
            embedding: f.embedding,
            iterations_run: f.iterations_run,
            objective_history: f.objective_history,
        })
    }
}
