//! Principal component analysis fitted on target-class samples only.

use log::info;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// Number of components retained by default.
pub const DEFAULT_COMPONENTS: usize = 100;

/// Mean and leading principal axes of the fitting data. `components` is
/// `k x D` with orthonormal rows.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    pub components: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    pub fn d_input(&self) -> usize {
        self.mean.len()
    }

    /// `(x - mean)` mapped onto the components, one output row per input row.
    pub fn project_matrix(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if data.ncols() != self.d_input() {
            return Err(Error::DimensionMismatch {
                expected: self.d_input(),
                found: data.ncols(),
            });
        }
        let mut centered = data.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.mean.transpose();
        }
        Ok(centered * self.components.transpose())
    }

    pub fn project(&self, features: &FeatureMatrix) -> Result<FeatureMatrix> {
        features.with_data(self.project_matrix(features.data())?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PcaFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PcaFile = serde_json::from_str(text)?;
        file.try_into()
    }

    /// SHA-256 of the canonical JSON form; classifier files record it so a
    /// model is never scored through a different projection.
    pub fn fingerprint(&self) -> String {
        let json = self.to_json().expect("serializable");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Fraction of the retained variance over the total variance of the
    /// fitting data.
    pub fn explained_fraction(&self, total_variance: f64) -> f64 {
        if total_variance <= 0.0 {
            return 1.0;
        }
        self.explained_variance.iter().sum::<f64>() / total_variance
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PcaFile {
    mean: Vec<f64>,
    components: Vec<f64>,
    explained_variance: Vec<f64>,
    k: usize,
    d_input: usize,
}

impl From<&PcaModel> for PcaFile {
    fn from(m: &PcaModel) -> Self {
        PcaFile {
            mean: m.mean.iter().copied().collect(),
            components: m.components.transpose().iter().copied().collect(),
            explained_variance: m.explained_variance.clone(),
            k: m.k(),
            d_input: m.d_input(),
        }
    }
}

impl TryFrom<PcaFile> for PcaModel {
    type Error = Error;

    fn try_from(f: PcaFile) -> Result<Self> {
        if f.mean.len() != f.d_input
            || f.components.len() != f.k * f.d_input
            || f.explained_variance.len() != f.k
        {
            return Err(Error::InvalidParameter(
                "PCA file arrays disagree with k and d_input".into(),
            ));
        }
        Ok(PcaModel {
            mean: DVector::from_vec(f.mean),
            components: DMatrix::from_row_slice(f.k, f.d_input, &f.components),
            explained_variance: f.explained_variance,
        })
    }
}

/// Fits the leading `min(k_requested, n - 1, D)` principal components.
///
/// When `D > n` the `n x n` Gram matrix of the centered data is decomposed
/// and its eigenvectors mapped back into feature space. Each component is
/// signed so that its largest-magnitude coordinate is positive.
pub fn fit_pca(target_train: &FeatureMatrix, k_requested: usize) -> Result<PcaModel> {
    fit_pca_matrix(target_train.data(), k_requested)
}

pub fn fit_pca_matrix(data: &DMatrix<f64>, k_requested: usize) -> Result<PcaModel> {
    let (n, dim) = data.shape();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    if k_requested == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let k = k_requested.min(n - 1).min(dim);
    if k < k_requested {
        info!("PCA: requested {k_requested} components, retaining {k} (n = {n}, D = {dim})");
    }
    Ok(principal_axes(data, k))
}

/// Leading `k <= D` principal axes of `data`; directions without variance
/// are filled in with canonical axes orthogonal to the rest.
pub(crate) fn principal_axes(data: &DMatrix<f64>, k: usize) -> PcaModel {
    let (n, dim) = data.shape();
    debug_assert!(n >= 1 && k <= dim);
    let mean = data.row_mean().transpose();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let denom = n.saturating_sub(1).max(1) as f64;

    let (values, vectors) = if dim <= n {
        let cov = centered.transpose() * &centered / denom;
        let (vals, vecs) = sorted_eigen(cov, k);
        (vals, vecs)
    } else {
        let gram = &centered * centered.transpose() / denom;
        let (vals, u) = sorted_eigen(gram, k);
        // v = Xcᵀ u / sqrt((n-1) λ)
        let mut v = centered.transpose() * u;
        for (j, &lam) in vals.iter().enumerate() {
            let scale = (denom * lam).sqrt();
            let mut col = v.column_mut(j);
            if scale > 0.0 {
                col /= scale;
            } else {
                col.fill(0.0);
            }
        }
        (vals, v)
    };

    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = top * 1e-12 * dim.max(n) as f64;
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    for (j, &lam) in values.iter().enumerate() {
        if lam <= cutoff || top == 0.0 {
            break;
        }
        match orthonormalize_against(vectors.column(j).into_owned(), &basis) {
            Some(v) => {
                basis.push(v);
                explained.push(lam);
            }
            None => break,
        }
    }
    // Zero-variance directions: complete the basis with canonical axes.
    let mut axis = 0;
    while basis.len() < k {
        let mut e = DVector::zeros(dim);
        e[axis] = 1.0;
        axis += 1;
        if let Some(v) = orthonormalize_against(e, &basis) {
            basis.push(v);
            explained.push(0.0);
        }
    }

    let mut components = DMatrix::zeros(k, dim);
    for (i, mut v) in basis.into_iter().enumerate() {
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        components.set_row(i, &v.transpose());
    }
    PcaModel {
        mean,
        components,
        explained_variance: explained,
    }
}

/// Total variance (trace of the sample covariance).
pub fn total_variance(data: &DMatrix<f64>) -> f64 {
    let n = data.nrows();
    if n < 2 {
        return 0.0;
    }
    let mean = data.row_mean();
    let mut sum = 0.0;
    for row in data.row_iter() {
        sum += (row - &mean).norm_squared();
    }
    sum / (n - 1) as f64
}

/// Leading `k` eigenpairs of a symmetric matrix, eigenvalues descending.
fn sorted_eigen(m: DMatrix<f64>, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

/// Two passes of Gram-Schmidt; `None` when `v` is (numerically) inside the
/// span of `basis`.
fn orthonormalize_against(mut v: DVector<f64>, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    let norm0 = v.norm();
    if norm0 == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let proj = b.dot(&v);
            v.axpy(-proj, b, 1.0);
        }
    }
    let norm = v.norm();
    if norm <= 1e-8 * norm0 {
        return None;
    }
    Some(v / norm)
}
