//! Linear and RBF kernels, scalar and batched.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { sigma: f64 },
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Result<Self> {
        let spec = KernelSpec::Rbf { sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            KernelSpec::Rbf { sigma } => Err(Error::InvalidParameter(format!(
                "RBF sigma must be positive and finite, got {sigma}"
            ))),
        }
    }

    fn at_sq_dist(&self, d2: f64) -> f64 {
        match *self {
            KernelSpec::Linear => unreachable!("linear kernel does not use distances"),
            KernelSpec::Rbf { sigma } => (-d2 / (2.0 * sigma * sigma)).exp(),
        }
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x.len(), y.len())?;
    Ok(match spec {
        KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
        KernelSpec::Rbf { .. } => {
            let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            spec.at_sq_dist(d2)
        }
    })
}

/// `G[i, j] = k(a_i, b_j)` for the rows of `a` and `b`.
///
/// RBF distances use `|x|² + |y|² - 2<x, y>` clamped at zero.
pub fn gram_matrix(spec: &KernelSpec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dims(a.ncols(), b.ncols())?;
    let mut g = a * b.transpose();
    if let KernelSpec::Rbf { .. } = spec {
        let na = row_sq_norms(a);
        let nb = row_sq_norms(b);
        for j in 0..g.ncols() {
            for i in 0..g.nrows() {
                let d2 = (na[i] + nb[j] - 2.0 * g[(i, j)]).max(0.0);
                g[(i, j)] = spec.at_sq_dist(d2);
            }
        }
    }
    Ok(g)
}

/// Gram matrix of a sample set against itself: exactly symmetric, with the
/// diagonal evaluated directly (all ones for RBF).
pub fn gram_self(spec: &KernelSpec, a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = gram_matrix(spec, a, a).expect("same matrix");
    let n = g.nrows();
    for j in 0..n {
        for i in 0..j {
            g[(j, i)] = g[(i, j)];
        }
        g[(j, j)] = match spec {
            KernelSpec::Linear => a.row(j).norm_squared(),
            KernelSpec::Rbf { .. } => 1.0,
        };
    }
    g
}

/// Kernel values between every row of `a` and a single vector `x`.
pub fn kernel_column(spec: &KernelSpec, a: &DMatrix<f64>, x: &[f64]) -> Result<DVector<f64>> {
    check_dims(a.ncols(), x.len())?;
    Ok(DVector::from_iterator(
        a.nrows(),
        (0..a.nrows()).map(|i| {
            let row = a.row(i);
            match spec {
                KernelSpec::Linear => row.iter().zip(x).map(|(p, q)| p * q).sum(),
                KernelSpec::Rbf { .. } => {
                    let d2: f64 = row.iter().zip(x).map(|(p, q)| (p - q) * (p - q)).sum();
                    spec.at_sq_dist(d2)
                }
            }
        }),
    ))
}

fn row_sq_norms(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m.row(i).norm_squared()).collect()
}
