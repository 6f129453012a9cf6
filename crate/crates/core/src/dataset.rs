//! Labeled feature vectors: CSV ingestion, target/outlier partitioning and
//! seeded Gaussian blob fixtures.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// `n` samples of dimension `D`, one row per sample, with an id and class
/// label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    labels: Vec<String>,
    data: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, labels: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        let n = data.nrows();
        if ids.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: ids.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        if data.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "feature dimensionality must be at least 1".into(),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            // column-major storage
            let (row, col) = (pos % n, pos / n);
            return Err(Error::NonFiniteValue {
                line: row as u64 + 2,
                column: col + 2,
                value: data[(row, col)].to_string(),
            });
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(FeatureMatrix { ids, labels, data })
    }

    pub fn from_rows(ids: Vec<String>, labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let data = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Self::new(ids, labels, data)
    }

    /// Unlabeled matrix with generated ids `s0, s1, ...`; handy for scoring.
    pub fn unlabeled(data: DMatrix<f64>) -> Result<Self> {
        let n = data.nrows();
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        Self::new(ids, vec![String::new(); n], data)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        let data = if indices.is_empty() {
            DMatrix::zeros(0, self.dim())
        } else {
            self.data.select_rows(indices)
        };
        FeatureMatrix {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            data,
        }
    }

    /// Same ids and labels with new feature rows (e.g. after projection).
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<FeatureMatrix> {
        Self::new(self.ids.clone(), self.labels.clone(), data)
    }

    pub fn is_target(&self, target_class: &str) -> Vec<bool> {
        self.labels.iter().map(|l| l == target_class).collect()
    }
}

#[derive(Clone, Debug)]
pub struct TargetSplit {
    pub target: FeatureMatrix,
    pub outliers: FeatureMatrix,
}

/// Partitions samples into the target class and everything else. Labels are
/// compared exactly.
pub fn split_by_target(features: &FeatureMatrix, target_class: &str) -> Result<TargetSplit> {
    let (target_idx, outlier_idx): (Vec<usize>, Vec<usize>) =
        (0..features.n()).partition(|&i| features.labels[i] == target_class);
    if target_idx.is_empty() {
        return Err(Error::TargetClassNotFound(target_class.to_string()));
    }
    Ok(TargetSplit {
        target: features.select(&target_idx),
        outliers: features.select(&outlier_idx),
    })
}

pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_features(file)
}

pub fn read_features<R: std::io::Read>(reader: R) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::EmptyFile),
    };
    let width = header.len();
    if width < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(Error::MalformedHeader(
            "expected `id,label,f0,...`".to_string(),
        ));
    }
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{j}") {
            return Err(Error::MalformedHeader(format!(
                "column {} is {name:?}, expected \"f{j}\"",
                j + 3
            )));
        }
    }
    let dim = width - 2;

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashSet::new();
    for record in records {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != width {
            return Err(Error::WrongColumnCount {
                line,
                expected: width,
                found: record.len(),
            });
        }
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        for (j, cell) in record.iter().skip(2).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumeric {
                line,
                column: j + 3,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    line,
                    column: j + 3,
                    value: cell.to_string(),
                });
            }
            values.push(v);
        }
        ids.push(id);
        labels.push(record[1].to_string());
    }
    if ids.is_empty() {
        return Err(Error::EmptyFile);
    }
    let data = DMatrix::from_row_slice(ids.len(), dim, &values);
    FeatureMatrix::new(ids, labels, data)
}

/// Writes the CSV layout read by [`load_features`]: LF line endings and 17
/// significant digits per value.
pub fn save_features(path: &Path, features: &FeatureMatrix) -> Result<()> {
    write_atomic(path, |w| write_features(w, features))
}

pub fn write_features(w: &mut dyn Write, features: &FeatureMatrix) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..features.dim()).map(|j| format!("f{j}")));
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..features.n() {
        record.clear();
        record.push(features.ids[i].clone());
        record.push(features.labels[i].clone());
        record.extend(features.data.row(i).iter().map(|v| format!("{v:.16e}")));
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<features>", e))?;
    Ok(())
}

/// One Gaussian cluster of a synthetic fixture.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cluster {
    pub mean: Vec<f64>,
    /// Row-major `D x D` covariance.
    pub covariance: Vec<Vec<f64>>,
    pub count: usize,
    pub label: String,
}

impl Cluster {
    pub fn isotropic(mean: Vec<f64>, variance: f64, count: usize, label: &str) -> Self {
        let variances = vec![variance; mean.len()];
        Self::diagonal(mean, &variances, count, label)
    }

    pub fn diagonal(mean: Vec<f64>, variances: &[f64], count: usize, label: &str) -> Self {
        let d = mean.len();
        let covariance = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { variances[i] } else { 0.0 })
                    .collect()
            })
            .collect();
        Cluster {
            mean,
            covariance,
            count,
            label: label.to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlobSpec {
    pub clusters: Vec<Cluster>,
    pub seed: u64,
}

/// Draws every cluster in order from one ChaCha stream. Sample ids are
/// `s000000, s000001, ...` across all clusters.
pub fn generate_synthetic(spec: &BlobSpec) -> Result<FeatureMatrix> {
    let dim = spec
        .clusters
        .first()
        .map(|c| c.mean.len())
        .ok_or_else(|| Error::InvalidParameter("blob spec has no clusters".into()))?;

    let mut factors = Vec::with_capacity(spec.clusters.len());
    for (k, cluster) in spec.clusters.iter().enumerate() {
        if cluster.count == 0 {
            return Err(Error::InvalidParameter(format!("cluster {k} has count 0")));
        }
        if cluster.mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: cluster.mean.len(),
            });
        }
        factors.push(covariance_factor(&cluster.covariance, dim, k)?);
    }

    let total: usize = spec.clusters.iter().map(|c| c.count).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = DMatrix::zeros(total, dim);
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for (cluster, factor) in spec.clusters.iter().zip(&factors) {
        let mean = RowDVector::from_row_slice(&cluster.mean);
        for _ in 0..cluster.count {
            let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let x = &mean + (factor * z).transpose();
            data.set_row(row, &x);
            labels.push(cluster.label.clone());
            row += 1;
        }
    }
    let ids = (0..total).map(|i| format!("s{i:06}")).collect();
    FeatureMatrix::new(ids, labels, data)
}

/// `L` with `L Lᵀ = cov`, via the eigendecomposition so that singular
/// (merely semi-definite) covariances are accepted.
fn covariance_factor(cov: &[Vec<f64>], dim: usize, cluster: usize) -> Result<DMatrix<f64>> {
    if cov.len() != dim || cov.iter().any(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: cov.len(),
        });
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| cov[i][j]);
    let scale = m.amax();
    if (&m - m.transpose()).amax() > 1e-12 * scale.max(1.0) {
        return Err(Error::NonPsdCovariance(cluster));
    }
    let eig = SymmetricEigen::new(m);
    let tol = 1e-10 * scale.max(1.0);
    let mut sqrt_vals = DVector::zeros(dim);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < -tol {
            return Err(Error::NonPsdCovariance(cluster));
        }
        sqrt_vals[i] = if v > 0.0 { v.sqrt() } else { 0.0 };
    }
    Ok(eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals))
}
