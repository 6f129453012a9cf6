//! Python bindings: feature files, PCA, the three one-class classifiers,
//! grid search and evaluation. Matrices cross the boundary as lists of rows.

use std::path::PathBuf;

use nalgebra::DMatrix;
use occ::model_selection::GridSpec;
use occ::pca::fit_pca_matrix;
use occ::{
    ClassifierConfig, ClassifierType, Decision, Error, FeatureMatrix, KernelKind, KernelSpec,
    OneClassModel, PcaModel,
};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let dim = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[pyclass(name = "Features", frozen)]
struct PyFeatures {
    inner: FeatureMatrix,
}

#[pymethods]
impl PyFeatures {
    #[new]
    fn new(ids: Vec<String>, labels: Vec<String>, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = FeatureMatrix::from_rows(ids, labels, &rows).map_err(to_py)?;
        Ok(PyFeatures { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyFeatures {
            inner: occ::load_features(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        occ::save_features(&path, &self.inner).map_err(to_py)
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        rows_of(self.inner.data())
    }

    /// Rows whose label equals `target_class`.
    fn target(&self, target_class: &str) -> PyResult<Self> {
        let split = occ::split_by_target(&self.inner, target_class).map_err(to_py)?;
        Ok(PyFeatures {
            inner: split.target,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Features(n={}, dim={})", self.inner.n(), self.inner.dim())
    }
}

#[pyclass(name = "Pca", frozen)]
struct PyPca {
    inner: PcaModel,
}

#[pymethods]
impl PyPca {
    /// Fits on `rows` (the target-class training samples) keeping at most `k` axes.
    #[staticmethod]
    #[pyo3(signature = (rows, k = occ::pca::DEFAULT_COMPONENTS))]
    fn fit(rows: Vec<Vec<f64>>, k: usize) -> PyResult<Self> {
        Ok(PyPca {
            inner: fit_pca_matrix(&matrix(&rows)?, k).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyPca {
            inner: PcaModel::from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    fn project(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows_of(
            &self.inner.project_matrix(&matrix(&rows)?).map_err(to_py)?,
        ))
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn explained_variance(&self) -> Vec<f64> {
        self.inner.explained_variance.clone()
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

#[pyclass(name = "Model", frozen)]
struct PyModel {
    config: ClassifierConfig,
    inner: OneClassModel,
}

#[pymethods]
impl PyModel {
    /// Trains on target-class `rows`. `classifier` is one of `ocsvm`, `svdd`,
    /// `ssvdd`, `ssvdd-r1`, `ssvdd-r2`.
    #[staticmethod]
    #[pyo3(signature = (rows, classifier, c, kernel = "linear", sigma = None, d = None, eta = None, beta = None, max_iters = None))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        rows: Vec<Vec<f64>>,
        classifier: &str,
        c: f64,
        kernel: &str,
        sigma: Option<f64>,
        d: Option<usize>,
        eta: Option<f64>,
        beta: Option<f64>,
        max_iters: Option<usize>,
    ) -> PyResult<Self> {
        let mut config = ClassifierConfig::new(
            parse::<ClassifierType>(classifier)?,
            parse::<KernelKind>(kernel)?,
            c,
        );
        config.sigma = sigma;
        config.d = d;
        config.eta = eta;
        config.beta = beta;
        config.max_iters = max_iters;
        let x = matrix(&rows)?;
        let inner = py.detach(|| config.train(&x)).map_err(to_py)?;
        Ok(PyModel { config, inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (config, inner) =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyModel { config, inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&(&self.config, &self.inner))
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// `(is_target, score)` per row; positive scores lie inside the boundary.
    fn classify(&self, py: Python<'_>, rows: Vec<Vec<f64>>) -> PyResult<Vec<(bool, f64)>> {
        let x = matrix(&rows)?;
        let scored = py.detach(|| self.inner.classify_rows(&x)).map_err(to_py)?;
        Ok(scored
            .iter()
            .map(|s| (s.decision.is_target(), s.score))
            .collect())
    }

    #[getter]
    fn config(&self) -> PyResult<String> {
        serde_json::to_string(&self.config).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }
}

/// `(tp, fp, tn, fn, tpr, tnr, gm)`; undefined rates are `None`.
type Counts = (
    usize,
    usize,
    usize,
    usize,
    Option<f64>,
    Option<f64>,
    Option<f64>,
);

/// Confusion counts and rates for `(id, is_target)` predictions against truth.
#[pyfunction]
fn evaluate(predictions: Vec<(String, bool)>, truth: Vec<(String, bool)>) -> PyResult<Counts> {
    let predictions: Vec<(String, Decision)> = predictions
        .into_iter()
        .map(|(id, t)| {
            (
                id,
                if t {
                    Decision::Target
                } else {
                    Decision::Outlier
                },
            )
        })
        .collect();
    let r = occ::evaluate(&predictions, &truth).map_err(to_py)?;
    Ok((r.tp, r.fp, r.tn, r.fn_, r.tpr, r.tnr, r.gm))
}

#[pyfunction]
#[pyo3(signature = (x, y, sigma = None))]
fn kernel(x: Vec<f64>, y: Vec<f64>, sigma: Option<f64>) -> PyResult<f64> {
    let spec = match sigma {
        Some(s) => KernelSpec::rbf(s).map_err(to_py)?,
        None => KernelSpec::Linear,
    };
    occ::kernel_eval(&spec, &x, &y).map_err(to_py)
}

/// Best configuration JSON, its validation GM, and `(config_json, gm)` rows.
type Selection = (String, f64, Vec<(String, f64)>);

/// Grid search over a JSON grid; the leaderboard is sorted by GM.
#[pyfunction]
#[pyo3(signature = (train_target, validation, target_class, grid_json, jobs = 1))]
fn grid_search(
    py: Python<'_>,
    train_target: &PyFeatures,
    validation: &PyFeatures,
    target_class: &str,
    grid_json: &str,
    jobs: usize,
) -> PyResult<Selection> {
    let grid: GridSpec =
        serde_json::from_str(grid_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let result = py
        .detach(|| {
            occ::grid_search(
                &train_target.inner,
                &validation.inner,
                target_class,
                &grid,
                jobs,
            )
        })
        .map_err(to_py)?;
    let json = |c: &ClassifierConfig| {
        serde_json::to_string(c).map_err(|e| PyValueError::new_err(e.to_string()))
    };
    let board = result
        .leaderboard
        .iter()
        .map(|e| Ok((json(&e.config)?, e.gm())))
        .collect::<PyResult<Vec<_>>>()?;
    Ok((json(&result.best_config)?, result.best_validation_gm, board))
}

#[pymodule]
fn occkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFeatures>()?;
    m.add_class::<PyPca>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(grid_search, m)?)?;
    Ok(())
}
