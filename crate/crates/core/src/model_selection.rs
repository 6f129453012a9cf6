//! Exhaustive hyper-parameter search ranked by validation-set GM.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalReport};
use crate::model::{ClassifierConfig, ClassifierType, KernelKind};

pub const DEFAULT_C: [f64; 5] = [0.01, 0.05, 0.1, 0.2, 0.3];
pub const DEFAULT_D: [usize; 9] = [1, 2, 3, 4, 5, 10, 20, 50, 100];
pub const DEFAULT_ETA: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];
pub const DEFAULT_BETA: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_SIGMA: [f64; 7] = [1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3];

fn default_c() -> Vec<f64> {
    DEFAULT_C.to_vec()
}
fn default_d() -> Vec<usize> {
    DEFAULT_D.to_vec()
}
fn default_eta() -> Vec<f64> {
    DEFAULT_ETA.to_vec()
}
fn default_beta() -> Vec<f64> {
    DEFAULT_BETA.to_vec()
}
fn default_sigma() -> Vec<f64> {
    DEFAULT_SIGMA.to_vec()
}

/// Candidate values per hyper-parameter. Lists a classifier does not consume
/// are ignored; omitted lists in a config file take the default grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub classifier_type: ClassifierType,
    pub kernel_mode: KernelKind,
    #[serde(default = "default_c")]
    pub c_values: Vec<f64>,
    #[serde(default = "default_d")]
    pub d_values: Vec<usize>,
    #[serde(default = "default_eta")]
    pub eta_values: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta_values: Vec<f64>,
    #[serde(default = "default_sigma")]
    pub sigma_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

impl GridSpec {
    pub fn new(classifier_type: ClassifierType, kernel_mode: KernelKind) -> Self {
        GridSpec {
            classifier_type,
            kernel_mode,
            c_values: default_c(),
            d_values: default_d(),
            eta_values: default_eta(),
            beta_values: default_beta(),
            sigma_values: default_sigma(),
            max_iters: None,
        }
    }

    fn uses_subspace(&self) -> bool {
        self.classifier_type.is_subspace()
    }

    fn uses_beta(&self) -> bool {
        matches!(
            self.classifier_type,
            ClassifierType::SsvddR1 | ClassifierType::SsvddR2
        )
    }

    fn uses_sigma(&self) -> bool {
        self.kernel_mode == KernelKind::Rbf
    }

    /// The Cartesian product of the applicable lists, `C` varying slowest,
    /// then `d`, `η`, `β`, `σ`, each in declared order.
    pub fn configs(&self) -> Result<Vec<ClassifierConfig>> {
        fn axis<T: Copy>(used: bool, values: &[T], name: &str) -> Result<Vec<Option<T>>> {
            if !used {
                return Ok(vec![None]);
            }
            if values.is_empty() {
                return Err(Error::GridSearch(format!("{name} grid is empty")));
            }
            Ok(values.iter().copied().map(Some).collect())
        }
        let cs = axis(true, &self.c_values, "C")?;
        let ds = axis(self.uses_subspace(), &self.d_values, "d")?;
        let etas = axis(self.uses_subspace(), &self.eta_values, "eta")?;
        let betas = axis(self.uses_beta(), &self.beta_values, "beta")?;
        let sigmas = axis(self.uses_sigma(), &self.sigma_values, "sigma")?;

        let mut out = Vec::new();
        for c in &cs {
            for d in &ds {
                for eta in &etas {
                    for beta in &betas {
                        for sigma in &sigmas {
                            let mut cfg = ClassifierConfig::new(
                                self.classifier_type,
                                self.kernel_mode,
                                c.expect("C is always applicable"),
                            );
                            cfg.d = *d;
                            cfg.eta = *eta;
                            cfg.beta = *beta;
                            cfg.sigma = *sigma;
                            cfg.max_iters = if self.uses_subspace() {
                                self.max_iters
                            } else {
                                None
                            };
                            out.push(cfg);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    /// Position in [`GridSpec::configs`] order.
    pub index: usize,
    pub config: ClassifierConfig,
    pub report: EvalReport,
}

impl LeaderboardEntry {
    pub fn gm(&self) -> f64 {
        self.report.gm.unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFailure {
    pub index: usize,
    pub config: ClassifierConfig,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub best_config: ClassifierConfig,
    pub best_validation_gm: f64,
    /// Sorted by GM descending, ties broken by grid order.
    pub leaderboard: Vec<LeaderboardEntry>,
    pub failures: Vec<GridFailure>,
}

/// Trains `config` on the target rows and evaluates it on `validation`.
pub fn evaluate_config(
    config: &ClassifierConfig,
    train_target: &FeatureMatrix,
    validation: &FeatureMatrix,
    target_class: &str,
) -> Result<EvalReport> {
    let model = config.train(train_target.data())?;
    let scored = model.classify_rows(validation.data())?;
    let predictions: Vec<(&str, _)> = validation
        .ids()
        .iter()
        .map(String::as_str)
        .zip(scored.iter().map(|s| s.decision))
        .collect();
    let truth: Vec<(&str, bool)> = validation
        .ids()
        .iter()
        .map(String::as_str)
        .zip(validation.is_target(target_class))
        .collect();
    evaluate(&predictions, &truth)
}

/// Evaluates every grid point on `jobs` worker threads. The result does not
/// depend on `jobs`.
pub fn grid_search(
    train_target: &FeatureMatrix,
    validation: &FeatureMatrix,
    target_class: &str,
    grid: &GridSpec,
    jobs: usize,
) -> Result<SelectionResult> {
    let is_target = validation.is_target(target_class);
    if !is_target.iter().any(|&t| t) || is_target.iter().all(|&t| t) {
        return Err(Error::GridSearch(
            "validation set needs at least one target and one outlier sample".into(),
        ));
    }
    if train_target.dim() != validation.dim() {
        return Err(Error::DimensionMismatch {
            expected: train_target.dim(),
            found: validation.dim(),
        });
    }
    let configs = grid.configs()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::GridSearch(e.to_string()))?;
    let outcomes: Vec<Result<EvalReport>> = pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| evaluate_config(cfg, train_target, validation, target_class))
            .collect()
    });

    let mut leaderboard = Vec::new();
    let mut failures = Vec::new();
    for (index, (config, outcome)) in configs.into_iter().zip(outcomes).enumerate() {
        match outcome {
            Ok(report) => leaderboard.push(LeaderboardEntry {
                index,
                config,
                report,
            }),
            Err(e) => {
                log::warn!("grid point {index} skipped: {e}");
                failures.push(GridFailure {
                    index,
                    config,
                    error: e.to_string(),
                })
            }
        }
    }
    leaderboard.sort_by(|a, b| b.gm().total_cmp(&a.gm()).then(a.index.cmp(&b.index)));
    let best = leaderboard
        .first()
        .ok_or_else(|| Error::GridSearch(format!("all {} grid points failed", failures.len())))?;
    Ok(SelectionResult {
        best_config: best.config.clone(),
        best_validation_gm: best.gm(),
        leaderboard,
        failures,
    })
}

/// CSV with columns `config_json,gm,tpr,tp,flagged`, in leaderboard order.
pub fn write_leaderboard(w: &mut dyn Write, result: &SelectionResult) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wtr.write_record(["config_json", "gm", "tpr", "tp", "flagged"])?;
    for entry in &result.leaderboard {
        let rate = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        wtr.write_record([
            serde_json::to_string(&entry.config)?,
            rate(entry.report.gm),
            rate(entry.report.tpr),
            entry.report.tp.to_string(),
            entry.report.flagged.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<leaderboard>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let g = GridSpec::new(ClassifierType::Svdd, KernelKind::Linear);
        assert_eq!(g.configs().unwrap().len(), 5);
        let g = GridSpec::new(ClassifierType::OcSvm, KernelKind::Rbf);
        assert_eq!(g.configs().unwrap().len(), 35);
        let g = GridSpec::new(ClassifierType::Ssvdd, KernelKind::Linear);
        assert_eq!(g.configs().unwrap().len(), 5 * 9 * 4);
        let g = GridSpec::new(ClassifierType::SsvddR2, KernelKind::Rbf);
        assert_eq!(g.configs().unwrap().len(), 5 * 9 * 4 * 5 * 7);
    }

    #[test]
    fn lexicographic_order() {
        let mut g = GridSpec::new(ClassifierType::OcSvm, KernelKind::Rbf);
        g.c_values = vec![0.2, 0.1];
        g.sigma_values = vec![1.0, 10.0];
        let cfgs = g.configs().unwrap();
        let pairs: Vec<(f64, f64)> = cfgs.iter().map(|c| (c.c, c.sigma.unwrap())).collect();
        assert_eq!(
            pairs,
            vec![(0.2, 1.0), (0.2, 10.0), (0.1, 1.0), (0.1, 10.0)]
        );
    }

    #[test]
    fn empty_applicable_list_is_an_error() {
        let mut g = GridSpec::new(ClassifierType::Svdd, KernelKind::Rbf);
        g.sigma_values.clear();
        assert!(g.configs().is_err());
        // ignored lists may be empty
        let mut g = GridSpec::new(ClassifierType::Svdd, KernelKind::Linear);
        g.sigma_values.clear();
        g.d_values.clear();
        assert_eq!(g.configs().unwrap().len(), 5);
    }

    #[test]
    fn config_file_defaults() {
        let g: GridSpec = serde_json::from_str(
            r#"{"classifier_type":"ssvdd-r1","kernel_mode":"linear","c_values":[0.1]}"#,
        )
        .unwrap();
        assert_eq!(g.c_values, vec![0.1]);
        assert_eq!(g.d_values, DEFAULT_D.to_vec());
        assert_eq!(g.beta_values, DEFAULT_BETA.to_vec());
    }
}
