//! Classifier-agnostic configuration, training dispatch and scoring.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::ocsvm::{train_ocsvm, OcSvmModel};
use crate::ssvdd::{train_ssvdd, KernelMode, SsvddModel, SsvddParams, Variant, DEFAULT_MAX_ITERS};
use crate::svdd::{train_svdd, SvddModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Target,
    Outlier,
}

impl Decision {
    pub fn is_target(self) -> bool {
        self == Decision::Target
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Target => "target",
            Decision::Outlier => "outlier",
        })
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "target" => Ok(Decision::Target),
            "outlier" => Ok(Decision::Outlier),
            other => Err(Error::InvalidParameter(format!(
                "unknown decision {other:?}"
            ))),
        }
    }
}

/// A decision with its margin score (positive = inside the target region).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scored {
    pub decision: Decision,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierType {
    #[serde(rename = "ocsvm")]
    OcSvm,
    #[serde(rename = "svdd")]
    Svdd,
    #[serde(rename = "ssvdd")]
    Ssvdd,
    #[serde(rename = "ssvdd-r1")]
    SsvddR1,
    #[serde(rename = "ssvdd-r2")]
    SsvddR2,
}

impl ClassifierType {
    pub const ALL: [ClassifierType; 5] = [
        ClassifierType::OcSvm,
        ClassifierType::Svdd,
        ClassifierType::Ssvdd,
        ClassifierType::SsvddR1,
        ClassifierType::SsvddR2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierType::OcSvm => "ocsvm",
            ClassifierType::Svdd => "svdd",
            ClassifierType::Ssvdd => "ssvdd",
            ClassifierType::SsvddR1 => "ssvdd-r1",
            ClassifierType::SsvddR2 => "ssvdd-r2",
        }
    }

    pub fn variant(self) -> Option<Variant> {
        match self {
            ClassifierType::Ssvdd => Some(Variant::Plain),
            ClassifierType::SsvddR1 => Some(Variant::R1),
            ClassifierType::SsvddR2 => Some(Variant::R2),
            _ => None,
        }
    }

    pub fn is_subspace(self) -> bool {
        self.variant().is_some()
    }
}

impl FromStr for ClassifierType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown classifier {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "rbf" => Ok(KernelKind::Rbf),
            other => Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
        }
    }
}

/// A concrete hyper-parameter assignment for one classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub classifier: ClassifierType,
    pub kernel: KernelKind,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

impl ClassifierConfig {
    pub fn new(classifier: ClassifierType, kernel: KernelKind, c: f64) -> Self {
        ClassifierConfig {
            classifier,
            kernel,
            c,
            sigma: None,
            d: None,
            eta: None,
            beta: None,
            max_iters: None,
        }
    }

    fn require<T: Copy>(value: Option<T>, name: &str, who: ClassifierType) -> Result<T> {
        value.ok_or_else(|| {
            Error::InvalidParameter(format!("{} requires a value for {name}", who.name()))
        })
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        match self.kernel {
            KernelKind::Linear => Ok(KernelSpec::Linear),
            KernelKind::Rbf => {
                KernelSpec::rbf(Self::require(self.sigma, "sigma", self.classifier)?)
            }
        }
    }

    pub fn ssvdd_params(&self) -> Result<SsvddParams> {
        let variant = self.classifier.variant().ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{} is not a subspace model",
                self.classifier.name()
            ))
        })?;
        let beta = match variant {
            Variant::Plain => self.beta.unwrap_or(0.0),
            _ => Self::require(self.beta, "beta", self.classifier)?,
        };
        let mut params = SsvddParams::new(
            self.c,
            Self::require(self.d, "d", self.classifier)?,
            Self::require(self.eta, "eta", self.classifier)?,
            beta,
            variant,
        );
        params.max_iters = self.max_iters.unwrap_or(DEFAULT_MAX_ITERS);
        if let KernelSpec::Rbf { sigma } = self.kernel_spec()? {
            params.kernel_mode = KernelMode::NonlinearRbf { sigma };
        }
        Ok(params)
    }

    /// Trains on target-class rows only.
    pub fn train(&self, data: &DMatrix<f64>) -> Result<OneClassModel> {
        Ok(match self.classifier {
            ClassifierType::OcSvm => {
                OneClassModel::OcSvm(train_ocsvm(data, self.c, self.kernel_spec()?)?)
            }
            ClassifierType::Svdd => {
                OneClassModel::Svdd(train_svdd(data, self.c, self.kernel_spec()?)?)
            }
            _ => OneClassModel::Ssvdd(Box::new(train_ssvdd(data, &self.ssvdd_params()?)?)),
        })
    }
}

/// Any trained one-class model. Serializes to its own `{"type": ...}` form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneClassModel {
    OcSvm(OcSvmModel),
    Svdd(SvddModel),
    Ssvdd(Box<SsvddModel>),
}

impl OneClassModel {
    pub fn dim(&self) -> usize {
        match self {
            OneClassModel::OcSvm(m) => m.dim(),
            OneClassModel::Svdd(m) => m.dim(),
            OneClassModel::Ssvdd(m) => m.dim(),
        }
    }

    pub fn classify(&self, x: &[f64]) -> Result<Scored> {
        match self {
            OneClassModel::OcSvm(m) => m.classify(x),
            OneClassModel::Svdd(m) => m.classify(x),
            OneClassModel::Ssvdd(m) => m.classify(x),
        }
    }

    /// Scores every row; rows are independent so this runs in parallel with
    /// order-preserving output.
    pub fn classify_rows(&self, data: &DMatrix<f64>) -> Result<Vec<Scored>> {
        use rayon::prelude::*;
        if data.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: data.ncols(),
            });
        }
        (0..data.nrows())
            .into_par_iter()
            .map(|i| {
                let row: Vec<f64> = data.row(i).iter().copied().collect();
                self.classify(&row)
            })
            .collect()
    }
}
