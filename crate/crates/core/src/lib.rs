//! One-class classification toolkit: OC-SVM, SVDD and Subspace SVDD trained
//! on target-class feature vectors, plus the PCA / grid-search / triage
//! pipeline that flags likely rare-class samples for expert review.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod model_selection;
pub mod ocsvm;
pub mod pca;
pub mod solver;
pub mod ssvdd;
pub mod svdd;

pub use dataset::{
    generate_synthetic, load_features, save_features, split_by_target, FeatureMatrix, TargetSplit,
};
pub use error::{Error, Result};
pub use kernel::{gram_matrix, kernel_eval, KernelSpec};
pub use metrics::{evaluate, EvalReport};
pub use model::{ClassifierConfig, ClassifierType, Decision, KernelKind, OneClassModel, Scored};
pub use model_selection::{grid_search, GridSpec, SelectionResult};
pub use ocsvm::{train_ocsvm, OcSvmModel};
pub use pca::{fit_pca, PcaModel};
pub use ssvdd::{train_ssvdd, SsvddModel, SsvddParams, Variant};
pub use svdd::{train_svdd, SvddModel};
