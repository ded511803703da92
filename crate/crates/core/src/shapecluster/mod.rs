//! Shape Context discretisation and novelty detection.
//!
//! A sample of training descriptors is clustered hierarchically under χ²,
//! a one-vs-rest RBF SVM learns those labels and extends them to every
//! other descriptor, small clusters are folded into their nearest surviving
//! medoid, and a one-class SVM on the same sample scores how familiar a
//! contour looks.

mod cv;
mod distance;
mod hc;
mod io;
mod kernel;
mod labeling;
mod ocsvm;
mod smo;
mod svm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{cross_validate, stratified_split, CvReport};
pub use distance::{chi2_matrix, DistanceMatrix};
pub use hc::{adjusted_rand_index, hierarchical_cluster};
pub use io::{load_cluster_model, save_cluster_model};
pub use kernel::{rbf_cross, rbf_gram};
pub use labeling::{discard_small_clusters, subsample_and_label, ClusterModel, LabelingReport};
pub use ocsvm::OcSvmModel;
pub use smo::{solve, RhoRule, SmoProblem, SmoSolution};
pub use svm::SvmModel;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("cannot form {k} clusters from {n} samples")]
    TooFewSamples { n: usize, k: usize },
    #[error("cluster {0} is empty after clustering")]
    DegenerateClustering(usize),
    #[error("every cluster fell below the discard threshold")]
    AllClustersDiscarded,
    #[error("class {class} has {count} samples; need at least 2 per class and 2 classes")]
    ClassUnderflow { class: usize, count: usize },
    #[error("descriptor length {got} does not match model ({expected})")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cluster model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ClusterError>;

/// Clustering, SVM and novelty settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    /// Clusters requested from the hierarchical step.
    pub k: usize,
    /// Size of the random training subset.
    pub sample: usize,
    /// Clusters whose share of all labels falls below this are folded away.
    pub discard_threshold: f64,
    pub svm_c: f64,
    pub gamma: f64,
    pub nu: f64,
    /// KKT tolerance of the SMO solver.
    pub tolerance: f64,
    pub cv_folds: usize,
    pub cv_validation_fraction: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k: 30,
            sample: 10_000,
            discard_threshold: 0.005,
            svm_c: 1e5,
            gamma: 1e-3,
            nu: 0.1,
            tolerance: 1e-3,
            cv_folds: 5,
            cv_validation_fraction: 0.2,
        }
    }
}

