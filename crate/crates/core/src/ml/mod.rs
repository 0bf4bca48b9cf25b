//! Level-0 learners, calibration, stacking and cross-validation.

pub mod cv;
pub mod folds;
pub mod gbdt;
pub mod knn;
pub mod learner;
pub mod logreg;
pub mod matrix;
pub mod platt;
pub mod scaler;
pub mod stack;
pub mod svm;
pub mod table;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use cv::{ablate, evaluate_cv, EvaluationReport};
pub use learner::{BaseLearnerSpec, CalibratedModel, LearnerKind};
pub use matrix::Matrix;
pub use stack::{stack_fit, StackedModel};
pub use table::FeatureTable;

/// Learner hyperparameters and protocol settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlConfig {
    /// Outer and out-of-fold split count.
    pub folds: usize,
    /// Internal split count for Platt calibration.
    pub calibration_folds: usize,
    pub threshold: f64,
    pub rf: tree::ForestParams,
    pub et: tree::ForestParams,
    pub svm: svm::SvmParams,
    pub logreg: logreg::LogRegParams,
    pub knn: knn::KnnParams,
    pub gbdt: gbdt::GbdtParams,
    /// Level-1 RBF-SVM.
    pub meta: svm::SvmParams,
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            calibration_folds: 5,
            threshold: 0.5,
            rf: tree::ForestParams::random_forest(),
            et: tree::ForestParams::extra_trees(),
            svm: svm::SvmParams::default(),
            logreg: logreg::LogRegParams::default(),
            knn: knn::KnnParams::default(),
            gbdt: gbdt::GbdtParams::default(),
            meta: svm::SvmParams::default(),
        }
    }
}
