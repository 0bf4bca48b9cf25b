//! Single-cell blood-smear screening built around perinuclear ring
//! decomposition.
//!
//! The pipeline stages are:
//!
//! 1. **imgproc** – decoding, 256×256 standardization, CIELAB/HSV/gray
//!    conversion, CLAHE on lightness, Gaussian smoothing.
//! 2. **segmentation** – chromatic scoring, cropped Otsu with a k-means
//!    fallback, morphological refinement, fitness-ranked nucleus selection.
//! 3. **zones** – adaptive dilation radii, the proximal/distal rings and the
//!    gross cell boundary.
//! 4. **features** – morphology, color moments, nucleus-to-ring gradients,
//!    GLCM and 32-group LBP per spatial domain.
//! 5. **ml** – six Level-0 learners, Platt calibration, out-of-fold stacking
//!    with an RBF-SVM meta-classifier and stratified cross-validation.
//! 6. **metrics** – confusion statistics, MCC, ROC-AUC and PR-AUC.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise.

pub mod error;
pub mod features;
pub mod grid;
pub mod imgproc;
pub mod metrics;
pub mod ml;
pub mod morphology;
pub mod par;
pub mod pipeline;
pub mod seed;
pub mod segmentation;
pub mod synth;
pub mod zones;

pub use error::{Error, Result};
pub use grid::{BinaryMask, Grid};
pub use imgproc::{ColorSpace, PlanarImage};
