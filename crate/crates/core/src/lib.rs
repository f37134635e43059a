//! Machine-learning building blocks for volumetric brain imaging.
//!
//! The crate follows the estimator / predictor / transformer split: every
//! analysis consumes a dense `samples × features` [`DataMatrix`] obtained by
//! masking a 4D volume, and every per-feature result (weights, scores,
//! labels) can be scattered back into voxel space with [`masking::unmask`].
//!
//! Modules:
//! * [`volume`], [`nifti`], [`resample`], [`masking`]: volumes, the NIfTI-1
//!   subset, affine resampling and the 4D ⇄ 2D conversion.
//! * [`signal`]: detrending, variance normalization and FFT band-pass.
//! * [`select`]: ANOVA F screening and k-best selection.
//! * [`linear`]: linear SVM, logistic regression, ridge, lasso, LARS.
//! * [`model_selection`]: k-fold / shuffle-split, cross-validation, grid search.
//! * [`searchlight`]: spherical-neighborhood decoding maps.
//! * [`decomposition`]: PCA, FastICA and concatenation group ICA.
//! * [`clustering`]: connectivity-constrained Ward and k-means.
//! * [`synth`]: seeded synthetic datasets with known ground truth.

pub mod clustering;
pub mod decomposition;
pub mod error;
pub mod linalg;
pub mod linear;
pub mod masking;
pub mod model_selection;
pub mod nifti;
pub mod resample;
pub mod searchlight;
pub mod select;
pub mod signal;
pub mod synth;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{Affine4, BrainMask, DataMatrix, ElementKind, Volume4D};
