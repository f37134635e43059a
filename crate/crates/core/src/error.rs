use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // volume I/O
    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("truncated file {path}: {detail}")]
    TruncatedFile { path: PathBuf, detail: String },
    #[error("bad NIfTI magic or header: {0}")]
    BadMagic(String),
    #[error("non-finite value in {0}")]
    NonFiniteData(String),
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dimension {0} does not fit in a NIfTI-1 header")]
    DimensionOverflow(usize),
    #[error("affine is singular or malformed: {0}")]
    SingularAffine(String),
    #[error("mask would be empty")]
    EmptyMask,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("affine mismatch beyond tolerance (max abs diff {0:e})")]
    AffineMismatch(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid shape: {0}")]
    BadShape(String),

    // signal cleaning
    #[error("need at least 2 timepoints, got {0}")]
    TooFewTimepoints(usize),
    #[error("invalid frequency band: {0}")]
    BadBand(String),

    // supervised models
    #[error("a classifier needs two classes: {0}")]
    SingleClass(String),
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("solver did not converge after {iterations} iterations (objective {objective})")]
    NoConvergence { iterations: usize, objective: f64 },
    #[error("linear system is singular: {0}")]
    SingularSystem(String),
    #[error("degenerate correlation structure: {0}")]
    DegenerateCorrelation(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),

    // model selection
    #[error("invalid number of folds / clusters: {0}")]
    BadK(String),
    #[error("test fraction must be in (0, 1), got {0}")]
    BadFraction(f64),

    // decomposition
    #[error("invalid component count: {0}")]
    BadComponentCount(String),
    #[error("subjects disagree on voxel count: {0}")]
    VoxelCountMismatch(String),

    // clustering
    #[error("requested {requested} clusters but only {available} voxels")]
    TooManyClusters { requested: usize, available: usize },

    // rendering
    #[error("slice out of range: {0}")]
    BadSlice(String),
}

impl Error {
    /// Stable snake-case identifier, used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnsupportedDatatype(_) => "unsupported_datatype",
            Error::TruncatedFile { .. } => "truncated_file",
            Error::BadMagic(_) => "bad_magic",
            Error::NonFiniteData(_) => "non_finite_data",
            Error::IoFailure { .. } => "io_failure",
            Error::DimensionOverflow(_) => "dimension_overflow",
            Error::SingularAffine(_) => "singular_affine",
            Error::EmptyMask => "empty_mask",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::AffineMismatch(_) => "affine_mismatch",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::BadShape(_) => "bad_shape",
            Error::TooFewTimepoints(_) => "too_few_timepoints",
            Error::BadBand(_) => "bad_band",
            Error::SingleClass(_) => "single_class",
            Error::EmptyClass(_) => "empty_class",
            Error::TooFewSamples(_) => "too_few_samples",
            Error::NoConvergence { .. } => "no_convergence",
            Error::SingularSystem(_) => "singular_system",
            Error::DegenerateCorrelation(_) => "degenerate_correlation",
            Error::BadParameter(_) => "bad_parameter",
            Error::BadK(_) => "bad_k",
            Error::BadFraction(_) => "bad_fraction",
            Error::BadComponentCount(_) => "bad_component_count",
            Error::VoxelCountMismatch(_) => "voxel_count_mismatch",
            Error::TooManyClusters { .. } => "too_many_clusters",
            Error::BadSlice(_) => "bad_slice",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }
}
