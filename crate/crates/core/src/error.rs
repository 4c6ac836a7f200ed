use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("antipodal points (geodesic not unique){}", location(*.part, *.index))]
    Antipodal { part: Option<usize>, index: Option<usize> },

    #[error("vector is not tangent at its base point (|y·f| = {dot:.3e})")]
    NotTangent { dot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bone {part} has zero length")]
    ZeroBone { part: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("no observation has a nonzero kernel weight at {at}")]
    EmptyWindow { at: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("alignment grid {dp_grid} is too coarse (minimum 8)")]
    GridTooCoarse { dp_grid: usize },

    #[error("bad interval [{s}, {t}]")]
    BadInterval { s: f64, t: f64 },

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("Gram matrix is singular even after jitter")]
    SingularGram,

    #[error("rejection sampler stalled (acceptance below {acceptance:.1e})")]
    RejectionStall { acceptance: f64 },

    #[error("rank deficient: needed {needed} directions, found {found}")]
    RankDeficient { needed: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn location(part: Option<usize>, index: Option<usize>) -> String {
    match (index, part) {
        (Some(i), Some(p)) => format!(" at time index {i}, part {p}"),
        (None, Some(p)) => format!(" at part {p}"),
        (Some(i), None) => format!(" at time index {i}"),
        (None, None) => String::new(),
    }
}

impl Error {
    /// True for failures of the numerics rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Antipodal { .. }
                | Error::NotTangent { .. }
                | Error::EmptyWindow { .. }
                | Error::SingularCovariance
                | Error::SingularGram
                | Error::RejectionStall { .. }
                | Error::RankDeficient { .. }
        )
    }

    pub(crate) fn at_part(self, part: usize) -> Self {
        match self {
            Error::Antipodal { index, .. } => Error::Antipodal {
                part: Some(part),
                index,
            },
            other => other,
        }
    }

    pub(crate) fn at_index(self, index: usize) -> Self {
        match self {
            Error::Antipodal { part, .. } => Error::Antipodal {
                part,
                index: Some(index),
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
