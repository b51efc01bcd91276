use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("offset {tau} out of range for period {period}")]
    OffsetOutOfRange { tau: usize, period: usize },

    #[error("window of {requested} samples at offset {tau} exceeds buffer of {buffer} samples")]
    WindowTooLong {
        tau: usize,
        requested: usize,
        buffer: usize,
    },

    #[error("non-finite rrc tap at index {index}")]
    NonFiniteTap { index: usize },

    #[error("model has zero or non-finite average power ({0})")]
    ZeroPower(f64),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("singular covariance: pivot {pivot:e} at row {index} (threshold {threshold:e})")]
    SingularCovariance {
        index: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("factorization failed for triple (tau_s={tau_s}, tau_b={tau_b}, kappa={kappa}): {source}")]
    TripleFactorization {
        tau_s: usize,
        tau_b: usize,
        kappa: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("filter bank infeasible: {triples} triples at N={n} need {required_bytes} bytes, budget is {budget_bytes} bytes")]
    Infeasible {
        triples: usize,
        n: usize,
        required_bytes: u128,
        budget_bytes: u128,
    },

    #[error("triple (tau_s={tau_s}, tau_b={tau_b}, kappa={kappa}) is not in the grid")]
    NotInGrid { tau_s: usize, tau_b: usize, kappa: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("not a {expected} file (magic {found:?})")]
    BadMagic { expected: &'static str, found: [u8; 4] },

    #[error("unsupported {kind} version {found} (expected {expected})")]
    UnsupportedVersion {
        kind: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("truncated file: expected {expected} bytes, found {actual} ({missing} missing)")]
    Truncated {
        expected: u64,
        actual: u64,
        missing: u64,
    },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short identifier used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::OffsetOutOfRange { .. } => "offset_out_of_range",
            Error::WindowTooLong { .. } => "window_too_long",
            Error::NonFiniteTap { .. } => "non_finite_tap",
            Error::ZeroPower(_) => "zero_power",
            Error::Consistency(_) => "consistency",
            Error::SingularCovariance { .. } => "singular_covariance",
            Error::TripleFactorization { .. } => "triple_factorization",
            Error::Infeasible { .. } => "infeasible",
            Error::NotInGrid { .. } => "not_in_grid",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::BadMagic { .. } => "bad_magic",
            Error::UnsupportedVersion { .. } => "unsupported_version",
            Error::Truncated { .. } => "truncated",
            Error::Corrupt(_) => "corrupt",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
