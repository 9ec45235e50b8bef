use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NonSymmetric { asymmetry: f64 },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("matrix is not positive definite even after ridge {ridge:.3e}")]
    NotPositiveDefinite { ridge: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("normal matrix is singular at the given regularization")]
    Singular,

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("local Gram matrix of sample {sample} is singular and regularization is disabled")]
    SingularLocalGram { sample: usize },

    #[error("only one class is present")]
    SingleClass,

    #[error("class {class} has fewer than {min} samples")]
    SmallClass { class: usize, min: usize },

    #[error("alternating solver objective increased from {previous:.6e} to {current:.6e} at iteration {iteration}")]
    Diverged {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("spectrum carries no energy")]
    AllZeroSpectrum,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("the {method} model cannot map unseen samples")]
    OutOfSampleUnsupported { method: &'static str },

    #[error("fewer distinct subjects ({subjects}) than folds ({folds})")]
    TooFewSubjects { subjects: usize, folds: usize },

    #[error("no positive samples")]
    NoPositives,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("decomposition failed to converge: {0}")]
    Convergence(&'static str),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
