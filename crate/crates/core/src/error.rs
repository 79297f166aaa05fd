//! Shared error type for the J3S library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, J3sError>;

#[derive(Debug, Error)]
pub enum J3sError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The matrix handed to the safeguarded logarithm is genuinely indefinite,
    /// i.e. it has an eigenvalue below `-eig_floor`.
    #[error("matrix is not positive definite: eigenvalue {min_eigenvalue:e} is below -{eig_floor:e}")]
    NotPositiveDefinite { min_eigenvalue: f64, eig_floor: f64 },

    #[error("negative feature in sample `{sample_id}` at ({row}, {col}): {value}; disable the Hellinger map for signed features")]
    NegativeFeature {
        sample_id: String,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("covariance estimation needs at least 2 columns, got {got}")]
    TooFewColumns { got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{patch_h}x{patch_w} patches do not fit into a {rows}x{cols} matrix")]
    PatchTooLarge {
        patch_h: usize,
        patch_w: usize,
        rows: usize,
        cols: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("class {class_id} has too few samples ({available}); need at least {needed}")]
    EmptyClass {
        class_id: u32,
        available: usize,
        needed: usize,
    },

    /// Only reachable when both ridge terms are disabled and the Gram matrix
    /// is rank deficient.
    #[error("linear system is singular; set lambda1/lambda2 or lambda3 above zero")]
    SingularSystem,

    #[error("numerical divergence: {0}")]
    NumericalDivergence(String),

    #[error("format error in `{path}` at byte {offset}: {message}")]
    FormatError {
        path: String,
        offset: u64,
        message: String,
    },

    #[error("invalid value in `{path}`: {message}")]
    InvalidValue { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("manifest parse error: {0}")]
    Json(#[from] serde_json::Error),
}
