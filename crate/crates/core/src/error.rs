//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by construction, estimation, and experiment code.
///
/// Precondition violations on pure kernel math (dimension mismatches in
/// `sin_theta_loss`, out-of-range indices in `pad_submatrix`) panic instead;
/// everything that depends on data, domains, or budgets reports through this
/// enum so callers can react.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix constructor received entries that are not exactly symmetric.
    #[error("matrix entry ({i},{j}) = {a} differs from ({j},{i}) = {b}: not symmetric")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },

    /// A constructor received inconsistent dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Columns handed to `OrthoBasis` are not orthonormal within 1e-9.
    #[error("columns are not orthonormal: |V'V - I| has entry {dev:.3e} at ({i},{j})")]
    NotOrthonormal { i: usize, j: usize, dev: f64 },

    /// An index set contained a duplicate or out-of-range element.
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    /// A model constructor was given invalid spikes or an oversized support.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A configuration value violates its documented range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// The subset-enumeration budget was exhausted before a definitive
    /// answer was reached. Never a silent truncation.
    #[error("enumeration budget exhausted after {examined} candidate (B,D) pairs (budget {budget})")]
    BudgetExceeded { examined: u64, budget: u64 },

    /// An argument fell outside a function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A CSV or config file could not be parsed.
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    /// A JSON report could not be encoded or decoded.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
