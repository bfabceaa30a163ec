//! Crate-wide error type.

/// Alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter violates an operation's precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A text input failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A binary or text input is structurally malformed (bad magic, bad header).
    #[error("format error: {0}")]
    Format(String),

    /// Two inputs that must agree do not (e.g. image/label counts).
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// The iterative eigensolver failed to reach the requested residual
    /// tolerance; carries the best residual achieved per requested pair.
    #[error("eigensolver did not converge: worst residual {worst:.3e} > tol {tol:.3e}")]
    NonConvergence {
        worst: f64,
        tol: f64,
        residuals: Vec<f64>,
    },
}
