//! Crate-wide error type.
//!
//! Every fallible operation returns one of these variants. The [`Error::code`]
//! string is stable and is what the CLI surfaces in machine-readable error
//! objects, so renaming a code is a breaking change.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The ratio continued fraction hit its iteration cap. For arguments in
    /// the supported range this signals a kernel bug, not a user error.
    #[error("continued fraction did not converge for nu={nu}, x={x} (cap {cap})")]
    CfNoConvergence { nu: f64, x: f64, cap: usize },

    /// The three-term recurrence self-check failed, i.e. two independently
    /// computed ratios disagree with the recurrence beyond kernel accuracy.
    #[error("recurrence self-check failed at nu={nu}, x={x}: relative error {rel_err:e}")]
    KernelAccuracy { nu: f64, x: f64, rel_err: f64 },

    /// An iterative solver exhausted its iteration budget. Usually a
    /// tolerance/initial-guess misconfiguration for the given problem.
    #[error("{method} solver did not converge within {max_iter} iterations (last iterate {last_x})")]
    SolverNoConvergence {
        method: &'static str,
        max_iter: usize,
        last_x: f64,
    },

    /// Bracket expansion left the representable range; the mean resultant
    /// length is too close to 1 for a finite-precision answer.
    #[error("bracket expansion overflowed: rbar={rbar} is too close to 1")]
    BracketOverflow { rbar: f64 },

    /// Zero resultant vector; the mean direction is undefined and the
    /// conceptual kappa is 0.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Mean resultant length of exactly 1; the conceptual kappa is infinite.
    #[error("saturated data: {0}")]
    SaturatedData(String),

    /// A monotonicity profile saw more sign changes than the theory allows,
    /// which signals kernel inaccuracy on the supplied grid.
    #[error("classification failed at nu={nu}: {sign_changes} sign changes observed")]
    Classification { nu: f64, sign_changes: usize },

    /// Malformed input row (bad float, inconsistent column count, ...).
    /// Row indices are 1-based over data rows.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// A sample row failed the unit-norm check.
    #[error("row {row} is not a unit vector: norm {norm}")]
    Norm { row: usize, norm: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code for this error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::CfNoConvergence { .. } => "non_convergence",
            Error::KernelAccuracy { .. } => "kernel_accuracy",
            Error::SolverNoConvergence { .. } => "non_convergence",
            Error::BracketOverflow { .. } => "non_convergence",
            Error::DegenerateData(_) => "degenerate_data",
            Error::SaturatedData(_) => "saturated_data",
            Error::Classification { .. } => "classification",
            Error::Parse { .. } => "parse",
            Error::Norm { .. } => "norm",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
