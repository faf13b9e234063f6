//! Error type shared by all solvers in this crate.

use thiserror::Error;

/// Errors produced by model construction, validation, and the solvers.
///
/// Each variant belongs to one of four classes, exposed via
/// [`Error::class`], which front-ends map to process exit codes:
/// input validation, solver non-convergence, failed structural
/// hypotheses, and unmet mathematical preconditions.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An input configuration or schedule fails validation; `index`
    /// names the first offending site or block.
    #[error("constraint violated at index {index}: {detail}")]
    ConstraintViolation { index: i64, detail: String },

    /// A root bracket does not straddle a sign change.
    #[error("no sign change on bracket [{lo}, {hi}] (g(lo)={glo:.3e}, g(hi)={ghi:.3e})")]
    Bracket {
        lo: f64,
        hi: f64,
        glo: f64,
        ghi: f64,
    },

    /// An iterative solve stopped above tolerance; the best iterate is
    /// retained so callers can inspect or restart it.
    #[error("{what}: no convergence (residual {residual:.3e} after {iterations} iterations)")]
    NonConvergence {
        what: String,
        residual: f64,
        iterations: usize,
        best: Box<[f64]>,
    },

    /// One of the structural hypotheses fails on the sampling grid.
    #[error("hypothesis {name} fails: {detail}")]
    HypothesisFailure { name: String, detail: String },

    /// The model has a continuum of ground states, so no isolated pair
    /// of neighboring periodic minimizers exists.
    #[error("degenerate ground-state foliation: {0}")]
    DegenerateFoliation(String),

    /// A construction's side conditions cannot be met; `inequality`
    /// names the first one that fails.
    #[error("construction infeasible: {inequality} violated ({detail})")]
    Construction { inequality: String, detail: String },

    /// A precondition of the requested operation does not hold for
    /// this model (for example, an empty gap report where a gap is
    /// required).
    #[error("precondition not met: {0}")]
    Precondition(String),
}

/// Coarse classification of an error, used to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: malformed parameters, invalid configurations.
    Validation,
    /// A solver ran out of iterations or lost its bracket.
    NonConvergence,
    /// A structural hypothesis check failed.
    Hypothesis,
    /// A mathematical precondition of the operation is not met.
    Precondition,
}

impl Error {
    /// The class this error belongs to.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) | Error::ConstraintViolation { .. } => {
                ErrorClass::Validation
            }
            Error::Bracket { .. } | Error::NonConvergence { .. } => ErrorClass::NonConvergence,
            Error::HypothesisFailure { .. } => ErrorClass::Hypothesis,
            Error::DegenerateFoliation(_) | Error::Construction { .. } | Error::Precondition(_) => {
                ErrorClass::Precondition
            }
        }
    }
}
