use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the crate, from parameter validation
/// to degenerate observables and starved estimators. The CLI maps variants to
/// exit codes, so keep them distinguishable rather than stringly-typed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A normalized correlation has a vanishing denominator (e.g. no drive or
    /// no atom-field coupling). Callers should surface this as a "degenerate"
    /// status instead of propagating NaN into output files.
    #[error("correlation undefined: {context} (denominator consistent with zero)")]
    DegenerateCorrelation { context: &'static str },

    #[error("Hilbert space dim {dim} exceeds the dense-Liouvillian budget (max dim {max_dim})")]
    LiouvillianTooLarge { dim: usize, max_dim: usize },

    #[error("steady state is not unique or the bordered system is singular")]
    NonUniqueSteadyState,

    #[error("steady-state residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    SteadyStateResidual { residual: f64, tolerance: f64 },

    #[error("dt = {dt} too large: dt * max rate {max_rate} exceeds {limit}")]
    StepTooLarge { dt: f64, max_rate: f64, limit: f64 },

    #[error("insufficient statistics: have {have}, need at least {need}")]
    InsufficientStatistics { have: usize, need: usize },

    #[error("scanned quantity is not unimodal over the bracket")]
    NotUnimodal,

    #[error("no parameter point satisfying the scan predicate was found")]
    NotFound,
}
