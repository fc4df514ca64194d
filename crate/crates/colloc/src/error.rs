//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // ---- polynomial / root finding ----
    #[error("polynomial is not monotonic on its domain: {0}")]
    NonMonotonicInput(String),
    #[error("no real root found for target {target}")]
    NoRealRoot { target: f64 },
    #[error("leading polynomial coefficient is zero or not finite")]
    DegenerateLeadingCoefficient,

    // ---- pricing ----
    #[error("inversion failed: {0}")]
    InversionFailure(String),
    #[error("strike {strike} not supported below boundary {level} for this variant")]
    UnsupportedStrike { strike: f64, level: f64 },
    #[error("collocation value {value} at cutoff is not positive")]
    NonPositiveAtCutoff { value: f64 },
    #[error("operation requires {expected} boundary, model has {actual}")]
    WrongVariant {
        expected: &'static str,
        actual: &'static str,
    },

    // ---- calibration ----
    #[error("price {price} outside no-arbitrage bounds [{lower}, {upper}]")]
    PriceOutOfBounds { price: f64, lower: f64, upper: f64 },
    #[error("not enough quotes: {0}")]
    DegenerateQuotes(String),
    #[error("no convergence after {iterations} iterations (objective {objective:.3e})")]
    NoConvergence { iterations: usize, objective: f64 },
    #[error("cannot bracket the martingale condition: {0}")]
    InfeasibleMartingale(String),

    // ---- CLV ----
    #[error("times must be positive and increasing, got ({t_i}, {t_j})")]
    NonPositiveTime { t_i: f64, t_j: f64 },
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),
    #[error("asset value {value} near zero on the quadrature support (threshold {threshold})")]
    NearSingularDenominator { value: f64, threshold: f64 },
    #[error("no autocorrelation root in (0,1) for pair ({i}, {j})")]
    NoRootInUnitInterval { i: usize, j: usize },
    #[error("performance denominator not positive on {count} of {paths} paths")]
    NonPositiveDenominator { count: u64, paths: u64 },
    #[error("barrier not admissible: {0}")]
    BarrierBelowCutoff(String),
    #[error("{op} does not support the {variant} boundary")]
    UnsupportedVariant { op: &'static str, variant: &'static str },

    // ---- local volatility ----
    #[error("time {t} outside interpolation range [{first}, {last}]")]
    OutOfTimeRange { t: f64, first: f64, last: f64 },
    #[error("calendar-spread arbitrage at strike {strike}, time {t}: numerator {numerator:.3e}")]
    CalendarArbitrage { strike: f64, t: f64, numerator: f64 },
    #[error("density vanishes at strike {strike}, time {t}")]
    ZeroDensity { strike: f64, t: f64 },

    // ---- model / files ----
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file error: {0}")]
    ModelFile(String),
}

impl Error {
    /// Process exit code: 1 for input/IO problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Parse { .. }
            | Error::Io(_)
            | Error::ModelFile(_)
            | Error::DegenerateQuotes(_)
            | Error::WrongVariant { .. } => 1,
            _ => 2,
        }
    }
}
