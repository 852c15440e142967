//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by exact arithmetic and the analytic machinery.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("division by zero in the coefficient field")]
    DivisionByZero,

    #[error("invalid prime configuration: {0}")]
    BadConfig(String),

    #[error("zero denominator polynomial")]
    ZeroDenominator,

    #[error("Newton slope of the polynomial is zero (cannot take slopes of 0)")]
    ZeroPolynomial,

    #[error("substitution map has a zero parameter where a nonzero one is required")]
    ZeroSubstitutionParameter,

    #[error("recentring a Laurent polynomial with negative exponents; lift to a rational function first")]
    NegativeExponentRecentre,

    #[error("denominator has a Newton slope inside the domain interval (pole in the annulus): {0}")]
    PoleInDomain(String),

    #[error("domain interval is malformed: {0}")]
    BadDomain(String),

    #[error("pullback map is incompatible with the domain: {0}")]
    BadPullback(String),

    #[error("need at least mu = {mu} iteration terms, got N = {n}")]
    TooFewTerms { mu: usize, n: usize },

    #[error("evaluation point lies outside the domain: {0}")]
    PointOutsideDomain(String),

    #[error("point is a pole of the system coefficients")]
    PoleAtPoint,

    #[error("not enough samples: need {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("samples are not convex in (t, v) coordinates within tolerance (index {index})")]
    NotConvex { index: usize },

    #[error("no admissible slope s/j with j <= {mu} and |s| <= {s_max} within tolerance of observed slope {observed}")]
    NoAdmissibleSlope {
        mu: u32,
        s_max: i64,
        observed: String,
    },

    #[error("Young's formula hypothesis not established (no |C_j| > 1 at this point)")]
    YoungInapplicable,

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
