use num_complex::Complex64;
use thiserror::Error;

/// One broken invariant found while validating a distribution.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("empty coefficient sequence")]
    Empty,
    #[error("non-finite coefficient at index {0}")]
    NonFinite(usize),
    #[error("coefficients sum to {0}, not 1")]
    SumNotOne(f64),
    #[error("F(0) = {0} is outside [0, 1)")]
    AtomOutOfRange(f64),
    #[error("degree 0 after trimming: no mass on (0, 1]")]
    Degenerate,
    #[error("density is negative ({value:e}) at x = {at}")]
    Decreasing { at: f64, value: f64 },
    #[error("F({at}) = {value} is outside [0, 1]")]
    OutOfUnitRange { at: f64, value: f64 },
    #[error("breakpoints must start at 0, end at 1 and increase")]
    BadBreakpoints,
    #[error("expected {expected} segment polynomials, got {got}")]
    SegmentCount { expected: usize, got: usize },
    #[error("jump of {jump:e} at breakpoint {at}")]
    Discontinuous { at: f64, jump: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a CDF on [0,1]: {}", join(.0))]
    NotACdf(Vec<Violation>),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),
    #[error("Bernstein order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("odd coefficient {index} of the characteristic polynomial is {value:e}")]
    AsymmetryDetected { index: usize, value: f64 },
    #[error("repeated root: s-roots {first} and {second} are {distance:e} apart (relative)")]
    RepeatedRoot {
        first: Complex64,
        second: Complex64,
        distance: f64,
    },
    #[error("root finder did not converge after {iterations} iterations: {detail}")]
    ConvergenceFailure { iterations: usize, detail: String },
    #[error("root {0} has no negation partner")]
    PairingFailure(Complex64),
    #[error("mode equations vanish identically at root {0}")]
    DegenerateMode(Complex64),
    #[error("coupling denominator {magnitude:e} vanishes at root {root}")]
    SingularCoupling { root: Complex64, magnitude: f64 },
    #[error("linear system is singular")]
    SingularSystem,
    #[error("postcondition `{invariant}` failed: {value:e}")]
    PostconditionViolation { invariant: &'static str, value: f64 },
    #[error("fixed-point iteration did not converge in {iterations} steps (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },
}

impl Error {
    /// Input errors map to exit code 2 in the CLI; everything else is a
    /// numerical failure (exit code 3).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NotACdf(_) | Error::Domain(_) | Error::InvalidSpec(_) | Error::OrderTooHigh { .. }
        )
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotACdf(_) => "NotACdf",
            Error::Domain(_) => "DomainError",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::OrderTooHigh { .. } => "OrderTooHigh",
            Error::AsymmetryDetected { .. } => "AsymmetryDetected",
            Error::RepeatedRoot { .. } => "RepeatedRoot",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::PairingFailure(_) => "PairingFailure",
            Error::DegenerateMode(_) => "DegenerateMode",
            Error::SingularCoupling { .. } => "SingularCoupling",
            Error::SingularSystem => "SingularSystem",
            Error::PostconditionViolation { .. } => "PostconditionViolation",
            Error::NonConvergence { .. } => "NonConvergence",
        }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
