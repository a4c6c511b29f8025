use thiserror::Error;

/// Errors raised by grid construction, field validation and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid must have 2 or 3 axes, got {0}")]
    BadDimension(usize),
    #[error("axis {axis} has zero cells")]
    EmptyAxis { axis: usize },
    #[error("spacing along axis {axis} must be finite and > 0, got {value}")]
    NonPositiveSpacing { axis: usize, value: f64 },
    #[error("mask has {got} entries, grid has {expected} cells")]
    MaskMismatch { expected: usize, got: usize },
    #[error("mask leaves no active cell")]
    EmptyActiveSet,
    #[error("active cells are not face-connected ({components} components)")]
    Disconnected { components: usize },
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} contains a non-finite value at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("data are incompatible: compatibility residual {residual:e} exceeds {tolerance:e}")]
    Incompatible { residual: f64, tolerance: f64 },
    #[error("optimization solvers require a zero source term")]
    NonzeroSource,
    #[error("unsupported flux exponent {0}: must lie in (1, inf]")]
    UnsupportedExponent(f64),
    #[error("potential is constant on the active set; its gradient norm vanishes")]
    ConstantPotential,
    #[error("potential is affine on the active set; its Hessian norm vanishes")]
    AffinePotential,
    #[error("input pattern has zero norm")]
    ZeroNorm,
    #[error("{what} did not converge after {iterations} iterations (last change {change:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        change: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
