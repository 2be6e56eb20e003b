//! Crate-wide error type.
//!
//! One flat enum keeps propagation between modules trivial and lets the CLI
//! map every failure onto its exit-code contract: input errors versus
//! numerical non-convergence.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    // ---- transition matrices ----
    #[error("matrix is not square: {rows} rows, row {bad_row} has {bad_len} entries")]
    NonSquare { rows: usize, bad_row: usize, bad_len: usize },
    #[error("matrix entry ({row}, {col}) = {value} is not 0/1")]
    NonBinaryEntry { row: usize, col: usize, value: i64 },
    #[error("row {0} of the transition matrix is all zero; symbol {0} has no successor")]
    ZeroRow(usize),
    #[error("column {0} of the transition matrix is all zero; symbol {0} has no predecessor")]
    ZeroColumn(usize),
    #[error("transition matrix is not primitive; no power up to the Wielandt bound is positive")]
    NotPrimitive,
    #[error("enumeration would produce {needed} words, above the cap {cap}")]
    BudgetExceeded { needed: u128, cap: usize },

    // ---- potentials ----
    #[error("cannot shrink potential range from {from} to {to}")]
    RangeShrink { from: usize, to: usize },
    #[error("word of length {len} is too short: need {need} symbols")]
    WordTooShort { len: usize, need: usize },
    #[error("word is not admissible: transition {a} -> {b} at position {pos} is forbidden")]
    InadmissibleWord { a: usize, b: usize, pos: usize },
    #[error("operands are defined over different transition matrices")]
    ShiftMismatch,

    // ---- transfer operator ----
    #[error("depth {depth} is below the potential range {range}")]
    DepthTooSmall { depth: usize, range: usize },
    #[error("{what}: no convergence after {iters} iterations (last residual {residual:.3e})")]
    NoConvergence { what: &'static str, iters: usize, residual: f64 },
    #[error("admissible cylinder {index} received weight {weight:.3e} < 1e-15; numerically degenerate")]
    ZeroMassCylinder { index: usize, weight: f64 },
    #[error("matrix dimension {dim} exceeds the limit {limit} for {what}")]
    DimensionTooLarge { dim: usize, limit: usize, what: &'static str },

    // ---- statistics ----
    #[error("observable range {range} exceeds operator depth {depth}")]
    RangeTooLarge { range: usize, depth: usize },
    #[error("variance {0:.3e} is negative beyond tolerance; upstream numerical failure")]
    NegativeVariance(f64),

    // ---- zeta ----
    #[error("no root of the Fredholm determinant found in (0, {searched_up_to:.6}]")]
    NoRootInRadius { searched_up_to: f64 },

    // ---- toral automorphisms ----
    #[error("matrix has trace {0} with |trace| <= 2; not hyperbolic")]
    NotHyperbolic(i64),
    #[error("matrix has determinant {0}; not unimodular")]
    NotUnimodular(i64),
    #[error("{what}: argument {value} outside the valid domain {domain}")]
    DomainError { what: &'static str, value: f64, domain: &'static str },
    #[error("perturbation derivative bound {bound:.6} violates the cone margin {margin:.6}")]
    ConeMarginViolated { bound: f64, margin: f64 },
    #[error("Newton inversion did not reach tolerance after {steps} steps (residual {residual:.3e})")]
    NewtonDivergence { steps: usize, residual: f64 },
    #[error("points do not lie on a common unstable leaf (alignment angle {angle:.4} rad)")]
    NotOnCommonLeaf { angle: f64 },
    #[error("coding matrix has log spectral radius {got:.9}, expected {expected:.9}; not a coding of this map")]
    CodingMismatch { got: f64, expected: f64 },

    // ---- dimension ----
    #[error("expansion potential has minimum {0:.6} <= 0; repeller is not expanding")]
    NotExpanding(f64),

    // ---- file formats ----
    #[error("parse error in {what} at line {line}: {msg}")]
    Parse { what: &'static str, line: usize, msg: String },
}

impl Error {
    /// True for failures of iterative numerics, as opposed to bad input.
    /// The CLI maps these to exit code 2, everything else to 1.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::ZeroMassCylinder { .. }
                | Error::NegativeVariance(_)
                | Error::NoRootInRadius { .. }
                | Error::NewtonDivergence { .. }
        )
    }
}
