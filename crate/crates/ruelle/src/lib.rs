//! Numerical thermodynamic formalism for hyperbolic dynamics.
//!
//! The crate computes the standard quantitative objects of the theory at desk
//! scale: topological entropy and pressure of subshifts of finite type, Ruelle
//! transfer operators and their leading spectral data, Gibbs measures,
//! spectral gaps and correlation decay, central-limit variance, dynamical zeta
//! functions and Fredholm determinants, Hausdorff dimension via the Bowen
//! equation, and the explicit constants of hyperbolic toral automorphisms and
//! their perturbations.
//!
//! All computations are deterministic: fixed enumeration orders, fixed
//! iteration tolerances, and seeded randomness only.

pub mod dimension;
pub mod error;
pub mod linalg;
pub mod potential;
pub mod seeding;
pub mod sft;
pub mod stats;
pub mod toral;
pub mod transfer;
pub mod zeta;

pub use dimension::{BowenReport, ConformalRepeller, CurveReport};
pub use error::{Error, Result};
pub use potential::{CylinderPotential, HolderMeta, VariationProfile};
pub use sft::{Symbol, TransitionMatrix, Word};
pub use stats::{CltReport, CorrelationReport, Observable, VarianceEstimate};
pub use toral::{ConjugacyEstimate, HyperbolicToralData, PerturbedMap, ToralAutomorphism, TrigTerm};
pub use transfer::{DiscretizedOperator, GibbsDistribution, SpectralGapReport, SpectralTriple};
pub use zeta::{FredholmPoly, ZetaTruncation};

/// Default cap on enumerated words; guards desk-scale memory use.
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;

/// Default relative eigen-residual tolerance for power iteration.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

/// Default iteration ceiling for power iteration.
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Default base of the shift metric d(x, y) = theta^(first disagreement).
/// The abstract theory leaves the base free; every seminorm and Wasserstein
/// value in this crate is reported relative to this convention.
pub const DEFAULT_METRIC_BASE: f64 = 0.5;

/// Dense eigensolve / determinant dimension guard.
pub const DENSE_DIM_LIMIT: usize = 2000;

/// Characteristic-polynomial path dimension guard.
pub const CHARPOLY_DIM_LIMIT: usize = 64;
