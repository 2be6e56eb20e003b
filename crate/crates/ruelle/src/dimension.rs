//! Hausdorff dimension of conformal repellers through the Bowen equation:
//! the dimension is the unique root of s -> P(-s l), where l > 0 is the
//! log expansion rate on cylinders.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::potential::CylinderPotential;
use crate::sft::TransitionMatrix;
use crate::transfer::{self, DiscretizedOperator};

/// Minimum accepted root tolerance, in pressure units.
pub const MIN_BOWEN_TOL: f64 = 1e-12;
/// Default root tolerance on the pressure residual.
pub const DEFAULT_BOWEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ConformalRepeller {
    log_expansion: CylinderPotential,
}

#[derive(Debug, Clone)]
pub struct BowenReport {
    pub s_star: f64,
    /// P(-s* l) at the returned root.
    pub pressure_residual: f64,
    /// The same residual expressed in s units through the local slope.
    pub s_residual: f64,
    pub bisection_steps: usize,
    pub newton_steps: usize,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct CurveReport {
    pub rows: Vec<(f64, f64)>,
    /// Whether pressure strictly decreased across the grid as given.
    pub strictly_decreasing: bool,
}

impl ConformalRepeller {
    /// Demands strict expansion: every cylinder value of l must be > 0.
    pub fn new(log_expansion: CylinderPotential) -> Result<Self> {
        let min = log_expansion.min_value();
        if !(min > 0.0) {
            return Err(Error::NotExpanding(min));
        }
        Ok(ConformalRepeller { log_expansion })
    }

    pub fn sft(&self) -> &Arc<TransitionMatrix> {
        self.log_expansion.sft()
    }

    pub fn log_expansion(&self) -> &CylinderPotential {
        &self.log_expansion
    }

    /// P(-s l).
    pub fn pressure_at(&self, s: f64) -> Result<f64> {
        transfer::pressure_default(&self.log_expansion.scale(-s))
    }

    /// P(-s l) together with its derivative in s, which is the negated
    /// Gibbs average of l at the same parameter.
    fn pressure_and_slope(&self, s: f64) -> Result<(f64, f64)> {
        let phi = self.log_expansion.scale(-s);
        let depth = transfer::default_depth(&phi);
        let op = DiscretizedOperator::build(phi, depth)?;
        let triple = op.triple_default()?;
        let gibbs = op.gibbs_weights(&triple)?;
        let mut avg = 0.0;
        for (w, wt) in gibbs.words().iter().zip(gibbs.weights()) {
            avg += wt * self.log_expansion.value_of(w)?;
        }
        Ok((triple.lambda.ln(), -avg))
    }
}

/// Solves P(-s l) = 0. The root is bracketed by [0, P(0)/min l]: pressure
/// starts at the entropy and drops below zero by s_hi since
/// P(-s l) <= P(0) - s min l. Bisection narrows the bracket, a guarded
/// Newton iteration with the analytic slope finishes it off.
pub fn bowen_dimension(rep: &ConformalRepeller, tol: f64) -> Result<BowenReport> {
    if tol < MIN_BOWEN_TOL {
        return Err(Error::DomainError {
            what: "pressure residual tolerance",
            value: tol,
            domain: "[1e-12, inf)",
        });
    }
    let p0 = rep.pressure_at(0.0)?;
    if p0.abs() <= tol {
        // zero entropy: the repeller is at most a point set, dimension 0
        return Ok(BowenReport {
            s_star: 0.0,
            pressure_residual: p0,
            s_residual: p0.abs() / rep.log_expansion.min_value(),
            bisection_steps: 0,
            newton_steps: 0,
            bracket: (0.0, 0.0),
        });
    }
    let mut lo = 0.0;
    let mut hi = p0 / rep.log_expansion.min_value();
    // for constant l the analytic bracket end IS the root; fp jitter can
    // leave a sliver of positive pressure there, so pad once if needed
    if rep.pressure_at(hi)? > 0.0 {
        hi *= 1.0 + 1e-6;
        if rep.pressure_at(hi)? > 0.0 {
            return Err(Error::NoConvergence {
                what: "Bowen bracket endpoint",
                iters: 1,
                residual: hi,
            });
        }
    }
    let mut bisection_steps = 0;
    while hi - lo > 1e-2 * hi.max(1.0) {
        let mid = (lo + hi) / 2.0;
        if rep.pressure_at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        bisection_steps += 1;
    }
    let bracket = (lo, hi);
    let mut s = (lo + hi) / 2.0;
    let mut newton_steps = 0;
    for _ in 0..60 {
        let (f, fp) = rep.pressure_and_slope(s)?;
        newton_steps += 1;
        if f.abs() <= tol {
            return Ok(BowenReport {
                s_star: s,
                pressure_residual: f,
                s_residual: (f / fp).abs(),
                bisection_steps,
                newton_steps,
                bracket,
            });
        }
        if f > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let step = f / fp;
        let next = s - step;
        s = if next > lo && next < hi { next } else { (lo + hi) / 2.0 };
    }
    let (f, _) = rep.pressure_and_slope(s)?;
    Err(Error::NoConvergence {
        what: "Bowen equation root",
        iters: bisection_steps + newton_steps,
        residual: f.abs(),
    })
}

/// Tabulates s -> P(-s l) over the given grid, flagging whether the values
/// strictly decrease in the order supplied.
pub fn pressure_curve(rep: &ConformalRepeller, s_grid: &[f64]) -> Result<CurveReport> {
    let mut rows = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        rows.push((s, rep.pressure_at(s)?));
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(CurveReport { rows, strictly_decreasing })
}
