//! Dynamical zeta functions: truncations built from periodic orbit sums,
//! Fredholm determinants of the discretized operator, and the location of
//! the leading pole, which encodes the pressure as z* = e^{-P}.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::potential::CylinderPotential;
use crate::sft::Symbol;
use crate::transfer::DiscretizedOperator;

#[derive(Debug, Clone)]
pub struct ZetaTruncation {
    pub n_max: usize,
    /// a_n = sum over n-periodic words of exp of the cyclic Birkhoff sum,
    /// for n = 1..=n_max.
    pub coefficients: Vec<f64>,
    /// a_n ~ lambda^n, so the last coefficient estimates the radius of
    /// convergence 1/lambda of log zeta.
    pub radius_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct FredholmPoly {
    /// det(I - z L) coefficients, ascending in z; coefficients[0] = 1.
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct PoleReport {
    pub z_star: f64,
    /// 1 / z_star; agrees with the operator's leading eigenvalue.
    pub implied_lambda: f64,
    pub det_at_pole: f64,
    /// Width of the final bisection bracket around the root.
    pub bracket_width: f64,
}

pub fn orbit_sums(potential: &CylinderPotential, n_max: usize) -> Result<ZetaTruncation> {
    orbit_sums_capped(potential, n_max, crate::DEFAULT_ENUM_CAP)
}

/// Periodic orbit sums a_n for n up to n_max, each enumerated exactly.
pub fn orbit_sums_capped(
    potential: &CylinderPotential,
    n_max: usize,
    cap: usize,
) -> Result<ZetaTruncation> {
    let sft = potential.sft();
    let mut coefficients = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let words = sft.enumerate_periodic_capped(n, cap)?;
        let mut a = 0.0;
        for w in &words {
            a += potential.birkhoff_sum(w, n, true)?.exp();
        }
        coefficients.push(a);
    }
    let radius_estimate = coefficients
        .iter()
        .rposition(|&a| a > 0.0)
        .map(|i| coefficients[i].powf(-1.0 / (i + 1) as f64))
        .unwrap_or(f64::INFINITY);
    Ok(ZetaTruncation { n_max, coefficients, radius_estimate })
}

/// Evaluates the truncated zeta function exp(sum a_n z^n / n) together with
/// a log-scale remainder: the true value lies within a factor e^{+-bound}
/// when |z| stays below the estimated radius.
pub fn zeta_eval(trunc: &ZetaTruncation, z: Complex64) -> (Complex64, f64) {
    let mut s = Complex64::new(0.0, 0.0);
    let mut zp = Complex64::new(1.0, 0.0);
    for (i, &a) in trunc.coefficients.iter().enumerate() {
        zp *= z;
        s += zp * (a / (i as f64 + 1.0));
    }
    let x = z.norm() / trunc.radius_estimate;
    let n1 = trunc.n_max as f64 + 1.0;
    let remainder = if x < 1.0 {
        x.powf(n1) / (n1 * (1.0 - x))
    } else {
        f64::INFINITY
    };
    (s.exp(), remainder)
}

/// Largest relative defect of a_n against tr(M^n), where M is the weighted
/// symbol matrix M[a][b] = A[a][b] exp(phi(ab)). The two computations share
/// nothing: one enumerates orbits, the other multiplies matrices.
pub fn trace_identity_check(
    potential: &CylinderPotential,
    n_check: usize,
    cap: usize,
) -> Result<f64> {
    if potential.range() > 2 {
        return Err(Error::RangeTooLarge { range: potential.range(), depth: 2 });
    }
    let sft = potential.sft();
    let n = sft.alphabet_size();
    let mut m = Matrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            if sft.allowed(a as Symbol, b as Symbol) {
                let w = [a as Symbol, b as Symbol];
                m.set(a, b, potential.value_of(&w)?.exp());
            }
        }
    }
    let trunc = orbit_sums_capped(potential, n_check, cap)?;
    let mut p = m.clone();
    let mut worst = 0.0_f64;
    for (i, &a) in trunc.coefficients.iter().enumerate() {
        let defect = (a - p.trace()).abs() / a.abs().max(1.0);
        worst = worst.max(defect);
        if i + 1 < trunc.coefficients.len() {
            p = p.mul(&m);
        }
    }
    Ok(worst)
}

/// det(I - z L) by LU factorization of the dense operator matrix.
pub fn fredholm_det(op: &DiscretizedOperator, z: f64) -> f64 {
    let n = op.dim();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            m.set(i, j, id - z * op.matrix().get(i, j));
        }
    }
    m.det()
}

/// Coefficients of det(I - z L) through the Newton identities on the power
/// traces; only for small operators, where the identities stay stable.
pub fn fredholm_poly(op: &DiscretizedOperator) -> Result<FredholmPoly> {
    let dim = op.dim();
    if dim > crate::CHARPOLY_DIM_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim,
            limit: crate::CHARPOLY_DIM_LIMIT,
            what: "Fredholm polynomial coefficients",
        });
    }
    Ok(FredholmPoly { coefficients: op.matrix().fredholm_poly_coeffs() })
}

impl FredholmPoly {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coefficients.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn eval_real(&self, z: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn deriv_real(&self, z: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coefficients.iter().enumerate().skip(1).rev() {
            acc = acc * z + k as f64 * c;
        }
        acc
    }
}

/// Locates the first positive zero of det(I - z L): bracket around the
/// power-iteration guess, bisect, then polish by Newton on a secant-free
/// central-difference derivative.
pub fn pole_locate(op: &DiscretizedOperator, tol: f64, max_iter: usize) -> Result<PoleReport> {
    let lambda_hat = op.leading_lambda(tol, max_iter)?;
    let z0 = 1.0 / lambda_hat;
    let f = |z: f64| fredholm_det(op, z);
    // det(0) = 1 > 0 and the determinant changes sign across the simple
    // Perron root, so expanding the window must produce a sign change
    let mut lo = z0 * 0.999;
    let mut hi = z0 * 1.001;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    while flo.signum() == fhi.signum() {
        lo = (lo * 0.7).max(z0 * 0.25);
        hi = (hi * 1.4).min(z0 * 4.0);
        flo = f(lo);
        fhi = f(hi);
        if lo <= z0 * 0.25 && hi >= z0 * 4.0 && flo.signum() == fhi.signum() {
            return Err(Error::NoRootInRadius { searched_up_to: hi });
        }
    }
    // bisection to relative width 1e-6
    while hi - lo > 1e-6 * z0 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let bracket_width = hi - lo;
    // Newton polish to relative accuracy 1e-12
    let mut z = 0.5 * (lo + hi);
    for _ in 0..60 {
        let fz = f(z);
        let h = 1e-7 * z0;
        let d = (f(z + h) - f(z - h)) / (2.0 * h);
        if d == 0.0 {
            break;
        }
        let step = fz / d;
        let znew = z - step;
        if !(z0 * 0.25..=z0 * 4.0).contains(&znew) {
            break;
        }
        z = znew;
        if step.abs() <= 1e-12 * z0 {
            break;
        }
    }
    Ok(PoleReport {
        z_star: z,
        implied_lambda: 1.0 / z,
        det_at_pole: f(z),
        bracket_width,
    })
}
