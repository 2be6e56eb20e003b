//! Hyperbolic toral automorphisms and smooth perturbations of them: exact
//! spectral data of the linear model, Lyapunov exponents of the perturbed
//! map through cocycle accumulation, unstable leaf density ratios from
//! backward orbits, and Holder regularity of the conjugacy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::potential::CylinderPotential;
use crate::seeding::unit_seed;
use crate::sft::TransitionMatrix;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

fn normalize(v: Vec2) -> Vec2 {
    let n = norm(v);
    [v[0] / n, v[1] / n]
}

fn wrap01(x: Vec2) -> Vec2 {
    [x[0].rem_euclid(1.0), x[1].rem_euclid(1.0)]
}

/// Componentwise difference wrapped to the symmetric fundamental domain.
fn wrap_diff(a: Vec2, b: Vec2) -> Vec2 {
    let d = [a[0] - b[0], a[1] - b[1]];
    [d[0] - d[0].round(), d[1] - d[1].round()]
}

fn solve2(m: &Mat2, r: Vec2) -> Vec2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        (m[1][1] * r[0] - m[0][1] * r[1]) / det,
        (m[0][0] * r[1] - m[1][0] * r[0]) / det,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToralAutomorphism {
    pub m: [[i64; 2]; 2],
}

#[derive(Debug, Clone, Copy)]
pub struct HyperbolicToralData {
    /// Modulus of the expanding eigenvalue; lambda_u * lambda_s = 1.
    pub lambda_u: f64,
    pub lambda_s: f64,
    /// Signed eigenvalues behind the moduli.
    pub signed_u: f64,
    pub signed_s: f64,
    /// Unit eigenvectors of the signed eigenvalues.
    pub v_u: Vec2,
    pub v_s: Vec2,
    /// Topological entropy ln lambda_u.
    pub h_top: f64,
    /// Geometric potential value -ln lambda_u; its pressure vanishes.
    pub phi_u: f64,
    /// Unstable Lyapunov exponent of the linear map; equals h_top.
    pub chi_plus: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ConjugacyEstimate {
    pub gamma: f64,
    /// The conjugacy displacement obeys d(h(x), x) <= C ||f - g||_C1 to
    /// this power; it coincides with gamma.
    pub displacement_bound_exponent: f64,
    pub lambda_s: f64,
    pub dg_sup: f64,
}

impl ToralAutomorphism {
    pub fn new(m: [[i64; 2]; 2]) -> Self {
        ToralAutomorphism { m }
    }

    pub fn det(&self) -> i64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> i64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn as_float(&self) -> Mat2 {
        [
            [self.m[0][0] as f64, self.m[0][1] as f64],
            [self.m[1][0] as f64, self.m[1][1] as f64],
        ]
    }

    /// Exact inverse; integer because the determinant is a unit.
    pub fn inverse_float(&self) -> Mat2 {
        let d = self.det() as f64;
        [
            [self.m[1][1] as f64 / d, -self.m[0][1] as f64 / d],
            [-self.m[1][0] as f64 / d, self.m[0][0] as f64 / d],
        ]
    }

    /// Spectral data of a hyperbolic unimodular matrix. Demands |det| = 1
    /// and |trace| > 2, which keeps both eigenvalues off the unit circle.
    pub fn analyze(&self) -> Result<HyperbolicToralData> {
        let det = self.det();
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(det));
        }
        let tr = self.trace();
        if tr.abs() <= 2 {
            return Err(Error::NotHyperbolic(tr));
        }
        let trf = tr as f64;
        let disc = (trf * trf - 4.0 * det as f64).sqrt();
        let r1 = (trf + disc) / 2.0;
        let r2 = (trf - disc) / 2.0;
        let (signed_u, signed_s) = if r1.abs() >= r2.abs() { (r1, r2) } else { (r2, r1) };
        let eigvec = |rho: f64| -> Vec2 {
            let a = self.m[0][0] as f64;
            let b = self.m[0][1] as f64;
            let c = self.m[1][0] as f64;
            let d = self.m[1][1] as f64;
            if b != 0.0 {
                normalize([b, rho - a])
            } else if c != 0.0 {
                normalize([rho - d, c])
            } else if (a - rho).abs() < (d - rho).abs() {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            }
        };
        let lambda_u = signed_u.abs();
        let h_top = lambda_u.ln();
        Ok(HyperbolicToralData {
            lambda_u,
            lambda_s: signed_s.abs(),
            signed_u,
            signed_s,
            v_u: eigvec(signed_u),
            v_s: eigvec(signed_s),
            h_top,
            phi_u: -h_top,
            chi_plus: h_top,
        })
    }
}

/// Entropy against the expansion actually realized on the unstable vector,
/// recomputed through the matrix action rather than the spectral formula.
pub fn pesin_check(auto: &ToralAutomorphism, data: &HyperbolicToralData) -> (f64, f64, f64) {
    let chi = norm(mat_vec(&auto.as_float(), data.v_u)).ln();
    (data.h_top, chi, (data.h_top - chi).abs())
}

/// gamma = ln(1/lambda_s) / (ln(1/lambda_s) + ln dg_sup): the Holder
/// exponent guaranteed for the conjugacy to the linear model when the
/// perturbed differential stays below dg_sup.
pub fn holder_exponent(lambda_s: f64, dg_sup: f64) -> Result<ConjugacyEstimate> {
    if !(lambda_s > 0.0 && lambda_s < 1.0) {
        return Err(Error::DomainError {
            what: "contracting eigenvalue modulus",
            value: lambda_s,
            domain: "(0, 1)",
        });
    }
    if dg_sup <= 1.0 {
        return Err(Error::DomainError {
            what: "differential sup bound",
            value: dg_sup,
            domain: "(1, inf)",
        });
    }
    let a = (1.0 / lambda_s).ln();
    let gamma = a / (a + dg_sup.ln());
    Ok(ConjugacyEstimate {
        gamma,
        displacement_bound_exponent: gamma,
        lambda_s,
        dg_sup,
    })
}

/// Holonomy distortion constant K = C0 C^alpha / (1 - lambda^alpha),
/// evaluated as a formula only.
pub fn holonomy_constant(c0: f64, c: f64, alpha: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::DomainError {
            what: "contraction factor",
            value: lambda,
            domain: "(0, 1)",
        });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::DomainError {
            what: "Holder exponent",
            value: alpha,
            domain: "(0, 1]",
        });
    }
    Ok(c0 * c.powf(alpha) / (1.0 - lambda.powf(alpha)))
}

/// One trigonometric mode of the perturbation: amp * sin(2 pi freq . x).
#[derive(Debug, Clone, Copy)]
pub struct TrigTerm {
    pub freq: [i64; 2],
    pub amp: [f64; 2],
}

impl TrigTerm {
    fn amp_norm(&self) -> f64 {
        self.amp[0].hypot(self.amp[1])
    }

    fn freq_norm(&self) -> f64 {
        (self.freq[0] as f64).hypot(self.freq[1] as f64)
    }
}

/// g(x) = M x + eps sum_j amp_j sin(2 pi q_j . x) on the 2-torus.
#[derive(Debug, Clone)]
pub struct PerturbedMap {
    auto: ToralAutomorphism,
    data: HyperbolicToralData,
    eps: f64,
    terms: Vec<TrigTerm>,
    dd_sup: f64,
    cone_margin: f64,
}

impl PerturbedMap {
    /// Rejects perturbations whose differential could tilt vectors out of
    /// the invariant cones: sup ||dD|| must stay under (lambda_u - lambda_s)/4.
    pub fn new(auto: ToralAutomorphism, eps: f64, terms: Vec<TrigTerm>) -> Result<Self> {
        let data = auto.analyze()?;
        let dd_sup: f64 = eps.abs()
            * terms
                .iter()
                .map(|t| TAU * t.amp_norm() * t.freq_norm())
                .sum::<f64>();
        let cone_margin = (data.lambda_u - data.lambda_s) / 4.0;
        if dd_sup >= cone_margin {
            return Err(Error::ConeMarginViolated { bound: dd_sup, margin: cone_margin });
        }
        Ok(PerturbedMap { auto, data, eps, terms, dd_sup, cone_margin })
    }

    pub fn automorphism(&self) -> &ToralAutomorphism {
        &self.auto
    }

    pub fn data(&self) -> &HyperbolicToralData {
        &self.data
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dd_sup(&self) -> f64 {
        self.dd_sup
    }

    pub fn cone_margin(&self) -> f64 {
        self.cone_margin
    }

    /// C1 size of the perturbation: eps sum |amp| (1 + 2 pi |freq|).
    pub fn c1_norm_bound(&self) -> f64 {
        self.eps.abs()
            * self
                .terms
                .iter()
                .map(|t| t.amp_norm() * (1.0 + TAU * t.freq_norm()))
                .sum::<f64>()
    }

    fn displacement(&self, x: Vec2) -> Vec2 {
        let mut d = [0.0, 0.0];
        for t in &self.terms {
            let phase = TAU * (t.freq[0] as f64 * x[0] + t.freq[1] as f64 * x[1]);
            let s = self.eps * phase.sin();
            d[0] += s * t.amp[0];
            d[1] += s * t.amp[1];
        }
        d
    }

    pub fn apply(&self, x: Vec2) -> Vec2 {
        let m = self.auto.as_float();
        let lin = mat_vec(&m, x);
        let d = self.displacement(x);
        wrap01([lin[0] + d[0], lin[1] + d[1]])
    }

    pub fn jacobian(&self, x: Vec2) -> Mat2 {
        let mut j = self.auto.as_float();
        for t in &self.terms {
            let phase = TAU * (t.freq[0] as f64 * x[0] + t.freq[1] as f64 * x[1]);
            let c = self.eps * TAU * phase.cos();
            for (row, j_row) in j.iter_mut().enumerate() {
                for (col, j_val) in j_row.iter_mut().enumerate() {
                    *j_val += c * t.amp[row] * t.freq[col] as f64;
                }
            }
        }
        j
    }

    /// Newton inversion on the torus, seeded by the exact linear inverse.
    pub fn invert(&self, y: Vec2) -> Result<Vec2> {
        let minv = self.auto.inverse_float();
        let mut x = wrap01(mat_vec(&minv, y));
        let mut residual = f64::INFINITY;
        for _ in 0..50 {
            let gx = self.apply(x);
            let r = wrap_diff(gx, y);
            residual = norm(r);
            let j = self.jacobian(x);
            let step = solve2(&j, r);
            x = wrap01([x[0] - step[0], x[1] - step[1]]);
            // one polish step past the tolerance lands on the fp floor,
            // which keeps backward orbits from amplifying solver noise
            if residual <= 1e-12 {
                return Ok(x);
            }
        }
        Err(Error::NewtonDivergence { steps: 50, residual })
    }

    /// Unstable direction at p: pull p back 30 steps, seed with the linear
    /// unstable vector, and push forward with renormalization. The forward
    /// cocycle aligns any cone vector with E^u exponentially fast.
    pub fn unstable_direction(&self, p: Vec2) -> Result<Vec2> {
        let steps = 30;
        let mut orbit = Vec::with_capacity(steps + 1);
        orbit.push(p);
        let mut x = p;
        for _ in 0..steps {
            x = self.invert(x)?;
            orbit.push(x);
        }
        let push = |seed: Vec2| {
            let mut v = seed;
            for x in orbit.iter().rev().skip(1) {
                // orbit[k] is the k-th preimage; jacobians are taken along
                // the forward trip ending at p
                v = normalize(mat_vec(&self.jacobian(*x), v));
            }
            v
        };
        let v = push(self.data.v_u);
        // the iteration has converged when a tilted seed lands on the same
        // direction; the cone contraction makes the angle collapse fast
        let tilted = normalize([
            self.data.v_u[0] + 0.37 * self.data.v_s[0],
            self.data.v_u[1] + 0.37 * self.data.v_s[1],
        ]);
        let w = push(tilted);
        let angle = (v[0] * w[1] - v[1] * w[0]).abs();
        if angle > 1e-8 {
            return Err(Error::NoConvergence {
                what: "unstable direction cone iteration",
                iters: steps,
                residual: angle,
            });
        }
        Ok(v)
    }

    /// Expansion factor along the unstable direction at p.
    pub fn unstable_expansion(&self, p: Vec2) -> Result<f64> {
        let u = self.unstable_direction(p)?;
        Ok(norm(mat_vec(&self.jacobian(p), u)))
    }
}

#[derive(Debug, Clone)]
pub struct LyapunovReport {
    pub chi: f64,
    /// Standard error of the mean over the starting points.
    pub std_err: f64,
    pub per_point: Vec<f64>,
    pub orbit_len: usize,
    pub warmup: usize,
}

/// Top Lyapunov exponent averaged over random starting points, each with
/// its own RNG stream so the result is independent of the worker count.
pub fn lyapunov_cocycle(
    map: &PerturbedMap,
    orbit_len: usize,
    n_points: usize,
    seed: u64,
) -> Result<LyapunovReport> {
    let warmup = 100;
    let per_point: Vec<f64> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(unit_seed(seed, i as u64));
            let mut x = [rng.random::<f64>(), rng.random::<f64>()];
            let angle: f64 = rng.random::<f64>() * TAU;
            let mut v = [angle.cos(), angle.sin()];
            for _ in 0..warmup {
                v = normalize(mat_vec(&map.jacobian(x), v));
                x = map.apply(x);
            }
            let mut acc = 0.0;
            for _ in 0..orbit_len {
                let w = mat_vec(&map.jacobian(x), v);
                let n = norm(w);
                acc += n.ln();
                v = [w[0] / n, w[1] / n];
                x = map.apply(x);
            }
            acc / orbit_len as f64
        })
        .collect();
    let chi = per_point.iter().sum::<f64>() / n_points as f64;
    let std_err = if n_points > 1 {
        let var = per_point.iter().map(|p| (p - chi) * (p - chi)).sum::<f64>()
            / (n_points - 1) as f64;
        (var / n_points as f64).sqrt()
    } else {
        0.0
    };
    Ok(LyapunovReport { chi, std_err, per_point, orbit_len, warmup })
}

#[derive(Debug, Clone)]
pub struct DensityReport {
    /// prod_k e_u(x_{-k}) / e_u(y_{-k}) over the backward orbits.
    pub density: f64,
    pub log_terms: Vec<f64>,
    /// Geometric decay rate fitted to |log term_k| over the clean window.
    pub fitted_rate: f64,
    /// Last index of the fit window: where the terms hit the noise floor.
    pub fit_window: usize,
    /// Envelope constant: |log term_k| <= envelope_a * lambda_s^k on the
    /// fit window.
    pub envelope_a: f64,
    /// Bound K on |ln density|, from the summed window terms plus the
    /// enveloped tail; the density lies in [e^-K, e^K].
    pub log_bound: f64,
    /// |sin| of the angle between the forward-pushed separation and E^u.
    pub angle_defect: f64,
}

/// Builds a pair of points on a common unstable leaf, separated by roughly
/// `delta`: start with a tiny unstable offset and push it forward, letting
/// the dynamics place both points on one leaf to floating-point accuracy.
pub fn leaf_pair(
    map: &PerturbedMap,
    base: Vec2,
    delta: f64,
    push: usize,
) -> Result<(Vec2, Vec2)> {
    let u = map.unstable_direction(base)?;
    let d0 = delta * map.data().lambda_u.powi(-(push as i32));
    let mut x = base;
    let mut y = [base[0] + d0 * u[0], base[1] + d0 * u[1]];
    for _ in 0..push {
        x = map.apply(x);
        y = map.apply(y);
    }
    Ok((x, y))
}

/// The density of the unstable conditional measure, as the limit product of
/// expansion ratios along backward orbits. Converges because the backward
/// orbits of a leaf pair approach each other at the contraction rate.
pub fn unstable_density_product(
    map: &PerturbedMap,
    x: Vec2,
    y: Vec2,
    n_terms: usize,
) -> Result<DensityReport> {
    let dist = norm(wrap_diff(y, x));
    if dist >= 0.05 {
        return Err(Error::DomainError {
            what: "leaf pair separation",
            value: dist,
            domain: "[0, 0.05)",
        });
    }
    // leaf membership check: ten forward steps kill any stable component
    // of the separation, so what remains must align with E^u; a pair that
    // was never close to a common leaf wraps into a misaligned offset
    let mut angle_defect = 0.0;
    if dist > 0.0 {
        let mut xf = x;
        let mut yf = y;
        for _ in 0..10 {
            xf = map.apply(xf);
            yf = map.apply(yf);
        }
        let d = wrap_diff(yf, xf);
        let df = norm(d);
        // the local unstable direction of the pair: taken at the chord
        // midpoint, where the chord of a curved leaf parallels the tangent
        let mid = wrap01([xf[0] + d[0] / 2.0, xf[1] + d[1] / 2.0]);
        let u = map.unstable_direction(mid)?;
        angle_defect = (d[0] * u[1] - d[1] * u[0]).abs() / df;
        if angle_defect > 1e-2 {
            return Err(Error::NotOnCommonLeaf { angle: angle_defect });
        }
    }
    let mut xs = x;
    let mut ys = y;
    let mut log_terms = Vec::with_capacity(n_terms);
    let mut total = 0.0;
    for _ in 0..n_terms {
        xs = map.invert(xs)?;
        ys = map.invert(ys)?;
        let t = map.unstable_expansion(xs)?.ln() - map.unstable_expansion(ys)?.ln();
        log_terms.push(t);
        total += t;
    }
    // fit the decay rate only down to where the terms stop shrinking: past
    // that, inversion noise amplified along the backward orbit takes over
    let fit_window = log_terms
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i + 1)
        .unwrap_or(0);
    let pts: Vec<(f64, f64)> = log_terms[..fit_window]
        .iter()
        .enumerate()
        .filter(|(_, t)| t.abs() > 0.0)
        .map(|(i, t)| ((i + 1) as f64, t.abs().ln()))
        .collect();
    let fitted_rate = crate::transfer::fit_slope(&pts).map(f64::exp).unwrap_or(0.0);
    let lambda_s = map.data().lambda_s;
    let envelope_a = log_terms[..fit_window]
        .iter()
        .enumerate()
        .map(|(i, t)| t.abs() / lambda_s.powi(i as i32 + 1))
        .fold(0.0, f64::max);
    let summed: f64 = log_terms[..fit_window].iter().map(|t| t.abs()).sum();
    let log_bound =
        summed + envelope_a * lambda_s.powi(fit_window as i32 + 1) / (1.0 - lambda_s);
    Ok(DensityReport {
        density: total.exp(),
        log_terms,
        fitted_rate,
        fit_window,
        envelope_a,
        log_bound,
        angle_defect,
    })
}

/// The symbolic geometric potential: constant -ln lambda_u on a coding
/// shift. The shift must carry the same entropy as the map, otherwise the
/// claimed coding cannot be correct.
pub fn geometric_potential_symbolic(
    data: &HyperbolicToralData,
    sft: Arc<TransitionMatrix>,
) -> Result<CylinderPotential> {
    let log_rho = sft.topological_entropy()?;
    if (log_rho - data.h_top).abs() >= 1e-6 {
        return Err(Error::CodingMismatch { got: log_rho, expected: data.h_top });
    }
    Ok(CylinderPotential::constant(sft, data.phi_u))
}
