//! Correlation decay, Green-Kubo variance, Monte Carlo CLT checks, pressure
//! derivatives, and Wasserstein distances between Gibbs measures.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::{combine, CylinderPotential};
use crate::seeding::unit_seed;
use crate::transfer::{self, fit_slope, DiscretizedOperator, GibbsDistribution, SpectralTriple};

/// Observables share the cylinder-potential representation: a range and one
/// value per admissible word.
pub type Observable = CylinderPotential;

#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    pub fitted_rate: f64,
    /// |lambda_2| / lambda of the operator driving the decay.
    pub predicted_rate: f64,
    pub mean_g: f64,
    pub mean_h: f64,
}

#[derive(Debug, Clone)]
pub struct VarianceEstimate {
    /// Centered second moment of the observable.
    pub var0: f64,
    /// Cov(g, g after k shifts) for k = 1..=truncation_k.
    pub covariances: Vec<f64>,
    pub sigma2: f64,
    pub truncation_k: usize,
    /// Geometric bound on the dropped tail of the series.
    pub tail_bound: f64,
    /// Mean subtracted before the computation.
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct CltReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub sample_mean: f64,
    pub sample_var: f64,
    pub sigma2_ref: f64,
    /// Fraction of normalized sums with |S_n / (sqrt(n) sigma_ref)| > 1.96;
    /// about 0.05 under the CLT.
    pub frac_exceeding_1p96: f64,
    pub mean_subtracted: f64,
}

#[derive(Debug, Clone)]
pub struct DerivativeReport {
    pub numeric_first: f64,
    pub analytic_first: f64,
    pub numeric_second: f64,
    pub analytic_second: f64,
    pub step: f64,
    /// Step used for the second difference: sqrt(step), which balances
    /// truncation error against eigenvalue noise.
    pub second_step: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// (sup norm of the perturbation, Wasserstein distance moved)
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of distance against perturbation size through the
    /// origin: the empirical Lipschitz constant of the equilibrium map.
    pub fitted_constant: f64,
}

fn observable_vector(op: &DiscretizedOperator, g: &Observable) -> Result<Vec<f64>> {
    if g.range() > op.depth() {
        return Err(Error::RangeTooLarge { range: g.range(), depth: op.depth() });
    }
    if g.sft() != op.sft() {
        return Err(Error::ShiftMismatch);
    }
    op.words().iter().map(|w| g.value_of(w)).collect()
}

/// Time correlations C_n = int g (h after n shifts) dmu - int g int h,
/// evaluated exactly through iterated operator application.
pub fn correlation(
    op: &DiscretizedOperator,
    triple: &SpectralTriple,
    g: &Observable,
    h: &Observable,
    n_max: usize,
) -> Result<CorrelationReport> {
    let gv = observable_vector(op, g)?;
    let hv = observable_vector(op, h)?;
    let mu = stationary_density(triple);
    let mean_g: f64 = mu.iter().zip(&gv).map(|(m, v)| m * v).sum();
    let mean_h: f64 = mu.iter().zip(&hv).map(|(m, v)| m * v).sum();
    // u_0 = (g - mean) h_phi; u_{n+1} = L u_n / lambda; C_n = nu.((h - mean) u_n)
    let mut u: Vec<f64> = gv
        .iter()
        .zip(&triple.h)
        .map(|(v, hp)| (v - mean_g) * hp)
        .collect();
    let mut lags = Vec::with_capacity(n_max + 1);
    let mut values = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            u = op.apply(&u);
            for x in u.iter_mut() {
                *x /= triple.lambda;
            }
        }
        let c: f64 = triple
            .nu
            .iter()
            .zip(&hv)
            .zip(&u)
            .map(|((nu_i, h_i), u_i)| nu_i * (h_i - mean_h) * u_i)
            .sum();
        lags.push(n);
        values.push(c);
    }
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = 1e-14 * scale;
    let window: Vec<(f64, f64)> = lags
        .iter()
        .zip(&values)
        .filter(|&(&n, v)| n >= n_max / 2 && n >= 1 && v.abs() > floor)
        .map(|(&n, v)| (n as f64, v.abs().ln()))
        .collect();
    let fitted_rate = fit_slope(&window).map(f64::exp).unwrap_or(0.0);
    Ok(CorrelationReport {
        lags,
        values,
        fitted_rate,
        predicted_rate: triple.ratio,
        mean_g,
        mean_h,
    })
}

/// mu_i = h_i nu_i, renormalized against rounding drift.
fn stationary_density(triple: &SpectralTriple) -> Vec<f64> {
    let mut mu: Vec<f64> = triple.h.iter().zip(&triple.nu).map(|(a, b)| a * b).collect();
    let s: f64 = mu.iter().sum();
    for x in mu.iter_mut() {
        *x /= s;
    }
    mu
}

/// sigma^2 = C_0 + 2 sum_k C_k, truncated once |C_k| < 1e-12, with a
/// geometric bound on the dropped tail.
pub fn green_kubo(
    op: &DiscretizedOperator,
    triple: &SpectralTriple,
    g: &Observable,
) -> Result<VarianceEstimate> {
    let gv = observable_vector(op, g)?;
    let mu = stationary_density(triple);
    let mean: f64 = mu.iter().zip(&gv).map(|(m, v)| m * v).sum();
    let centered: Vec<f64> = gv.iter().map(|v| v - mean).collect();
    let var0: f64 = mu
        .iter()
        .zip(&centered)
        .map(|(m, c)| m * c * c)
        .sum();
    let mut u: Vec<f64> = centered
        .iter()
        .zip(&triple.h)
        .map(|(c, hp)| c * hp)
        .collect();
    let mut covariances = Vec::new();
    let mut sum = 0.0;
    let cap = 100_000;
    let mut k = 0;
    loop {
        k += 1;
        if k > cap {
            return Err(Error::NoConvergence {
                what: "correlation series truncation",
                iters: cap,
                residual: covariances.last().copied().unwrap_or(f64::NAN),
            });
        }
        u = op.apply(&u);
        for x in u.iter_mut() {
            *x /= triple.lambda;
        }
        let ck: f64 = triple
            .nu
            .iter()
            .zip(&centered)
            .zip(&u)
            .map(|((nu_i, c_i), u_i)| nu_i * c_i * u_i)
            .sum();
        if ck.abs() < 1e-12 {
            break;
        }
        covariances.push(ck);
        sum += ck;
    }
    let truncation_k = covariances.len();
    // geometric tail estimate from the operator's own decay rate
    let r = triple.ratio.min(0.999_999);
    let last = covariances.last().map(|c| c.abs()).unwrap_or(0.0);
    let tail_bound = if r < 1.0 { 2.0 * last * r / (1.0 - r) } else { f64::INFINITY };
    let mut sigma2 = var0 + 2.0 * sum;
    if sigma2 < 0.0 {
        if sigma2 >= -1e-10 {
            sigma2 = 0.0;
        } else {
            return Err(Error::NegativeVariance(sigma2));
        }
    }
    Ok(VarianceEstimate { var0, covariances, sigma2, truncation_k, tail_bound, mean })
}

/// Simulates stationary chain paths and compares the empirical variance of
/// S_n / sqrt(n) with the reference sigma^2. Every trial owns its RNG stream,
/// so results do not depend on the worker count.
pub fn clt_monte_carlo(
    gibbs: &GibbsDistribution,
    g: &Observable,
    n: usize,
    trials: usize,
    seed: u64,
    sigma2_ref: f64,
) -> Result<CltReport> {
    if g.range() > gibbs.depth() {
        return Err(Error::RangeTooLarge { range: g.range(), depth: gibbs.depth() });
    }
    if g.sft() != gibbs.sft() {
        return Err(Error::ShiftMismatch);
    }
    let gvals: Result<Vec<f64>> = gibbs.words().iter().map(|w| g.value_of(w)).collect();
    let gvals = gvals?;
    let mean: f64 = gibbs
        .weights()
        .iter()
        .zip(&gvals)
        .map(|(w, v)| w * v)
        .sum();
    let centered: Vec<f64> = gvals.iter().map(|v| v - mean).collect();
    let sqrt_n = (n as f64).sqrt();
    let normalized: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(unit_seed(seed, trial as u64));
            let mut state = gibbs.sample_initial(&mut rng);
            let mut sum = 0.0;
            for _ in 0..n {
                sum += centered[state];
                state = gibbs.step(state, &mut rng);
            }
            sum / sqrt_n
        })
        .collect();
    let sample_mean: f64 = normalized.iter().sum::<f64>() / trials as f64;
    let sample_var: f64 = normalized
        .iter()
        .map(|v| (v - sample_mean) * (v - sample_mean))
        .sum::<f64>()
        / (trials as f64 - 1.0);
    let sigma_ref = sigma2_ref.sqrt();
    let exceed = if sigma_ref > 0.0 {
        normalized.iter().filter(|v| (*v / sigma_ref).abs() > 1.96).count()
    } else {
        0
    };
    Ok(CltReport {
        n,
        trials,
        seed,
        sample_mean,
        sample_var,
        sigma2_ref,
        frac_exceeding_1p96: exceed as f64 / trials as f64,
        mean_subtracted: mean,
    })
}

/// Central-difference pressure derivatives along psi against their closed
/// forms: the Gibbs average and the Green-Kubo variance.
pub fn pressure_derivative_check(
    phi: &CylinderPotential,
    psi: &Observable,
    step: f64,
    depth: usize,
) -> Result<DerivativeReport> {
    if !(1e-6..=1e-2).contains(&step) {
        return Err(Error::DomainError {
            what: "derivative step",
            value: step,
            domain: "[1e-6, 1e-2]",
        });
    }
    let p = |t: f64| -> Result<f64> {
        transfer::pressure(&combine(phi, psi, 1.0, t)?, depth)
    };
    let p0 = p(0.0)?;
    let numeric_first = (p(step)? - p(-step)?) / (2.0 * step);
    let h2 = step.sqrt();
    let numeric_second = (p(h2)? - 2.0 * p0 + p(-h2)?) / (h2 * h2);

    let op = DiscretizedOperator::build(phi.clone(), depth)?;
    let triple = op.triple_default()?;
    let gibbs = op.gibbs_weights(&triple)?;
    let psi_vals: Result<Vec<f64>> = gibbs.words().iter().map(|w| psi.value_of(w)).collect();
    let analytic_first: f64 = gibbs
        .weights()
        .iter()
        .zip(psi_vals?)
        .map(|(w, v)| w * v)
        .sum();
    let analytic_second = green_kubo(&op, &triple, psi)?.sigma2;
    Ok(DerivativeReport {
        numeric_first,
        analytic_first,
        numeric_second,
        analytic_second,
        step,
        second_step: h2,
    })
}

/// W_1 between two Gibbs measures under the ultrametric
/// d(x, y) = theta^(first disagreement), truncated at cylinder depth d.
///
/// Optimal transport on an ultrametric decomposes over the cylinder tree:
/// W_1 = sum_{j=1}^{d} (theta^{j-1} - theta^j) TV_j with TV_j the total
/// variation of the depth-j marginals. The levels beyond d contribute at
/// most theta^d, which is reported by `wasserstein_tail_bound` and not
/// added here (two equal measures must give exactly 0).
pub fn wasserstein_ultrametric(
    mu1: &GibbsDistribution,
    mu2: &GibbsDistribution,
    depth: usize,
    theta: f64,
) -> Result<f64> {
    if mu1.sft() != mu2.sft() {
        return Err(Error::ShiftMismatch);
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::DomainError {
            what: "metric base",
            value: theta,
            domain: "(0, 1)",
        });
    }
    if depth == 0 {
        return Err(Error::DomainError {
            what: "wasserstein depth",
            value: 0.0,
            domain: "d >= 1",
        });
    }
    let words = mu1.sft().enumerate_admissible(depth)?;
    let m1: Result<Vec<f64>> = words.iter().map(|w| mu1.cylinder_mass(w)).collect();
    let m2: Result<Vec<f64>> = words.iter().map(|w| mu2.cylinder_mass(w)).collect();
    let (m1, m2) = (m1?, m2?);
    let mut w1 = 0.0;
    for j in 1..=depth {
        let mut l1 = 0.0;
        let mut i = 0;
        while i < words.len() {
            let prefix = &words[i][..j];
            let mut d = 0.0;
            let mut end = i;
            while end < words.len() && &words[end][..j] == prefix {
                d += m1[end] - m2[end];
                end += 1;
            }
            l1 += d.abs();
            i = end;
        }
        w1 += (theta.powi(j as i32 - 1) - theta.powi(j as i32)) * 0.5 * l1;
    }
    Ok(w1)
}

/// Mass moved below the truncation depth costs at most this much.
pub fn wasserstein_tail_bound(theta: f64, depth: usize) -> f64 {
    theta.powi(depth as i32)
}

/// Exact optimal-transport cost between two finite distributions by
/// successive shortest augmenting paths. The slow reference implementation
/// the tree formula is validated against; O(n^4)-ish, keep instances small.
pub fn exact_transport_cost(
    supply: &[f64],
    demand: &[f64],
    cost: &dyn Fn(usize, usize) -> f64,
) -> f64 {
    let ns = supply.len();
    let nt = demand.len();
    let mut rem_a = supply.to_vec();
    let mut rem_b = demand.to_vec();
    let mut flow = vec![vec![0.0_f64; nt]; ns];
    let eps = 1e-15;
    let mut guard = 0;
    while rem_a.iter().sum::<f64>() > eps && rem_b.iter().sum::<f64>() > eps {
        guard += 1;
        assert!(guard <= 4 * (ns + nt), "transport solver failed to terminate");
        // multi-source Bellman-Ford over the residual network
        let mut dist_a = vec![f64::INFINITY; ns];
        let mut dist_b = vec![f64::INFINITY; nt];
        let mut par_b = vec![usize::MAX; nt]; // source feeding this sink
        let mut par_a = vec![usize::MAX; ns]; // sink refunding this source
        for (i, &r) in rem_a.iter().enumerate() {
            if r > eps {
                dist_a[i] = 0.0;
            }
        }
        loop {
            let mut changed = false;
            for i in 0..ns {
                if dist_a[i].is_finite() {
                    for j in 0..nt {
                        let nd = dist_a[i] + cost(i, j);
                        if nd < dist_b[j] - 1e-15 {
                            dist_b[j] = nd;
                            par_b[j] = i;
                            changed = true;
                        }
                    }
                }
            }
            for j in 0..nt {
                if dist_b[j].is_finite() {
                    for i in 0..ns {
                        if flow[i][j] > eps {
                            let nd = dist_b[j] - cost(i, j);
                            if nd < dist_a[i] - 1e-15 {
                                dist_a[i] = nd;
                                par_a[i] = j;
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // cheapest reachable sink with remaining demand
        let mut best: Option<usize> = None;
        for j in 0..nt {
            if rem_b[j] > eps && dist_b[j].is_finite() {
                if best.is_none() || dist_b[j] < dist_b[best.unwrap()] {
                    best = Some(j);
                }
            }
        }
        let Some(jstar) = best else { break };
        // reconstruct the augmenting path back to a source that was never
        // relaxed (a tree root with remaining supply)
        let mut path_fwd = Vec::new();
        let mut path_back = Vec::new();
        let mut j = jstar;
        let root = loop {
            let i = par_b[j];
            path_fwd.push((i, j));
            if par_a[i] == usize::MAX {
                break i;
            }
            let jp = par_a[i];
            path_back.push((i, jp));
            j = jp;
        };
        let mut bottleneck = rem_b[jstar].min(rem_a[root]);
        for &(i, j) in &path_back {
            bottleneck = bottleneck.min(flow[i][j]);
        }
        for &(i, j) in &path_fwd {
            flow[i][j] += bottleneck;
        }
        for &(i, j) in &path_back {
            flow[i][j] -= bottleneck;
        }
        rem_a[root] -= bottleneck;
        rem_b[jstar] -= bottleneck;
    }
    let mut total = 0.0;
    for i in 0..ns {
        for j in 0..nt {
            if flow[i][j] > 0.0 {
                total += flow[i][j] * cost(i, j);
            }
        }
    }
    total
}

/// Probes how far the Gibbs measure moves per unit of potential perturbation.
pub fn equilibrium_stability_probe(
    phi: &CylinderPotential,
    deltas: &[CylinderPotential],
    depth: usize,
    w_depth: usize,
    theta: f64,
) -> Result<StabilityReport> {
    let op = DiscretizedOperator::build(phi.clone(), depth)?;
    let base = op.gibbs_weights(&op.triple_default()?)?;
    let mut rows = Vec::with_capacity(deltas.len());
    for d in deltas {
        let perturbed = combine(phi, d, 1.0, 1.0)?;
        let opp = DiscretizedOperator::build(perturbed.clone(), depth.max(perturbed.range()))?;
        let gp = opp.gibbs_weights(&opp.triple_default()?)?;
        let w = wasserstein_ultrametric(&base, &gp, w_depth, theta)?;
        rows.push((d.sup_norm(), w));
    }
    let num: f64 = rows.iter().map(|&(x, w)| x * w).sum();
    let den: f64 = rows.iter().map(|&(x, _)| x * x).sum();
    let fitted_constant = if den > 0.0 { num / den } else { 0.0 };
    Ok(StabilityReport { rows, fitted_constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::tests::{full, golden};
    use crate::sft::{Symbol, TransitionMatrix};
    use std::sync::Arc;

    const PHI: f64 = 1.618033988749894848;

    fn op_and_triple(
        sft: &Arc<TransitionMatrix>,
        phi: CylinderPotential,
        depth: usize,
    ) -> (DiscretizedOperator, SpectralTriple) {
        let _ = sft;
        let op = DiscretizedOperator::build(phi, depth).unwrap();
        let t = op.triple_default().unwrap();
        (op, t)
    }

    fn first_symbol_indicator(sft: &Arc<TransitionMatrix>, sym: Symbol) -> Observable {
        CylinderPotential::from_fn(sft.clone(), 1, |w| if w[0] == sym { 1.0 } else { 0.0 })
            .unwrap()
    }

    /// Exact stationary data of the zero-potential golden shift.
    fn parry() -> ([f64; 2], [[f64; 2]; 2]) {
        let p0 = PHI * PHI / (1.0 + PHI * PHI);
        let p = [p0, 1.0 - p0];
        let trans = [[1.0 / PHI, 1.0 / (PHI * PHI)], [1.0, 0.0]];
        (p, trans)
    }

    fn parry_mass(w: &[Symbol]) -> f64 {
        let (p, trans) = parry();
        let mut m = p[w[0] as usize];
        for pair in w.windows(2) {
            m *= trans[pair[0] as usize][pair[1] as usize];
        }
        m
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let g = Arc::new(golden());
        let f2 = Arc::new(full(2));
        let phi = CylinderPotential::constant(g.clone(), 0.0);
        let (op, t) = op_and_triple(&g, phi, 2);
        let too_long = CylinderPotential::constant(g.clone(), 1.0).extend_range(3).unwrap();
        assert!(matches!(
            correlation(&op, &t, &too_long, &too_long, 4),
            Err(Error::RangeTooLarge { range: 3, depth: 2 })
        ));
        let foreign = CylinderPotential::constant(f2, 1.0);
        assert!(matches!(
            green_kubo(&op, &t, &foreign),
            Err(Error::ShiftMismatch)
        ));
    }

    #[test]
    fn iid_pm_one_observable_has_unit_variance() {
        let sft = Arc::new(full(2));
        let phi = CylinderPotential::constant(sft.clone(), 0.0);
        let (op, t) = op_and_triple(&sft, phi, 2);
        let g = CylinderPotential::from_fn(sft.clone(), 1, |w| {
            if w[0] == 0 { 1.0 } else { -1.0 }
        })
        .unwrap();
        let est = green_kubo(&op, &t, &g).unwrap();
        assert!((est.var0 - 1.0).abs() < 1e-14);
        assert_eq!(est.truncation_k, 0);
        assert!((est.sigma2 - 1.0).abs() < 1e-14);
        assert!(est.mean.abs() < 1e-14);
        assert_eq!(est.tail_bound, 0.0);
    }

    #[test]
    fn bernoulli_half_correlation_vanishes_beyond_lag_zero() {
        let sft = Arc::new(full(2));
        let phi = CylinderPotential::constant(sft.clone(), 0.0);
        let (op, t) = op_and_triple(&sft, phi, 2);
        let g = first_symbol_indicator(&sft, 0);
        let rep = correlation(&op, &t, &g, &g, 8).unwrap();
        assert!((rep.values[0] - 0.25).abs() < 1e-14);
        for &c in &rep.values[1..] {
            assert!(c.abs() < 1e-14);
        }
        assert!((rep.mean_g - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constant_observable_has_no_correlations() {
        let sft = Arc::new(golden());
        let phi = CylinderPotential::from_values(sft.clone(), 2, vec![0.1, -0.6, 0.4]).unwrap();
        let (op, t) = op_and_triple(&sft, phi, 2);
        let c = CylinderPotential::constant(sft.clone(), 3.7);
        let rep = correlation(&op, &t, &c, &c, 6).unwrap();
        for &v in &rep.values {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn golden_correlations_match_exact_enumeration() {
        let sft = Arc::new(golden());
        let phi = CylinderPotential::constant(sft.clone(), 0.0);
        let (op, t) = op_and_triple(&sft, phi, 2);
        let g = first_symbol_indicator(&sft, 0);
        let n_max = 12;
        let rep = correlation(&op, &t, &g, &g, n_max).unwrap();
        let (p, _) = parry();
        assert!((rep.mean_g - p[0]).abs() < 1e-10);
        for n in 0..=10usize {
            let mut want = 0.0;
            for w in sft.enumerate_admissible(n + 1).unwrap() {
                let ind0 = if w[0] == 0 { 1.0 } else { 0.0 };
                let indn = if w[n] == 0 { 1.0 } else { 0.0 };
                want += parry_mass(&w) * (ind0 - p[0]) * (indn - p[0]);
            }
            assert!(
                (rep.values[n] - want).abs() < 1e-8,
                "lag {n}: {} vs {}",
                rep.values[n],
                want
            );
        }
        // pure single-mode decay: the fit must land on |lambda_2| / lambda
        assert!((rep.predicted_rate - 1.0 / (PHI * PHI)).abs() < 1e-9);
        assert!((rep.fitted_rate - rep.predicted_rate).abs() < 1e-6);
    }

    #[test]
    fn coboundary_has_zero_asymptotic_variance() {
        let sft = Arc::new(golden());
        let phi = CylinderPotential::constant(sft.clone(), 0.0);
        let (op, t) = op_and_triple(&sft, phi, 2);
        let psi = [0.7, -0.3];
        let g = CylinderPotential::from_fn(sft.clone(), 2, |w| {
            psi[w[0] as usize] - psi[w[1] as usize]
        })
        .unwrap();
        let est = green_kubo(&op, &t, &g).unwrap();
        assert!(est.sigma2.abs() < 1e-8, "sigma2 = {}", est.sigma2);
    }

    #[test]
    fn green_kubo_matches_variance_differencing() {
        // n Var_n - (n-1) Var_{n-1} telescopes to the truncated series, so a
        // fully independent enumeration of S_n moments pins sigma^2
        let sft = Arc::new(golden());
        let phi = CylinderPotential::constant(sft.clone(), 0.0);
        let (op, t) = op_and_triple(&sft, phi, 2);
        let g = first_symbol_indicator(&sft, 0);
        let est = green_kubo(&op, &t, &g).unwrap();
        let (p, _) = parry();
        let var_sn = |n: usize| -> f64 {
            let mut var = 0.0;
            for w in sft.enumerate_admissible(n).unwrap() {
                let s: f64 = w.iter().map(|&a| if a == 0 { 1.0 } else { 0.0 }).sum();
                let dev = s - n as f64 * p[0];
                var += parry_mass(&w) * dev * dev;
            }
            var
        };
        let n = 18;
        let diff = var_sn(n) - var_sn(n - 1);
        assert!(
            (est.sigma2 - diff).abs() < 1e-6,
            "sigma2 {} vs differencing {}",
            est.sigma2,
            diff
        );
    }

    #[test]
    fn clt_runs_are_deterministic_and_cover() {
        let sft = Arc::new(golden());
        let phi = CylinderPotential::constant(sft.clone(), 0.0);
        let (op, t) = op_and_triple(&sft, phi, 2);
        let gibbs = op.gibbs_weights(&t).unwrap();
        let g = first_symbol_indicator(&sft, 0);
        let sigma2 = green_kubo(&op, &t, &g).unwrap().sigma2;
        let a = clt_monte_carlo(&gibbs, &g, 400, 4000, 7, sigma2).unwrap();
        let b = clt_monte_carlo(&gibbs, &g, 400, 4000, 7, sigma2).unwrap();
        assert_eq!(a.sample_var.to_bits(), b.sample_var.to_bits());
        assert_eq!(a.sample_mean.to_bits(), b.sample_mean.to_bits());
        // a single-thread pool must reproduce the default pool bit for bit
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| clt_monte_carlo(&gibbs, &g, 400, 4000, 7, sigma2)).unwrap();
        assert_eq!(a.sample_var.to_bits(), c.sample_var.to_bits());
        // distributional sanity
        assert!((a.sample_var - sigma2).abs() < 0.15 * sigma2);
        assert!(a.frac_exceeding_1p96 > 0.03 && a.frac_exceeding_1p96 < 0.07);
        assert!(a.sample_mean.abs() < 0.05);
        let d = clt_monte_carlo(&gibbs, &g, 400, 4000, 8, sigma2).unwrap();
        assert_ne!(a.sample_var.to_bits(), d.sample_var.to_bits());
    }

    #[test]
    fn derivative_check_on_full_shift_closed_form() {
        let sft = Arc::new(full(2));
        let phi = CylinderPotential::constant(sft.clone(), 0.0);
        let psi = CylinderPotential::from_values(sft.clone(), 1, vec![0.4, -0.2]).unwrap();
        let rep = pressure_derivative_check(&phi, &psi, 1e-4, 2).unwrap();
        // P(t) = ln(e^{0.4 t} + e^{-0.2 t}) - ln 2 + ln 2
        assert!((rep.analytic_first - 0.1).abs() < 1e-12);
        assert!((rep.analytic_second - 0.09).abs() < 1e-10);
        let rel1 = (rep.numeric_first - rep.analytic_first).abs() / rep.analytic_first.abs();
        let rel2 = (rep.numeric_second - rep.analytic_second).abs() / rep.analytic_second.abs();
        assert!(rel1 < 1e-4, "first derivative relative error {rel1}");
        assert!(rel2 < 1e-3, "second derivative relative error {rel2}");
        assert!(matches!(
            pressure_derivative_check(&phi, &psi, 0.5, 2),
            Err(Error::DomainError { .. })
        ));
    }

    #[test]
    fn transport_reference_cases() {
        // identical distributions: nothing moves
        let c01 = |_: usize, _: usize| 1.0;
        assert_eq!(exact_transport_cost(&[0.5, 0.5], &[0.5, 0.5], &|i, j| if i == j { 0.0 } else { c01(i, j) }), 0.0);
        // single swap across a known distance
        let cost = |i: usize, j: usize| if i == j { 0.0 } else { 0.7 };
        let w = exact_transport_cost(&[1.0, 0.0], &[0.0, 1.0], &cost);
        assert!((w - 0.7).abs() < 1e-12);
        // split supply converging on one sink
        let cost = |i: usize, j: usize| if i == j { 0.0 } else { (i + 1) as f64 * if j == 2 { 1.0 } else { 10.0 } };
        let w = exact_transport_cost(&[0.5, 0.5, 0.0], &[0.0, 0.0, 1.0], &cost);
        assert!((w - 1.5).abs() < 1e-12);
        // discrete metric: W is total variation
        let cost = |i: usize, j: usize| if i == j { 0.0 } else { 1.0 };
        let w = exact_transport_cost(&[0.3, 0.7], &[0.6, 0.4], &cost);
        assert!((w - 0.3).abs() < 1e-12);
    }

    fn sep(a: &[Symbol], b: &[Symbol]) -> usize {
        a.iter().zip(b).position(|(x, y)| x != y).unwrap_or(a.len())
    }

    #[test]
    fn tree_formula_matches_exact_transport() {
        let sft = Arc::new(golden());
        let p1 = CylinderPotential::from_values(sft.clone(), 2, vec![0.1, -0.6, 0.4]).unwrap();
        let p2 = CylinderPotential::from_values(sft.clone(), 2, vec![-0.3, 0.2, 0.0]).unwrap();
        for (d1, d2) in [(4, 4), (3, 4)] {
            let op1 = DiscretizedOperator::build(p1.clone(), d1).unwrap();
            let g1 = op1.gibbs_weights(&op1.triple_default().unwrap()).unwrap();
            let op2 = DiscretizedOperator::build(p2.clone(), d2).unwrap();
            let g2 = op2.gibbs_weights(&op2.triple_default().unwrap()).unwrap();
            for theta in [0.5, 0.3] {
                let d = 4;
                let tree = wasserstein_ultrametric(&g1, &g2, d, theta).unwrap();
                let words = sft.enumerate_admissible(d).unwrap();
                let m1: Vec<f64> =
                    words.iter().map(|w| g1.cylinder_mass(w).unwrap()).collect();
                let m2: Vec<f64> =
                    words.iter().map(|w| g2.cylinder_mass(w).unwrap()).collect();
                // the truncated tree metric: distance theta^sep - theta^d
                let cost = |i: usize, j: usize| {
                    if i == j {
                        0.0
                    } else {
                        theta.powi(sep(&words[i], &words[j]) as i32) - theta.powi(d as i32)
                    }
                };
                let lp = exact_transport_cost(&m1, &m2, &cost);
                assert!(
                    (tree - lp).abs() < 1e-9,
                    "theta {theta} depths {d1}/{d2}: tree {tree} lp {lp}"
                );
            }
        }
    }

    #[test]
    fn wasserstein_is_a_metric_on_gibbs_measures() {
        let sft = Arc::new(golden());
        let mk = |vals: Vec<f64>| {
            let p = CylinderPotential::from_values(sft.clone(), 2, vals).unwrap();
            let op = DiscretizedOperator::build(p, 3).unwrap();
            op.gibbs_weights(&op.triple_default().unwrap()).unwrap()
        };
        let a = mk(vec![0.1, -0.6, 0.4]);
        let b = mk(vec![-0.3, 0.2, 0.0]);
        let c = mk(vec![0.5, 0.5, -0.5]);
        let d = 5;
        let theta = 0.5;
        let wab = wasserstein_ultrametric(&a, &b, d, theta).unwrap();
        let wba = wasserstein_ultrametric(&b, &a, d, theta).unwrap();
        let wac = wasserstein_ultrametric(&a, &c, d, theta).unwrap();
        let wcb = wasserstein_ultrametric(&c, &b, d, theta).unwrap();
        let waa = wasserstein_ultrametric(&a, &a, d, theta).unwrap();
        assert_eq!(waa, 0.0);
        assert!((wab - wba).abs() < 1e-15);
        assert!(wab <= wac + wcb + 1e-12);
        assert!(wab > 0.0 && wab < 1.0);
        assert!(wasserstein_tail_bound(theta, d) == theta.powi(5));
    }

    #[test]
    fn stability_probe_scales_with_perturbation() {
        let sft = Arc::new(full(2));
        let phi = CylinderPotential::constant(sft.clone(), 0.0);
        let deltas: Vec<CylinderPotential> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| CylinderPotential::from_values(sft.clone(), 1, vec![e, 0.0]).unwrap())
            .collect();
        let rep = equilibrium_stability_probe(&phi, &deltas, 2, 6, 0.5).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert!(rep.rows[0].1 > rep.rows[1].1 && rep.rows[1].1 > rep.rows[2].1);
        assert!(rep.fitted_constant > 0.0);
        // linear response: distance per unit perturbation is roughly constant
        let r0 = rep.rows[0].1 / rep.rows[0].0;
        let r2 = rep.rows[2].1 / rep.rows[2].0;
        assert!(r0 / r2 > 0.5 && r0 / r2 < 2.0);
        // a constant shift does not move the measure at all
        let shift = [CylinderPotential::constant(sft.clone(), 0.3)];
        let rep = equilibrium_stability_probe(&phi, &shift, 2, 6, 0.5).unwrap();
        assert!(rep.rows[0].1 < 1e-12);
    }
}
