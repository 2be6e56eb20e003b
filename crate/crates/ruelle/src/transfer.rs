//! Discretized Ruelle transfer operators: leading spectral data, pressure,
//! Gibbs weights, spectral gap, and the convergence-rate probe.
//!
//! For a potential of range k and a cylinder depth m >= k the discretization
//! is exact: the operator preserves functions of the first m symbols, so the
//! matrix below has the same leading eigendata as the full operator.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::potential::{CylinderPotential, HolderMeta};
use crate::sft::{word_index, Symbol, TransitionMatrix, Word};

#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    sft: Arc<TransitionMatrix>,
    potential: CylinderPotential,
    depth: usize,
    words: Vec<Word>,
    matrix: Matrix,
}

/// Leading eigendata of a discretized operator: lambda = e^P, the positive
/// eigenfunction h, and the probability eigenmeasure nu with nu.h = 1.
#[derive(Debug, Clone)]
pub struct SpectralTriple {
    pub lambda: f64,
    pub h: Vec<f64>,
    pub nu: Vec<f64>,
    pub lambda2_mag: f64,
    /// |lambda_2| / lambda; strictly below 1 for primitive systems.
    pub ratio: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Gibbs cylinder weights at the operator depth, with the Markov chain whose
/// stationary law they are.
#[derive(Debug, Clone)]
pub struct GibbsDistribution {
    sft: Arc<TransitionMatrix>,
    depth: usize,
    words: Vec<Word>,
    weights: Vec<f64>,
    /// per-state successor list (state index, probability), rows sum to 1
    chain: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone)]
pub struct SpectralGapReport {
    pub lambda: f64,
    pub lambda2_mag: f64,
    /// log lambda - log |lambda_2|; +inf when the deflated operator vanishes.
    pub gap: f64,
    pub ratio: f64,
    /// alpha * log(1/metric_base): the a-priori gap bound for the Hölder
    /// class the potential discretizes. Informational.
    pub holder_class_bound: f64,
}

#[derive(Debug, Clone)]
pub struct RpfReport {
    /// (n, sup error of lambda^-n L^n g against nu(g) h)
    pub errors: Vec<(usize, f64)>,
    pub fitted_rate: f64,
}

impl DiscretizedOperator {
    /// Matrix entry (row v, col w) = e^(phi(w)) exactly when w is an
    /// admissible predecessor word of v, i.e. v = (w_1 .. w_{m-1} b).
    pub fn build(potential: CylinderPotential, depth: usize) -> Result<Self> {
        let range = potential.range();
        if depth < range {
            return Err(Error::DepthTooSmall { depth, range });
        }
        let sft = potential.sft().clone();
        let words = sft.enumerate_admissible(depth)?;
        let dim = words.len();
        if dim > crate::DENSE_DIM_LIMIT {
            return Err(Error::DimensionTooLarge {
                dim,
                limit: crate::DENSE_DIM_LIMIT,
                what: "dense transfer operator",
            });
        }
        let n = sft.alphabet_size() as Symbol;
        let mut matrix = Matrix::zeros(dim);
        let mut succ: Word = Vec::with_capacity(depth);
        for (cw, w) in words.iter().enumerate() {
            let wt = potential.value_of(w)?.exp();
            let last = w[depth - 1];
            for b in 0..n {
                if !sft.allowed(last, b) {
                    continue;
                }
                succ.clear();
                succ.extend_from_slice(&w[1..]);
                succ.push(b);
                let rv = word_index(&words, &succ)
                    .expect("successor of an admissible word is admissible");
                matrix.set(rv, cw, wt);
            }
        }
        Ok(DiscretizedOperator { sft, potential, depth, words, matrix })
    }

    pub fn sft(&self) -> &Arc<TransitionMatrix> {
        &self.sft
    }

    pub fn potential(&self) -> &CylinderPotential {
        &self.potential
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.matrix.matvec(x, &mut y);
        y
    }

    /// Two-sided power iteration; lambda from the bilinear Rayleigh quotient
    /// nu.(L h), which is quadratically accurate in the eigen-residual.
    pub fn leading_triple(&self, tol: f64, max_iter: usize) -> Result<SpectralTriple> {
        self.sft.require_primitive()?;
        let right = linalg::dominant_eigenpair(&self.matrix, false, tol, max_iter)?;
        let left = linalg::dominant_eigenpair(&self.matrix, true, tol, max_iter)?;
        let mut nu = left.vector;
        let total: f64 = nu.iter().sum();
        for v in nu.iter_mut() {
            *v /= total;
        }
        let mut h = right.vector;
        let s: f64 = nu.iter().zip(&h).map(|(a, b)| a * b).sum();
        for v in h.iter_mut() {
            *v /= s;
        }
        let lh = self.apply(&h);
        let lambda: f64 = nu.iter().zip(&lh).map(|(a, b)| a * b).sum();
        let lambda2_mag = linalg::second_eigenvalue_magnitude(
            &self.matrix,
            lambda,
            &h,
            &nu,
            tol.max(1e-12),
            max_iter,
        )?;
        Ok(SpectralTriple {
            lambda,
            h,
            nu,
            ratio: lambda2_mag / lambda,
            lambda2_mag,
            iterations: right.iterations.max(left.iterations),
            residual: right.residual.max(left.residual),
        })
    }

    pub fn triple_default(&self) -> Result<SpectralTriple> {
        self.leading_triple(crate::DEFAULT_EIGEN_TOL, crate::DEFAULT_MAX_ITER)
    }

    /// Leading eigenvalue alone, skipping the subdominant solve; the cheap
    /// path for pressure evaluations inside root finders.
    pub fn leading_lambda(&self, tol: f64, max_iter: usize) -> Result<f64> {
        self.sft.require_primitive()?;
        let right = linalg::dominant_eigenpair(&self.matrix, false, tol, max_iter)?;
        let left = linalg::dominant_eigenpair(&self.matrix, true, tol, max_iter)?;
        let lh = self.apply(&right.vector);
        let num: f64 = left.vector.iter().zip(&lh).map(|(a, b)| a * b).sum();
        let den: f64 = left.vector.iter().zip(&right.vector).map(|(a, b)| a * b).sum();
        Ok(num / den)
    }

    /// Whether L applied to the constant 1 returns 1; the defect is the
    /// largest row deviation.
    pub fn check_normalized(&self) -> (bool, f64) {
        let ones = vec![1.0; self.dim()];
        let out = self.apply(&ones);
        let defect = out.iter().fold(0.0_f64, |m, v| m.max((v - 1.0).abs()));
        (defect <= 1e-10, defect)
    }

    /// Error curve e_n = sup |lambda^-n L^n g - nu(g) h| and its fitted
    /// geometric rate over the second half of the lags, ignoring values at
    /// the floating-point noise floor.
    pub fn rpf_convergence(
        &self,
        triple: &SpectralTriple,
        g: &[f64],
        n_max: usize,
    ) -> RpfReport {
        let nu_g: f64 = triple.nu.iter().zip(g).map(|(a, b)| a * b).sum();
        let mut x = g.to_vec();
        let mut errors = Vec::with_capacity(n_max + 1);
        let sup = |v: &[f64]| -> f64 {
            v.iter()
                .zip(&triple.h)
                .map(|(xi, hi)| (xi - nu_g * hi).abs())
                .fold(0.0_f64, f64::max)
        };
        errors.push((0, sup(&x)));
        for n in 1..=n_max {
            x = self.apply(&x);
            for v in x.iter_mut() {
                *v /= triple.lambda;
            }
            errors.push((n, sup(&x)));
        }
        let scale = errors.iter().map(|&(_, e)| e).fold(0.0_f64, f64::max);
        let floor = 1e-13 * scale;
        let window: Vec<(f64, f64)> = errors
            .iter()
            .filter(|&&(n, e)| n >= n_max / 2 && e > floor)
            .map(|&(n, e)| (n as f64, e.ln()))
            .collect();
        let fitted_rate = fit_slope(&window).map(f64::exp).unwrap_or(0.0);
        RpfReport { errors, fitted_rate }
    }

    /// Gap report against the Hölder-class lower bound.
    pub fn spectral_gap(&self, meta: &HolderMeta) -> Result<SpectralGapReport> {
        let t = self.triple_default()?;
        let gap = if t.lambda2_mag == 0.0 {
            f64::INFINITY
        } else {
            t.lambda.ln() - t.lambda2_mag.ln()
        };
        Ok(SpectralGapReport {
            lambda: t.lambda,
            lambda2_mag: t.lambda2_mag,
            gap,
            ratio: t.ratio,
            holder_class_bound: meta.exponent * (1.0 / meta.metric_base).ln(),
        })
    }

    /// Gibbs weights h.nu at this depth, plus the sampling chain derived
    /// from the depth-(m+1) weights.
    pub fn gibbs_weights(&self, triple: &SpectralTriple) -> Result<GibbsDistribution> {
        let dim = self.dim();
        let mut weights: Vec<f64> =
            triple.h.iter().zip(&triple.nu).map(|(a, b)| a * b).collect();
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        for (index, &w) in weights.iter().enumerate() {
            if w < 1e-15 {
                return Err(Error::ZeroMassCylinder { index, weight: w });
            }
        }

        let fine = DiscretizedOperator::build(self.potential.clone(), self.depth + 1)?;
        let fine_triple = fine.leading_triple(crate::DEFAULT_EIGEN_TOL, crate::DEFAULT_MAX_ITER)?;
        let mut fine_weights: Vec<f64> =
            fine_triple.h.iter().zip(&fine_triple.nu).map(|(a, b)| a * b).collect();
        let ft: f64 = fine_weights.iter().sum();
        for w in fine_weights.iter_mut() {
            *w /= ft;
        }

        let n = self.sft.alphabet_size() as Symbol;
        let mut chain = Vec::with_capacity(dim);
        let mut ext: Word = Vec::with_capacity(self.depth + 1);
        let mut succ: Word = Vec::with_capacity(self.depth);
        for (iu, u) in self.words.iter().enumerate() {
            let mut row: Vec<(usize, f64)> = Vec::new();
            let last = u[self.depth - 1];
            for a in 0..n {
                if !self.sft.allowed(last, a) {
                    continue;
                }
                ext.clear();
                ext.extend_from_slice(u);
                ext.push(a);
                let fidx = word_index(fine.words(), &ext)
                    .expect("extension of an admissible word is admissible");
                succ.clear();
                succ.extend_from_slice(&u[1..]);
                succ.push(a);
                let sidx = word_index(&self.words, &succ).expect("successor admissible");
                row.push((sidx, fine_weights[fidx] / weights[iu]));
            }
            let rs: f64 = row.iter().map(|&(_, p)| p).sum();
            for (_, p) in row.iter_mut() {
                *p /= rs;
            }
            chain.push(row);
        }
        Ok(GibbsDistribution {
            sft: self.sft.clone(),
            depth: self.depth,
            words: self.words.clone(),
            weights,
            chain,
        })
    }
}

pub(crate) fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// log of the dominant eigenvalue of the operator at the given depth.
pub fn pressure(potential: &CylinderPotential, depth: usize) -> Result<f64> {
    let op = DiscretizedOperator::build(potential.clone(), depth)?;
    Ok(op.leading_lambda(crate::DEFAULT_EIGEN_TOL, crate::DEFAULT_MAX_ITER)?.ln())
}

/// Depth m = max(range, 2): deep enough for the operator to be exact and for
/// the subleading eigenvalue to be meaningful.
pub fn default_depth(potential: &CylinderPotential) -> usize {
    potential.range().max(2)
}

pub fn pressure_default(potential: &CylinderPotential) -> Result<f64> {
    pressure(potential, default_depth(potential))
}

/// The cocycle-shifted potential phi + log h - log h(sigma .) - log lambda,
/// whose operator fixes the constant 1. Range grows to depth + 1.
pub fn normalized_potential(
    potential: &CylinderPotential,
    depth: usize,
) -> Result<CylinderPotential> {
    let op = DiscretizedOperator::build(potential.clone(), depth)?;
    let t = op.triple_default()?;
    let log_lambda = t.lambda.ln();
    let words_fine = op.sft().enumerate_admissible(depth + 1)?;
    let mut values = Vec::with_capacity(words_fine.len());
    for w in &words_fine {
        let head = word_index(op.words(), &w[..depth]).expect("prefix admissible");
        let tail = word_index(op.words(), &w[1..]).expect("suffix admissible");
        let v = potential.value_of(w)? + t.h[head].ln() - t.h[tail].ln() - log_lambda;
        values.push(v);
    }
    CylinderPotential::from_values(potential.sft().clone(), depth + 1, values)
}

/// Empirical Gibbs constants: the extremes over all cylinders of length
/// n <= n_max of mu[w] / e^(S_n phi - n P), evaluated on the lexicographically
/// least extension of each word. Outputs, never asserted against fixed values.
pub fn gibbs_constants(
    gibbs: &GibbsDistribution,
    potential: &CylinderPotential,
    pressure: f64,
    n_max: usize,
) -> Result<(f64, f64)> {
    let sft = potential.sft();
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0_f64;
    for n in 1..=n_max {
        for w in sft.enumerate_admissible(n)? {
            let mass = gibbs.cylinder_mass(&w)?;
            // extend to n + range - 1 symbols by least admissible symbols
            let mut x = w.clone();
            while x.len() < n + potential.range() - 1 {
                let last = *x.last().unwrap();
                let next = (0..sft.alphabet_size() as Symbol)
                    .find(|&b| sft.allowed(last, b))
                    .expect("validated matrices have no zero rows");
                x.push(next);
            }
            let sn = potential.birkhoff_sum(&x, n, false)?;
            let ratio = mass / (sn - n as f64 * pressure).exp();
            c1 = c1.min(ratio);
            c2 = c2.max(ratio);
        }
    }
    Ok((c1, c2))
}

impl GibbsDistribution {
    pub fn sft(&self) -> &Arc<TransitionMatrix> {
        &self.sft
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn chain(&self) -> &[Vec<(usize, f64)>] {
        &self.chain
    }

    /// Measure of the cylinder [w]: marginalized below the stored depth,
    /// extended through the Markov chain above it. Inadmissible words have
    /// mass zero.
    pub fn cylinder_mass(&self, w: &[Symbol]) -> Result<f64> {
        if w.is_empty() {
            return Ok(1.0);
        }
        if !self.sft.is_admissible(w) {
            return Ok(0.0);
        }
        if w.len() <= self.depth {
            let lo = self.words.partition_point(|probe| probe.as_slice() < w);
            let mut acc = 0.0;
            for i in lo..self.words.len() {
                if self.words[i][..w.len()] != *w {
                    break;
                }
                acc += self.weights[i];
            }
            return Ok(acc);
        }
        let mut state = word_index(&self.words, &w[..self.depth])
            .expect("admissible prefix is enumerated");
        let mut mass = self.weights[state];
        let mut succ: Word = Vec::with_capacity(self.depth);
        for t in self.depth..w.len() {
            succ.clear();
            succ.extend_from_slice(&self.words[state][1..]);
            succ.push(w[t]);
            let next = word_index(&self.words, &succ).expect("successor admissible");
            let p = self.chain[state]
                .iter()
                .find(|&&(idx, _)| idx == next)
                .map(|&(_, p)| p)
                .expect("successor present in chain row");
            mass *= p;
            state = next;
        }
        Ok(mass)
    }

    /// Stationarity defect of the weights under the chain, in l1.
    pub fn stationarity_defect(&self) -> f64 {
        let mut pushed = vec![0.0; self.weights.len()];
        for (i, row) in self.chain.iter().enumerate() {
            for &(j, p) in row {
                pushed[j] += self.weights[i] * p;
            }
        }
        pushed
            .iter()
            .zip(&self.weights)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Draws an initial state index from the cylinder weights.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if r < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    /// Draws the successor state of `state`.
    pub fn step<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        let r: f64 = rng.random();
        let row = &self.chain[state];
        let mut acc = 0.0;
        for &(j, p) in row {
            acc += p;
            if r < acc {
                return j;
            }
        }
        row.last().expect("chain rows are nonempty").0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::tests::{full, golden};

    fn phi0(sft: &Arc<TransitionMatrix>) -> CylinderPotential {
        CylinderPotential::constant(sft.clone(), 0.0)
    }

    #[test]
    fn operator_matrices_match_hand_construction() {
        let sft = Arc::new(full(2));
        let op = DiscretizedOperator::build(phi0(&sft), 1).unwrap();
        assert_eq!(op.matrix(), &Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]));

        let g = Arc::new(golden());
        let op = DiscretizedOperator::build(phi0(&g), 1).unwrap();
        assert_eq!(op.matrix(), &Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]));

        let sft = Arc::new(full(2));
        let phi = CylinderPotential::from_values(
            sft.clone(),
            1,
            vec![2.0_f64.ln(), 3.0_f64.ln()],
        )
        .unwrap();
        let op = DiscretizedOperator::build(phi, 1).unwrap();
        let want = Matrix::from_rows(&[vec![2.0, 3.0], vec![2.0, 3.0]]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((op.matrix().get(i, j) - want.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn defining_sum_matches_matrix_action() {
        // (L g)(v) = sum over admissible prepends j of e^phi(jv..) g(jv..)
        let sft = Arc::new(golden());
        let phi = CylinderPotential::from_values(sft.clone(), 2, vec![0.4, -0.3, 0.9]).unwrap();
        let op = DiscretizedOperator::build(phi.clone(), 3).unwrap();
        let g: Vec<f64> = (0..op.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let lg = op.apply(&g);
        for (vi, v) in op.words().iter().enumerate() {
            let mut want = 0.0;
            for j in 0..2u16 {
                if !sft.allowed(j, v[0]) {
                    continue;
                }
                let mut w = vec![j];
                w.extend_from_slice(&v[..2]);
                let widx = word_index(op.words(), &w).unwrap();
                want += phi.value_of(&w).unwrap().exp() * g[widx];
            }
            assert!((lg[vi] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn leading_triples_on_ground_truth_systems() {
        let sft = Arc::new(full(2));
        let op = DiscretizedOperator::build(phi0(&sft), 1).unwrap();
        let t = op.triple_default().unwrap();
        assert!((t.lambda - 2.0).abs() < 1e-12);
        assert!((t.h[0] - t.h[1]).abs() < 1e-10);
        assert!((t.nu[0] - 0.5).abs() < 1e-10);
        assert_eq!(t.lambda2_mag, 0.0);

        let g = Arc::new(golden());
        let op = DiscretizedOperator::build(phi0(&g), 1).unwrap();
        let t = op.triple_default().unwrap();
        let phi_gold = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((t.lambda - phi_gold).abs() < 1e-12);
        assert!((t.lambda2_mag - 1.0 / phi_gold).abs() < 1e-9);

        let five = Arc::new(full(5));
        let norm = CylinderPotential::constant(five, -(5.0_f64.ln()));
        let op = DiscretizedOperator::build(norm, 1).unwrap();
        let t = op.triple_default().unwrap();
        assert!((t.lambda - 1.0).abs() < 1e-13);
    }

    #[test]
    fn pressure_ground_truths() {
        let sft = Arc::new(full(2));
        assert!((pressure_default(&phi0(&sft)).unwrap() - 2.0_f64.ln()).abs() < 1e-12);
        let g = Arc::new(golden());
        let phi_gold = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((pressure_default(&phi0(&g)).unwrap() - phi_gold.ln()).abs() < 1e-12);
        // constant shift
        let c = 0.37;
        let shifted = phi0(&sft).add_constant(c);
        assert!(
            (pressure_default(&shifted).unwrap() - (2.0_f64.ln() + c)).abs() < 1e-12
        );
    }

    #[test]
    fn depth_invariance_of_pressure() {
        let g = Arc::new(golden());
        let phi =
            CylinderPotential::from_values(g, 2, vec![0.2, -0.5, 0.8]).unwrap();
        let p2 = pressure(&phi, 2).unwrap();
        for m in 3..=6 {
            let pm = pressure(&phi, m).unwrap();
            assert!((pm - p2).abs() < 1e-10, "depth {m}: {pm} vs {p2}");
        }
    }

    #[test]
    fn extension_preserves_pressure() {
        let g = Arc::new(golden());
        let phi = CylinderPotential::from_values(g, 1, vec![0.3, -0.4]).unwrap();
        let base = pressure_default(&phi).unwrap();
        let ext = phi.extend_range(3).unwrap();
        assert!((pressure_default(&ext).unwrap() - base).abs() < 1e-10);
    }

    #[test]
    fn parry_measure_on_golden_mean() {
        let g = Arc::new(golden());
        let op = DiscretizedOperator::build(phi0(&g), 1).unwrap();
        let t = op.triple_default().unwrap();
        let gibbs = op.gibbs_weights(&t).unwrap();
        let phi_gold = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let p0 = phi_gold * phi_gold / (1.0 + phi_gold * phi_gold);
        assert!((gibbs.weights()[0] - p0).abs() < 1e-10);
        assert!((gibbs.weights()[1] - (1.0 - p0)).abs() < 1e-10);
        // transition probabilities of the Parry chain
        let row0 = gibbs.chain()[0].clone();
        assert!((row0[0].1 - 1.0 / phi_gold).abs() < 1e-9);
        assert!((row0[1].1 - 1.0 / (phi_gold * phi_gold)).abs() < 1e-9);
        let row1 = gibbs.chain()[1].clone();
        assert_eq!(row1.len(), 1);
        assert!((row1[0].1 - 1.0).abs() < 1e-12);
        assert!(gibbs.stationarity_defect() < 1e-10);
    }

    #[test]
    fn bernoulli_weights_from_normalized_potential() {
        let sft = Arc::new(full(2));
        let p = 0.3_f64;
        let phi =
            CylinderPotential::from_values(sft, 1, vec![p.ln(), (1.0 - p).ln()]).unwrap();
        let op = DiscretizedOperator::build(phi, 1).unwrap();
        let t = op.triple_default().unwrap();
        assert!((t.lambda - 1.0).abs() < 1e-12);
        let gibbs = op.gibbs_weights(&t).unwrap();
        assert!((gibbs.weights()[0] - p).abs() < 1e-10);
        assert!((gibbs.weights()[1] - (1.0 - p)).abs() < 1e-10);
        for row in gibbs.chain() {
            for &(j, q) in row {
                let want = if j % 2 == 0 { p } else { 1.0 - p };
                assert!((q - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gibbs_weights_shift_invariance_and_cylinder_masses() {
        let g = Arc::new(golden());
        let phi = CylinderPotential::from_values(g.clone(), 2, vec![0.1, -0.6, 0.4]).unwrap();
        let op = DiscretizedOperator::build(phi.clone(), 3).unwrap();
        let gibbs = op.gibbs_weights(&op.triple_default().unwrap()).unwrap();
        // mass of [u] as a prefix equals mass of [u] as a suffix sum
        for u in g.enumerate_admissible(2).unwrap() {
            let prefix = gibbs.cylinder_mass(&u).unwrap();
            let mut suffix = 0.0;
            for (w, &wt) in gibbs.words().iter().zip(gibbs.weights()) {
                if w[1..] == u[..] {
                    suffix += wt;
                }
            }
            assert!((prefix - suffix).abs() < 1e-10);
        }
        // chain-extended masses are additive
        for u in g.enumerate_admissible(4).unwrap() {
            let m_u = gibbs.cylinder_mass(&u).unwrap();
            let mut split = 0.0;
            for b in 0..2u16 {
                if g.allowed(u[3], b) {
                    let mut ext = u.clone();
                    ext.push(b);
                    split += gibbs.cylinder_mass(&ext).unwrap();
                }
            }
            assert!((m_u - split).abs() < 1e-13);
        }
        // inadmissible cylinder carries no mass
        assert_eq!(gibbs.cylinder_mass(&[1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn gibbs_property_constants_are_finite_and_bracket_one() {
        let g = Arc::new(golden());
        let phi = CylinderPotential::from_values(g, 2, vec![0.1, -0.6, 0.4]).unwrap();
        let op = DiscretizedOperator::build(phi.clone(), 3).unwrap();
        let t = op.triple_default().unwrap();
        let gibbs = op.gibbs_weights(&t).unwrap();
        let (c1, c2) = gibbs_constants(&gibbs, &phi, t.lambda.ln(), 6).unwrap();
        assert!(c1.is_finite() && c2.is_finite());
        assert!(c1 > 0.0);
        assert!(c1 <= c2);
        assert!(c1 <= 1.0 + 1e-9 && c2 >= 1.0 - 1e-9, "constants bracket 1: {c1} {c2}");
    }

    #[test]
    fn normalization_check_and_cocycle_normalization() {
        let five = Arc::new(full(5));
        let norm = CylinderPotential::constant(five, -(5.0_f64.ln()));
        let op = DiscretizedOperator::build(norm, 1).unwrap();
        let (ok, defect) = op.check_normalized();
        assert!(ok && defect < 1e-14);

        let sft = Arc::new(full(2));
        let op = DiscretizedOperator::build(phi0(&sft), 1).unwrap();
        let (ok, defect) = op.check_normalized();
        assert!(!ok);
        assert!((defect - 1.0).abs() < 1e-14);

        let g = Arc::new(golden());
        let phi = CylinderPotential::from_values(g, 2, vec![0.7, -0.2, 0.05]).unwrap();
        let normd = normalized_potential(&phi, 2).unwrap();
        assert_eq!(normd.range(), 3);
        let opn = DiscretizedOperator::build(normd, 3).unwrap();
        let (ok, defect) = opn.check_normalized();
        assert!(ok, "normalized cocycle defect {defect}");
        assert!(defect < 1e-8);
    }

    #[test]
    fn rpf_errors_vanish_on_the_eigenfunction() {
        let g = Arc::new(golden());
        let op = DiscretizedOperator::build(phi0(&g), 2).unwrap();
        let t = op.triple_default().unwrap();
        let report = op.rpf_convergence(&t, &t.h, 20);
        for &(_, e) in &report.errors {
            assert!(e < 1e-8, "eigenfunction error {e}");
        }
    }

    #[test]
    fn rpf_rank_one_case_collapses_immediately() {
        let sft = Arc::new(full(2));
        let op = DiscretizedOperator::build(phi0(&sft), 1).unwrap();
        let t = op.triple_default().unwrap();
        let report = op.rpf_convergence(&t, &[1.0, 0.0], 10);
        assert!(report.errors[0].1 > 0.1);
        for &(n, e) in &report.errors[1..] {
            assert!(e < 1e-13, "lag {n} error {e}");
        }
    }

    #[test]
    fn rpf_rate_matches_eigenvalue_ratio_on_golden_mean() {
        let g = Arc::new(golden());
        let op = DiscretizedOperator::build(phi0(&g), 2).unwrap();
        let t = op.triple_default().unwrap();
        let g_test: Vec<f64> = (0..op.dim()).map(|i| (1.3 * i as f64 + 0.4).cos()).collect();
        let report = op.rpf_convergence(&t, &g_test, 24);
        let predicted = t.ratio;
        assert!(
            report.fitted_rate <= predicted + 0.05,
            "fitted {} vs predicted {}",
            report.fitted_rate,
            predicted
        );
        assert!(report.fitted_rate > predicted - 0.05);
    }

    #[test]
    fn spectral_gap_reports() {
        let meta = HolderMeta::default();
        let sft = Arc::new(full(2));
        let op = DiscretizedOperator::build(phi0(&sft), 1).unwrap();
        let rep = op.spectral_gap(&meta).unwrap();
        assert_eq!(rep.lambda2_mag, 0.0);
        assert!(rep.gap.is_infinite());

        let g = Arc::new(golden());
        let op = DiscretizedOperator::build(phi0(&g), 2).unwrap();
        let rep = op.spectral_gap(&meta).unwrap();
        let phi_gold = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((rep.gap - 2.0 * phi_gold.ln()).abs() < 1e-8);
        assert!(rep.gap >= 0.0);
        assert!((rep.holder_class_bound - 2.0_f64.ln()).abs() < 1e-15);
    }
}
