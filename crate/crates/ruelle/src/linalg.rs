//! Dense square matrices and the few factorizations the crate needs.
//!
//! Everything is plain `Vec<f64>` row-major storage. The matrices that occur
//! here are small (cylinder counts at desk scale), so O(n^3) routines without
//! blocking are the right tool.

use crate::error::{Error, Result};
use crate::seeding::splitmix64;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix rows must form a square");
            data.extend_from_slice(r);
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *yi = acc;
        }
    }

    /// y = A^T x
    pub fn tr_matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        y.fill(0.0);
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            let row = &self.data[i * self.n..(i + 1) * self.n];
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += a * xi;
            }
        }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    /// Determinant by partial-pivot LU. Singular matrices return 0.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].abs();
            for r in (col + 1)..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in (col + 1)..n {
                let f = a[r * n + col] / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
            }
        }
        det
    }

    /// Coefficients of det(I - z M) in ascending powers of z, degree = dim.
    ///
    /// Power sums p_j = tr(M^j) feed Newton's identities for the elementary
    /// symmetric polynomials e_k of the eigenvalues; the z^k coefficient is
    /// (-1)^k e_k.
    pub fn fredholm_poly_coeffs(&self) -> Vec<f64> {
        let n = self.n;
        let mut power_sums = Vec::with_capacity(n);
        let mut mk = self.clone();
        power_sums.push(mk.trace());
        for _ in 1..n {
            mk = mk.mul(self);
            power_sums.push(mk.trace());
        }
        let mut e = vec![0.0; n + 1];
        e[0] = 1.0;
        for k in 1..=n {
            let mut acc = 0.0;
            let mut sign = 1.0;
            for j in 1..=k {
                acc += sign * e[k - j] * power_sums[j - 1];
                sign = -sign;
            }
            e[k] = acc / k as f64;
        }
        (0..=n)
            .map(|k| if k % 2 == 0 { e[k] } else { -e[k] })
            .collect()
    }
}

/// Result of a converged power iteration.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    /// Sup-norm-1 vector, entrywise positive for primitive nonnegative input.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dominant eigenpair by power iteration from the all-ones vector.
///
/// Convergence is the relative sup-norm eigen-residual
/// ||A x - lambda x|| / (|lambda| ||x||) <= tol. The sign convention makes the
/// max-magnitude entry of the returned vector positive.
pub fn dominant_eigenpair(
    a: &Matrix,
    transpose: bool,
    tol: f64,
    max_iter: usize,
) -> Result<Eigenpair> {
    let n = a.dim();
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        if transpose {
            a.tr_matvec(&x, &mut y);
        } else {
            a.matvec(&x, &mut y);
        }
        let xx = dot(&x, &x);
        let lambda = dot(&x, &y) / xx;
        let scale = lambda.abs() * norm_inf(&x);
        if scale == 0.0 {
            // the zero matrix: eigenvalue 0, any vector
            return Ok(Eigenpair { value: 0.0, vector: x, iterations: it, residual: 0.0 });
        }
        let mut r = 0.0_f64;
        for i in 0..n {
            r = r.max((y[i] - lambda * x[i]).abs());
        }
        residual = r / scale;
        let ny = norm_inf(&y);
        if ny == 0.0 {
            return Ok(Eigenpair { value: 0.0, vector: x, iterations: it, residual: 0.0 });
        }
        // fix sign so the max-magnitude entry is positive
        let mut flip = 1.0;
        for v in &y {
            if v.abs() == ny {
                if *v < 0.0 {
                    flip = -1.0;
                }
                break;
            }
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = flip * yi / ny;
        }
        if residual <= tol {
            return Ok(Eigenpair { value: lambda, vector: x, iterations: it, residual });
        }
    }
    Err(Error::NoConvergence { what: "power iteration", iters: max_iter, residual })
}

/// |lambda_2| of `a` given its dominant triple, by 2-column subspace iteration
/// on the rank-one deflation B = A - lambda h nu^T.
///
/// A 2-dimensional orthogonal iteration converges geometrically whether the
/// subdominant eigenvalue is real or a complex pair; the projected 2x2 block
/// is the exact restriction once the subspace is invariant, and only its
/// spectral radius is reported. `nu . h = 1` is assumed.
pub fn second_eigenvalue_magnitude(
    a: &Matrix,
    lambda: f64,
    h: &[f64],
    nu: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let n = a.dim();
    if n < 2 {
        return Ok(0.0);
    }
    // deterministic pseudo-random start columns
    let mut z0: Vec<f64> = (0..n)
        .map(|i| (splitmix64(i as u64) as f64 / u64::MAX as f64) - 0.5)
        .collect();
    let mut z1: Vec<f64> = (0..n)
        .map(|i| (splitmix64(0x5555_aaaa ^ i as u64) as f64 / u64::MAX as f64) - 0.5)
        .collect();
    let apply_deflated = |x: &[f64], out: &mut [f64]| {
        a.matvec(x, out);
        let c = lambda * dot(nu, x);
        for (o, hh) in out.iter_mut().zip(h) {
            *o -= c * hh;
        }
    };
    // orthonormalize the start pair
    let nz = dot(&z0, &z0).sqrt();
    for v in z0.iter_mut() {
        *v /= nz;
    }
    let p = dot(&z0, &z1);
    for (v, w) in z1.iter_mut().zip(&z0) {
        *v -= p * w;
    }
    let nz = dot(&z1, &z1).sqrt();
    for v in z1.iter_mut() {
        *v /= nz;
    }
    let mut y0 = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut prev = f64::INFINITY;
    let mut delta = f64::INFINITY;
    let mut bnorm = 0.0_f64;
    for it in 1..=max_iter {
        apply_deflated(&z0, &mut y0);
        apply_deflated(&z1, &mut y1);
        // projected block in the orthonormal basis (z0, z1): H[r][c] = z_r . (B z_c)
        let h00 = dot(&z0, &y0);
        let h01 = dot(&z0, &y1);
        let h10 = dot(&z1, &y0);
        let h11 = dot(&z1, &y1);
        let scale0 = dot(&y0, &y0).sqrt();
        let scale1 = dot(&y1, &y1).sqrt();
        bnorm = bnorm.max(scale0).max(scale1);
        // the orbit of z0 has died relative to the operator scale: B acts as
        // zero (or a nilpotent block) there, and |h00| is all that is left
        if scale0 == 0.0 || (it >= 2 && scale0 <= 1e-13 * bnorm) {
            return Ok(h00.abs());
        }
        // Gram-Schmidt the iterates back to an orthonormal pair
        for v in y0.iter_mut() {
            *v /= scale0;
        }
        let proj = dot(&y0, &y1);
        for (v, w) in y1.iter_mut().zip(&y0) {
            *v -= proj * w;
        }
        let n1 = dot(&y1, &y1).sqrt();
        // relative collapse test: B maps the pair into a single direction,
        // so the second column of the block is roundoff, not information
        let collapsed = n1 <= 1e-12 * scale1.max(scale0);
        let rho = if collapsed {
            // numerically rank one; the 1-D Rayleigh quotient is the answer
            h00.abs()
        } else {
            let tr = h00 + h11;
            let det = h00 * h11 - h01 * h10;
            let disc = tr * tr / 4.0 - det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
            } else {
                det.abs().sqrt() // complex pair: |lambda|^2 = det
            }
        };
        std::mem::swap(&mut z0, &mut y0);
        if collapsed {
            // fresh second column, re-orthonormalized against the first
            for (i, v) in z1.iter_mut().enumerate() {
                *v = (splitmix64((it as u64) << 32 | i as u64) as f64 / u64::MAX as f64) - 0.5;
            }
            let p = dot(&z0, &z1);
            for (v, w) in z1.iter_mut().zip(&z0) {
                *v -= p * w;
            }
            let nn = dot(&z1, &z1).sqrt();
            for v in z1.iter_mut() {
                *v /= nn;
            }
        } else {
            for v in y1.iter_mut() {
                *v /= n1;
            }
            std::mem::swap(&mut z1, &mut y1);
        }
        // guard against roundoff reintroducing the deflated direction
        if it % 16 == 0 {
            let c0 = dot(nu, &z0);
            for (v, hh) in z0.iter_mut().zip(h) {
                *v -= c0 * hh;
            }
            let c1 = dot(nu, &z1);
            for (v, hh) in z1.iter_mut().zip(h) {
                *v -= c1 * hh;
            }
            let nn = dot(&z0, &z0).sqrt();
            for v in z0.iter_mut() {
                *v /= nn;
            }
            let p = dot(&z0, &z1);
            for (v, w) in z1.iter_mut().zip(&z0) {
                *v -= p * w;
            }
            let nn = dot(&z1, &z1).sqrt();
            for v in z1.iter_mut() {
                *v /= nn;
            }
        }
        delta = (rho - prev).abs();
        if it > 4 && delta <= tol * rho.max(1e-300) {
            return Ok(rho);
        }
        prev = rho;
    }
    Err(Error::NoConvergence { what: "subspace iteration for |lambda_2|", iters: max_iter, residual: delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Matrix {
        Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]])
    }

    #[test]
    fn matvec_and_trace() {
        let m = golden();
        let mut y = vec![0.0; 2];
        m.matvec(&[2.0, 3.0], &mut y);
        assert_eq!(y, vec![5.0, 2.0]);
        m.tr_matvec(&[2.0, 3.0], &mut y);
        assert_eq!(y, vec![5.0, 2.0]);
        assert_eq!(m.trace(), 1.0);
    }

    #[test]
    fn determinant_small_cases() {
        assert!((golden().det() + 1.0).abs() < 1e-15, "golden-mean matrix has det -1");
        let id = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(id.det(), 1.0);
        let sing = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(sing.det(), 0.0);
    }

    #[test]
    fn fredholm_coeffs_match_hand_expansion() {
        // det(I - z [[1,1],[1,0]]) = 1 - z - z^2
        let c = golden().fredholm_poly_coeffs();
        assert!((c[0] - 1.0).abs() < 1e-14);
        assert!((c[1] + 1.0).abs() < 1e-14);
        assert!((c[2] + 1.0).abs() < 1e-14);
        // det(I - z [[1,1],[1,1]]) = 1 - 2z (rank one)
        let ones = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let c = ones.fredholm_poly_coeffs();
        assert!((c[0] - 1.0).abs() < 1e-14);
        assert!((c[1] + 2.0).abs() < 1e-14);
        assert!(c[2].abs() < 1e-14);
    }

    #[test]
    fn power_iteration_finds_golden_ratio() {
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let e = dominant_eigenpair(&golden(), false, 1e-13, 10_000).unwrap();
        assert!(
            (e.value - phi).abs() < 1e-12,
            "dominant eigenvalue {} vs phi {}",
            e.value,
            phi
        );
        assert!(e.vector.iter().all(|v| *v > 0.0), "Perron vector is positive");
    }

    #[test]
    fn second_magnitude_real_case() {
        // golden-mean eigenvalues are phi and -1/phi
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let m = golden();
        let e = dominant_eigenpair(&m, false, 1e-13, 10_000).unwrap();
        let f = dominant_eigenpair(&m, true, 1e-13, 10_000).unwrap();
        // normalize nu . h = 1
        let s: f64 = f.vector.iter().zip(&e.vector).map(|(a, b)| a * b).sum();
        let nu: Vec<f64> = f.vector.iter().map(|v| v / s).collect();
        let l2 = second_eigenvalue_magnitude(&m, e.value, &e.vector, &nu, 1e-12, 100_000).unwrap();
        assert!(
            (l2 - 1.0 / phi).abs() < 1e-9,
            "second magnitude {} vs 1/phi {}",
            l2,
            1.0 / phi
        );
    }

    #[test]
    fn second_magnitude_complex_pair() {
        // companion matrix of z^3 - a z^2 - b with a complex subdominant pair
        // eigenvalues: roots of x^3 = 2x^2 - x + 0.5 -> one real dominant, two complex
        let m = Matrix::from_rows(&[
            vec![2.0, -1.0, 0.5],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ]);
        let e = dominant_eigenpair(&m, false, 1e-13, 100_000).unwrap();
        let f = dominant_eigenpair(&m, true, 1e-13, 100_000).unwrap();
        let s: f64 = f.vector.iter().zip(&e.vector).map(|(a, b)| a * b).sum();
        let nu: Vec<f64> = f.vector.iter().map(|v| v / s).collect();
        let l2 = second_eigenvalue_magnitude(&m, e.value, &e.vector, &nu, 1e-11, 200_000).unwrap();
        // |lambda_2|^2 = |det M| / lambda_1  (product of the complex pair)
        let expected = (m.det().abs() / e.value).sqrt();
        assert!(
            (l2 - expected).abs() < 1e-8,
            "complex-pair magnitude {} vs {}",
            l2,
            expected
        );
    }

    #[test]
    fn rank_one_deflation_gives_zero() {
        let ones = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let e = dominant_eigenpair(&ones, false, 1e-13, 100).unwrap();
        let nu = vec![0.5, 0.5];
        let l2 = second_eigenvalue_magnitude(&ones, 2.0, &e.vector, &nu, 1e-12, 1000).unwrap();
        assert_eq!(l2, 0.0, "all-ones matrix is rank one");
    }
}
