//! Subshifts of finite type: admissibility, primitivity, entropy, and word
//! enumeration.
//!
//! Word enumeration order is lexicographic and is the canonical index for
//! every cylinder-indexed vector and matrix in the crate; changing it would
//! silently scramble all downstream data, so it is fixed forever.

use std::sync::OnceLock;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::linalg;

pub type Symbol = u16;
pub type Word = Vec<Symbol>;

#[derive(Debug)]
pub struct TransitionMatrix {
    n: usize,
    entries: Vec<u8>,
    // least p with A^p > 0, None once established non-primitive
    primitivity: OnceLock<Option<usize>>,
}

impl Clone for TransitionMatrix {
    fn clone(&self) -> Self {
        TransitionMatrix {
            n: self.n,
            entries: self.entries.clone(),
            primitivity: self.primitivity.clone(),
        }
    }
}

impl PartialEq for TransitionMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.entries == other.entries
    }
}

impl TransitionMatrix {
    /// Checks shape, 0/1 entries, and that every symbol has a successor and a
    /// predecessor.
    pub fn validate(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NonSquare { rows: n, bad_row: i, bad_len: r.len() });
            }
        }
        if n == 0 {
            return Err(Error::NonSquare { rows: 0, bad_row: 0, bad_len: 0 });
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0 && v != 1 {
                    return Err(Error::NonBinaryEntry { row: i, col: j, value: v });
                }
                entries.push(v as u8);
            }
        }
        for i in 0..n {
            if entries[i * n..(i + 1) * n].iter().all(|&v| v == 0) {
                return Err(Error::ZeroRow(i));
            }
        }
        for j in 0..n {
            if (0..n).all(|i| entries[i * n + j] == 0) {
                return Err(Error::ZeroColumn(j));
            }
        }
        Ok(TransitionMatrix { n, entries, primitivity: OnceLock::new() })
    }

    /// Parses the plain-text format: optional '#' comment lines, a line with
    /// the alphabet size N, then N lines of N space-separated 0/1 digits.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<i64>> = Vec::new();
        let mut declared: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match declared {
                None => {
                    let n: usize = line.parse().map_err(|_| Error::Parse {
                        what: "transition matrix",
                        line: lineno + 1,
                        msg: format!("expected the alphabet size, got {line:?}"),
                    })?;
                    if n == 0 {
                        return Err(Error::Parse {
                            what: "transition matrix",
                            line: lineno + 1,
                            msg: "alphabet size must be at least 1".into(),
                        });
                    }
                    declared = Some(n);
                }
                Some(n) => {
                    if rows.len() == n {
                        return Err(Error::Parse {
                            what: "transition matrix",
                            line: lineno + 1,
                            msg: "unexpected content after the final matrix row".into(),
                        });
                    }
                    let mut row = Vec::with_capacity(n);
                    for tok in line.split_whitespace() {
                        let v: i64 = tok.parse().map_err(|_| Error::Parse {
                            what: "transition matrix",
                            line: lineno + 1,
                            msg: format!("expected a 0/1 entry, got {tok:?}"),
                        })?;
                        row.push(v);
                    }
                    if row.len() != n {
                        return Err(Error::Parse {
                            what: "transition matrix",
                            line: lineno + 1,
                            msg: format!("expected {n} entries, got {}", row.len()),
                        });
                    }
                    rows.push(row);
                }
            }
        }
        let n = declared.ok_or(Error::Parse {
            what: "transition matrix",
            line: 0,
            msg: "empty input".into(),
        })?;
        if rows.len() != n {
            return Err(Error::Parse {
                what: "transition matrix",
                line: 0,
                msg: format!("expected {n} matrix rows, got {}", rows.len()),
            });
        }
        Self::validate(&rows)
    }

    pub fn alphabet_size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn allowed(&self, a: Symbol, b: Symbol) -> bool {
        let (a, b) = (a as usize, b as usize);
        a < self.n && b < self.n && self.entries[a * self.n + b] == 1
    }

    pub fn is_admissible(&self, w: &[Symbol]) -> bool {
        if w.iter().any(|&s| s as usize >= self.n) {
            return false;
        }
        w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    pub fn check_admissible(&self, w: &[Symbol]) -> Result<()> {
        for (pos, p) in w.windows(2).enumerate() {
            if !self.allowed(p[0], p[1]) {
                return Err(Error::InadmissibleWord {
                    a: p[0] as usize,
                    b: p[1] as usize,
                    pos,
                });
            }
        }
        if let Some(&s) = w.iter().find(|&&s| s as usize >= self.n) {
            return Err(Error::InadmissibleWord { a: s as usize, b: s as usize, pos: 0 });
        }
        Ok(())
    }

    /// Primitivity by boolean powers up to the Wielandt bound (N-1)^2 + 1.
    /// Once some power is strictly positive every later power is too (no zero
    /// rows/columns), so the first hit is the least witness. Cached.
    pub fn is_primitive(&self) -> (bool, Option<usize>) {
        let result = self.primitivity.get_or_init(|| {
            let n = self.n;
            let bound = (n - 1) * (n - 1) + 1;
            let blocks = n.div_ceil(64);
            let row_bits = |m: &[u8], i: usize| -> Vec<u64> {
                let mut b = vec![0u64; blocks];
                for j in 0..n {
                    if m[i * n + j] == 1 {
                        b[j / 64] |= 1 << (j % 64);
                    }
                }
                b
            };
            let a: Vec<Vec<u64>> = (0..n).map(|i| row_bits(&self.entries, i)).collect();
            let mut p = a.clone();
            let full = {
                let mut f = vec![u64::MAX; blocks];
                let rem = n % 64;
                if rem != 0 {
                    f[blocks - 1] = (1u64 << rem) - 1;
                }
                f
            };
            for power in 1..=bound {
                if p.iter().all(|r| r == &full) {
                    return Some(power);
                }
                if power == bound {
                    break;
                }
                let mut next = vec![vec![0u64; blocks]; n];
                for i in 0..n {
                    for j in 0..n {
                        if p[i][j / 64] >> (j % 64) & 1 == 1 {
                            for (nb, ab) in next[i].iter_mut().zip(&a[j]) {
                                *nb |= ab;
                            }
                        }
                    }
                }
                p = next;
            }
            None
        });
        (result.is_some(), *result)
    }

    pub fn require_primitive(&self) -> Result<usize> {
        match self.is_primitive() {
            (true, Some(p)) => Ok(p),
            _ => Err(Error::NotPrimitive),
        }
    }

    fn as_float_matrix(&self) -> linalg::Matrix {
        let mut m = linalg::Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.entries[i * self.n + j] == 1 {
                    m.set(i, j, 1.0);
                }
            }
        }
        m
    }

    /// Spectral radius via two-sided power iteration and the bilinear
    /// Rayleigh quotient nu.(A h)/(nu.h).
    pub fn spectral_radius(&self) -> Result<f64> {
        self.require_primitive()?;
        let m = self.as_float_matrix();
        let right = linalg::dominant_eigenpair(&m, false, 1e-12, 100_000)?;
        let left = linalg::dominant_eigenpair(&m, true, 1e-12, 100_000)?;
        let mut mh = vec![0.0; self.n];
        m.matvec(&right.vector, &mut mh);
        let num: f64 = left.vector.iter().zip(&mh).map(|(a, b)| a * b).sum();
        let den: f64 = left.vector.iter().zip(&right.vector).map(|(a, b)| a * b).sum();
        Ok(num / den)
    }

    pub fn topological_entropy(&self) -> Result<f64> {
        Ok(self.spectral_radius()?.ln())
    }

    /// Number of n-periodic sequences, exactly: tr(A^n).
    pub fn count_fixed(&self, n: usize) -> BigUint {
        let pow = self.biguint_power(n);
        let mut tr = BigUint::ZERO;
        for i in 0..self.n {
            tr += &pow[i * self.n + i];
        }
        tr
    }

    fn biguint_power(&self, n: usize) -> Vec<BigUint> {
        let dim = self.n;
        let mut acc: Vec<BigUint> = (0..dim * dim)
            .map(|idx| if idx / dim == idx % dim { BigUint::from(1u8) } else { BigUint::ZERO })
            .collect();
        let base: Vec<BigUint> =
            self.entries.iter().map(|&v| BigUint::from(v)).collect();
        for _ in 0..n {
            let mut next = vec![BigUint::ZERO; dim * dim];
            for i in 0..dim {
                for k in 0..dim {
                    let a = &acc[i * dim + k];
                    if *a == BigUint::ZERO {
                        continue;
                    }
                    for j in 0..dim {
                        if base[k * dim + j] != BigUint::ZERO {
                            next[i * dim + j] += a;
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// Number of admissible k-words, exactly.
    pub fn word_count(&self, k: usize) -> BigUint {
        if k == 0 {
            return BigUint::from(1u8);
        }
        let pow = self.biguint_power(k - 1);
        pow.iter().sum()
    }

    pub fn enumerate_admissible(&self, k: usize) -> Result<Vec<Word>> {
        self.enumerate_admissible_capped(k, crate::DEFAULT_ENUM_CAP)
    }

    /// All admissible k-words in lexicographic order.
    pub fn enumerate_admissible_capped(&self, k: usize, cap: usize) -> Result<Vec<Word>> {
        let count = self.word_count(k);
        check_budget(&count, cap)?;
        let mut out = Vec::with_capacity(budget_hint(&count));
        let mut scratch = Vec::with_capacity(k);
        self.dfs_words(k, None, &mut scratch, &mut out);
        Ok(out)
    }

    pub fn enumerate_periodic(&self, n: usize) -> Result<Vec<Word>> {
        self.enumerate_periodic_capped(n, crate::DEFAULT_ENUM_CAP)
    }

    /// All admissible n-words whose wraparound pair is also admissible, in
    /// lexicographic order; these are exactly the n-periodic sequences.
    pub fn enumerate_periodic_capped(&self, n: usize, cap: usize) -> Result<Vec<Word>> {
        let count = self.count_fixed(n);
        check_budget(&count, cap)?;
        let mut out = Vec::with_capacity(budget_hint(&count));
        let mut scratch = Vec::with_capacity(n);
        self.dfs_words(n, Some(()), &mut scratch, &mut out);
        Ok(out)
    }

    fn dfs_words(
        &self,
        len: usize,
        cyclic: Option<()>,
        scratch: &mut Word,
        out: &mut Vec<Word>,
    ) {
        if scratch.len() == len {
            if let Some(()) = cyclic {
                if len > 0 && !self.allowed(scratch[len - 1], scratch[0]) {
                    return;
                }
            }
            out.push(scratch.clone());
            return;
        }
        for s in 0..self.n as Symbol {
            if let Some(&last) = scratch.last() {
                if !self.allowed(last, s) {
                    continue;
                }
            }
            scratch.push(s);
            self.dfs_words(len, cyclic, scratch, out);
            scratch.pop();
        }
    }
}

fn check_budget(count: &BigUint, cap: usize) -> Result<()> {
    if *count > BigUint::from(cap) {
        let needed = u128::try_from(count.clone()).unwrap_or(u128::MAX);
        return Err(Error::BudgetExceeded { needed, cap });
    }
    Ok(())
}

fn budget_hint(count: &BigUint) -> usize {
    usize::try_from(count.clone()).unwrap_or(0)
}

/// Index of `w` in a lexicographically sorted word list.
pub fn word_index(words: &[Word], w: &[Symbol]) -> Option<usize> {
    words.binary_search_by(|probe| probe.as_slice().cmp(w)).ok()
}
