//! Locally constant potentials of finite range, their Birkhoff sums, and
//! variation seminorms.
//!
//! A range-k potential is stored as one value per admissible k-word, in the
//! lexicographic word order. Evaluation on a longer word reads only the
//! leading k symbols.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sft::{word_index, Symbol, TransitionMatrix, Word};

#[derive(Debug, Clone)]
pub struct CylinderPotential {
    sft: Arc<TransitionMatrix>,
    range: usize,
    words: Vec<Word>,
    values: Vec<f64>,
}

/// Hölder convention: metric d(x, y) = metric_base^(first disagreement),
/// seminorms taken with exponent alpha relative to that base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderMeta {
    pub exponent: f64,
    pub metric_base: f64,
}

impl Default for HolderMeta {
    fn default() -> Self {
        HolderMeta { exponent: 1.0, metric_base: crate::DEFAULT_METRIC_BASE }
    }
}

#[derive(Debug, Clone)]
pub struct VariationProfile {
    /// (j, var_j) for j = 0..=range; var_j is the largest value difference
    /// over word pairs agreeing on their first j symbols.
    pub variations: Vec<(usize, f64)>,
    /// max_j var_j / base^(alpha j)
    pub seminorm: f64,
    pub meta: HolderMeta,
}

impl CylinderPotential {
    pub fn constant(sft: Arc<TransitionMatrix>, c: f64) -> Self {
        let words = sft
            .enumerate_admissible(1)
            .expect("an alphabet always fits the enumeration budget");
        let values = vec![c; words.len()];
        CylinderPotential { sft, range: 1, words, values }
    }

    /// Values given in the lexicographic order of admissible range-words.
    pub fn from_values(
        sft: Arc<TransitionMatrix>,
        range: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if range == 0 {
            return Err(Error::DomainError {
                what: "potential range",
                value: 0.0,
                domain: "k >= 1",
            });
        }
        let words = sft.enumerate_admissible(range)?;
        if values.len() != words.len() {
            return Err(Error::DomainError {
                what: "potential value count",
                value: values.len() as f64,
                domain: "exactly one value per admissible word",
            });
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::DomainError {
                what: "potential value",
                value: bad,
                domain: "finite reals",
            });
        }
        Ok(CylinderPotential { sft, range, words, values })
    }

    pub fn from_fn(
        sft: Arc<TransitionMatrix>,
        range: usize,
        f: impl Fn(&[Symbol]) -> f64,
    ) -> Result<Self> {
        if range == 0 {
            return Err(Error::DomainError {
                what: "potential range",
                value: 0.0,
                domain: "k >= 1",
            });
        }
        let words = sft.enumerate_admissible(range)?;
        let values: Vec<f64> = words.iter().map(|w| f(w)).collect();
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::DomainError {
                what: "potential value",
                value: bad,
                domain: "finite reals",
            });
        }
        Ok(CylinderPotential { sft, range, words, values })
    }

    /// Parses the plain-text format: a `range k` header, then one line per
    /// admissible k-word (its symbols, then the value). '#' lines are
    /// comments. Every admissible word must appear exactly once.
    pub fn from_text(sft: Arc<TransitionMatrix>, text: &str) -> Result<Self> {
        let mut range: Option<usize> = None;
        let mut seen: Vec<(usize, f64)> = Vec::new();
        let mut words: Vec<Word> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match range {
                None => {
                    let mut it = line.split_whitespace();
                    let (kw, val) = (it.next(), it.next());
                    let k = match (kw, val, it.next()) {
                        (Some("range"), Some(v), None) => {
                            v.parse::<usize>().ok().filter(|&k| k >= 1)
                        }
                        _ => None,
                    }
                    .ok_or(Error::Parse {
                        what: "potential",
                        line: lineno + 1,
                        msg: format!("expected header `range k` with k >= 1, got {line:?}"),
                    })?;
                    words = sft.enumerate_admissible(k)?;
                    range = Some(k);
                }
                Some(k) => {
                    let toks: Vec<&str> = line.split_whitespace().collect();
                    if toks.len() != k + 1 {
                        return Err(Error::Parse {
                            what: "potential",
                            line: lineno + 1,
                            msg: format!("expected {k} symbols and one value, got {line:?}"),
                        });
                    }
                    let mut w: Word = Vec::with_capacity(k);
                    for t in &toks[..k] {
                        let s: Symbol = t.parse().map_err(|_| Error::Parse {
                            what: "potential",
                            line: lineno + 1,
                            msg: format!("bad symbol {t:?}"),
                        })?;
                        w.push(s);
                    }
                    let v: f64 = toks[k].parse().map_err(|_| Error::Parse {
                        what: "potential",
                        line: lineno + 1,
                        msg: format!("bad value {:?}", toks[k]),
                    })?;
                    let idx = word_index(&words, &w).ok_or(Error::Parse {
                        what: "potential",
                        line: lineno + 1,
                        msg: format!("word {w:?} is not admissible for this shift"),
                    })?;
                    if seen.iter().any(|&(i, _)| i == idx) {
                        return Err(Error::Parse {
                            what: "potential",
                            line: lineno + 1,
                            msg: format!("word {w:?} given twice"),
                        });
                    }
                    seen.push((idx, v));
                }
            }
        }
        let range = range.ok_or(Error::Parse {
            what: "potential",
            line: 0,
            msg: "empty input".into(),
        })?;
        if seen.len() != words.len() {
            return Err(Error::Parse {
                what: "potential",
                line: 0,
                msg: format!(
                    "{} of {} admissible words have values; every word needs one",
                    seen.len(),
                    words.len()
                ),
            });
        }
        let mut values = vec![0.0; words.len()];
        for (i, v) in seen {
            values[i] = v;
        }
        Self::from_values(sft, range, values)
    }

    pub fn sft(&self) -> &Arc<TransitionMatrix> {
        &self.sft
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    /// Value on the cylinder of the first `range` symbols of `w`.
    pub fn value_of(&self, w: &[Symbol]) -> Result<f64> {
        if w.len() < self.range {
            return Err(Error::WordTooShort { len: w.len(), need: self.range });
        }
        let prefix = &w[..self.range];
        match word_index(&self.words, prefix) {
            Some(i) => Ok(self.values[i]),
            None => {
                self.sft.check_admissible(prefix)?;
                unreachable!("admissible prefix must be enumerated")
            }
        }
    }

    /// Birkhoff sum over n shift steps. With `periodic` the first n symbols
    /// are read cyclically (the word encodes a point of Fix(sigma^n));
    /// otherwise the word must carry n + range - 1 symbols.
    pub fn birkhoff_sum(&self, w: &[Symbol], n: usize, periodic: bool) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        if periodic {
            if w.len() < n {
                return Err(Error::WordTooShort { len: w.len(), need: n });
            }
            let mut window: Word = Vec::with_capacity(self.range);
            for j in 0..n {
                window.clear();
                for t in 0..self.range {
                    window.push(w[(j + t) % n]);
                }
                acc += self.value_of(&window)?;
            }
        } else {
            let need = n + self.range - 1;
            if w.len() < need {
                return Err(Error::WordTooShort { len: w.len(), need });
            }
            for j in 0..n {
                acc += self.value_of(&w[j..j + self.range])?;
            }
        }
        Ok(acc)
    }

    /// Re-expresses the potential at a coarser cylinder depth k2 >= range.
    /// Pressure and Gibbs weights are unchanged.
    pub fn extend_range(&self, k2: usize) -> Result<Self> {
        if k2 < self.range {
            return Err(Error::RangeShrink { from: self.range, to: k2 });
        }
        if k2 == self.range {
            return Ok(self.clone());
        }
        let words = self.sft.enumerate_admissible(k2)?;
        let values: Result<Vec<f64>> = words.iter().map(|w| self.value_of(w)).collect();
        Ok(CylinderPotential { sft: self.sft.clone(), range: k2, words, values: values? })
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= c;
        }
        out
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v += c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        combine(self, other, 1.0, 1.0)
    }

    /// var_j over j = 0..=range, and the seminorm max_j var_j / base^(alpha j).
    pub fn variation_profile(&self, meta: &HolderMeta) -> VariationProfile {
        let mut variations = Vec::with_capacity(self.range + 1);
        let mut seminorm = 0.0_f64;
        for j in 0..=self.range {
            let mut var_j = 0.0_f64;
            let mut i = 0;
            while i < self.words.len() {
                // words sharing a j-prefix are contiguous in lex order
                let prefix = &self.words[i][..j];
                let mut lo = self.values[i];
                let mut hi = self.values[i];
                let mut end = i + 1;
                while end < self.words.len() && &self.words[end][..j] == prefix {
                    lo = lo.min(self.values[end]);
                    hi = hi.max(self.values[end]);
                    end += 1;
                }
                var_j = var_j.max(hi - lo);
                i = end;
            }
            seminorm = seminorm
                .max(var_j / meta.metric_base.powf(meta.exponent * j as f64));
            variations.push((j, var_j));
        }
        VariationProfile { variations, seminorm, meta: *meta }
    }
}

/// ca * a + cb * b, after unifying the ranges.
pub fn combine(
    a: &CylinderPotential,
    b: &CylinderPotential,
    ca: f64,
    cb: f64,
) -> Result<CylinderPotential> {
    if !Arc::ptr_eq(&a.sft, &b.sft) && *a.sft != *b.sft {
        return Err(Error::ShiftMismatch);
    }
    let k = a.range.max(b.range);
    let ea = a.extend_range(k)?;
    let eb = b.extend_range(k)?;
    let values: Vec<f64> =
        ea.values.iter().zip(&eb.values).map(|(x, y)| ca * x + cb * y).collect();
    Ok(CylinderPotential { sft: ea.sft, range: k, words: ea.words, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::tests::{full, golden};

    #[test]
    fn constant_potential_birkhoff() {
        let phi = CylinderPotential::constant(Arc::new(full(2)), 1.5);
        let w = vec![0, 1, 0, 1, 1];
        assert_eq!(phi.birkhoff_sum(&w, 5, false).unwrap(), 7.5);
        assert_eq!(phi.birkhoff_sum(&w, 0, false).unwrap(), 0.0);
        let zero = CylinderPotential::constant(Arc::new(full(2)), 0.0);
        assert_eq!(zero.birkhoff_sum(&w, 5, false).unwrap(), 0.0);
    }

    #[test]
    fn range_two_cyclic_example() {
        // phi(01) = 1, otherwise 0; the word 0101 has cyclic windows
        // 01, 10, 01, 10, so the periodic Birkhoff sum over 4 steps is 2
        let sft = Arc::new(full(2));
        let phi = CylinderPotential::from_fn(sft, 2, |w| {
            if w == [0, 1] {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let s = phi.birkhoff_sum(&[0, 1, 0, 1], 4, true).unwrap();
        assert_eq!(s, 2.0);
    }

    #[test]
    fn cocycle_additivity_small_case() {
        let sft = Arc::new(golden());
        let phi = CylinderPotential::from_fn(sft.clone(), 2, |w| {
            0.3 * w[0] as f64 - 0.7 * w[1] as f64 + 0.1
        })
        .unwrap();
        for w in sft.enumerate_admissible(9).unwrap() {
            for m in 0..=4 {
                let n = 8 - m;
                let total = phi.birkhoff_sum(&w, m + n, false).unwrap();
                let head = phi.birkhoff_sum(&w, m, false).unwrap();
                let tail = phi.birkhoff_sum(&w[m..], n, false).unwrap();
                assert!((total - (head + tail)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn word_length_and_admissibility_errors() {
        let sft = Arc::new(golden());
        let phi = CylinderPotential::from_values(sft, 2, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            phi.value_of(&[0]),
            Err(Error::WordTooShort { len: 1, need: 2 })
        ));
        assert!(matches!(
            phi.value_of(&[1, 1]),
            Err(Error::InadmissibleWord { a: 1, b: 1, pos: 0 })
        ));
        assert!(matches!(
            phi.birkhoff_sum(&[0, 1, 0], 3, false),
            Err(Error::WordTooShort { len: 3, need: 4 })
        ));
    }

    #[test]
    fn extension_copies_by_prefix() {
        let sft = Arc::new(golden());
        let phi =
            CylinderPotential::from_values(sft, 1, vec![0.1, -0.2]).unwrap();
        let ext = phi.extend_range(2).unwrap();
        assert_eq!(ext.range(), 2);
        // words 00, 01, 10: first symbols 0, 0, 1
        assert_eq!(ext.values(), &[0.1, 0.1, -0.2]);
        assert!(matches!(
            ext.extend_range(1),
            Err(Error::RangeShrink { from: 2, to: 1 })
        ));
    }

    #[test]
    fn variation_profile_examples() {
        let meta = HolderMeta::default();
        let sft = Arc::new(full(2));
        let c = CylinderPotential::constant(sft.clone(), 3.0);
        let prof = c.variation_profile(&meta);
        assert!(prof.variations.iter().all(|&(_, v)| v == 0.0));
        assert_eq!(prof.seminorm, 0.0);

        let phi = CylinderPotential::from_values(sft.clone(), 1, vec![1.0, 3.0]).unwrap();
        let prof = phi.variation_profile(&meta);
        assert_eq!(prof.variations, vec![(0, 2.0), (1, 0.0)]);
        assert_eq!(prof.seminorm, 2.0);

        let psi = CylinderPotential::from_values(sft, 2, vec![0.0, 1.0, 4.0, 2.5]).unwrap();
        let prof = psi.variation_profile(&meta);
        // brute force over all admissible word pairs
        for j in 0..=2usize {
            let mut want = 0.0_f64;
            for (wi, vi) in psi.words().iter().zip(psi.values()) {
                for (wj, vj) in psi.words().iter().zip(psi.values()) {
                    if wi[..j] == wj[..j] {
                        want = want.max((vi - vj).abs());
                    }
                }
            }
            assert_eq!(prof.variations[j], (j, want));
        }
        // var_0 = 4 - 0, var_1 = max(1.0, 1.5) scaled by 1/theta = 2
        assert_eq!(prof.seminorm, 4.0_f64.max(1.5 * 2.0));
    }

    #[test]
    fn combine_unifies_ranges() {
        let sft = Arc::new(golden());
        let a = CylinderPotential::from_values(sft.clone(), 1, vec![1.0, 2.0]).unwrap();
        let b = CylinderPotential::from_values(sft.clone(), 2, vec![10.0, 20.0, 30.0]).unwrap();
        let s = combine(&a, &b, 2.0, 1.0).unwrap();
        assert_eq!(s.range(), 2);
        // words 00, 01, 10: a-extension (1, 1, 2)
        assert_eq!(s.values(), &[12.0, 22.0, 34.0]);
        let other = Arc::new(full(2));
        let c = CylinderPotential::constant(other, 0.0);
        assert!(matches!(combine(&a, &c, 1.0, 1.0), Err(Error::ShiftMismatch)));
    }

    #[test]
    fn text_format_round_trip() {
        let sft = Arc::new(golden());
        let text = "# a range-2 potential\nrange 2\n0 0 0.5\n0 1 -1.25\n1 0 3.0\n";
        let phi = CylinderPotential::from_text(sft.clone(), text).unwrap();
        assert_eq!(phi.range(), 2);
        assert_eq!(phi.values(), &[0.5, -1.25, 3.0]);

        let missing = "range 2\n0 0 0.5\n0 1 -1.25\n";
        assert!(CylinderPotential::from_text(sft.clone(), missing).is_err());
        let dup = "range 1\n0 0.5\n0 0.7\n1 1.0\n";
        assert!(CylinderPotential::from_text(sft.clone(), dup).is_err());
        let inadmissible = "range 2\n1 1 0.5\n";
        assert!(CylinderPotential::from_text(sft, inadmissible).is_err());
    }
}
