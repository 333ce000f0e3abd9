//! Offspring laws, their generating functions and generation-t coefficient tables.

use std::io::{self, Write};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fft;
use crate::scalar::Real;
use crate::series::{compose_truncated, horner, horner_complex};

/// Absolute tolerance on Σ p_j = 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Default bound on the number of entries in a coefficient table.
pub const DEFAULT_COEFFICIENT_CAP: usize = 1 << 24;

/// Coefficients below this index are recomputed by direct truncated
/// composition, where every term is nonnegative and rounding is relative.
pub const EXACT_PREFIX: usize = 2048;

/// Above this degree the coefficient table is built with the FFT.
const DIRECT_DEGREE_LIMIT: usize = 4096;

/// A validated offspring law p₀ … p_N in the Schröder case.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringDistribution {
    probs: Vec<f64>,
    mean: f64,
    tail_exponent: f64,
}

impl OffspringDistribution {
    /// Validates `probs` (p₀ first) and derives the mean E and the left-tail
    /// exponent α = −ln(E p₁)/ln E.
    pub fn validate(probs: &[f64]) -> Result<Self> {
        if probs.len() < 3 {
            return Err(Error::TooShort(probs.len()));
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidProbability { index, value });
            }
        }
        if probs[0] != 0.0 {
            return Err(Error::NonZeroP0(probs[0]));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized {
                sum,
                tolerance: NORMALIZATION_TOLERANCE,
            });
        }
        let mut probs: Vec<f64> = probs.iter().map(|p| p / sum).collect();
        while probs.len() > 3 && probs[probs.len() - 1] == 0.0 {
            probs.pop();
        }

        let p1 = probs[1];
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::P1OutOfRange(p1));
        }
        if !probs.windows(2).skip(1).any(|w| w[0] * w[1] != 0.0) {
            return Err(Error::PeriodicSupport);
        }
        let mean: f64 = probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
        if mean <= 1.0 {
            return Err(Error::Subcritical(mean));
        }
        let tail_exponent = -(mean * p1).ln() / mean.ln();
        Ok(Self {
            probs,
            mean,
            tail_exponent,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Degree N of the generating function.
    pub fn degree(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn p1(&self) -> f64 {
        self.probs[1]
    }

    /// E = P′(1).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// α = −ln(E p₁)/ln E.
    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    /// Offspring variance σ² = P″(1) + E − E².
    pub fn variance(&self) -> f64 {
        let second: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(j, p)| (j * j) as f64 * p)
            .sum();
        second - self.mean * self.mean
    }

    /// P(z) = Σ p_j z^j.
    pub fn pgf_eval(&self, z: Complex<f64>) -> Complex<f64> {
        horner_complex(&self.probs, z)
    }

    pub fn pgf_real(&self, x: f64) -> f64 {
        horner(&self.probs, x)
    }

    /// The generating function with coefficients carried in `T`.
    pub fn pgf<T: Real>(&self) -> Pgf<T> {
        Pgf::from_probs(&self.probs)
    }

    /// Coefficient table of the `t`-fold composition P∘…∘P.
    pub fn iterate_pgf(&self, t: u32) -> Result<CoefficientTable> {
        self.iterate_pgf_with_cap(t, DEFAULT_COEFFICIENT_CAP)
    }

    pub fn iterate_pgf_with_cap(&self, t: u32, cap: usize) -> Result<CoefficientTable> {
        let degree = self.generation_degree(t, cap)?;
        let mut coeffs = if degree <= DIRECT_DEGREE_LIMIT {
            let mut s = self.probs.clone();
            for _ in 1..t {
                let next_degree = (s.len() - 1) * self.degree();
                s = compose_truncated(&self.probs, &s, next_degree);
            }
            s
        } else {
            let mut c = fft::iterate_on_circle(&self.probs, t, degree);
            self.patch_prefix(t, &mut c);
            c
        };
        let clamped = clamp_rounding_noise(&mut coeffs);
        Ok(CoefficientTable {
            t,
            coeffs,
            truncated: false,
            clamped,
        })
    }

    /// Coefficients p_{t,0} … p_{t,max_index} of the `t`-fold composition.
    ///
    /// Because p₀ = 0, the low coefficients of P∘S only involve the low
    /// coefficients of S, so the truncated table is exact for the indices it
    /// contains and can reach depths where the full table would not fit.
    pub fn iterate_pgf_truncated(
        &self,
        t: u32,
        max_index: usize,
        cap: usize,
    ) -> Result<CoefficientTable> {
        if t == 0 {
            return Err(Error::InvalidParameter("iteration depth must be at least 1".into()));
        }
        let full = (self.degree() as u128).checked_pow(t);
        if let Some(d) = full {
            if d <= max_index as u128 && d < cap as u128 {
                return self.iterate_pgf_with_cap(t, cap);
            }
        }
        if max_index as u128 + 1 > cap as u128 {
            return Err(Error::CapExceeded {
                requested: max_index as u128 + 1,
                cap,
            });
        }
        let mut s: Vec<f64> = self.probs.iter().copied().take(max_index + 1).collect();
        for _ in 1..t {
            let deg = s.len() - 1;
            let keep = (deg * self.degree()).min(max_index);
            s = if deg * self.degree() <= DIRECT_DEGREE_LIMIT {
                compose_truncated(&self.probs, &s, keep)
            } else {
                fft::compose(&self.probs, &s, keep)
            };
        }
        s.resize(max_index + 1, 0.0);
        self.patch_prefix(t, &mut s);
        let clamped = clamp_rounding_noise(&mut s);
        Ok(CoefficientTable {
            t,
            coeffs: s,
            truncated: true,
            clamped,
        })
    }

    fn generation_degree(&self, t: u32, cap: usize) -> Result<usize> {
        if t == 0 {
            return Err(Error::InvalidParameter("iteration depth must be at least 1".into()));
        }
        let n = self.degree() as u128;
        match n.checked_pow(t) {
            Some(d) if d <= cap as u128 => Ok(d as usize),
            Some(d) => Err(Error::CapExceeded {
                requested: d + 1,
                cap,
            }),
            None => Err(Error::CapExceeded {
                requested: u128::MAX,
                cap,
            }),
        }
    }

    /// Overwrites the leading coefficients with their direct (all-positive)
    /// truncated composition, which keeps full relative accuracy in the left
    /// tail where FFT rounding would dominate.
    fn patch_prefix(&self, t: u32, coeffs: &mut [f64]) {
        let k = EXACT_PREFIX.min(coeffs.len() - 1);
        let mut s: Vec<f64> = self.probs.iter().copied().take(k + 1).collect();
        for _ in 1..t {
            s = compose_truncated(&self.probs, &s, k);
        }
        s.resize(k + 1, 0.0);
        coeffs[..=k].copy_from_slice(&s);
    }
}

fn clamp_rounding_noise(coeffs: &mut [f64]) -> usize {
    let mut n = 0;
    for c in coeffs.iter_mut() {
        if *c < 0.0 {
            *c = 0.0;
            n += 1;
        }
    }
    n
}

/// A probability generating function with coefficients in `T`, renormalised
/// in `T` so that P(1) = 1 holds to the working precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgf<T> {
    coeffs: Vec<T>,
}

impl<T: Real> Pgf<T> {
    pub fn from_probs(probs: &[f64]) -> Self {
        let raw: Vec<T> = probs.iter().map(|&p| T::from_f64(p)).collect();
        let total = raw.iter().fold(T::zero(), |a, &b| a + b);
        Self {
            coeffs: raw.into_iter().map(|c| c / total).collect(),
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn p1(&self) -> T {
        self.coeffs[1]
    }

    pub fn mean(&self) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (j, &c)| acc + T::from_usize(j) * c)
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        horner(&self.coeffs, x)
    }

    #[inline]
    pub fn eval_complex(&self, z: Complex<T>) -> Complex<T> {
        horner_complex(&self.coeffs, z)
    }

    /// Coefficients of Q(u) = 1 − P(1 − u), the generating function seen
    /// from its fixed point at 1: Q(0) = 0 and Q′(0) = E exactly.
    pub fn conjugate_at_one(&self) -> Vec<T> {
        // Taylor shift P(1 − u) = Σ_k (−u)^k Σ_j C(j,k) p_j
        let n = self.degree();
        let mut q = vec![T::zero(); n + 1];
        for k in 1..=n {
            let mut binom = T::one();
            let mut acc = T::zero();
            for j in k..=n {
                if j > k {
                    binom = binom * T::from_usize(j) / T::from_usize(j - k);
                }
                acc += binom * self.coeffs[j];
            }
            // 1 − P(1−u): the constant terms cancel exactly and the sign of
            // the k-th term flips.
            q[k] = if k % 2 == 1 { acc } else { -acc };
        }
        q
    }
}

/// Coefficients p_{t,0} … of the t-fold composition, possibly truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub t: u32,
    pub coeffs: Vec<f64>,
    /// True when only a leading block of the table was computed.
    pub truncated: bool,
    /// Number of entries that came out of the FFT slightly negative and were
    /// clamped to zero.
    pub clamped: usize,
}

impl CoefficientTable {
    pub fn sum(&self) -> f64 {
        // Kahan summation: tables reach 2^24 entries.
        let mut s = 0.0;
        let mut comp = 0.0;
        for &c in &self.coeffs {
            let y = c - comp;
            let t = s + y;
            comp = (t - s) - y;
            s = t;
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,p_tn")?;
        for (n, c) in self.coeffs.iter().enumerate() {
            writeln!(w, "{n},{c:e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> OffspringDistribution {
        OffspringDistribution::validate(&[0.0, 0.1, 0.5, 0.4]).unwrap()
    }

    #[test]
    fn validates_first_example() {
        let d = ex1();
        assert!((d.mean() - 2.3).abs() < 1e-14);
        let alpha = -(0.23f64).ln() / 2.3f64.ln();
        assert!((d.tail_exponent() - alpha).abs() < 1e-14);
        assert!((d.tail_exponent() - 1.76451).abs() < 1e-5);
    }

    #[test]
    fn validates_second_example() {
        let d = OffspringDistribution::validate(&[0.0, 0.1, 0.1, 0.5, 0.3]).unwrap();
        assert!((d.mean() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_laws() {
        use Error::*;
        let v = |p: &[f64]| OffspringDistribution::validate(p).unwrap_err();
        assert!(matches!(v(&[0.2, 0.3, 0.5]), NonZeroP0(_)));
        assert!(v(&[0.2, 0.3, 0.5]).to_string().contains("Harris-Sevastyanov"));
        assert_eq!(v(&[0.0, 0.5, 0.0, 0.5]), PeriodicSupport);
        assert!(matches!(v(&[0.0, 1.0, 0.0]), P1OutOfRange(_)));
        assert!(matches!(v(&[0.0, 0.0, 1.0]), P1OutOfRange(_)));
        assert!(matches!(v(&[0.0, 0.1, 0.5, 0.3]), NotNormalized { .. }));
        assert!(matches!(v(&[0.0, 1.0]), TooShort(2)));
        assert!(matches!(v(&[0.0, 1.2, -0.2]), InvalidProbability { index: 2, .. }));
    }

    #[test]
    fn renormalises_within_tolerance_only() {
        let d = OffspringDistribution::validate(&[0.0, 0.1, 0.5, 0.4 + 5e-13]).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(OffspringDistribution::validate(&[0.0, 0.1, 0.5, 0.4 + 5e-12]).is_err());
    }

    #[test]
    fn trailing_zeros_are_dropped() {
        let d = OffspringDistribution::validate(&[0.0, 0.1, 0.5, 0.4, 0.0, 0.0]).unwrap();
        assert_eq!(d.degree(), 3);
    }

    #[test]
    fn pgf_values() {
        let d = ex1();
        let one = d.pgf_eval(Complex::new(1.0, 0.0));
        assert!((one.re - 1.0).abs() < 1e-15 && one.im == 0.0);
        assert_eq!(d.pgf_eval(Complex::new(0.0, 0.0)), Complex::new(0.0, 0.0));
        assert!((d.pgf_real(0.5) - 0.225).abs() < 1e-15);
    }

    #[test]
    fn pgf_is_increasing_and_below_diagonal() {
        for d in [ex1(), OffspringDistribution::validate(&[0.0, 0.1, 0.1, 0.5, 0.3]).unwrap()] {
            let mut prev = d.pgf_real(0.0);
            for i in 1..100 {
                let x = i as f64 / 100.0;
                let y = d.pgf_real(x);
                assert!(y > prev);
                assert!(y < x);
                prev = y;
            }
        }
    }

    #[test]
    fn first_iterates() {
        let d = ex1();
        let t1 = d.iterate_pgf(1).unwrap();
        assert_eq!(t1.coeffs, vec![0.0, 0.1, 0.5, 0.4]);
        let t2 = d.iterate_pgf(2).unwrap();
        // p_{2,1} = p1^2; the full composition gives 0.1 * 0.1 exactly
        assert!((t2.coeffs[1] - 0.01).abs() < 1e-17);
        assert_eq!(t2.coeffs.len(), 10);
        let t3 = d.iterate_pgf(3).unwrap();
        assert!((t3.sum() - 1.0).abs() < 1e-12);
        assert!(t3.coeffs.iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn cap_is_enforced() {
        let d = ex1();
        let err = d.iterate_pgf_with_cap(10, 1000).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
        assert!(d.iterate_pgf(0).is_err());
    }

    #[test]
    fn fft_table_matches_direct_composition() {
        let d = ex1();
        // 3^8 = 6561 goes through the FFT path
        let fast = d.iterate_pgf(8).unwrap();
        let mut direct = d.probs().to_vec();
        for _ in 1..8 {
            let deg = (direct.len() - 1) * 3;
            direct = compose_truncated(d.probs(), &direct, deg);
        }
        assert_eq!(fast.coeffs.len(), direct.len());
        for (a, b) in fast.coeffs.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn truncated_table_agrees_with_full_table() {
        let d = ex1();
        let full = d.iterate_pgf(9).unwrap();
        let part = d.iterate_pgf_truncated(9, 5000, DEFAULT_COEFFICIENT_CAP).unwrap();
        assert!(part.truncated);
        for n in 0..=5000 {
            let (a, b) = (full.coeffs[n], part.coeffs[n]);
            assert!((a - b).abs() <= 1e-15 + 1e-12 * b, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn conjugate_at_one_matches_pointwise() {
        let pgf: Pgf<f64> = ex1().pgf();
        let q = pgf.conjugate_at_one();
        assert_eq!(q[0], 0.0);
        assert!((q[1] - 2.3).abs() < 1e-15);
        for &u in &[0.01, 0.3, -0.7] {
            let direct = 1.0 - pgf.eval(1.0 - u);
            assert!((horner(&q, u) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        ex1().iterate_pgf(1).unwrap().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("n,p_tn\n0,0e0\n1,1e-1\n"));
    }
}
