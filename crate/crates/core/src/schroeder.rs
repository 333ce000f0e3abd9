//! The Schröder function Φ, Φ(P(z)) = p₁Φ(z), Φ(0) = 0, Φ′(0) = 1.
//!
//! Φ(z) = Σ_{k≥1} φ_k z^k; φ_n counts (up to normalisation) the ways the
//! population reaches size n, and φ_n·n^{−α} oscillates log-periodically.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::offspring::{OffspringDistribution, Pgf};
use crate::scalar::{modulus, Real};
use crate::series::{compose_truncated, PowerSeries};

/// Points with |w| above this radius are first pulled in by P before the
/// series is summed.
pub const DIRECT_RADIUS: f64 = 0.1;

/// Largest order chosen by [`SchroederSeries::adaptive`].
pub const MAX_ADAPTIVE_ORDER: usize = 512;

const MAX_REDUCTIONS: usize = 100_000;

/// Coefficients φ₀ … φ_M together with the law they belong to.
#[derive(Debug, Clone)]
pub struct SchroederSeries<T> {
    phi: PowerSeries<T>,
    pgf: Pgf<T>,
    radius: T,
}

/// Truncation tolerance for the series at the direct radius: 1e-14 in double
/// precision, scaled with machine epsilon otherwise.
pub fn series_tolerance<T: Real>() -> T {
    T::epsilon() * T::from_f64(45.0)
}

/// φ₀ … φ_order by the coefficient recursion
/// φ_n = Σ_{k<n} φ_k [zⁿ]P^k / (p₁ − p₁ⁿ).
///
/// The powers P^k are kept as bands: entries far below the band maximum
/// cannot affect any φ_n at the working precision and are dropped, which
/// makes the cost roughly M^1.5 rather than M².
pub fn schroeder_coeffs<T: Real>(d: &OffspringDistribution, order: usize) -> Vec<T> {
    let pgf: Pgf<T> = d.pgf();
    let p = pgf.coeffs();
    let p1 = pgf.p1();
    let mut phi = vec![T::zero(); order + 1];
    if order == 0 {
        return phi;
    }
    phi[1] = T::one();
    let cutoff = T::epsilon() * T::epsilon();

    // band of P^k: values at indices lo..lo+band.len()
    let mut lo = 1usize;
    let mut band: Vec<T> = p[1..].iter().copied().take(order).collect();
    let mut acc = vec![T::zero(); order + 1];
    let mut p1k = p1;
    for k in 1..=order {
        if k >= 2 {
            p1k *= p1;
            phi[k] = acc[k] / (p1 - p1k);
        }
        if lo > order {
            continue;
        }
        let fk = phi[k];
        for (i, &b) in band.iter().enumerate() {
            let n = lo + i;
            if n > k {
                acc[n] += fk * b;
            }
        }
        // P^{k+1} = P^k · P, restricted to indices ≤ order
        let new_lo = lo + 1;
        let new_hi = (lo + band.len() - 1 + p.len() - 1).min(order);
        if new_lo > order {
            lo = new_lo;
            continue;
        }
        let mut next = vec![T::zero(); new_hi + 1 - new_lo];
        for (i, &b) in band.iter().enumerate() {
            for (j, &pj) in p.iter().enumerate().skip(1) {
                let n = lo + i + j;
                if n > new_hi {
                    break;
                }
                next[n - new_lo] += b * pj;
            }
        }
        let max = next.iter().fold(T::zero(), |m, &v| m.max(v));
        let floor = max * cutoff;
        let first = next.iter().position(|&v| v > floor).unwrap_or(0);
        let last = next.iter().rposition(|&v| v > floor).unwrap_or(0);
        band = next[first..=last].to_vec();
        lo = new_lo + first;
    }
    phi
}

/// Coefficients of p₁^{−t}·P^{∘t}, truncated at `order`; these converge to
/// the φ_n as t grows and serve as an independent check of the recursion.
pub fn phi_via_limit<T: Real>(d: &OffspringDistribution, t: u32, order: usize) -> PowerSeries<T> {
    let pgf: Pgf<T> = d.pgf();
    let p = pgf.coeffs();
    let mut s = PowerSeries::new(p.to_vec()).truncated(order);
    for _ in 1..t {
        s = PowerSeries::new(compose_truncated(p, s.coeffs(), order));
    }
    s.scale(pgf.p1().powi(-(t as i32)))
}

impl<T: Real> SchroederSeries<T> {
    /// Series of fixed order.
    pub fn with_order(d: &OffspringDistribution, order: usize) -> Self {
        Self {
            phi: PowerSeries::new(schroeder_coeffs(d, order)),
            pgf: d.pgf(),
            radius: T::from_f64(DIRECT_RADIUS),
        }
    }

    /// Order doubled from 32 until |φ_M|·r₀^M is below [`series_tolerance`],
    /// or [`MAX_ADAPTIVE_ORDER`] is reached.
    pub fn adaptive(d: &OffspringDistribution) -> Self {
        let tol = series_tolerance::<T>();
        let mut order = 32;
        loop {
            let s = Self::with_order(d, order);
            if s.truncation_bound() < tol || order >= MAX_ADAPTIVE_ORDER {
                return s;
            }
            order *= 2;
        }
    }

    pub fn series(&self) -> &PowerSeries<T> {
        &self.phi
    }

    pub fn coeffs(&self) -> &[T] {
        self.phi.coeffs()
    }

    pub fn order(&self) -> usize {
        self.phi.order()
    }

    pub fn pgf(&self) -> &Pgf<T> {
        &self.pgf
    }

    /// |φ_M|·r₀^M, the size of the last retained term at the direct radius.
    pub fn truncation_bound(&self) -> T {
        let m = self.order();
        self.phi.coeff(m).abs() * self.radius.powi(m as i32)
    }

    /// Φ(w) for 0 ≤ w < 1: w is pulled below r₀ by repeated application of
    /// P, then Φ(w) = Φ(P^{∘k}(w))·p₁^{−k}.
    pub fn eval(&self, w: T) -> Result<T> {
        self.eval_with_extra(w, 0)
    }

    /// As [`eval`](Self::eval) with `extra` further reduction steps, which
    /// must not change the value.
    pub fn eval_with_extra(&self, w: T, extra: usize) -> Result<T> {
        if !(w >= T::zero() && w < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "Phi is evaluated on [0, 1), got {w}"
            )));
        }
        let mut w = w;
        let mut k = 0usize;
        while w > self.radius {
            w = self.pgf.eval(w);
            k += 1;
            if k > MAX_REDUCTIONS {
                return Err(Error::NoConvergence(
                    "Phi argument did not reach the direct radius".into(),
                ));
            }
        }
        for _ in 0..extra {
            w = self.pgf.eval(w);
        }
        let steps = (k + extra) as i32;
        Ok(self.phi.eval(w) * self.pgf.p1().powi(-steps))
    }

    /// max |Φ(P(z)) − p₁Φ(z)| over `count` points on the circle |z| = `radius`,
    /// with both sides summed directly from the series.
    pub fn residual_on_circle(&self, radius: T, count: usize) -> T {
        let p1 = self.pgf.p1();
        let mut worst = T::zero();
        for i in 0..count {
            let a = T::from_f64(2.0 * std::f64::consts::PI * (i as f64 + 0.5) / count as f64);
            let z = Complex::new(a.cos(), a.sin()).scale(radius);
            let lhs = self.phi.eval_complex(self.pgf.eval_complex(z));
            let rhs = self.phi.eval_complex(z).scale(p1);
            worst = worst.max(modulus(lhs - rhs));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use f256::f256;

    fn ex1() -> OffspringDistribution {
        OffspringDistribution::validate(&[0.0, 0.1, 0.5, 0.4]).unwrap()
    }

    fn ex2() -> OffspringDistribution {
        OffspringDistribution::validate(&[0.0, 0.1, 0.1, 0.5, 0.3]).unwrap()
    }

    #[test]
    fn leading_coefficients_by_hand() {
        // φ₂ = p₂/(p₁ − p₁²); φ₃ = (p₃ + 2p₁p₂φ₂... ) from the n = 3 equation
        let phi: Vec<f64> = schroeder_coeffs(&ex1(), 3);
        assert_eq!(phi[0], 0.0);
        assert_eq!(phi[1], 1.0);
        let phi2 = 0.5 / (0.1 - 0.01);
        assert!((phi[2] - phi2).abs() < 1e-13);
        // [z³]P = 0.4, [z³]P² = 2·p₁·p₂ = 0.1
        let phi3 = (0.4 + phi2 * 0.1) / (0.1 - 0.001);
        assert!((phi[3] - phi3).abs() < 1e-12);
    }

    #[test]
    fn coefficients_are_positive() {
        for d in [ex1(), ex2()] {
            let phi: Vec<f64> = schroeder_coeffs(&d, 400);
            assert!(phi[1..].iter().all(|&c| c > 0.0 && c.is_finite()));
        }
    }

    #[test]
    fn banding_does_not_change_coefficients() {
        // against the full quadratic recursion without dropped entries
        let d = ex2();
        let m = 120;
        let banded: Vec<f64> = schroeder_coeffs(&d, m);
        let p = d.probs();
        let mut power = p.to_vec();
        power.resize(m + 1, 0.0);
        let mut powers = vec![vec![0.0; m + 1], power.clone()];
        for _ in 2..=m {
            let next = crate::series::mul_truncated(powers.last().unwrap(), p, m);
            powers.push(next);
        }
        let mut phi = vec![0.0; m + 1];
        phi[1] = 1.0;
        for n in 2..=m {
            let s: f64 = (1..n).map(|k| phi[k] * powers[k][n]).sum();
            phi[n] = s / (0.1 - 0.1f64.powi(n as i32));
        }
        for n in 1..=m {
            assert!((banded[n] / phi[n] - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn functional_equation_residual() {
        for d in [ex1(), ex2()] {
            let s = SchroederSeries::<f64>::adaptive(&d);
            assert!(s.residual_on_circle(0.3, 32) < 1e-12);
        }
    }

    #[test]
    fn adaptive_order_reaches_tolerance() {
        let s = SchroederSeries::<f64>::adaptive(&ex1());
        assert!(s.truncation_bound() < 1e-14);
        let e = SchroederSeries::<f256>::adaptive(&ex1());
        assert!(e.truncation_bound() < series_tolerance::<f256>());
    }

    #[test]
    fn limit_agrees_with_recursion() {
        for d in [ex1(), ex2()] {
            let phi: Vec<f64> = schroeder_coeffs(&d, 32);
            let lim = phi_via_limit::<f64>(&d, 40, 32);
            for n in 1..=32 {
                assert!((lim.coeff(n) / phi[n] - 1.0).abs() < 1e-8, "n={n}");
            }
        }
        let one = phi_via_limit::<f64>(&ex1(), 1, 5);
        for (a, b) in one.coeffs().iter().zip([0.0, 1.0, 5.0, 4.0, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let thirty = phi_via_limit::<f64>(&ex1(), 30, 2);
        assert!((thirty.coeff(2) - 0.5 / 0.09).abs() < 1e-8);
    }

    #[test]
    fn generation_ratios_approach_phi() {
        for d in [ex1(), ex2()] {
            let phi: Vec<f64> = schroeder_coeffs(&d, 20);
            let table = d.iterate_pgf_truncated(12, 20, 1 << 24).unwrap();
            for n in 1..=20 {
                let ratio = table.coeffs[n] / table.coeffs[1];
                assert!((ratio / phi[n] - 1.0).abs() < 1e-3, "n={n}");
            }
        }
    }

    #[test]
    fn evaluation_is_path_independent() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in [ex1(), ex2()] {
            let s = SchroederSeries::<f64>::adaptive(&d);
            for _ in 0..100 {
                let w: f64 = rng.random_range(0.0..1.0);
                let a = s.eval(w).unwrap();
                let b = s.eval_with_extra(w, 2).unwrap();
                assert!((a / b - 1.0).abs() < 1e-11, "w={w}");
            }
        }
        let s = SchroederSeries::<f64>::adaptive(&ex1());
        assert_eq!(s.eval(0.0).unwrap(), 0.0);
        assert!(s.eval(1.0).is_err());
        let direct = s.eval(0.05).unwrap();
        let reduced = s.eval_with_extra(0.05, 1).unwrap();
        assert!((direct - 0.0651).abs() < 2e-4);
        assert!((direct - 0.065229449751844).abs() < 1e-12);
        assert!((direct / reduced - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conjugation_property() {
        // Φ(P(w)) = p₁ Φ(w) through the evaluation path
        let s = SchroederSeries::<f64>::adaptive(&ex1());
        let d = ex1();
        for &w in &[0.2, 0.6, 0.9] {
            let lhs = s.eval(d.pgf_real(w)).unwrap();
            let rhs = 0.1 * s.eval(w).unwrap();
            assert!((lhs / rhs - 1.0).abs() < 1e-12);
        }
    }
}
