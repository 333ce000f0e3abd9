//! The Poincaré function Π: P(Π(z)) = Π(Ez), Π(0) = 1, Π′(0) = −1.
//!
//! Π is entire and Π(s) is the Laplace transform of the martingale limit
//! density, so on the imaginary axis it is a characteristic function.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::offspring::{OffspringDistribution, Pgf};
use crate::scalar::{modulus, Real};
use crate::series::PowerSeries;

/// Largest order chosen by [`PoincareEvaluator::adaptive`].
pub const MAX_ADAPTIVE_ORDER: usize = 512;

/// Bound on Σ|π_n|R^n inside the trusted disk. The coefficients alternate,
/// so beyond this the summation loses digits to cancellation even when the
/// remainder is negligible.
pub const CANCELLATION_LIMIT: f64 = 8.0;

/// Remainder tolerance for the trusted radius: 1e-13 in double precision.
pub fn remainder_tolerance<T: Real>() -> T {
    T::epsilon() * T::from_f64(450.0)
}

/// π₀ … π_order from π_n = [zⁿ]P(Π(z))|_{π_n=0} / (Eⁿ − E).
///
/// The powers Π^j (j ≤ N) are built online: with π_n still unknown, the
/// z^n coefficient of Π^j misses exactly j·π_n, which is added back once π_n
/// is known.
pub fn poincare_coeffs<T: Real>(d: &OffspringDistribution, order: usize) -> Vec<T> {
    let pgf: Pgf<T> = d.pgf();
    let p = pgf.coeffs();
    let deg = pgf.degree();
    let e = pgf.mean();
    let mut pi = vec![T::zero(); order + 1];
    pi[0] = T::one();
    if order == 0 {
        return pi;
    }
    pi[1] = -T::one();
    // pow[j][n] = [zⁿ]Π^j
    let mut pow = vec![vec![T::zero(); order + 1]; deg + 1];
    for (j, row) in pow.iter_mut().enumerate() {
        row[0] = T::one();
        row[1] = -T::from_usize(j);
    }
    let mut en = e;
    for n in 2..=order {
        en *= e;
        // partial[j] = [zⁿ]Π^j with π_n = 0
        let mut partial = vec![T::zero(); deg + 1];
        for j in 2..=deg {
            let prev = &pow[j - 1];
            let mut s = partial[j - 1];
            for k in 1..n {
                s += pi[k] * prev[n - k];
            }
            partial[j] = s;
        }
        let mut rest = T::zero();
        for j in 2..=deg {
            rest += p[j] * partial[j];
        }
        let pin = rest / (en - e);
        pi[n] = pin;
        for j in 0..=deg {
            pow[j][n] = partial[j] + T::from_usize(j) * pin;
        }
    }
    pi
}

/// Taylor coefficients of Π with a trusted summation radius and an
/// argument-reduced evaluator.
#[derive(Debug, Clone)]
pub struct PoincareEvaluator<T> {
    series: PowerSeries<T>,
    radius: T,
    pgf: Pgf<T>,
    mean: T,
}

impl<T: Real> PoincareEvaluator<T> {
    pub fn with_order(d: &OffspringDistribution, order: usize) -> Self {
        let series = PowerSeries::new(poincare_coeffs::<T>(d, order));
        let pgf: Pgf<T> = d.pgf();
        let mean = pgf.mean();
        let radius = remainder_radius(&series).min(cancellation_radius(&series));
        Self {
            series,
            radius,
            pgf,
            mean,
        }
    }

    /// Order doubled from 32 until the trusted radius is limited by
    /// cancellation rather than by the remainder.
    pub fn adaptive(d: &OffspringDistribution) -> Self {
        let mut order = 32;
        loop {
            let ev = Self::with_order(d, order);
            let rem = remainder_radius(&ev.series);
            if rem >= cancellation_radius(&ev.series) || order >= MAX_ADAPTIVE_ORDER {
                return ev;
            }
            order *= 2;
        }
    }

    pub fn series(&self) -> &PowerSeries<T> {
        &self.series
    }

    pub fn coeffs(&self) -> &[T] {
        self.series.coeffs()
    }

    /// R₀: direct summation is trusted for |z| ≤ R₀.
    pub fn trusted_radius(&self) -> T {
        self.radius
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn pgf(&self) -> &Pgf<T> {
        &self.pgf
    }

    /// Π(z) = P^{∘k}(Π(E^{−k}z)) with the smallest k putting E^{−k}z inside
    /// the trusted disk.
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.eval_with_extra(z, 0)
    }

    pub fn eval_with_extra(&self, z: Complex<T>, extra: usize) -> Complex<T> {
        let inv = T::one() / self.mean;
        let mut w = z;
        let mut k = 0;
        while modulus(w) > self.radius {
            w = w.scale(inv);
            k += 1;
        }
        for _ in 0..extra {
            w = w.scale(inv);
        }
        let mut v = self.series.eval_complex(w);
        for _ in 0..k + extra {
            v = self.pgf.eval_complex(v);
        }
        v
    }

    /// Π on the real line, without complex arithmetic.
    pub fn eval_real(&self, x: T) -> T {
        let inv = T::one() / self.mean;
        let mut w = x;
        let mut k = 0;
        while w.abs() > self.radius {
            w *= inv;
            k += 1;
        }
        let mut v = self.series.eval(w);
        for _ in 0..k {
            v = self.pgf.eval(v);
        }
        v
    }

    /// max |P(Π(z)) − Π(Ez)| over `count` points on |z| = R₀/E, summing the
    /// series directly on both sides.
    pub fn residual(&self, count: usize) -> T {
        let r = self.radius / self.mean;
        let mut worst = T::zero();
        for i in 0..count {
            let a = T::from_f64(2.0 * std::f64::consts::PI * (i as f64 + 0.5) / count as f64);
            let z = Complex::new(a.cos(), a.sin()).scale(r);
            let lhs = self.pgf.eval_complex(self.series.eval_complex(z));
            let rhs = self.series.eval_complex(z.scale(self.mean));
            worst = worst.max(modulus(lhs - rhs));
        }
        worst
    }
}

/// Largest R with |π_n|Rⁿ below the remainder tolerance for the trailing
/// quarter of the coefficients.
fn remainder_radius<T: Real>(s: &PowerSeries<T>) -> T {
    let tol = remainder_tolerance::<T>();
    let m = s.order();
    let mut r: Option<T> = None;
    for n in (3 * m / 4).max(2)..=m {
        let c = s.coeff(n).abs();
        if c == T::zero() {
            continue;
        }
        let rn = (tol / c).powf(T::one() / T::from_usize(n));
        r = Some(match r {
            Some(x) => x.min(rn),
            None => rn,
        });
    }
    r.unwrap_or_else(T::one)
}

/// Largest R with Σ|π_n|Rⁿ ≤ [`CANCELLATION_LIMIT`], by bisection.
fn cancellation_radius<T: Real>(s: &PowerSeries<T>) -> T {
    let limit = T::from_f64(CANCELLATION_LIMIT);
    let mut lo = T::zero();
    let mut hi = T::one();
    while s.abs_sum(hi) <= limit {
        lo = hi;
        hi = hi + hi;
        if hi > T::from_f64(1e6) {
            return hi;
        }
    }
    for _ in 0..60 {
        let mid = (lo + hi) / (T::one() + T::one());
        if s.abs_sum(mid) <= limit {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Π(z) as the limit P^{∘t}(1 − E^{−t}z).
///
/// Iterated literally, 1 − E^{−t}z rounds to 1 for t near 40 and the limit
/// collapses to the fixed point. The iteration is therefore carried out on
/// u = 1 − w with Q(u) = 1 − P(1 − u), which has Q(0) = 0 and is exact in
/// the small quantity: Π(z) ≈ 1 − Q^{∘t}(E^{−t}z).
pub fn pi_via_limit<T: Real>(d: &OffspringDistribution, z: Complex<T>, t: u32) -> Result<Complex<T>> {
    if t == 0 {
        return Err(Error::InvalidParameter("limit depth must be at least 1".into()));
    }
    let pgf: Pgf<T> = d.pgf();
    let q = pgf.conjugate_at_one();
    let mut u = z.scale(pgf.mean().powi(-(t as i32)));
    for _ in 0..t {
        u = crate::series::horner_complex(&q, u);
    }
    Ok(Complex::new(T::one(), T::zero()) - u)
}
