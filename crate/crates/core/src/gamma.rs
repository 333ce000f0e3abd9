//! Complex Gamma function in any [`Real`] precision.
//!
//! The argument is shifted to the right with Γ(z) = Γ(z+n)/(z(z+1)…(z+n−1))
//! until Re ≥ R, then the Stirling series for ln Γ is summed with exact
//! Bernoulli numbers. R and the number of terms scale with the precision of
//! `T`.

use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cexp, cln, modulus, Real};

const MAX_TERMS: usize = 60;

/// B₂, B₄, …, B_{2·MAX_TERMS} as exact rationals.
fn bernoulli_even() -> &'static [BigRational] {
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let m_max = 2 * MAX_TERMS;
        // B_m = −1/(m+1) Σ_{k<m} C(m+1, k) B_k
        let mut b: Vec<BigRational> = Vec::with_capacity(m_max + 1);
        b.push(BigRational::one());
        for m in 1..=m_max {
            let mut binom = BigInt::one();
            let mut acc = BigRational::zero();
            for (k, bk) in b.iter().enumerate() {
                acc += BigRational::from_integer(binom.clone()) * bk;
                binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
            }
            b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
        }
        b.into_iter().skip(2).step_by(2).collect()
    })
}

fn bigint_to<T: Real>(n: &BigInt) -> T {
    let (sign, digits) = n.to_u32_digits();
    let base = T::from_f64(4294967296.0);
    let mut acc = T::zero();
    for &d in digits.iter().rev() {
        acc = acc * base + T::from_f64(d as f64);
    }
    if sign == Sign::Minus {
        -acc
    } else {
        acc
    }
}

fn rational_to<T: Real>(q: &BigRational) -> T {
    bigint_to::<T>(q.numer()) / bigint_to::<T>(q.denom())
}

/// Coefficients B_{2k}/(2k(2k−1)) of the Stirling series, converted to `T`.
fn stirling_coeffs<T: Real>() -> Vec<T> {
    bernoulli_even()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let k = 2 * (i + 1);
            rational_to::<T>(b) / T::from_usize(k * (k - 1))
        })
        .collect()
}

/// Threshold for Re z above which the asymptotic series is used.
fn shift_threshold<T: Real>() -> usize {
    ((0.85 * T::digits() as f64).ceil() as usize).max(10)
}

fn check_pole<T: Real>(z: Complex<T>) -> Result<()> {
    if z.im == T::zero() && z.re <= T::zero() && z.re == z.re.floor() {
        return Err(Error::PoleArgument(z.re.to_f64()));
    }
    Ok(())
}

/// ln Γ(w) by the Stirling series, for Re w large enough.
fn ln_gamma_stirling<T: Real>(w: Complex<T>, coeffs: &[T]) -> Complex<T> {
    let half = T::from_f64(0.5);
    let two_pi = T::pi() + T::pi();
    let mut s = (w - half) * cln(w) - w + Complex::new(half * two_pi.ln(), T::zero());
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut pow = inv;
    let tol = T::epsilon() * modulus(s).max(T::one());
    for &c in coeffs {
        let term = pow.scale(c);
        s = s + term;
        if modulus(term) < tol {
            break;
        }
        pow = pow * inv2;
    }
    s
}

/// Γ(z) for complex z away from the poles at 0, −1, −2, ….
///
/// Valid over the whole plane apart from the poles; the precision is that of
/// `T` up to the growth of |Im z|·ln|z| in the phase.
pub fn complex_gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    check_pole(z)?;
    let coeffs = stirling_coeffs::<T>();
    let r = T::from_usize(shift_threshold::<T>());
    let mut w = z;
    let mut denom = Complex::new(T::one(), T::zero());
    while w.re < r {
        denom = denom * w;
        w = w + Complex::new(T::one(), T::zero());
    }
    Ok(cexp(ln_gamma_stirling(w, &coeffs)) / denom)
}

/// 1/Γ(z); zero at the poles instead of an error.
pub fn reciprocal_gamma<T: Real>(z: Complex<T>) -> Complex<T> {
    match complex_gamma(z) {
        Ok(g) => g.inv(),
        Err(_) => Complex::new(T::zero(), T::zero()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use f256::f256;
    use proptest::prelude::*;

    fn g(re: f64, im: f64) -> Complex<f64> {
        complex_gamma(Complex::new(re, im)).unwrap()
    }

    fn rel(a: Complex<f64>, b: Complex<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn bernoulli_numbers() {
        let b = bernoulli_even();
        assert_eq!(b[0], BigRational::new(1.into(), 6.into()));
        assert_eq!(b[1], BigRational::new((-1).into(), 30.into()));
        assert_eq!(b[5], BigRational::new(691.into(), (-2730).into()));
    }

    #[test]
    fn real_values() {
        assert!(rel(g(1.0, 0.0), Complex::new(1.0, 0.0)) < 1e-14);
        assert!(rel(g(5.0, 0.0), Complex::new(24.0, 0.0)) < 1e-14);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!(rel(g(0.5, 0.0), Complex::new(sqrt_pi, 0.0)) < 1e-12);
        assert!(rel(g(-0.5, 0.0), Complex::new(-2.0 * sqrt_pi, 0.0)) < 1e-12);
    }

    #[test]
    fn poles_are_rejected() {
        for k in [0.0, -1.0, -7.0] {
            assert!(matches!(
                complex_gamma(Complex::new(k, 0.0)),
                Err(Error::PoleArgument(_))
            ));
        }
        assert!(complex_gamma(Complex::new(-1.0, 1e-9)).is_ok());
    }

    #[test]
    fn modulus_on_imaginary_axis() {
        // |Γ(iy)|² = π / (y sinh πy)
        for y in [0.5f64, 3.0, 20.0, 150.0] {
            let v = g(0.0, y).norm_sqr();
            let exact = std::f64::consts::PI / (y * (std::f64::consts::PI * y).sinh());
            assert!((v / exact - 1.0).abs() < 1e-12, "y={y}");
        }
    }

    #[test]
    fn extended_precision() {
        let x = complex_gamma(Complex::new(f256::from_f64(0.5), f256::zero())).unwrap();
        let err = (x.re - f256::pi().sqrt()).abs();
        assert!(err < f256::from_f64(1e-68), "{err:e}");
        let z = Complex::new(f256::from_f64(0.3), f256::from_f64(-40.0));
        let lhs = complex_gamma(z + Complex::new(f256::one(), f256::zero())).unwrap();
        let rhs = z * complex_gamma(z).unwrap();
        assert!(modulus(lhs - rhs) / modulus(rhs) < f256::from_f64(1e-64));
    }

    proptest! {
        #[test]
        fn recurrence(re in -20.0..20.0f64, im in -200.0..200.0f64) {
            prop_assume!(im.abs() > 1e-3 || (re - re.round()).abs() > 1e-3);
            let z = Complex::new(re, im);
            let lhs = g(re + 1.0, im);
            let rhs = z * g(re, im);
            prop_assert!(rel(lhs, rhs) < 1e-12);
        }
    }
}
