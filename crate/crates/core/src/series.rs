//! Truncated power series with real coefficients.

use num_complex::Complex;

use crate::scalar::Real;

/// c₀ + c₁z + … + c_M z^M, with every operation truncated at an explicit order.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Real> PowerSeries<T> {
    /// Series of order `coeffs.len() - 1`. An empty slice yields the zero
    /// series of order 0.
    pub fn new(mut coeffs: Vec<T>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![T::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = T::one();
        s
    }

    /// The series `z`.
    pub fn identity(order: usize) -> Self {
        let mut s = Self::zero(order.max(1));
        s.coeffs[1] = T::one();
        s.truncated(order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Coefficient of z^n, zero beyond the order.
    pub fn coeff(&self, n: usize) -> T {
        self.coeffs.get(n).copied().unwrap_or_else(T::zero)
    }

    /// Same series re-truncated (or zero-padded) to `order`.
    pub fn truncated(&self, order: usize) -> Self {
        let mut c: Vec<T> = self.coeffs.iter().take(order + 1).copied().collect();
        c.resize(order + 1, T::zero());
        Self { coeffs: c }
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * k).collect(),
        }
    }

    /// Cauchy product truncated at `order`.
    pub fn multiply(&self, other: &Self, order: usize) -> Self {
        Self {
            coeffs: mul_truncated(&self.coeffs, &other.coeffs, order),
        }
    }

    /// `p(self)` truncated at `order`, Horner over the coefficients of `p`.
    pub fn compose_poly(p: &[T], s: &Self, order: usize) -> Self {
        Self {
            coeffs: compose_truncated(p, &s.coeffs, order),
        }
    }

    /// Horner evaluation of the truncated sum at a real point.
    pub fn eval(&self, x: T) -> T {
        horner(&self.coeffs, x)
    }

    pub fn eval_complex(&self, z: Complex<T>) -> Complex<T> {
        let mut acc = Complex::new(self.coeffs[self.order()], T::zero());
        for &c in self.coeffs.iter().rev().skip(1) {
            acc = acc * z + Complex::new(c, T::zero());
        }
        acc
    }

    /// Σ |c_n| r^n, an upper bound for |S(z)| on |z| ≤ r and a measure of the
    /// cancellation incurred when summing there.
    pub fn abs_sum(&self, r: T) -> T {
        let mut acc = T::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * r + c.abs();
        }
        acc
    }
}

/// Horner evaluation of a coefficient slice (lowest degree first).
#[inline]
pub fn horner<T: Real>(coeffs: &[T], x: T) -> T {
    let mut acc = T::zero();
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Horner evaluation at a complex point.
#[inline]
pub fn horner_complex<T: Real>(coeffs: &[T], z: Complex<T>) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for &c in coeffs.iter().rev() {
        acc = acc * z + Complex::new(c, T::zero());
    }
    acc
}

pub(crate) fn mul_truncated<T: Real>(a: &[T], b: &[T], order: usize) -> Vec<T> {
    let mut out = vec![T::zero(); order + 1];
    for (i, &x) in a.iter().enumerate().take(order + 1) {
        if x == T::zero() {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

pub(crate) fn compose_truncated<T: Real>(p: &[T], s: &[T], order: usize) -> Vec<T> {
    let mut acc = vec![T::zero(); order + 1];
    if let Some(&lead) = p.last() {
        acc[0] = lead;
    }
    for &c in p.iter().rev().skip(1) {
        acc = mul_truncated(&acc, s, order);
        acc[0] += c;
    }
    acc
}
