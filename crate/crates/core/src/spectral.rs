//! The Karlin–McGregor function K*(z) = Φ(Π(E^z))·p₁^{−z}, its Fourier
//! coefficients θ_m, and the periodic multiplier
//! K₀(z) = Σ_m θ_m e^{2πimz} / Γ(−(2πim + ln p₁)/ln E).

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gamma::complex_gamma;
use crate::offspring::OffspringDistribution;
use crate::poincare::PoincareEvaluator;
use crate::scalar::{cis, modulus, Real};
use crate::schroeder::SchroederSeries;

/// Default number of K* samples over one period.
pub const DEFAULT_GRID: usize = 1024;

/// Φ is evaluated at Π(E^{z+s}) with s the smallest integer putting the
/// argument below this value.
pub const PHI_ARGUMENT_LIMIT: f64 = 0.1;

/// Relative size at the Nyquist band above which the grid is deemed too
/// coarse.
pub const ALIASING_THRESHOLD: f64 = 1e-10;

/// Permitted imaginary part of a K₀ value.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-10;

/// Relative cutoff defining M_f: 1e-14 in double precision, scaled with
/// machine epsilon otherwise.
pub fn spectral_cutoff<T: Real>() -> T {
    T::epsilon() * T::from_f64(45.0)
}

/// K*(z) for one offspring law; owns the Schröder and Poincaré evaluators.
#[derive(Debug, Clone)]
pub struct KarlinMcGregor<T> {
    phi: SchroederSeries<T>,
    pi: PoincareEvaluator<T>,
    ln_e: T,
    ln_p1: T,
}

impl<T: Real> KarlinMcGregor<T> {
    pub fn new(d: &OffspringDistribution) -> Self {
        Self::from_parts(SchroederSeries::adaptive(d), PoincareEvaluator::adaptive(d))
    }

    pub fn from_parts(phi: SchroederSeries<T>, pi: PoincareEvaluator<T>) -> Self {
        let ln_e = pi.mean().ln();
        let ln_p1 = phi.pgf().p1().ln();
        Self {
            phi,
            pi,
            ln_e,
            ln_p1,
        }
    }

    pub fn schroeder(&self) -> &SchroederSeries<T> {
        &self.phi
    }

    pub fn poincare(&self) -> &PoincareEvaluator<T> {
        &self.pi
    }

    pub fn ln_mean(&self) -> T {
        self.ln_e
    }

    pub fn ln_p1(&self) -> T {
        self.ln_p1
    }

    /// K*(z), reduced to z ∈ [0, 1) by periodicity.
    pub fn eval(&self, z: T) -> Result<T> {
        self.eval_with_extra_shift(z, 0)
    }

    /// K*(z) with `extra` shifts beyond the default one; the value must not
    /// depend on it.
    pub fn eval_with_extra_shift(&self, z: T, extra: usize) -> Result<T> {
        let zf = z - z.floor();
        let limit = T::from_f64(PHI_ARGUMENT_LIMIT);
        let mut s = 0usize;
        let mut arg;
        loop {
            let u = zf + T::from_usize(s);
            arg = self.pi.eval_real((u * self.ln_e).exp());
            if arg < limit {
                break;
            }
            s += 1;
            if s > 1000 {
                return Err(Error::NoConvergence("K* shift search".into()));
            }
        }
        if extra > 0 {
            s += extra;
            arg = self
                .pi
                .eval_real(((zf + T::from_usize(s)) * self.ln_e).exp());
        }
        let u = zf + T::from_usize(s);
        Ok(self.phi.eval(arg)? * (-(u * self.ln_p1)).exp())
    }

    /// K* at z_j = j/G, j = 0 … G−1, computed in parallel.
    pub fn samples(&self, grid: usize) -> Result<Vec<T>> {
        (0..grid)
            .into_par_iter()
            .map(|j| self.eval(T::from_usize(j) / T::from_usize(grid)))
            .collect()
    }

    /// Spectrum of K* from `grid` samples.
    pub fn spectrum(&self, grid: usize) -> Result<KarlinMcGregorSpectrum<T>> {
        fourier_coeffs(&self.samples(grid)?)
    }
}

/// In-place radix-2 transform X_m = Σ_j x_j e^{−2πijm/G}.
fn fft_forward<T: Real>(buf: &mut [Complex<T>]) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    if n <= 1 {
        return;
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let two_pi = T::pi() + T::pi();
    let twiddle: Vec<Complex<T>> = (0..n / 2)
        .map(|k| cis(-two_pi * T::from_usize(k) / T::from_usize(n)))
        .collect();
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let w = twiddle[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + len / 2] * w;
                buf[start + k] = a + b;
                buf[start + k + len / 2] = a - b;
            }
        }
        len *= 2;
    }
}

/// Fourier coefficients θ_m, m ∈ [−G/2, G/2), of one period of samples.
#[derive(Debug, Clone)]
pub struct KarlinMcGregorSpectrum<T> {
    theta: Vec<Complex<T>>,
    cutoff: usize,
    decay_rate: Option<f64>,
}

/// θ_m from samples at z_j = j/G with the default relative cutoff.
pub fn fourier_coeffs<T: Real>(samples: &[T]) -> Result<KarlinMcGregorSpectrum<T>> {
    fourier_coeffs_with_cutoff(samples, spectral_cutoff::<T>())
}

pub fn fourier_coeffs_with_cutoff<T: Real>(
    samples: &[T],
    relative_cutoff: T,
) -> Result<KarlinMcGregorSpectrum<T>> {
    let g = samples.len();
    if g < 2 || !g.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "grid size must be a power of two, got {g}"
        )));
    }
    let mut buf: Vec<Complex<T>> = samples
        .iter()
        .map(|&x| Complex::new(x, T::zero()))
        .collect();
    fft_forward(&mut buf);
    let inv = T::one() / T::from_usize(g);
    // signed order: index i holds m = i − G/2
    let half = g / 2;
    let theta: Vec<Complex<T>> = (0..g)
        .map(|i| buf[(i + half) % g].scale(inv))
        .collect();
    let spec = KarlinMcGregorSpectrum {
        theta,
        cutoff: 0,
        decay_rate: None,
    };

    let t0 = modulus(spec.theta(0));
    if t0 == T::zero() {
        return Err(Error::InvalidParameter("samples have zero mean".into()));
    }
    let nyquist_from = (3 * g / 8).max(1) as i64;
    let mut worst = T::zero();
    for m in nyquist_from..=half as i64 {
        worst = worst.max(modulus(spec.theta(-m)));
        if m < half as i64 {
            worst = worst.max(modulus(spec.theta(m)));
        }
    }
    let ratio = (worst / t0).to_f64();
    if ratio > ALIASING_THRESHOLD {
        return Err(Error::AliasingSuspected { ratio });
    }

    let floor = t0 * relative_cutoff;
    let mut cutoff = 0;
    for m in 1..half as i64 {
        if modulus(spec.theta(m)) >= floor && modulus(spec.theta(-m)) >= floor {
            cutoff = m as usize;
        } else {
            break;
        }
    }
    let decay_rate = fit_decay(&spec, cutoff);
    Ok(KarlinMcGregorSpectrum {
        cutoff,
        decay_rate,
        ..spec
    })
}

/// −slope/2π of a least-squares fit of ln|θ_m| against m over 0 … M_f.
fn fit_decay<T: Real>(spec: &KarlinMcGregorSpectrum<T>, cutoff: usize) -> Option<f64> {
    if cutoff == 0 {
        return None;
    }
    let pts: Vec<(f64, f64)> = (0..=cutoff)
        .map(|m| (m as f64, modulus(spec.theta(m as i64)).to_f64().ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(-(sxy / sxx) / (2.0 * std::f64::consts::PI))
}

impl<T: Real> KarlinMcGregorSpectrum<T> {
    /// θ_m for −G/2 ≤ m < G/2.
    pub fn theta(&self, m: i64) -> Complex<T> {
        let half = (self.theta.len() / 2) as i64;
        assert!(-half <= m && m < half, "m = {m} outside the grid band");
        self.theta[(m + half) as usize]
    }

    /// θ_m for |m| ≤ M_f, as (m, θ_m) pairs from −M_f upward.
    pub fn retained(&self) -> Vec<(i64, Complex<T>)> {
        let c = self.cutoff as i64;
        (-c..=c).map(|m| (m, self.theta(m))).collect()
    }

    /// All G coefficients as (m, θ_m) pairs, m from −G/2 upward.
    pub fn all(&self) -> Vec<(i64, Complex<T>)> {
        let half = (self.theta.len() / 2) as i64;
        (-half..half).map(|m| (m, self.theta(m))).collect()
    }

    pub fn grid_size(&self) -> usize {
        self.theta.len()
    }

    /// M_f: largest m with |θ_k| above the cutoff for every |k| ≤ m.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Empirical exponential decay rate of |θ_m| per unit of 2πm, or None if
    /// M_f = 0. Diagnostic only.
    pub fn decay_rate(&self) -> Option<f64> {
        self.decay_rate
    }

    /// Σ_{|m|≤M_f} θ_m e^{2πimz}, real part.
    pub fn reconstruct(&self, z: T) -> T {
        let two_pi = T::pi() + T::pi();
        let zf = z - z.floor();
        let mut acc = self.theta(0).re;
        for m in 1..=self.cutoff as i64 {
            let e = cis(two_pi * T::from_i64(m) * zf);
            acc += (self.theta(m) * e + self.theta(-m) * e.conj()).re;
        }
        acc
    }
}

/// K₀(z) = Σ_{|m|≤M_f} θ_m e^{2πimz} / Γ(−(2πim + ln p₁)/ln E), with the
/// Γ-weighted coefficients precomputed.
#[derive(Debug, Clone)]
pub struct PeriodicMultiplier<T> {
    spectrum: KarlinMcGregorSpectrum<T>,
    ln_e: T,
    ln_p1: T,
    /// c_m for m = −M_f … M_f
    weights: Vec<Complex<T>>,
}

impl<T: Real> PeriodicMultiplier<T> {
    pub fn new(spectrum: KarlinMcGregorSpectrum<T>, ln_e: T, ln_p1: T) -> Result<Self> {
        let two_pi = T::pi() + T::pi();
        let weights = spectrum
            .retained()
            .into_iter()
            .map(|(m, th)| {
                let arg = -Complex::new(ln_p1, two_pi * T::from_i64(m)).unscale(ln_e);
                Ok(th / complex_gamma(arg)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spectrum,
            ln_e,
            ln_p1,
            weights,
        })
    }

    /// Sample K*, transform and weight: the whole chain from the offspring
    /// law to K₀ in precision `T`.
    pub fn build(d: &OffspringDistribution, grid: usize) -> Result<Self> {
        let km = KarlinMcGregor::<T>::new(d);
        let spectrum = km.spectrum(grid)?;
        Self::new(spectrum, km.ln_mean(), km.ln_p1())
    }

    pub fn spectrum(&self) -> &KarlinMcGregorSpectrum<T> {
        &self.spectrum
    }

    pub fn ln_mean(&self) -> T {
        self.ln_e
    }

    pub fn ln_p1(&self) -> T {
        self.ln_p1
    }

    /// α = −(ln E + ln p₁)/ln E.
    pub fn tail_exponent(&self) -> T {
        -(self.ln_e + self.ln_p1) / self.ln_e
    }

    /// Γ-weighted coefficients c_m, m = −M_f … M_f.
    pub fn weights(&self) -> Vec<(i64, Complex<T>)> {
        let c = self.spectrum.cutoff() as i64;
        (-c..=c).zip(self.weights.iter().copied()).collect()
    }

    /// c_m e^{2πimz}.
    pub fn term(&self, m: i64, z: T) -> Complex<T> {
        let c = self.spectrum.cutoff() as i64;
        assert!(m.abs() <= c, "m = {m} beyond the retained band");
        let two_pi = T::pi() + T::pi();
        let zf = z - z.floor();
        self.weights[(m + c) as usize] * cis(two_pi * T::from_i64(m) * zf)
    }

    /// K₀(z), complex, before the reality check.
    pub fn k0_complex(&self, z: T) -> Complex<T> {
        let two_pi = T::pi() + T::pi();
        let zf = z - z.floor();
        let c = self.spectrum.cutoff();
        let e1 = cis(two_pi * zf);
        let mut acc = self.weights[c];
        let mut e = Complex::new(T::one(), T::zero());
        for m in 1..=c {
            e = e * e1;
            acc = acc + self.weights[c + m] * e + self.weights[c - m] * e.conj();
        }
        acc
    }

    pub fn k0_eval(&self, z: T) -> Result<T> {
        let v = self.k0_complex(z);
        let residue = v.im.abs().to_f64();
        if residue > IMAG_RESIDUE_LIMIT {
            return Err(Error::ImagResidueTooLarge(residue));
        }
        Ok(v.re)
    }

    /// V(x) = K₀(−ln x / ln E).
    pub fn v_eval(&self, x: T) -> Result<T> {
        if !(x > T::zero()) {
            return Err(Error::NonPositiveX(x.to_f64()));
        }
        self.k0_eval(-x.ln() / self.ln_e)
    }

    /// The same multiplier with every stored quantity rounded to `f64`, for
    /// fast evaluation once the weights have been computed accurately.
    pub fn to_f64(&self) -> PeriodicMultiplier<f64> {
        let conv = |c: Complex<T>| Complex::new(c.re.to_f64(), c.im.to_f64());
        PeriodicMultiplier {
            spectrum: KarlinMcGregorSpectrum {
                theta: self.spectrum.theta.iter().map(|&c| conv(c)).collect(),
                cutoff: self.spectrum.cutoff,
                decay_rate: self.spectrum.decay_rate,
            },
            ln_e: self.ln_e.to_f64(),
            ln_p1: self.ln_p1.to_f64(),
            weights: self.weights.iter().map(|&c| conv(c)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> OffspringDistribution {
        OffspringDistribution::validate(&[0.0, 0.1, 0.5, 0.4]).unwrap()
    }

    #[test]
    fn transform_of_simple_signals() {
        let c = fourier_coeffs(&vec![2.5f64; 64]).unwrap();
        assert!((c.theta(0).re - 2.5).abs() < 1e-15);
        assert_eq!(c.cutoff(), 0);
        for m in 1..32 {
            assert!(c.theta(m).norm() < 1e-15 && c.theta(-m).norm() < 1e-15);
        }
        // a pure tone on top of a positive mean
        let g = 128;
        let s: Vec<f64> = (0..g)
            .map(|j| 1.0 + (2.0 * std::f64::consts::PI * j as f64 / g as f64).cos())
            .collect();
        let c = fourier_coeffs(&s).unwrap();
        assert!((c.theta(1).re - 0.5).abs() < 1e-14 && (c.theta(-1).re - 0.5).abs() < 1e-14);
        for m in 2..64 {
            assert!(c.theta(m).norm() < 1e-14 && c.theta(-m).norm() < 1e-14);
        }
    }

    #[test]
    fn fft_agrees_with_naive_sum() {
        let g = 32;
        let s: Vec<f64> = (0..g).map(|j| ((j * j) as f64 * 0.37).sin() + 2.0).collect();
        let mut buf: Vec<Complex<f64>> = s.iter().map(|&x| Complex::new(x, 0.0)).collect();
        fft_forward(&mut buf);
        for m in 0..g {
            let naive: Complex<f64> = s
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    x * Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * (j * m) as f64 / g as f64)
                })
                .sum();
            assert!((naive - buf[m]).norm() < 1e-12);
        }
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let g = 16;
        let s: Vec<f64> = (0..g)
            .map(|j| 1.0 + 0.3 * (2.0 * std::f64::consts::PI * 7.0 * j as f64 / g as f64).cos())
            .collect();
        assert!(matches!(
            fourier_coeffs(&s),
            Err(Error::AliasingSuspected { .. })
        ));
        assert!(fourier_coeffs(&[1.0f64, 2.0, 3.0]).is_err());
    }

    #[test]
    fn kstar_is_periodic_and_shift_independent() {
        let km = KarlinMcGregor::<f64>::new(&ex1());
        for i in 0..20 {
            let z = -3.0 + 0.37 * i as f64;
            let a = km.eval(z).unwrap();
            let b = km.eval(z + 1.0).unwrap();
            let c = km.eval_with_extra_shift(z, 1).unwrap();
            assert!((a - b).abs() < 1e-11);
            assert!((a - c).abs() < 1e-11);
        }
        assert!(km.eval(0.0).unwrap() > 0.0);
    }

    #[test]
    fn multiplier_structure() {
        let pm = PeriodicMultiplier::<f64>::build(&ex1(), 256).unwrap();
        let e = 2.3f64;
        for i in 0..50 {
            let z = i as f64 / 50.0;
            let k = pm.k0_eval(z).unwrap();
            assert!(k > 0.0);
            assert!((pm.k0_eval(z + 1.0).unwrap() - k).abs() < 1e-12);
        }
        for m in 1..=pm.spectrum().cutoff() as i64 {
            let pair = pm.term(m, 0.3) + pm.term(-m, 0.3);
            assert!(pair.im.abs() < 1e-14);
        }
        let x = 0.01;
        assert!((pm.v_eval(x * e).unwrap() - pm.v_eval(x).unwrap()).abs() < 1e-12);
        assert_eq!(pm.v_eval(1.0).unwrap(), pm.k0_eval(0.0).unwrap());
        assert!(matches!(pm.v_eval(0.0), Err(Error::NonPositiveX(_))));
    }
}
