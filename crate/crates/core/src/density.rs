//! The martingale-limit density p(x): from scaled PGF coefficients, by
//! Fourier inversion of Π on the imaginary axis, and its left-tail
//! asymptotic x^α·V(x).

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::offspring::{CoefficientTable, OffspringDistribution, DEFAULT_COEFFICIENT_CAP};
use crate::poincare::PoincareEvaluator;
use crate::spectral::PeriodicMultiplier;

/// Values in [−NEGATIVE_ALLOWANCE, 0) are rounding noise and clamped to zero.
pub const NEGATIVE_ALLOWANCE: f64 = 1e-9;

/// How a density grid was produced, with the parameters that matter.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityMethod {
    /// E^t·p_{t,[xE^t]}
    Iteration { t: u32, truncated: bool },
    /// Composite Simpson on [0, y_max] with the given step.
    Fourier { step: f64, y_max: f64, threshold: f64 },
    /// Histogram of simulated values.
    MonteCarlo { samples: usize, bins: usize },
    /// x^α·V(x)
    Asymptotic,
}

impl DensityMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DensityMethod::Iteration { .. } => "iteration",
            DensityMethod::Fourier { .. } => "fourier",
            DensityMethod::MonteCarlo { .. } => "monte-carlo",
            DensityMethod::Asymptotic => "asymptotic",
        }
    }
}

/// Density values on an increasing grid of positive x.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub method: DensityMethod,
    /// Values that came out in [−1e-9, 0) and were set to zero.
    pub clamped: usize,
}

impl DensityGrid {
    /// Cumulative trapezoid integral, starting at zero at the first node.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.xs.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..self.xs.len() {
            acc += 0.5 * (self.ps[i] + self.ps[i - 1]) * (self.xs[i] - self.xs[i - 1]);
            out.push(acc);
        }
        out
    }

    /// Histogram density of `samples` with `bins` equal bins spanning their
    /// range, reported at the bin edges (left edge value repeated at the
    /// right end) so that the trapezoid CDF follows the empirical one.
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        if samples.is_empty() || bins == 0 {
            return Err(Error::EmptyRange("no samples to bin".into()));
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo).max(f64::MIN_POSITIVE) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &s in samples {
            let i = (((s - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        let n = samples.len() as f64;
        // Two nodes per bin, a hair apart, make the trapezoid rule integrate
        // the step function exactly.
        let mut xs = Vec::with_capacity(2 * bins);
        let mut ps = Vec::with_capacity(2 * bins);
        for (i, &c) in counts.iter().enumerate() {
            let p = c as f64 / (n * width);
            let a = lo + i as f64 * width;
            xs.push(a);
            ps.push(p);
            xs.push(a + width * (1.0 - 1e-9));
            ps.push(p);
        }
        Ok(Self {
            xs,
            ps,
            method: DensityMethod::MonteCarlo {
                samples: samples.len(),
                bins,
            },
            clamped: 0,
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,p")?;
        for (x, p) in self.xs.iter().zip(&self.ps) {
            writeln!(w, "{x:e},{p:e}")?;
        }
        Ok(())
    }
}

/// The scaled coefficient table of generation t: p(x) ≈ E^t·p_{t,[xE^t]}.
#[derive(Debug, Clone)]
pub struct IterationDensity {
    table: CoefficientTable,
    scale: f64,
}

impl IterationDensity {
    /// Full table; fails with CapExceeded when N^t is above the cap.
    pub fn new(d: &OffspringDistribution, t: u32) -> Result<Self> {
        Ok(Self {
            table: d.iterate_pgf(t)?,
            scale: d.mean().powi(t as i32),
        })
    }

    /// Full table when it fits under the cap, otherwise the leading block
    /// that covers x ≤ x_max.
    pub fn covering(d: &OffspringDistribution, t: u32, x_max: f64) -> Result<Self> {
        match Self::new(d, t) {
            Err(Error::CapExceeded { .. }) => {
                let scale = d.mean().powi(t as i32);
                let last = (x_max * scale).ceil() as usize + 1;
                Ok(Self {
                    table: d.iterate_pgf_truncated(t, last, DEFAULT_COEFFICIENT_CAP)?,
                    scale,
                })
            }
            other => other,
        }
    }

    pub fn t(&self) -> u32 {
        self.table.t
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    /// E^t, the inverse grid spacing.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Largest x the table resolves.
    pub fn x_limit(&self) -> f64 {
        if self.table.truncated {
            (self.table.coeffs.len() - 1) as f64 / self.scale
        } else {
            f64::INFINITY
        }
    }

    /// p(x); zero for x < 0 and beyond the support.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        let n = (x * self.scale).floor() as usize;
        match self.table.coeffs.get(n) {
            Some(&c) => Ok(self.scale * c),
            None if self.table.truncated => Err(Error::GridCoverage(format!(
                "x = {x} lies beyond the truncated table (x ≤ {})",
                self.x_limit()
            ))),
            None => Ok(0.0),
        }
    }

    /// Grid nodes x_n = n/E^t inside [x_min, x_max].
    pub fn grid(&self, x_min: f64, x_max: f64) -> Result<DensityGrid> {
        if !(x_min < x_max) {
            return Err(Error::EmptyRange(format!("[{x_min}, {x_max}]")));
        }
        let first = (x_min * self.scale).ceil().max(1.0) as usize;
        let last = ((x_max * self.scale).floor() as usize).min(self.table.coeffs.len() - 1);
        if first > last {
            return Err(Error::EmptyRange(format!(
                "no grid node of spacing {:e} in [{x_min}, {x_max}]",
                1.0 / self.scale
            )));
        }
        Ok(DensityGrid {
            xs: (first..=last).map(|n| n as f64 / self.scale).collect(),
            ps: (first..=last)
                .map(|n| self.scale * self.table.coeffs[n])
                .collect(),
            method: DensityMethod::Iteration {
                t: self.table.t,
                truncated: self.table.truncated,
            },
            clamped: self.table.clamped,
        })
    }

    /// Every node of the table from x = 0 on.
    pub fn full_grid(&self) -> DensityGrid {
        let n = self.table.coeffs.len();
        DensityGrid {
            xs: (0..n).map(|i| i as f64 / self.scale).collect(),
            ps: self.table.coeffs.iter().map(|&c| c * self.scale).collect(),
            method: DensityMethod::Iteration {
                t: self.table.t,
                truncated: self.table.truncated,
            },
            clamped: self.table.clamped,
        }
    }

    /// Riemann sums (Σ p Δx, Σ x p Δx) over the whole support.
    pub fn moments(&self) -> Result<(f64, f64)> {
        if self.table.truncated {
            return Err(Error::GridCoverage(
                "moments need the full table, not a truncated block".into(),
            ));
        }
        let mass = self.table.sum();
        let mut first = 0.0;
        let mut comp = 0.0;
        for (n, &c) in self.table.coeffs.iter().enumerate() {
            let y = n as f64 * c - comp;
            let s = first + y;
            comp = (s - first) - y;
            first = s;
        }
        Ok((mass, first / self.scale))
    }
}

/// Grid of the iteration density on [x_min, x_max].
pub fn density_by_iteration(
    d: &OffspringDistribution,
    t: u32,
    x_min: f64,
    x_max: f64,
) -> Result<DensityGrid> {
    IterationDensity::covering(d, t, x_max)?.grid(x_min, x_max)
}

/// Quadrature settings for Fourier inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierQuadrature {
    /// Fixed step; by default min(2π/(64·x_max), 0.05).
    pub step: Option<f64>,
    /// Integration stops at Y once |Π(iy)| < threshold on all of [Y/E, Y].
    pub threshold: f64,
    /// Hard limit for Y.
    pub y_max: f64,
}

impl Default for FourierQuadrature {
    fn default() -> Self {
        Self {
            step: None,
            threshold: 1e-8,
            y_max: 1e5,
        }
    }
}

/// p(x) = (1/π)·Re ∫₀^Y Π(iy)e^{ixy} dy with the samples of Π(iy) computed
/// once and shared across x.
#[derive(Debug, Clone)]
pub struct FourierDensity {
    values: Vec<Complex64>,
    step: f64,
    x_max: f64,
    threshold: f64,
}

impl FourierDensity {
    /// Prepares the integrand for all 0 < x ≤ x_max.
    pub fn new(pi: &PoincareEvaluator<f64>, x_max: f64, quad: &FourierQuadrature) -> Result<Self> {
        if !(x_max > 0.0) {
            return Err(Error::NonPositiveX(x_max));
        }
        let step = quad
            .step
            .unwrap_or((2.0 * std::f64::consts::PI / (64.0 * x_max)).min(0.05));
        let e = pi.mean();
        let at = |k: usize| pi.eval(Complex64::new(0.0, k as f64 * step));

        let mut values: Vec<Complex64> = Vec::new();
        let mut chunk = 1024usize;
        loop {
            let start = values.len();
            let end = start + chunk;
            let new: Vec<Complex64> = (start..end).into_par_iter().map(at).collect();
            values.extend(new);
            let y_end = (values.len() - 1) as f64 * step;
            let from = ((y_end / e) / step).floor() as usize;
            let tail = values[from..]
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max);
            if tail < quad.threshold && values.len() > 2 {
                break;
            }
            if y_end >= quad.y_max {
                return Err(Error::TruncationNotReached {
                    y_max: y_end,
                    tail_bound: tail,
                    threshold: quad.threshold,
                });
            }
            chunk = values.len();
        }
        // Simpson needs an even number of intervals
        if values.len() % 2 == 0 {
            values.pop();
        }
        Ok(Self {
            values,
            step,
            x_max,
            threshold: quad.threshold,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Upper integration limit Y.
    pub fn y_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn method(&self) -> DensityMethod {
        DensityMethod::Fourier {
            step: self.step,
            y_max: self.y_max(),
            threshold: self.threshold,
        }
    }

    /// (1/π)·Re ∫₀^Y Π(iy)e^{ixy} dy before the sign check.
    pub fn raw(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::NonPositiveX(x));
        }
        if x > self.x_max * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "x = {x} exceeds the x_max = {} the step was chosen for",
                self.x_max
            )));
        }
        let n = self.values.len() - 1;
        let mut acc = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let (s, c) = (x * k as f64 * self.step).sin_cos();
            acc += w * (v.re * c - v.im * s);
        }
        Ok(acc * self.step / 3.0 / std::f64::consts::PI)
    }

    /// p(x), with rounding-level negatives clamped to zero.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let p = self.raw(x)?;
        if p < -NEGATIVE_ALLOWANCE {
            return Err(Error::NegativeDensity { x, value: p });
        }
        Ok(p.max(0.0))
    }

    /// p on the given nodes, evaluated in parallel.
    pub fn grid(&self, xs: &[f64]) -> Result<DensityGrid> {
        let raw: Vec<f64> = xs.par_iter().map(|&x| self.raw(x)).collect::<Result<_>>()?;
        let mut clamped = 0;
        let mut ps = Vec::with_capacity(raw.len());
        for (&x, &p) in xs.iter().zip(&raw) {
            if p < -NEGATIVE_ALLOWANCE {
                return Err(Error::NegativeDensity { x, value: p });
            }
            if p < 0.0 {
                clamped += 1;
            }
            ps.push(p.max(0.0));
        }
        Ok(DensityGrid {
            xs: xs.to_vec(),
            ps,
            method: self.method(),
            clamped,
        })
    }
}

/// Single Fourier-inversion value with the default quadrature.
pub fn density_by_fourier(pi: &PoincareEvaluator<f64>, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::NonPositiveX(x));
    }
    FourierDensity::new(pi, x, &FourierQuadrature::default())?.eval(x)
}

/// x^α·V(x).
pub fn asymptotic_density(pm: &PeriodicMultiplier<f64>, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::NonPositiveX(x));
    }
    Ok(x.powf(pm.tail_exponent()) * pm.v_eval(x)?)
}

/// max |p(x)·x^{−α} − V(x)| over the iteration grid nodes in [lo, hi].
pub fn asymptotic_residual(
    iter: &IterationDensity,
    pm: &PeriodicMultiplier<f64>,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let grid = iter.grid(lo, hi)?;
    let alpha = pm.tail_exponent();
    let mut worst: f64 = 0.0;
    for (&x, &p) in grid.xs.iter().zip(&grid.ps) {
        let r = p * x.powf(-alpha) - pm.v_eval(x)?;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// One row of the exact-versus-asymptotic table.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub x: f64,
    pub p_iter: f64,
    pub p_fourier: Option<f64>,
    pub p_asym: f64,
    /// p_iter / p_asym
    pub ratio: f64,
}

/// `points` log-spaced x in [x_min, x_max].
pub fn log_grid(x_min: f64, x_max: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(x_min > 0.0) || !(x_min < x_max) {
        return Err(Error::EmptyRange(format!(
            "{points} points on [{x_min}, {x_max}]"
        )));
    }
    if points == 1 {
        return Ok(vec![x_min]);
    }
    let (a, b) = (x_min.ln(), x_max.ln());
    Ok((0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// Exact (iteration, optionally Fourier) versus asymptotic density on
/// log-spaced x. Requires x_min ≥ 10·E^{−t} so that every x spans at least
/// ten grid cells.
pub fn compare(
    iter: &IterationDensity,
    pm: &PeriodicMultiplier<f64>,
    fourier: Option<&FourierDensity>,
    xs: &[f64],
) -> Result<Vec<CompareRow>> {
    let Some(&x_min) = xs.first() else {
        return Err(Error::EmptyRange("no x values to compare".into()));
    };
    let resolution = 10.0 / iter.scale();
    if x_min < resolution * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "x_min = {x_min} is below the grid resolution 10·E^-t = {resolution:e}"
        )));
    }
    let p_fourier: Option<Vec<f64>> = match fourier {
        Some(f) => Some(f.grid(xs)?.ps),
        None => None,
    };
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let p_iter = iter.eval(x)?;
            let p_asym = asymptotic_density(pm, x)?;
            Ok(CompareRow {
                x,
                p_iter,
                p_fourier: p_fourier.as_ref().map(|v| v[i]),
                p_asym,
                ratio: p_iter / p_asym,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> OffspringDistribution {
        OffspringDistribution::validate(&[0.0, 0.1, 0.5, 0.4]).unwrap()
    }

    #[test]
    fn iteration_density_basics() {
        let it = IterationDensity::new(&ex1(), 8).unwrap();
        assert_eq!(it.eval(-0.5).unwrap(), 0.0);
        assert_eq!(it.eval(1e9).unwrap(), 0.0);
        let (mass, mean) = it.moments().unwrap();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!((mean - 1.0).abs() < 1e-12);
        let g = it.grid(0.1, 1.0).unwrap();
        assert!(g.xs.windows(2).all(|w| w[0] < w[1]));
        assert!(g.xs[0] >= 0.1 && *g.xs.last().unwrap() <= 1.0);
        assert!(it.grid(1.0, 0.5).is_err());
    }

    #[test]
    fn truncated_cover_matches_full() {
        let d = ex1();
        let full = IterationDensity::new(&d, 10).unwrap();
        let part = IterationDensity::covering(&d, 10, 2.0).unwrap();
        for i in 1..200 {
            let x = i as f64 * 0.01;
            let (a, b) = (full.eval(x).unwrap(), part.eval(x).unwrap());
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn fourier_symmetry_and_preconditions() {
        let pi = PoincareEvaluator::<f64>::adaptive(&ex1());
        let quad = FourierQuadrature {
            threshold: 1e-6,
            ..Default::default()
        };
        let f = FourierDensity::new(&pi, 1.0, &quad).unwrap();
        assert!(matches!(f.eval(0.0), Err(Error::NonPositiveX(_))));
        assert!(f.eval(2.0).is_err());
        // the full symmetric integral against the doubled half-line one
        let x = 0.4;
        let n = f.values.len() - 1;
        let mut full = 0.0;
        for (k, v) in f.values.iter().enumerate() {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            let y = k as f64 * f.step;
            let minus = pi.eval(Complex64::new(0.0, -y));
            let e = Complex64::from_polar(1.0, x * y);
            full += w * (v * e + minus * e.conj()).re;
        }
        let full = full * f.step / 3.0 / (2.0 * std::f64::consts::PI);
        assert!((full - f.raw(x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn log_grid_and_histogram() {
        let g = log_grid(1e-3, 2.0, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1e-3).abs() < 1e-18 && (g[4] - 2.0).abs() < 1e-14);
        assert!(log_grid(1.0, 1.0, 3).is_err());
        let h = DensityGrid::from_samples(&[0.5, 1.0, 1.5, 2.0], 3).unwrap();
        let c = h.cumulative();
        assert!((c.last().unwrap() - 1.0).abs() < 1e-8);
    }
}
