//! Monte Carlo Galton–Watson trees, reduced to the scaled population
//! E^{−t}·Z_t.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::density::DensityGrid;
use crate::error::{Error, Result};
use crate::offspring::OffspringDistribution;

/// Default bound on a generation size: integers stay exact in f64 below it.
pub const DEFAULT_POPULATION_CAP: u64 = 1 << 53;

/// Up to this many parents, offspring are drawn one by one; above it the
/// generation is drawn as a multinomial split.
const PER_INDIVIDUAL_LIMIT: u64 = 32;

/// Permitted probability mass outside the grid in [`ks_distance`].
pub const COVERAGE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub t: u32,
    pub n: usize,
    pub seed: u64,
    pub w_samples: Vec<f64>,
}

impl SimulationRun {
    pub fn mean(&self) -> f64 {
        self.w_samples.iter().sum::<f64>() / self.n as f64
    }

    /// Sample standard deviation.
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.w_samples.iter().map(|w| (w - m) * (w - m)).sum();
        (ss / (self.n as f64 - 1.0)).sqrt()
    }
}

/// Sampler for one offspring law.
#[derive(Debug, Clone)]
pub struct Sampler {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    cap: u64,
}

impl Sampler {
    pub fn new(d: &OffspringDistribution) -> Self {
        Self::with_cap(d, DEFAULT_POPULATION_CAP)
    }

    pub fn with_cap(d: &OffspringDistribution, cap: u64) -> Self {
        let probs = d.probs().to_vec();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Self {
            probs,
            cumulative,
            cap,
        }
    }

    /// Offspring count of one individual by inverse CDF.
    pub fn offspring<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u) as u64
    }

    /// Total offspring of `parents` individuals.
    pub fn generation<R: Rng + ?Sized>(&self, parents: u64, rng: &mut R) -> Result<u64> {
        let mut total: u64 = 0;
        if parents <= PER_INDIVIDUAL_LIMIT {
            for _ in 0..parents {
                total += self.offspring(rng);
            }
        } else {
            // multinomial counts as a chain of conditional binomials
            let mut remaining = parents;
            let mut mass_left = 1.0;
            let last = self.probs.len() - 1;
            for (j, &p) in self.probs.iter().enumerate() {
                if remaining == 0 {
                    break;
                }
                let count = if j == last || mass_left <= p {
                    remaining
                } else if p == 0.0 {
                    0
                } else {
                    let q = (p / mass_left).clamp(0.0, 1.0);
                    Binomial::new(remaining, q)
                        .map_err(|e| Error::InvalidParameter(e.to_string()))?
                        .sample(rng)
                };
                remaining -= count;
                mass_left -= p;
                total = total
                    .checked_add(count.checked_mul(j as u64).ok_or(Error::PopulationOverflow {
                        cap: self.cap,
                    })?)
                    .ok_or(Error::PopulationOverflow { cap: self.cap })?;
            }
        }
        if total > self.cap {
            return Err(Error::PopulationOverflow { cap: self.cap });
        }
        Ok(total)
    }

    /// Z_t for a single tree started from one individual.
    pub fn population<R: Rng + ?Sized>(&self, t: u32, rng: &mut R) -> Result<u64> {
        let mut z = 1u64;
        for _ in 0..t {
            z = self.generation(z, rng)?;
        }
        Ok(z)
    }
}

/// One realisation of Z_t.
pub fn gw_population<R: Rng + ?Sized>(d: &OffspringDistribution, t: u32, rng: &mut R) -> Result<u64> {
    Sampler::new(d).population(t, rng)
}

/// The generator for tree `index` of a run: fully determined by the seed
/// and the index, whatever thread draws it.
pub fn tree_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` independent values of E^{−t}·Z_t.
pub fn simulate(d: &OffspringDistribution, t: u32, n: usize, seed: u64) -> Result<SimulationRun> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one tree".into()));
    }
    let sampler = Sampler::new(d);
    let scale = d.mean().powi(-(t as i32));
    let w_samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree_rng(seed, i as u64);
            Ok(sampler.population(t, &mut rng)? as f64 * scale)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SimulationRun {
        t,
        n,
        seed,
        w_samples,
    })
}

/// Kolmogorov–Smirnov distance between the empirical law of the run and
/// the CDF given by cumulative trapezoid integration of `grid`.
pub fn ks_distance(run: &SimulationRun, grid: &DensityGrid) -> Result<f64> {
    if grid.xs.len() < 2 {
        return Err(Error::GridCoverage("grid has fewer than two nodes".into()));
    }
    let cdf = grid.cumulative();
    let total = *cdf.last().unwrap();
    if (total - 1.0).abs() > COVERAGE_TOLERANCE {
        return Err(Error::GridCoverage(format!(
            "grid carries mass {total}, not 1 within {COVERAGE_TOLERANCE:e}"
        )));
    }
    let mut samples = run.w_samples.clone();
    samples.sort_by(f64::total_cmp);
    let (x0, x1) = (grid.xs[0], *grid.xs.last().unwrap());
    let outside = samples.iter().filter(|&&s| s < x0 || s > x1).count();
    if outside as f64 > COVERAGE_TOLERANCE * samples.len() as f64 {
        return Err(Error::GridCoverage(format!(
            "{outside} of {} samples fall outside [{x0}, {x1}]",
            samples.len()
        )));
    }
    let f = |x: f64| -> f64 {
        if x <= x0 {
            return 0.0;
        }
        if x >= x1 {
            return total;
        }
        let i = grid.xs.partition_point(|&g| g <= x) - 1;
        let (a, b) = (grid.xs[i], grid.xs[i + 1]);
        // exact integral of the linear interpolant up to x
        let (pa, pb) = (grid.ps[i], grid.ps[i + 1]);
        let h = x - a;
        let px = pa + (pb - pa) * h / (b - a);
        cdf[i] + 0.5 * (pa + px) * h
    };
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &s) in samples.iter().enumerate() {
        let fx = f(s);
        d = d.max((fx - i as f64 / n).abs()).max((fx - (i + 1) as f64 / n).abs());
    }
    Ok(d.min(1.0))
}
