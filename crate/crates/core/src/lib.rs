//! Left-tail asymptotics of the martingale limit of a supercritical
//! Galton–Watson process in the Schröder case (p₀ = 0, 0 < p₁ < 1).
//!
//! The density p(x) of W = lim E^{−t}Z_t behaves like x^α·V(x) as x → 0,
//! with α = −ln(E·p₁)/ln E and V multiplicatively periodic with period E.
//! The crate computes V from the Schröder and Poincaré functions of the
//! offspring generating function, and checks it against the density from
//! scaled PGF coefficients, from Fourier inversion, and from simulation.
//!
//! The functional-equation and spectral code is generic over [`Real`];
//! [`Extended`] (256-bit) is what the K₀ weights need, `f64` is enough for
//! everything downstream of them.

pub mod density;
pub mod error;
mod fft;
pub mod gamma;
pub mod offspring;
pub mod poincare;
pub mod scalar;
pub mod schroeder;
pub mod series;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use offspring::OffspringDistribution;
pub use scalar::Real;

/// 256-bit binary floating point, about 71 significant digits.
pub use f256::f256 as Extended;

pub type Series = series::PowerSeries<f64>;
pub type Schroeder = schroeder::SchroederSeries<f64>;
pub type Poincare = poincare::PoincareEvaluator<f64>;
pub type Spectrum = spectral::KarlinMcGregorSpectrum<f64>;
pub type Multiplier = spectral::PeriodicMultiplier<f64>;

pub type SchroederExt = schroeder::SchroederSeries<Extended>;
pub type PoincareExt = poincare::PoincareEvaluator<Extended>;
pub type SpectrumExt = spectral::KarlinMcGregorSpectrum<Extended>;
pub type MultiplierExt = spectral::PeriodicMultiplier<Extended>;
