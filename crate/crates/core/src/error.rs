use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("offspring law needs at least three probabilities p0, p1, p2, got {0}")]
    TooShort(usize),

    #[error("probability p{index} = {value} is negative or not finite")]
    InvalidProbability { index: usize, value: f64 },

    #[error(
        "NonZeroP0: p0 = {0} but the Schröder case requires p0 = 0; laws with p0 > 0 must first be \
         reduced by the Harris-Sevastyanov transformation, which this library does not perform"
    )]
    NonZeroP0(f64),

    #[error("P1OutOfRange: p1 = {0} must lie strictly between 0 and 1")]
    P1OutOfRange(f64),

    #[error("NotNormalized: probabilities sum to {sum}, off by more than {tolerance:e}")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("PeriodicSupport: no k with p_k * p_(k+1) != 0")]
    PeriodicSupport,

    #[error("Subcritical: mean offspring E = {0} must exceed 1")]
    Subcritical(f64),

    #[error("CapExceeded: {requested} coefficients requested, cap is {cap}")]
    CapExceeded { requested: u128, cap: usize },

    #[error("NoConvergence: {0}")]
    NoConvergence(String),

    #[error("AliasingSuspected: |theta| at the Nyquist band is {ratio:e} x |theta_0|")]
    AliasingSuspected { ratio: f64 },

    #[error("PoleArgument: Gamma has a pole at {0}")]
    PoleArgument(f64),

    #[error("ImagResidueTooLarge: K0 imaginary residue {0:e}")]
    ImagResidueTooLarge(f64),

    #[error("NonPositiveX: x = {0} must be positive")]
    NonPositiveX(f64),

    #[error(
        "TruncationNotReached: |Pi(iy)| still {tail_bound:e} at y_max = {y_max} (threshold {threshold:e})"
    )]
    TruncationNotReached {
        y_max: f64,
        tail_bound: f64,
        threshold: f64,
    },

    #[error("NegativeDensity: p({x}) = {value:e} is below the rounding allowance")]
    NegativeDensity { x: f64, value: f64 },

    #[error("EmptyRange: {0}")]
    EmptyRange(String),

    #[error("PopulationOverflow: generation size exceeded {cap}")]
    PopulationOverflow { cap: u64 },

    #[error("GridCoverage: {0}")]
    GridCoverage(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures of a numerical guard (aliasing, truncation, caps,
    /// convergence) as opposed to invalid user input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::CapExceeded { .. }
                | Error::NoConvergence(_)
                | Error::AliasingSuspected { .. }
                | Error::ImagResidueTooLarge(_)
                | Error::TruncationNotReached { .. }
                | Error::NegativeDensity { .. }
                | Error::PopulationOverflow { .. }
                | Error::GridCoverage(_)
        )
    }
}
