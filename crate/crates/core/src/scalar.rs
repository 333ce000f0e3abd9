//! Scalar abstraction for the series, functional-equation and spectral code.
//!
//! Everything upstream of the periodic multiplier is generic over [`Real`].
//! Double precision is enough for the functional equations themselves, but the
//! Γ-weighted Fourier series that produces K₀ amplifies the noise floor of the
//! Karlin–McGregor coefficients by many orders of magnitude, so the same code
//! also runs in 256-bit arithmetic ([`f256`]).

use std::fmt::{Debug, Display, LowerExp};
use std::ops::{AddAssign, DivAssign, MulAssign, Neg, SubAssign};

use f256::f256;
use num_complex::Complex;
use num_traits::Num;

/// Real scalar usable throughout the generic numerical core.
pub trait Real:
    Num
    + Copy
    + PartialOrd
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Short name used in metadata output.
    const NAME: &'static str;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Machine epsilon of the type.
    fn epsilon() -> Self;
    fn pi() -> Self;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn floor(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn is_finite(self) -> bool;

    fn powf(self, e: Self) -> Self {
        (e * self.ln()).exp()
    }

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Decimal digits carried by the type, rounded down.
    fn digits() -> u32 {
        (-Self::epsilon().to_f64().log10()).floor() as u32
    }
}

macro_rules! impl_real_prim {
    ($t:ty, $name:expr) => {
        impl Real for $t {
            const NAME: &'static str = $name;

            #[inline]
            fn from_f64(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn epsilon() -> Self {
                <$t>::EPSILON
            }
            #[inline]
            fn pi() -> Self {
                std::f64::consts::PI as $t
            }
            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            #[inline]
            fn sin(self) -> Self {
                <$t>::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                <$t>::cos(self)
            }
            #[inline]
            fn atan2(self, x: Self) -> Self {
                <$t>::atan2(self, x)
            }
            #[inline]
            fn floor(self) -> Self {
                <$t>::floor(self)
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                <$t>::powi(self, n)
            }
            #[inline]
            fn powf(self, e: Self) -> Self {
                <$t>::powf(self, e)
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

impl_real_prim!(f32, "f32");
impl_real_prim!(f64, "f64");

impl Real for f256 {
    const NAME: &'static str = "f256";

    #[inline]
    fn from_f64(x: f64) -> Self {
        f256::from(x)
    }
    fn to_f64(self) -> f64 {
        // f256 has no direct narrowing conversion; its shortest decimal
        // rendering round-trips through the f64 parser with correct rounding
        // up to the 17th significant digit.
        format!("{self:e}").parse().unwrap_or(f64::NAN)
    }
    #[inline]
    fn epsilon() -> Self {
        f256::EPSILON
    }
    #[inline]
    fn pi() -> Self {
        ::f256::consts::PI
    }
    #[inline]
    fn abs(self) -> Self {
        f256::abs(&self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f256::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f256::exp(&self)
    }
    #[inline]
    fn ln(self) -> Self {
        f256::ln(&self)
    }
    #[inline]
    fn sin(self) -> Self {
        f256::sin(&self)
    }
    #[inline]
    fn cos(self) -> Self {
        f256::cos(&self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f256::atan2(&self, &x)
    }
    #[inline]
    fn floor(self) -> Self {
        f256::floor(&self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f256::powi(&self, n)
    }
    #[inline]
    fn powf(self, e: Self) -> Self {
        f256::powf(&self, &e)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f256::is_finite(self)
    }
    fn from_usize(n: usize) -> Self {
        f256::from(n as u64)
    }
    fn from_i64(n: i64) -> Self {
        f256::from(n)
    }
}

/// Lossy conversion between scalar types through `f64`.
///
/// Exact whenever the target is at least as wide as `f64` and the source
/// value is representable in `f64`.
#[inline]
pub fn cast<S: Real, T: Real>(x: S) -> T {
    T::from_f64(x.to_f64())
}

#[inline]
pub fn complex<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// |z| without intermediate overflow.
pub fn modulus<T: Real>(z: Complex<T>) -> T {
    let a = z.re.abs();
    let b = z.im.abs();
    let m = a.max(b);
    if m == T::zero() {
        return m;
    }
    let (x, y) = (a / m, b / m);
    m * (x * x + y * y).sqrt()
}

/// e^{iθ}
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    cis(z.im).scale(z.re.exp())
}

/// Principal branch of the complex logarithm.
pub fn cln<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(modulus(z).ln(), z.im.atan2(z.re))
}
