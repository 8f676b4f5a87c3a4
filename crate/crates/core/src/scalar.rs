//! Scalar abstraction for the numeric core.
//!
//! Kernel masses, cumulant sums and Lévy-path values are generic over
//! [`Scalar`] (in practice `f32` or `f64`). Integer states stay `u64`
//! throughout; this trait only covers the floating arithmetic.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: f32 or f64.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to scalar")
    }

    fn from_u64_lossy(n: u64) -> Self {
        Self::from_u64(n).expect("u64 converts to scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// `m / n` as a scalar ratio of integer states.
    fn state_ratio(m: u64, n: u64) -> Self {
        Self::from_u64_lossy(m) / Self::from_u64_lossy(n)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
