//! Scalar abstraction for the numeric core.
//!
//! Attribution, clustering and statistics are written against [`Scalar`] so
//! the same code runs in `f32` or `f64`. Anything that needs a special
//! function (the Student-t tail) goes through `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Real scalar usable throughout the crate.
///
/// Implemented automatically for every type satisfying the bounds.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`. Panics only for types that cannot represent finite `f64`s.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("scalar cannot represent f64 value")
    }

    /// Conversion from a count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("scalar cannot represent count")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Clamp into `[lo, hi]`.
    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        self.max(lo).min(hi)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half<T: Scalar>() -> T {
        T::of(0.5)
    }

    #[test]
    fn conversions_agree_across_widths() {
        assert_eq!(half::<f32>(), 0.5f32);
        assert_eq!(half::<f64>(), 0.5f64);
        assert_eq!(f32::of_usize(3).as_f64(), 3.0);
        assert_eq!(2.0f64.clamp_to(0.0, 1.0), 1.0);
        assert_eq!((-2.0f32).clamp_to(0.0, 1.0), 0.0);
    }
}
