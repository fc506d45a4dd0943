use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point element type of tensors.
///
/// `f64` is used for gradient checking, `f32` for training and for
/// everything that is written to disk.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_single(v: f32) -> Self {
        Self::lit(v as f64)
    }

    #[inline]
    fn to_single(self) -> f32 {
        self.to_f64_lossy() as f32
    }
}

impl Scalar for f32 {
    #[inline]
    fn from_single(v: f32) -> Self {
        v
    }

    #[inline]
    fn to_single(self) -> f32 {
        self
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }
}

/// Numerically stable `log(sum(exp(xs)))`. Returns negative infinity for an
/// empty slice or a slice of negative infinities.
pub fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let sum: T = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}
