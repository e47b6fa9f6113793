use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Floating-point scalar used by scoring, kernels and surrogate fitting.
pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal or statistic.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Real type")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable in every Real type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalar for frequencies and averages over counts.
///
/// Anything closed under `+ - * /` that can be built from a count qualifies,
/// so the stability metrics run on `f64` as well as on `Ratio<i64>`.
pub trait Frequency: Num + Copy + PartialOrd + Debug {
    fn from_count(n: usize) -> Self;
}

impl<T> Frequency for T
where
    T: Num + Copy + PartialOrd + Debug + FromPrimitive,
{
    fn from_count(n: usize) -> Self {
        T::from_usize(n).expect("count is representable")
    }
}
