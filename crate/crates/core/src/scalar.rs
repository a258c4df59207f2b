//! Scalar abstractions.
//!
//! Everything numeric in the pipeline is generic over [`Scalar`], implemented
//! for `f32` and `f64`. The overlap math additionally works over
//! [`OverlapField`], which `Ratio<i64>` implements so overlap values can be
//! checked exactly.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Floating point type used by series, models and post-processing.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + FromStr
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Name written into serialized models.
    const NAME: &'static str;

    /// Relative tolerance used when validating uniform spacing and durations.
    fn rel_tol() -> Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    fn rel_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    fn rel_tol() -> Self {
        1e-5
    }
}

/// Ordered field over which interval overlap ratios are computed.
pub trait OverlapField: Num + Signed + PartialOrd + ToPrimitive + Copy + Debug {
    /// Whether `actual` equals `expected` up to this type's rounding.
    ///
    /// `magnitude` is the largest absolute operand that fed `actual`, so
    /// cancellation error on large timestamps is accounted for.
    fn approx_eq(actual: Self, expected: Self, magnitude: Self) -> bool;
}

fn float_approx_eq<T: Scalar>(actual: T, expected: T, magnitude: T) -> bool {
    let four = T::lit(4.0);
    let tol = T::rel_tol() * expected.abs() + four * T::epsilon() * magnitude.abs();
    (actual - expected).abs() <= tol
}

impl OverlapField for f64 {
    fn approx_eq(actual: Self, expected: Self, magnitude: Self) -> bool {
        float_approx_eq(actual, expected, magnitude)
    }
}

impl OverlapField for f32 {
    fn approx_eq(actual: Self, expected: Self, magnitude: Self) -> bool {
        float_approx_eq(actual, expected, magnitude)
    }
}

impl OverlapField for Ratio<i64> {
    fn approx_eq(actual: Self, expected: Self, _magnitude: Self) -> bool {
        actual == expected
    }
}

impl OverlapField for Ratio<i128> {
    fn approx_eq(actual: Self, expected: Self, _magnitude: Self) -> bool {
        actual == expected
    }
}
