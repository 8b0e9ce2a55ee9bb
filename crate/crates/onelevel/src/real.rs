use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};

/// Floating-point scalar underlying the analytic layer.
///
/// Everything downstream of the integer tables (test functions, quadrature,
/// contour integrals, prime sums, family averages) is written against this
/// trait so the same code runs at `f32` or `f64`. The shipped tolerances are
/// calibrated for `f64`, which is what the CLI and the acceptance suite use.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;

    fn from_u64(v: u64) -> Self;

    fn to_f64(self) -> f64;

    fn from_usize(v: usize) -> Self {
        Self::from_u64(v as u64)
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn from_u64(v: u64) -> Self {
        v as f64
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn from_u64(v: u64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn midpoint<T: Real>(a: T, b: T) -> T {
        (a + b) / T::from_f64(2.0)
    }

    #[test]
    fn generic_code_runs_at_both_widths() {
        assert_eq!(midpoint(1.0f64, 3.0f64), 2.0);
        assert_eq!(midpoint(1.0f32, 3.0f32), 2.0);
    }

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f64::from_u64(78498).to_f64(), 78498.0);
        assert_eq!(f32::from_f64(0.5), 0.5f32);
    }
}
