//! Numeric abstraction shared by the step-graphon routines.
//!
//! Graphon arithmetic only needs a signed ordered field, so the same code
//! runs on `f64`, `f32` and exact rationals. Sampling code stays in `f64`.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Slack allowed when checking identities such as "measures sum to one".
    fn tolerance() -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn approx_eq(self, other: Self) -> bool {
        (self - other).abs() <= Self::tolerance()
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }
}

impl Scalar for Ratio<i64> {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

impl Scalar for Ratio<i128> {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_tolerance_is_exact() {
        let third = Ratio::new(1i64, 3);
        assert!((third + third + third).approx_eq(Ratio::from_integer(1)));
        assert!(!(third + third).approx_eq(Ratio::from_integer(1)));
    }

    #[test]
    fn float_counts() {
        assert_eq!(<f64 as Scalar>::from_count(4), 4.0);
        assert_eq!(<f32 as Scalar>::from_count(3).to_f64_lossy(), 3.0);
    }
}
