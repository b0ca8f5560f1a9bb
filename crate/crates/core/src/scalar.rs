//! Scalar abstractions shared by every proximity computation.
//!
//! Set-overlap measures and the trail-learning rewards are ratios of counts, so
//! they are written against [`Scalar`], which is implemented for `f32`, `f64`
//! and the exact rational [`Rational`]. Iterative procedures that need square
//! roots or logarithms (power iteration, spreading activation, fuzzy entropy)
//! require [`Real`] instead.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, Num, ToPrimitive};

/// Exact rational scalar used by the oracle-style checks.
pub type Rational = Ratio<i64>;

pub trait Scalar:
    Num + Copy + PartialOrd + Debug + Display + Send + Sync + 'static
{
    /// `num / den`; callers guarantee `den > 0`.
    fn from_ratio(num: usize, den: usize) -> Self;

    /// Nearest representable value of an `f64` constant.
    fn from_f64(value: f64) -> Self;

    fn to_f64(self) -> f64;

    /// Slack allowed when checking that configured weights sum to one.
    fn weight_tolerance() -> Self;

    fn abs_diff(self, other: Self) -> Self {
        if self >= other {
            self - other
        } else {
            other - self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn clamp_unit(self) -> Self {
        self.max_of(Self::zero()).min_of(Self::one())
    }
}

pub trait Real: Scalar + Float {}

impl Scalar for f64 {
    fn from_ratio(num: usize, den: usize) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(value: f64) -> Self {
        value
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn weight_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn from_ratio(num: usize, den: usize) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn from_f64(value: f64) -> Self {
        value as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn weight_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for Rational {
    fn from_ratio(num: usize, den: usize) -> Self {
        Ratio::new(num as i64, den as i64)
    }

    /// Exact binary expansion of the float; decimal constants such as `0.3`
    /// should be built with [`Ratio::new`] when exactness matters.
    fn from_f64(value: f64) -> Self {
        Ratio::approximate_float(value).unwrap_or_else(|| Ratio::from_integer(0))
    }

    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn weight_tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

impl Real for f64 {}
impl Real for f32 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_agree_across_scalars() {
        assert_eq!(f64::from_ratio(1, 3), 1.0 / 3.0);
        assert_eq!(Rational::from_ratio(2, 6), Ratio::new(1, 3));
        assert_eq!(Scalar::to_f64(Rational::from_ratio(1, 4)), 0.25);
        assert_eq!(Rational::from_f64(0.5), Ratio::new(1, 2));
    }

    #[test]
    fn clamp_unit_bounds() {
        assert_eq!(1.7f64.clamp_unit(), 1.0);
        assert_eq!((-0.2f64).clamp_unit(), 0.0);
        assert_eq!(Ratio::new(3i64, 2).clamp_unit(), Ratio::from_integer(1));
    }
}
