//! Numeric abstraction for scores.
//!
//! Every score in the toolkit is a ratio of counts (or a mean of such ratios),
//! so the metric code only needs field arithmetic plus conversion from
//! integers. `f64` is the working type; `Ratio<i64>` gives exact values for
//! hand-checked fixtures.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Field-like scalar usable as a score: `f32`, `f64` or an exact rational.
pub trait Scalar: Num + FromPrimitive + ToPrimitive + PartialOrd + Copy + Debug + Send + Sync + 'static {
    /// Converts a count. Counts in this crate are small enough for every
    /// implementor, so failure is a logic error.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as scalar")
    }

    /// `num / den`, with `den == 0` mapped to the supplied vacuous value.
    fn ratio_or(num: usize, den: usize, vacuous: Self) -> Self {
        if den == 0 {
            vacuous
        } else {
            Self::from_count(num) / Self::from_count(den)
        }
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: Num + FromPrimitive + ToPrimitive + PartialOrd + Copy + Debug + Send + Sync + 'static {}

/// Mean of a slice; zero for an empty slice.
pub fn mean<S: Scalar>(values: &[S]) -> S {
    if values.is_empty() {
        return S::zero();
    }
    let sum = values.iter().fold(S::zero(), |acc, &v| acc + v);
    sum / S::from_count(values.len())
}

/// Clamp into `[0, 1]`.
pub fn clamp_unit<S: Scalar>(v: S) -> S {
    if v < S::zero() {
        S::zero()
    } else if v > S::one() {
        S::one()
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn ratio_is_exact_for_rationals() {
        let r: Ratio<i64> = Scalar::ratio_or(5, 6, Ratio::from_integer(1));
        assert_eq!(r, Ratio::new(5, 6));
        let v: f64 = Scalar::ratio_or(0, 0, 1.0);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn mean_of_empty_is_zero() {
        assert_eq!(mean::<f64>(&[]), 0.0);
        assert_eq!(mean(&[Ratio::new(1i64, 2), Ratio::new(1, 4)]), Ratio::new(3, 8));
    }
}
