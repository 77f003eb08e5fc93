//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the numeric code is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or parsed value.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to any floating scalar")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to any floating scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("floating scalar converts to f64")
    }

    /// Parses a decimal field, rejecting NaN and infinities.
    fn parse_finite(s: &str) -> Option<Self> {
        s.trim().parse::<Self>().ok().filter(|x| x.is_finite())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sums after sorting by total order so the result does not depend on
/// input order.
pub fn sorted_sum<T: Scalar>(values: &[T]) -> T {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.into_iter().fold(T::zero(), |acc, x| acc + x)
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().copied().sum::<T>() / T::from_count(values.len()))
}

/// Sample (n - 1) standard deviation; `None` when fewer than two values.
pub fn sample_std<T: Scalar>(values: &[T]) -> Option<T> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: T = values.iter().map(|&x| (x - m) * (x - m)).sum();
    Some((ss / T::from_count(values.len() - 1)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_sum_is_order_independent() {
        let a = [0.1_f64, 1e16, -1e16, 0.2, 0.3];
        let mut b = a;
        b.reverse();
        assert_eq!(sorted_sum(&a), sorted_sum(&b));
    }

    #[test]
    fn sample_std_of_one_to_three() {
        assert_eq!(sample_std(&[1.0_f64, 2.0, 3.0]), Some(1.0));
        assert_eq!(sample_std(&[1.0_f64]), None);
        assert!((sample_std(&[1.0_f32, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-6);
    }
}
