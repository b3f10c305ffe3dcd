//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every finite `f64` is representable (possibly rounded).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Denominator guard used by every metric.
    #[inline]
    fn domain_eps() -> Self {
        Self::lit(1e-12)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable logistic function.
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `log(p / (1 - p))`, infinite at the endpoints.
pub fn logit<T: Scalar>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

/// Standard normal CDF.
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    let x = x.as_f64();
    T::lit(0.5 * libm::erfc(-x / std::f64::consts::SQRT_2))
}

/// Standard normal upper tail `1 - Φ(x)` without cancellation.
pub fn normal_sf<T: Scalar>(x: T) -> T {
    let x = x.as_f64();
    T::lit(0.5 * libm::erfc(x / std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn normal_pdf<T: Scalar>(x: T) -> T {
    let x = x.as_f64();
    T::lit((-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_matches_logit_inverse() {
        for &p in &[1e-6_f64, 0.1, 0.3, 0.5, 0.9, 1.0 - 1e-6] {
            assert!((sigmoid(logit(p)) - p).abs() < 1e-12);
        }
        assert_eq!(sigmoid(-800.0_f64), 0.0);
        assert_eq!(sigmoid(800.0_f64), 1.0);
    }

    #[test]
    fn normal_tails_are_complementary() {
        for &x in &[-3.0_f64, -1.0, 0.0, 0.5, 2.0] {
            assert!((normal_cdf(x) + normal_sf(x) - 1.0).abs() < 1e-15);
        }
        assert!((normal_cdf(-1.0_f64) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((normal_cdf(0.0_f32) - 0.5).abs() < 1e-7);
    }
}
