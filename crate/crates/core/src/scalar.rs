//! Scalar abstraction shared by every numeric layer.

use nalgebra as na;
use num_traits as nt;

/// Real floating-point scalar the geometry can be evaluated in (`f32` or `f64`).
///
/// All transcendental and rounding operations go through [`na::RealField`];
/// `num_traits` supplies the primitive conversions.
pub trait Real:
    na::RealField + Copy + nt::FromPrimitive + nt::ToPrimitive + std::fmt::Display
{
    /// Lossy conversion from `f64`, used for constants and tolerances.
    fn lit(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $f
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Largest absolute value in a slice; zero for an empty slice. A non-finite
/// entry is returned as-is so that it can never pass a `<= tol` check.
pub(crate) fn max_abs_slice<T: Real>(values: &[T]) -> T {
    let mut acc = T::zero();
    for v in values {
        if !v.is_finite() {
            return v.abs();
        }
        if v.abs() > acc {
            acc = v.abs();
        }
    }
    acc
}
