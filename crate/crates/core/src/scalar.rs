//! Floating-point abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the model is evaluated in: `f32` or `f64`.
///
/// Tolerances throughout the crate are written as `f64` literals and passed
/// through [`Scalar::tol`], which floors them at a small multiple of the
/// type's machine epsilon so `f32` instantiations terminate.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// A tolerance of `nominal`, but never tighter than `16 * epsilon`.
    #[inline]
    fn tol(nominal: f64) -> Self {
        Self::lit(nominal).max(Self::epsilon() * Self::lit(16.0))
    }

    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Lossy view as `f64`, used for reporting and RNG-driven draws.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tol_is_floored_by_epsilon() {
        assert_eq!(f64::tol(1e-12), 1e-12);
        assert!(f32::tol(1e-12) > 1e-7);
    }

    #[test]
    fn erfc_matches_known_values() {
        assert!((Scalar::erfc(0.0f64) - 1.0).abs() < 1e-16);
        assert!((Scalar::erfc(1.0f64) - 0.157_299_207_050_285_13).abs() < 1e-16);
        assert!((Scalar::erfc(1.0f32) - 0.157_299_2).abs() < 1e-6);
    }
}
