//! Coefficient rings shared by the exact and floating code paths.
//!
//! The group law, exponential coordinates and the LP solver are written once
//! against these traits and instantiated with `f64`, [`BigRational`] and, for
//! symbolic identities, [`Poly`](crate::poly::Poly).

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A commutative ring containing the rationals as constants.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    fn from_ratio(num: i64, den: i64) -> Self;
}

/// An ordered field with an optional zero tolerance (exactly zero for rationals).
pub trait Field: Scalar + Div<Output = Self> + PartialOrd {
    fn magnitude(&self) -> Self;
    fn to_f64(&self) -> f64;
    /// Magnitudes at or below this count as zero in pivoting decisions.
    fn tolerance() -> Self;

    fn is_negligible(&self) -> bool {
        self.magnitude() <= Self::tolerance()
    }
    fn is_positive(&self) -> bool {
        *self > Self::tolerance()
    }
    fn is_negative(&self) -> bool {
        -self.clone() > Self::tolerance()
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Field for f64 {
    fn magnitude(&self) -> Self {
        f64::abs(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn tolerance() -> Self {
        1e-11
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

impl Field for BigRational {
    fn magnitude(&self) -> Self {
        Signed::abs(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn tolerance() -> Self {
        Zero::zero()
    }
}

/// Shorthand for an exact rational constant.
pub fn rat(num: i64, den: i64) -> BigRational {
    <BigRational as Scalar>::from_ratio(num, den)
}

/// Exact rational with the same value as a finite `f64`.
pub fn rat_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}
