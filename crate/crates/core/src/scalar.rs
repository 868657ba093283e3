//! Scalar abstractions.
//!
//! Everything that only needs field arithmetic (centroids, squared distances,
//! k-means costs, the assignment solver) is written against [`Scalar`], so it
//! runs unchanged on `f32`, `f64` and exact rationals. Anything needing square
//! roots, sampling weights or float tolerances is written against [`Real`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Ordered field element usable by the exact cost formulas.
pub trait Scalar:
    Num + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// `false` for NaN and infinities; always `true` for rationals.
    fn is_finite_value(&self) -> bool;

    /// Relative tolerance for "equal" comparisons. Zero for exact types.
    fn rel_tolerance() -> Self;

    /// Absolute floor paired with [`Scalar::rel_tolerance`].
    fn abs_tolerance() -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// `|a - b| <= max(rel * max(|a|, |b|), abs)`.
    fn approx_eq(&self, other: &Self) -> bool {
        let diff = if *self > *other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        };
        let a = abs(self.clone());
        let b = abs(other.clone());
        let scale = if a > b { a } else { b };
        let tol = Self::rel_tolerance() * scale;
        let floor = Self::abs_tolerance();
        diff <= if tol > floor { tol } else { floor }
    }
}

/// Floating-point scalar: f32 or f64.
pub trait Real: Scalar + Float + NumAssign + Copy + Default {
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_f64_lossy(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).unwrap_or_else(Self::nan)
    }
}

pub(crate) fn abs<T: Scalar>(v: T) -> T {
    if v < T::zero() {
        T::zero() - v
    } else {
        v
    }
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
    fn rel_tolerance() -> Self {
        1e-9
    }
    fn abs_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
    fn rel_tolerance() -> Self {
        1e-5
    }
    fn abs_tolerance() -> Self {
        1e-6
    }
}

impl Real for f64 {}
impl Real for f32 {}

impl Scalar for BigRational {
    fn is_finite_value(&self) -> bool {
        true
    }
    fn rel_tolerance() -> Self {
        Ratio::from_integer(BigInt::from(0))
    }
    fn abs_tolerance() -> Self {
        Ratio::from_integer(BigInt::from(0))
    }
}

impl Scalar for Ratio<i64> {
    fn is_finite_value(&self) -> bool {
        true
    }
    fn rel_tolerance() -> Self {
        Ratio::from_integer(0)
    }
    fn abs_tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

/// Integer `ceil` that forgives floating noise: values within a relative
/// `1e-9` of an integer snap to it before rounding up.
pub fn snapped_ceil(v: f64) -> f64 {
    let nearest = v.round();
    if (v - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        v.ceil()
    }
}
