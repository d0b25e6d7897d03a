//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating-point type the simulator is generic over.
///
/// Implemented for `f32` and `f64`. Every tolerance in the crate is written
/// for double precision and widened through [`Real::tol`] so that single
/// precision instantiations remain usable (with looser guarantees).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// A tolerance of `x`, never smaller than a few hundred ulps of `Self`.
    #[inline]
    fn tol(x: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(256.0);
        Self::lit(x).max(floor)
    }

    /// Lossy conversion used for diagnostics and error messages.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over a [`Real`] scalar.
pub type C<R> = Complex<R>;

#[inline]
pub(crate) fn c<R: Real>(re: R, im: R) -> C<R> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn cr<R: Real>(re: R) -> C<R> {
    Complex::new(re, R::zero())
}
