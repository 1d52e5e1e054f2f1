//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point scalar the crate is generic over (`f32`, `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar.
    #[inline]
    fn lit(v: f64) -> Self {
        // from_f64 is infallible for the built-in float types (it rounds or saturates)
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    /// Lossy conversion used for diagnostics and error payloads.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

/// Shorthand for building a complex value.
#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

/// Complex value from two `f64` literals.
#[inline]
pub fn clit<T: Real>(re: f64, im: f64) -> Cplx<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub(crate) fn is_finite<T: Real>(z: Cplx<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Integer power by repeated multiplication (bit-reproducible, no `powc`).
#[inline]
pub fn ipow<T: Real>(z: Cplx<T>, k: usize) -> Cplx<T> {
    let mut acc = Complex::new(T::one(), T::zero());
    for _ in 0..k {
        acc = acc * z;
    }
    acc
}

/// Wraps an angle into `(-pi, pi]`.
#[inline]
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let mut w = a % two_pi;
    if w > T::PI() {
        w = w - two_pi;
    } else if w <= -T::PI() {
        w = w + two_pi;
    }
    w
}

/// `max(1, |z|)`, the scale used by every relative tolerance in the crate.
#[inline]
pub(crate) fn unit_scale<T: Real>(z: Cplx<T>) -> T {
    z.norm().max(T::one())
}
