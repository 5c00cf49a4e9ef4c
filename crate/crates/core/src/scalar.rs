//! Scalar abstraction shared by every numerical module.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar the numerical core is generic over (`f32` or `f64`).
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + fmt::LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("conversion to f64")
    }

    /// Machine epsilon of the concrete type.
    fn eps() -> Self {
        Self::default_epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `|z|` for complex values over any [`Real`].
pub fn cabs<T: Real>(z: num_complex::Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// Principal branch of the complex logarithm.
pub fn cln<T: Real>(z: num_complex::Complex<T>) -> num_complex::Complex<T> {
    num_complex::Complex::new(cabs(z).ln(), z.im.atan2(z.re))
}

pub fn cexp<T: Real>(z: num_complex::Complex<T>) -> num_complex::Complex<T> {
    let r = z.re.exp();
    num_complex::Complex::new(r * z.im.cos(), r * z.im.sin())
}
