//! Scalar abstraction: all core math is generic over the floating-point type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar underlying graphs, spectra, and dynamics.
///
/// Implemented for `f32` and `f64`. The accuracy contracts quoted in the
/// documentation (residuals around `1e-8`, orthonormality around `1e-10`)
/// assume `f64`; `f32` works but with proportionally looser guarantees.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Exact conversion from a vertex/level count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count exceeds scalar range")
    }

    /// Conversion from an `f64` constant (tolerances, closed-form values).
    fn from_f64_const(x: f64) -> Self {
        Self::from_f64(x).expect("constant exceeds scalar range")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
