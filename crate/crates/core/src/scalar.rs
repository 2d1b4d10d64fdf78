//! Scalar abstraction shared by every field and solver.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar usable by the grid operators and solvers: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Sum + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every supported type can represent (a rounding of) it.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
