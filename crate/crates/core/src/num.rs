//! Scalar abstraction shared by the analytic and simulation code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rand::Rng;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the two implementors.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Lower probability margin used by validation. `1 - PROB_EPS` must stay below one.
    fn prob_eps() -> Self;
}

impl Real for f32 {
    fn prob_eps() -> Self {
        1e-7
    }
}

impl Real for f64 {
    fn prob_eps() -> Self {
        1e-12
    }
}

/// Uniform draw on `[0, 1)` converted to `T`.
pub(crate) fn unit<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}

/// Exponential(1) draw by inversion; the argument of the log lies in `(0, 1]`.
pub(crate) fn exp1<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let u = 1.0 - rng.random::<f64>();
    T::lit(-u.ln())
}
