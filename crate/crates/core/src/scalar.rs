//! Scalar abstraction for probability and spectral arithmetic.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type used for probabilities, likelihoods and bounds: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the target type cannot represent it.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    /// Converts a count.
    fn count(n: u64) -> Self {
        Self::from_u64(n).expect("count not representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("value not representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
