//! Scalar abstraction shared by the simulator, the bandit model and the
//! estimators. Everything numeric is generic over [`Scalar`]; the crate root
//! re-exports `f64` aliases for the common case.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Convert an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Tolerance for unitarity and norm checks at this precision.
    fn tolerance() -> Self;
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-4
    }
}
