//! Element type abstraction for the numeric kernel.
//!
//! Everything from [`crate::tensor`] up through [`crate::model`] is written
//! against [`Scalar`]. Training and gradient checking use `f64`; `f32`
//! instantiations compile and run forward passes but are not validated
//! against finite differences.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless for `f64`, rounding for narrower types.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every float scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float scalars convert to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
