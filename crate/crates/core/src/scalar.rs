use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point element type of the classifier.
///
/// Implemented for `f32` and `f64`. Model files always carry values as
/// 17-significant-digit decimals of the `f64` widening, which round-trips
/// both types exactly.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossless-or-rounding conversion from `f64`.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to every Scalar")
    }

    fn widen(self) -> f64 {
        self.to_f64().expect("every Scalar widens to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
