//! Floating-point scalar used by the geometric layer (trajectories, regions,
//! contact detection). Times that feed the routing layer are converted to
//! integer microseconds, see [`crate::time::Micros`].

use std::fmt::{Debug, Display};

/// Coordinate scalar: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 representable in scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
