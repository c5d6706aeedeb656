use num_traits::Float;
use std::fmt::Debug;
use std::iter::Sum;

/// Scalar type the engine is generic over. `f32` is the training dtype;
/// `f64` exists for gradient checks against finite differences.
pub trait Real:
    Float + num_traits::NumAssign + Sum + Default + Debug + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}
