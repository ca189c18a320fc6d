//! Float abstraction so the flow runs in f32 (training/inference) or f64
//! (verification against finite differences).

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;

/// Element type of all flow tensors.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + ScalarOperand
    + LinalgScalar
    + std::iter::Sum<Self>
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 conversion")
    }

    fn to_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Standard-normal sample via Box-Muller, computed in f64 and narrowed.
///
/// Keeps the draw sequence identical for f32 and f64 models built from the
/// same seed.
pub fn standard_normal<T: Scalar, R: Rng>(rng: &mut R) -> T {
    loop {
        let u1: f64 = rng.gen::<f64>();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let u2: f64 = rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        return T::from_f64(r * (2.0 * std::f64::consts::PI * u2).cos());
    }
}

/// ln(2π), the constant of the Gaussian log-density.
pub fn ln_two_pi<T: Scalar>() -> T {
    T::from_f64((2.0 * std::f64::consts::PI).ln())
}
