//! Floating-point abstraction shared by every numerical module.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Real scalar the optimizers are generic over.
///
/// Implemented for `f32` and `f64`. All tolerances quoted in the tests are for
/// `f64`; `f32` is supported for memory-bound experiments.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or configuration value.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize is representable in every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dense vector helpers. Vectors are plain slices; the problems here have
/// `d` in the low hundreds so nothing fancier is warranted.
pub mod vecops {
    use super::Scalar;

    pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
    }

    pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
        dot(a, a)
    }

    pub fn norm<T: Scalar>(a: &[T]) -> T {
        norm_sq(a).sqrt()
    }

    /// `y += alpha * x`
    pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), y.len());
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi = *yi + alpha * xi;
        }
    }

    /// `a - b` as a new vector.
    pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(&x, &y)| x - y).collect()
    }

    pub fn all_finite<T: Scalar>(a: &[T]) -> bool {
        a.iter().all(|x| x.is_finite())
    }
}
