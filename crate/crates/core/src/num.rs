//! Scalar abstraction and small statistics helpers.
//!
//! Every numeric routine in this crate is generic over [`Real`], so the
//! engine runs in `f32` or `f64`. The CLI and all file formats use the
//! `f64` aliases exported from the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the engine computes with: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Conversion from an `f64` constant or count.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert")
    }

    /// Widening (or identity) view as `f64`, used at I/O boundaries.
    fn to64(self) -> f64 {
        self.to_f64().expect("scalar must widen to f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Arithmetic mean. Empty input yields zero.
pub fn mean<F: Real>(xs: &[F]) -> F {
    if xs.is_empty() {
        return F::zero();
    }
    let sum = xs.iter().fold(F::zero(), |acc, &x| acc + x);
    sum / F::of(xs.len() as f64)
}

/// Sample variance (denominator n-1). Fewer than two points yields zero.
pub fn sample_var<F: Real>(xs: &[F]) -> F {
    if xs.len() < 2 {
        return F::zero();
    }
    let m = mean(xs);
    let ss = xs
        .iter()
        .fold(F::zero(), |acc, &x| acc + (x - m) * (x - m));
    ss / F::of((xs.len() - 1) as f64)
}

/// Sample standard deviation (denominator n-1).
pub fn sample_std<F: Real>(xs: &[F]) -> F {
    sample_var(xs).sqrt()
}
