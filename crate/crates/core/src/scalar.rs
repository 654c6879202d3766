//! Floating-point abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used by indicators, calibration, metrics, tests and models.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn mean<F: Scalar>(xs: &[F]) -> F {
    if xs.is_empty() {
        return F::nan();
    }
    xs.iter().copied().sum::<F>() / F::from_usize_lossy(xs.len())
}

/// Sample standard deviation (n - 1 denominator). `NaN` for fewer than two values.
pub(crate) fn sample_std<F: Scalar>(xs: &[F]) -> F {
    if xs.len() < 2 {
        return F::nan();
    }
    let m = mean(xs);
    let ss: F = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    (ss / F::from_usize_lossy(xs.len() - 1)).sqrt()
}
