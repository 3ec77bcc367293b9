//! Scalar abstraction shared by the state-vector and optical-mode simulators.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type backing complex amplitudes: `f32` or `f64`.
pub trait Real:
    Float
    + num_traits::NumAssign
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Tolerance used for normalization and unitarity checks.
    fn tolerance() -> Self;

    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 converts to every Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f64 {
    fn tolerance() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn tolerance() -> Self {
        1e-5
    }
}

pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

pub(crate) fn c_real<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

pub(crate) fn frac_1_sqrt_2<T: Real>() -> T {
    T::FRAC_1_SQRT_2()
}

/// Draws an index from a discrete distribution given by (possibly unnormalized)
/// non-negative weights. Falls back to the last index with positive weight to
/// absorb rounding at the top of the cumulative sum.
pub(crate) fn sample_weighted<R: rand::Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sample_weighted_never_picks_zero_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let i = sample_weighted(&[0.0, 0.3, 0.0, 0.7, 0.0], &mut rng);
            assert!(i == 1 || i == 3);
        }
    }

    #[test]
    fn tolerances() {
        assert_eq!(<f64 as Real>::tolerance(), 1e-12);
        assert!(<f32 as Real>::tolerance() > 0.0);
    }
}
