//! Scalar abstraction for the numeric core.
//!
//! Everything geometric and probabilistic in this crate is written against
//! [`Real`] instead of a hard-coded float type. The two random draws the
//! crate needs are part of the trait so that rand's distribution bounds do
//! not leak into every generic signature.

use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar the numeric core is generic over.
///
/// Implemented for `f32` and `f64`. The simulation layer fixes `f64` via the
/// aliases at the crate root.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Conversion from `f64`, used for constants and configuration values.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Conversion to `f64`, used for reporting and error messages.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    /// One standard normal draw.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One uniform draw from `[lo, hi)`.
    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;
}

impl Real for f32 {
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        rng.random_range(lo..hi)
    }
}

impl Real for f64 {
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        rng.random_range(lo..hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f64::of(2.5), 2.5);
        assert_eq!(f32::of(2.5), 2.5f32);
        assert_eq!(2.5f32.as_f64(), 2.5);
    }

    #[test]
    fn draws_are_deterministic_per_seed() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..32 {
            assert_eq!(f64::std_normal(&mut a), f64::std_normal(&mut b));
            assert_eq!(
                f64::uniform(&mut a, -1.0, 1.0),
                f64::uniform(&mut b, -1.0, 1.0)
            );
        }
    }

    #[test]
    fn uniform_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = f32::uniform(&mut rng, 3.0, 4.0);
            assert!((3.0..4.0).contains(&x));
        }
    }
}
