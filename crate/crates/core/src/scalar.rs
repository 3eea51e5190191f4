use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rand::Rng;

/// Entry type of a [`PTensor`](crate::PTensor).
///
/// `i64` gives exact arithmetic for property checks; `f64` is used by layers.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Sum
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    /// Whether arithmetic is exact.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn to_f64(self) -> f64;

    /// One random tensor entry: uniform integers in `[-8, 8]` for exact
    /// types, uniform reals in `[-1, 1)` otherwise.
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One random layer weight with fan-in `fan_in`.
    fn sample_weight<R: Rng + ?Sized>(rng: &mut R, fan_in: usize) -> Self;

    fn relu(self) -> Self {
        if self > Self::ZERO {
            self
        } else {
            Self::ZERO
        }
    }
}

impl Scalar for i64 {
    const ZERO: Self = 0;
    const ONE: Self = 1;
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        v
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen_range(-8..=8)
    }

    fn sample_weight<R: Rng + ?Sized>(rng: &mut R, _fan_in: usize) -> Self {
        rng.gen_range(-2..=2)
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen_range(-1.0..1.0)
    }

    fn sample_weight<R: Rng + ?Sized>(rng: &mut R, fan_in: usize) -> Self {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        rng.gen_range(-bound..=bound)
    }
}
