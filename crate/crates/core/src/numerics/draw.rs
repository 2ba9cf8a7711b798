//! Random rational parameter points for evaluating polynomial identities.

use rand::Rng;

use super::{Rational, Scalar, SeededRng};

/// Largest integer weight used by [`distribution`].
pub const MAX_WEIGHT: i64 = 12;

/// A strictly positive rational distribution with `len` entries sharing a
/// common denominator.
pub fn distribution(rng: &mut SeededRng, len: usize) -> Vec<Rational> {
    let weights: Vec<i64> = (0..len).map(|_| rng.random_range(1..=MAX_WEIGHT)).collect();
    let total: i64 = weights.iter().sum();
    weights
        .into_iter()
        .map(|w| Rational::from_ratio(w, total))
        .collect()
}

/// A rational strictly inside `(0, 1)` with denominator at most 12.
pub fn open_unit(rng: &mut SeededRng) -> Rational {
    let den = rng.random_range(2..=12i64);
    let num = rng.random_range(1..den);
    Rational::from_ratio(num, den)
}

pub fn open_unit_vec(rng: &mut SeededRng, len: usize) -> Vec<Rational> {
    (0..len).map(|_| open_unit(rng)).collect()
}
