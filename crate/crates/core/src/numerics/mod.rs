//! Arithmetic substrate: scalars, probability vectors, prefix sums,
//! seeded sampling and distribution comparison.

pub mod draw;
mod rng;
mod scalar;

pub use rng::{seeded_rng, stream_rng, uniform_unit, SeededRng};
pub use scalar::{
    format_rational, parse_rational, parse_rational_list, to_float_vec, Rational, Scalar,
    FLOAT_SUM_TOLERANCE,
};

use crate::error::{Error, Result};

/// Weights over the outcome indices `0..len`, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec<S> {
    weights: Vec<S>,
}

impl<S: Scalar> ProbVec<S> {
    /// Wraps raw weights without checking normalization.
    pub fn from_weights(weights: Vec<S>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| *w < S::zero()) {
            return Err(Error::NonDistribution(format!("weight {i} is negative")));
        }
        Ok(Self { weights })
    }

    /// Wraps weights that must sum to one.
    pub fn distribution(weights: Vec<S>) -> Result<Self> {
        let pv = Self::from_weights(weights)?;
        let total = pv.total();
        if !S::is_unit_sum(&total) {
            return Err(Error::NonDistribution(format!(
                "weights sum to {}, not 1",
                total.to_text()
            )));
        }
        Ok(pv)
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> &S {
        &self.weights[i]
    }

    pub fn total(&self) -> S {
        self.weights
            .iter()
            .fold(S::zero(), |acc, w| acc + w.clone())
    }

    pub fn into_inner(self) -> Vec<S> {
        self.weights
    }
}

/// Cumulative sums `z_i = x_0 + ... + x_i` and their complements
/// `zbar_i = 1 - z_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSums<S> {
    z: Vec<S>,
    zbar: Vec<S>,
}

impl<S: Scalar> PrefixSums<S> {
    pub fn z(&self, i: usize) -> &S {
        &self.z[i]
    }

    pub fn zbar(&self, i: usize) -> &S {
        &self.zbar[i]
    }

    pub fn z_all(&self) -> &[S] {
        &self.z
    }

    pub fn zbar_all(&self) -> &[S] {
        &self.zbar
    }
}

/// Prefix sums of a distribution. Rejects negative weights, and sums away
/// from one (exactly in rational mode, beyond [`FLOAT_SUM_TOLERANCE`] in
/// float mode).
pub fn prefix_sums<S: Scalar>(x: &ProbVec<S>) -> Result<PrefixSums<S>> {
    if x.is_empty() {
        return Err(Error::NonDistribution("no weights".into()));
    }
    if let Some(i) = x.weights().iter().position(|w| *w < S::zero()) {
        return Err(Error::NonDistribution(format!("weight {i} is negative")));
    }
    let mut z = Vec::with_capacity(x.len());
    let mut acc = S::zero();
    for w in x.weights() {
        acc = acc + w.clone();
        z.push(acc.clone());
    }
    if !S::is_unit_sum(&acc) {
        return Err(Error::NonDistribution(format!(
            "weights sum to {}, not 1",
            acc.to_text()
        )));
    }
    let zbar = z.iter().map(|zi| S::one() - zi.clone()).collect();
    Ok(PrefixSums { z, zbar })
}

/// Inverse-CDF draw over the entries in stored order.
pub fn sample_index<S: Scalar>(dist: &ProbVec<S>, rng: &mut SeededRng) -> Result<usize> {
    let weights: Vec<f64> = dist.weights().iter().map(Scalar::to_f64).collect();
    sample_index_f64(&weights, rng)
}

pub(crate) fn sample_index_f64(weights: &[f64], rng: &mut SeededRng) -> Result<usize> {
    if weights.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyDistribution);
    }
    let u = uniform_unit(rng) * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        last_positive = i;
        acc += w;
        if u < acc {
            return Ok(i);
        }
    }
    // rounding can leave u just above the float total
    Ok(last_positive)
}

/// Total variation distance `(1/2) sum |p_i - q_i|`.
pub fn tv_distance<S: Scalar>(p: &ProbVec<S>, q: &ProbVec<S>) -> Result<S> {
    if p.len() != q.len() {
        return Err(Error::IndexMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let sum = p
        .weights()
        .iter()
        .zip(q.weights())
        .fold(S::zero(), |acc, (a, b)| {
            acc + (a.clone() - b.clone()).abs_value()
        });
    Ok(sum / S::from_int(2))
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn rational() -> impl Strategy<Value = Rational> {
        (-50i64..50, 1i64..30).prop_map(|(n, d)| Rational::from_ratio(n, d))
    }

    proptest! {
        #[test]
        fn rational_add_sub_is_exact(a in rational(), b in rational()) {
            prop_assert_eq!((a.clone() + b.clone()) - b, a);
        }

        #[test]
        fn prefix_differences_recover_weights(ws in prop::collection::vec(1i64..20, 1..8)) {
            let total: i64 = ws.iter().sum();
            let x = ProbVec::distribution(
                ws.iter().map(|w| Rational::from_ratio(*w, total)).collect(),
            ).unwrap();
            let ps = prefix_sums(&x).unwrap();
            prop_assert_eq!(ps.z(0), x.get(0));
            for i in 1..x.len() {
                prop_assert_eq!(&(ps.z(i).clone() - ps.z(i - 1).clone()), x.get(i));
            }
            prop_assert_eq!(ps.z(x.len() - 1).clone(), Rational::from_int(1));
        }
    }
}
