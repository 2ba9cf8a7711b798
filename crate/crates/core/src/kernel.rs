//! Transition kernels and the traits every chain implements.

use std::collections::BTreeMap;
use std::fmt::{Debug, Display};

use crate::error::Result;
use crate::numerics::{sample_index_f64, Scalar, SeededRng};

/// Exact finite distribution over successor states.
///
/// Entries are aggregated by state, sorted in the state order and never
/// carry a zero weight.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel<St, S> {
    entries: Vec<(St, S)>,
}

impl<St: Ord + Clone, S: Scalar> TransitionKernel<St, S> {
    pub fn from_outcomes<I: IntoIterator<Item = (St, S)>>(outcomes: I) -> Self {
        let mut acc: BTreeMap<St, S> = BTreeMap::new();
        for (state, p) in outcomes {
            if S::is_negligible(&p) {
                continue;
            }
            match acc.get_mut(&state) {
                Some(w) => *w = w.clone() + p,
                None => {
                    acc.insert(state, p);
                }
            }
        }
        let entries = acc
            .into_iter()
            .filter(|(_, p)| !S::is_negligible(p))
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[(St, S)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> S {
        self.entries
            .iter()
            .fold(S::zero(), |acc, (_, p)| acc + p.clone())
    }

    pub fn prob(&self, state: &St) -> S {
        self.entries
            .binary_search_by(|(s, _)| s.cmp(state))
            .map(|i| self.entries[i].1.clone())
            .unwrap_or_else(|_| S::zero())
    }

    /// Inverse-CDF draw over the entries in canonical order.
    pub fn sample(&self, rng: &mut SeededRng) -> Result<St> {
        let weights: Vec<f64> = self.entries.iter().map(|(_, p)| p.to_f64()).collect();
        let i = sample_index_f64(&weights, rng)?;
        Ok(self.entries[i].0.clone())
    }
}

/// A Markov chain with an exactly computable one-step law.
pub trait MarkovChain<S: Scalar> {
    type State: Clone + Ord + Debug + Display + Send + Sync;

    fn step_distribution(&self, state: &Self::State) -> Result<TransitionKernel<Self::State, S>>;
}

/// A chain whose state space can be listed in canonical order.
pub trait FiniteChain<S: Scalar>: MarkovChain<S> {
    fn states(&self) -> Vec<Self::State>;

    /// Size of the state space; chains with a counting formula override
    /// this so caps can be checked before enumerating.
    fn state_count(&self) -> usize {
        self.states().len()
    }
}

/// A chain with a closed-form stationary law.
pub trait StationaryLaw<S: Scalar>: MarkovChain<S> {
    fn stationary(&self, state: &Self::State) -> Result<S>;
}

/// Runs `steps` transitions from `initial`; the trajectory includes the
/// initial state, so it has `steps + 1` entries.
pub fn simulate<S, C>(
    chain: &C,
    initial: C::State,
    steps: usize,
    rng: &mut SeededRng,
) -> Result<Vec<C::State>>
where
    S: Scalar,
    C: MarkovChain<S>,
{
    let mut out = Vec::with_capacity(steps + 1);
    let mut state = initial;
    out.push(state.clone());
    for _ in 0..steps {
        state = chain.step_distribution(&state)?.sample(rng)?;
        out.push(state.clone());
    }
    Ok(out)
}
