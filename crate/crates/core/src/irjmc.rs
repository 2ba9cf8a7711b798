//! Single-species chain on the half-line: `b` balls at strictly increasing
//! positions; each step either shifts every ball right or sends one ball to
//! the front.
//!
//! The state space is infinite, so verification works on the window
//! `n_b <= N` and sums every tail as a geometric series.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kernel::{simulate, MarkovChain, StationaryLaw, TransitionKernel};
use crate::numerics::{prefix_sums, seeded_rng, PrefixSums, ProbVec, Scalar};
use crate::states::{displacement, enumerate_ball_tuples, BallTuple};

/// Default verification window.
pub const DEFAULT_WINDOW: u32 = 12;

#[derive(Debug, Clone)]
pub struct IrjmcChain<S> {
    b: usize,
    x: ProbVec<S>,
    sums: PrefixSums<S>,
}

impl<S: Scalar> IrjmcChain<S> {
    /// `x = (x_0, ..., x_b)` with `x_b > 0`.
    pub fn new(x: Vec<S>) -> Result<Self> {
        let chain = Self::build(x)?;
        chain.require_recurrent()?;
        Ok(chain)
    }

    /// Like [`IrjmcChain::new`] but accepts `x_b = 0`, for watching the
    /// transient behavior. Stationary quantities still refuse to run.
    pub fn for_simulation(x: Vec<S>) -> Result<Self> {
        let chain = Self::build(x)?;
        if chain.require_recurrent().is_err() {
            log::warn!("x_b = 0: the last ball never jumps and the chain drifts to infinity");
        }
        Ok(chain)
    }

    fn build(x: Vec<S>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::InvalidParameters(
                "need at least one ball: x must have b + 1 >= 2 entries".into(),
            ));
        }
        let x = ProbVec::distribution(x)?;
        let sums = prefix_sums(&x)?;
        Ok(Self {
            b: x.len() - 1,
            x,
            sums,
        })
    }

    fn require_recurrent(&self) -> Result<()> {
        if S::is_negligible(self.x.get(self.b)) || *self.x.get(self.b) < S::zero() {
            return Err(Error::InvalidParameters(
                "x_b must be positive: with x_b = 0 the chain is not positive recurrent".into(),
            ));
        }
        Ok(())
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn x(&self) -> &ProbVec<S> {
        &self.x
    }

    pub fn sums(&self) -> &PrefixSums<S> {
        &self.sums
    }

    fn check(&self, n: &BallTuple) -> Result<()> {
        if n.len() == self.b {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "{n} has {} balls, expected {}",
                n.len(),
                self.b
            )))
        }
    }

    /// `prod z_i^{n_{i+1} - n_i - 1}` over the given prefix of balls.
    fn gap_weight(&self, positions: &[u32]) -> S {
        let mut prev = 0;
        let mut acc = S::one();
        for (i, &p) in positions.iter().enumerate() {
            acc = acc * self.sums.z(i).powu(p - prev - 1);
            prev = p;
        }
        acc
    }

    /// `Z_b = prod_{i<b} 1 / zbar_i`.
    pub fn partition(&self) -> Result<S> {
        Ok(self
            .partition_factors()?
            .into_iter()
            .fold(S::one(), |acc, f| acc * f))
    }

    /// `[1/zbar_0, ..., 1/zbar_{b-1}]`.
    pub fn partition_factors(&self) -> Result<Vec<S>> {
        (0..self.b)
            .map(|i| {
                let zb = self.sums.zbar(i);
                if S::is_negligible(zb) {
                    Err(Error::DegenerateParameters(format!("zbar_{i} = 0")))
                } else {
                    Ok(S::one() / zb.clone())
                }
            })
            .collect()
    }

    /// Incoming mass minus `pi(n)` for every `n` with `n_b <= window`.
    ///
    /// Sources inside the window are pushed through the kernel. The only
    /// sources outside it are `(n_2 - 1, ..., n_b - 1, l)` with `l > window`
    /// jumping their last ball; their total `x_b pi(.., window + 1) / zbar_{b-1}`
    /// is added as a geometric series.
    pub fn master_residuals(&self, window: u32) -> Result<Vec<(BallTuple, S)>> {
        self.master_residuals_of(self, window)
    }

    /// [`IrjmcChain::master_residuals`] for the stationary formula of `law`
    /// (a chain with the same number of balls) under this chain's kernel.
    pub fn master_residuals_of(&self, law: &Self, window: u32) -> Result<Vec<(BallTuple, S)>> {
        self.require_recurrent()?;
        law.require_recurrent()?;
        if law.b != self.b {
            return Err(Error::InvalidParameters(format!(
                "law has {} balls, chain has {}",
                law.b, self.b
            )));
        }
        let states = self.window_states(window);
        let mut incoming: BTreeMap<BallTuple, S> = BTreeMap::new();
        for v in &states {
            let pv = law.stationary(v)?;
            for (t, p) in self.step_distribution(v)?.entries() {
                if t.last().unwrap_or(0) <= window {
                    let slot = incoming.entry(t.clone()).or_insert_with(S::zero);
                    *slot = slot.clone() + pv.clone() * p.clone();
                }
            }
        }
        let tail_ratio = self.x.get(self.b).clone() / law.sums.zbar(self.b - 1).clone();
        let mut out = Vec::with_capacity(states.len());
        for n in states {
            let mut mass = incoming.remove(&n).unwrap_or_else(S::zero);
            if n.positions()[0] == 1 {
                let mut source: Vec<u32> = n.positions()[1..].iter().map(|p| p - 1).collect();
                source.push(window + 1);
                let source = BallTuple::new(source)?;
                mass = mass + law.stationary(&source)? * tail_ratio.clone();
            }
            let residual = mass - law.stationary(&n)?;
            out.push((n, residual));
        }
        Ok(out)
    }

    /// [`IrjmcChain::master_residuals`] at a single state.
    pub fn master_residual_truncated(&self, n: &BallTuple, window: u32) -> Result<S> {
        self.check(n)?;
        if n.last().unwrap_or(0) > window {
            return Err(Error::InvalidState(format!("{n} lies outside the window {window}")));
        }
        let all = self.master_residuals(window)?;
        let i = all
            .binary_search_by(|(s, _)| s.cmp(n))
            .expect("window states are sorted and contain n");
        Ok(all[i].1.clone())
    }

    pub fn window_states(&self, window: u32) -> Vec<BallTuple> {
        enumerate_ball_tuples(self.b, window)
    }

    /// Unnormalized mass split as the window sum plus the analytic tail
    /// over `n_b > window`; the total is `Z_b` computed without the
    /// product formula.
    pub fn truncated_partition(&self, window: u32) -> Result<TruncatedSum<S>> {
        self.partition_factors()?;
        let inside = self
            .window_states(window)
            .iter()
            .fold(S::zero(), |acc, n| acc + self.gap_weight(n.positions()));
        Ok(TruncatedSum {
            window,
            inside,
            tail: self.gap_tail(self.b, window),
        })
    }

    /// `sum` of the `k`-ball gap weight over tuples with `n_k > window`.
    fn gap_tail(&self, k: usize, window: u32) -> S {
        if k == 0 {
            return S::zero();
        }
        let z = self.sums.z(k - 1).clone();
        let near = enumerate_ball_tuples(k - 1, window)
            .iter()
            .fold(S::zero(), |acc, prefix| {
                let last = prefix.last().unwrap_or(0);
                acc + self.gap_weight(prefix.positions()) * z.powu(window - last)
            });
        (near + self.gap_tail(k - 1, window)) / self.sums.zbar(k - 1).clone()
    }

    /// Exact probability of being at `(1, ..., b)` after `b` steps from
    /// `start`, by composing the kernel.
    pub fn return_probability(&self, start: &BallTuple) -> Result<S> {
        self.check(start)?;
        let mut dist: BTreeMap<BallTuple, S> = BTreeMap::from([(start.clone(), S::one())]);
        for _ in 0..self.b {
            let mut next: BTreeMap<BallTuple, S> = BTreeMap::new();
            for (s, p) in &dist {
                for (t, q) in self.step_distribution(s)?.entries() {
                    let slot = next.entry(t.clone()).or_insert_with(S::zero);
                    *slot = slot.clone() + p.clone() * q.clone();
                }
            }
            dist = next;
        }
        Ok(dist
            .remove(&BallTuple::packed(self.b))
            .unwrap_or_else(S::zero))
    }

    /// `prod_{i=1}^{b} (x_i + ... + x_b)`. Reaching the packed state in `b`
    /// steps requires every step to send a not-yet-moved ball to the front;
    /// at step `t` those are balls `t, ..., b`.
    pub fn return_probability_formula(&self) -> S {
        (0..self.b).fold(S::one(), |acc, i| acc * self.sums.zbar(i).clone())
    }

    /// The chain with the last ball forgotten:
    /// `x' = (x_0, ..., x_{b-2}, x_{b-1} + x_b)`.
    pub fn forget_last_ball(&self) -> Result<Self> {
        if self.b < 2 {
            return Err(Error::InvalidParameters("need at least two balls".into()));
        }
        let mut x = self.x.weights()[..self.b].to_vec();
        let merged = x[self.b - 1].clone() + self.x.get(self.b).clone();
        x[self.b - 1] = merged;
        Self::new(x)
    }

    /// `sum_{n_b > n_{b-1}} pi(prefix, n_b)` as a geometric series.
    pub fn marginal_without_last(&self, prefix: &BallTuple) -> Result<S> {
        if prefix.len() + 1 != self.b {
            return Err(Error::InvalidState(format!(
                "{prefix} should have {} balls",
                self.b - 1
            )));
        }
        let mut first = prefix.positions().to_vec();
        first.push(prefix.last().unwrap_or(0) + 1);
        let head = self.stationary(&BallTuple::new(first)?)?;
        Ok(head / self.sums.zbar(self.b - 1).clone())
    }

    pub fn sample_run(&self, initial: BallTuple, steps: usize, seed: u64) -> Result<Vec<BallTuple>> {
        self.check(&initial)?;
        simulate(self, initial, steps, &mut seeded_rng(seed))
    }
}

impl<S: Scalar> MarkovChain<S> for IrjmcChain<S> {
    type State = BallTuple;

    fn step_distribution(&self, n: &BallTuple) -> Result<TransitionKernel<BallTuple, S>> {
        self.check(n)?;
        let mut outcomes = Vec::with_capacity(self.b + 1);
        outcomes.push((n.shifted(), self.x.get(0).clone()));
        for i in 1..=self.b {
            outcomes.push((n.jumped(i), self.x.get(i).clone()));
        }
        Ok(TransitionKernel::from_outcomes(outcomes))
    }
}

impl<S: Scalar> StationaryLaw<S> for IrjmcChain<S> {
    /// `prod_{i<b} zbar_i prod_{i<b} z_i^{n_{i+1} - n_i - 1}`.
    fn stationary(&self, n: &BallTuple) -> Result<S> {
        self.check(n)?;
        self.require_recurrent()?;
        let norm = (0..self.b).fold(S::one(), |acc, i| acc * self.sums.zbar(i).clone());
        Ok(norm * self.gap_weight(n.positions()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSum<S> {
    pub window: u32,
    pub inside: S,
    pub tail: S,
}

impl<S: Scalar> TruncatedSum<S> {
    pub fn total(&self) -> S {
        self.inside.clone() + self.tail.clone()
    }
}

/// `x_0 = q^{-b}`, `x_i = q^{i-b} (1 - 1/q)`, which makes `z_k = q^{k-b}`.
pub fn knutson_weights<S: Scalar>(q: u32, b: usize) -> Result<ProbVec<S>> {
    if q < 2 {
        return Err(Error::InvalidParameters(format!("q = {q} must be at least 2")));
    }
    let q_inv = S::from_ratio(1, q as i64);
    let mut x = Vec::with_capacity(b + 1);
    x.push(q_inv.powu(b as u32));
    for i in 1..=b {
        x.push(q_inv.powu((b - i) as u32) * (S::one() - q_inv.clone()));
    }
    ProbVec::distribution(x)
}

/// `q^{-l(n)} prod_{i=1}^{b} (1 - q^{-i})` with `l(n) = sum_k (n_k - k)`.
pub fn knutson_stationary<S: Scalar>(q: u32, n: &BallTuple) -> S {
    let q_inv = S::from_ratio(1, q as i64);
    let norm = (1..=n.len() as u32).fold(S::one(), |acc, i| acc * (S::one() - q_inv.powu(i)));
    norm * q_inv.powu(displacement(n) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{draw, seeded_rng, Rational};
    use crate::states::{enumerate_binary_words, l_statistic_word, ones_positions};

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn bt(v: &[u32]) -> BallTuple {
        BallTuple::new(v.to_vec()).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let c = IrjmcChain::new(vec![r(1, 2), r(1, 3), r(1, 6)]).unwrap();
        let k = c.step_distribution(&bt(&[1, 2])).unwrap();
        assert_eq!(k.prob(&bt(&[2, 3])), r(1, 2));
        assert_eq!(k.prob(&bt(&[1, 3])), r(1, 3));
        assert_eq!(k.prob(&bt(&[1, 2])), r(1, 6));
        assert_eq!(k.total(), r(1, 1));
        let c = IrjmcChain::new(vec![r(1, 4), r(3, 4)]).unwrap();
        let k = c.step_distribution(&bt(&[5])).unwrap();
        assert_eq!(k.entries().len(), 2);
        assert_eq!(k.prob(&bt(&[6])), r(1, 4));
        assert_eq!(k.prob(&bt(&[1])), r(3, 4));
        assert!(c.step_distribution(&bt(&[1, 2])).is_err());
    }

    #[test]
    fn construction_guards() {
        let err = IrjmcChain::new(vec![r(1, 2), r(1, 2), r(0, 1)]).unwrap_err();
        assert!(err.to_string().contains("positive recurrent"));
        assert!(IrjmcChain::new(vec![r(1, 1)]).is_err());
        let sim = IrjmcChain::for_simulation(vec![r(1, 1), r(0, 1)]).unwrap();
        assert!(sim.stationary(&bt(&[1])).is_err());
        assert!(sim.master_residuals(4).is_err());
        let run = sim.sample_run(bt(&[1]), 10, 0).unwrap();
        assert_eq!(run.last().unwrap(), &bt(&[11]));
        assert!(run.windows(2).all(|w| w[1] == w[0].shifted()));
    }

    #[test]
    fn stationary_examples() {
        let c = IrjmcChain::new(vec![r(1, 2), r(1, 3), r(1, 6)]).unwrap();
        assert_eq!(
            c.stationary(&bt(&[1, 2])).unwrap(),
            r(1, 1) / c.partition().unwrap()
        );
        let c = IrjmcChain::new(vec![r(2, 5), r(3, 5)]).unwrap();
        for n in 1..6 {
            assert_eq!(
                c.stationary(&bt(&[n])).unwrap(),
                r(3, 5) * r(2, 5).powu(n - 1)
            );
        }
    }

    #[test]
    fn partition_examples() {
        let c = IrjmcChain::new(vec![r(1, 4), r(3, 4)]).unwrap();
        assert_eq!(c.partition().unwrap(), r(4, 3));
        let x = vec![r(1, 2), r(1, 3), r(1, 6)];
        let c = IrjmcChain::new(x.clone()).unwrap();
        let expected = r(1, 1) / ((x[1].clone() + x[2].clone()) * x[2].clone());
        assert_eq!(c.partition().unwrap(), expected);
        let t = c.truncated_partition(60).unwrap();
        assert_eq!(t.total(), expected);
        assert!(t.tail > r(0, 1));
        assert_eq!(c.partition_factors().unwrap(), vec![r(2, 1), r(6, 1)]);
    }

    #[test]
    fn truncated_partition_sweep() {
        let mut rng = seeded_rng(11);
        for b in 1..=4 {
            for window in [b as u32, 7, 10] {
                let c = IrjmcChain::new(draw::distribution(&mut rng, b + 1)).unwrap();
                assert_eq!(
                    c.truncated_partition(window).unwrap().total(),
                    c.partition().unwrap()
                );
            }
        }
    }

    #[test]
    fn knutson_examples() {
        let x: ProbVec<Rational> = knutson_weights(3, 4).unwrap();
        assert_eq!(x.weights(), &[r(1, 81), r(2, 81), r(2, 27), r(2, 9), r(2, 3)]);
        let x: ProbVec<Rational> = knutson_weights(2, 1).unwrap();
        assert_eq!(x.weights(), &[r(1, 2), r(1, 2)]);
        assert!(knutson_weights::<Rational>(1, 2).is_err());
        for q in [2, 3, 5] {
            for b in 1..=4 {
                let x: ProbVec<Rational> = knutson_weights(q, b).unwrap();
                let c = IrjmcChain::new(x.into_inner()).unwrap();
                let expected = (1..=b as u32)
                    .fold(r(1, 1), |acc, i| acc / (r(1, 1) - r(1, q as i64).powu(i)));
                assert_eq!(c.partition().unwrap(), expected);
                for n in c.window_states(8) {
                    assert_eq!(c.stationary(&n).unwrap(), knutson_stationary(q, &n));
                }
            }
        }
    }

    #[test]
    fn master_residual_examples() {
        let mut rng = seeded_rng(12);
        let c = IrjmcChain::new(draw::distribution(&mut rng, 2)).unwrap();
        assert_eq!(c.master_residual_truncated(&bt(&[1]), 1).unwrap(), r(0, 1));
        let c = IrjmcChain::new(draw::distribution(&mut rng, 3)).unwrap();
        assert_eq!(c.master_residual_truncated(&bt(&[1, 3]), 3).unwrap(), r(0, 1));
        assert!(c.master_residual_truncated(&bt(&[1, 5]), 3).is_err());
        let other = IrjmcChain::new(draw::distribution(&mut rng, 3)).unwrap();
        let residuals = c.master_residuals_of(&other, 5).unwrap();
        assert!(residuals.iter().any(|(_, res)| *res != r(0, 1)));
        assert!(c.master_residuals_of(&IrjmcChain::new(vec![r(1, 2), r(1, 2)]).unwrap(), 5).is_err());
    }

    #[test]
    fn master_residual_sweep() {
        let mut rng = seeded_rng(13);
        for b in 1..=3 {
            for _ in 0..10 {
                let c = IrjmcChain::new(draw::distribution(&mut rng, b + 1)).unwrap();
                for (n, res) in c.master_residuals(8).unwrap() {
                    assert_eq!(res, r(0, 1), "b={b} n={n}");
                }
            }
        }
    }

    #[test]
    fn return_probability_matches_product() {
        let mut rng = seeded_rng(14);
        for b in 1..=4 {
            let c = IrjmcChain::new(draw::distribution(&mut rng, b + 1)).unwrap();
            let starts = c.window_states(b as u32 + 4);
            for k in 0..5 {
                let start = &starts[(k * 7) % starts.len()];
                assert_eq!(
                    c.return_probability(start).unwrap(),
                    c.return_probability_formula()
                );
            }
        }
    }

    #[test]
    fn marginal_over_last_ball() {
        let mut rng = seeded_rng(15);
        for b in 2..=4 {
            let c = IrjmcChain::new(draw::distribution(&mut rng, b + 1)).unwrap();
            let smaller = c.forget_last_ball().unwrap();
            assert_eq!(
                smaller.partition().unwrap() / c.sums().zbar(b - 1).clone(),
                c.partition().unwrap()
            );
            for prefix in smaller.window_states(7) {
                assert_eq!(
                    c.marginal_without_last(&prefix).unwrap(),
                    smaller.stationary(&prefix).unwrap()
                );
            }
        }
    }

    #[test]
    fn knutson_words_use_zero_before_one_pairs() {
        // the displacement of the ones equals the zeros-before-ones count
        let q = 3;
        let c = IrjmcChain::new(knutson_weights::<Rational>(q, 2).unwrap().into_inner()).unwrap();
        for w in enumerate_binary_words(6, 2).unwrap() {
            if w.ones() != 2 {
                continue;
            }
            let n = ones_positions(&w);
            let ell = l_statistic_word(&w);
            assert_eq!(
                c.stationary(&n).unwrap(),
                r(1, 3).powu(ell as u32) * (r(1, 1) - r(1, 3)) * (r(1, 1) - r(1, 9))
            );
        }
    }

    #[test]
    fn sample_run_is_deterministic() {
        let c = IrjmcChain::new(vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(c.sample_run(bt(&[1, 2]), 0, 9).unwrap(), vec![bt(&[1, 2])]);
        let a = c.sample_run(bt(&[1, 2]), 500, 9).unwrap();
        let b = c.sample_run(bt(&[1, 2]), 500, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 501);
    }
}
