//! Multispecies chain on the half-line: labelled balls at strictly
//! increasing positions. A shift moves every ball right; a jump started by
//! the `j`-th ball runs the finite chain's bumping path on the labels while
//! the positions move as in the single-species half-line chain.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::irjmc::{IrjmcChain, TruncatedSum};
use crate::kernel::{simulate, MarkovChain, StationaryLaw, TransitionKernel};
use crate::mrjmc::{
    bump_paths, partition_factors, validate_alpha_closed, validate_alpha_open, MrjmcChain,
    PartitionFactor,
};
use crate::numerics::{prefix_sums, seeded_rng, PrefixSums, ProbVec, Scalar};
use crate::states::{
    alpha_weight, enumerate_ball_tuples, enumerate_multipermutations, l_statistic_labeled,
    BallTuple, Content, LabeledConfig, Multipermutation,
};

/// Default verification window.
pub const DEFAULT_WINDOW: u32 = 10;

#[derive(Debug, Clone)]
pub struct ImrjmcChain<S> {
    content: Content,
    x: ProbVec<S>,
    alpha: Vec<S>,
    sums: PrefixSums<S>,
}

impl<S: Scalar> ImrjmcChain<S> {
    /// `x = (x_0, ..., x_b)` with `x_b > 0` and every `alpha_i` in `(0, 1)`.
    pub fn new(content: Content, x: Vec<S>, alpha: Vec<S>) -> Result<Self> {
        let chain = Self::build(content, x, alpha)?;
        validate_alpha_open(&chain.content, &chain.alpha)?;
        chain.require_recurrent()?;
        Ok(chain)
    }

    /// Accepts `alpha_i` in `[0, 1]` and `x_b = 0`. Such chains can be
    /// reducible or transient; they serve kernel comparisons and
    /// simulation, and their stationary quantities refuse to run.
    pub fn permissive(content: Content, x: Vec<S>, alpha: Vec<S>) -> Result<Self> {
        let chain = Self::build(content, x, alpha)?;
        validate_alpha_closed(&chain.content, &chain.alpha)?;
        if chain.require_recurrent().is_err() {
            log::warn!("x_b = 0: the last ball never jumps and the chain drifts to infinity");
        } else if chain.require_regular().is_err() {
            log::debug!("alpha on the boundary: the chain may be reducible");
        }
        Ok(chain)
    }

    fn build(content: Content, x: Vec<S>, alpha: Vec<S>) -> Result<Self> {
        let b = content.size();
        if x.len() != b + 1 {
            return Err(Error::InvalidParameters(format!(
                "expected {} jump probabilities, got {}",
                b + 1,
                x.len()
            )));
        }
        let x = ProbVec::distribution(x)?;
        let sums = prefix_sums(&x)?;
        Ok(Self {
            content,
            x,
            alpha,
            sums,
        })
    }

    fn require_recurrent(&self) -> Result<()> {
        if S::is_negligible(self.x.get(self.b())) {
            return Err(Error::InvalidParameters(
                "x_b must be positive: with x_b = 0 the chain is not positive recurrent".into(),
            ));
        }
        Ok(())
    }

    fn require_regular(&self) -> Result<()> {
        self.require_recurrent()?;
        validate_alpha_open(&self.content, &self.alpha)
    }

    pub fn b(&self) -> usize {
        self.content.size()
    }

    pub fn content(&self) -> &Content {
        &self.content
    }

    pub fn x(&self) -> &ProbVec<S> {
        &self.x
    }

    pub fn alpha(&self) -> &[S] {
        &self.alpha
    }

    fn check(&self, c: &LabeledConfig) -> Result<()> {
        if *c.tau.content() != self.content {
            return Err(Error::InvalidState(format!(
                "{c} has content {}, chain has {}",
                c.tau.content(),
                self.content
            )));
        }
        Ok(())
    }

    /// The single-species chain followed by the positions.
    pub fn positions(&self) -> Result<IrjmcChain<S>> {
        IrjmcChain::new(self.x.weights().to_vec())
    }

    /// `prod z_{k-1}^{n_k - n_{k-1} - 1}`.
    fn gap_weight(&self, n: &BallTuple) -> S {
        let mut prev = 0;
        let mut acc = S::one();
        for (k, &p) in n.positions().iter().enumerate() {
            acc = acc * self.sums.z(k).powu(p - prev - 1);
            prev = p;
        }
        acc
    }

    /// `Z_content * prod_{i<b} 1/zbar_i` with both factor lists.
    pub fn partition_split(&self) -> Result<PartitionSplit<S>> {
        self.require_regular()?;
        let content_factors = partition_factors(&self.content, &self.alpha);
        let position_factors = (0..self.b())
            .map(|i| {
                let zb = self.sums.zbar(i);
                if S::is_negligible(zb) {
                    Err(Error::DegenerateParameters(format!("zbar_{i} = 0")))
                } else {
                    Ok(S::one() / zb.clone())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PartitionSplit {
            content_factors,
            position_factors,
        })
    }

    pub fn partition(&self) -> Result<S> {
        Ok(self.partition_split()?.total())
    }

    /// Every configuration with `n_b <= window`, labels outermost.
    pub fn window_states(&self, window: u32) -> Vec<LabeledConfig> {
        let tuples = enumerate_ball_tuples(self.b(), window);
        enumerate_multipermutations(&self.content)
            .into_iter()
            .flat_map(|tau| {
                tuples.iter().map(move |n| LabeledConfig {
                    tau: tau.clone(),
                    n: n.clone(),
                })
            })
            .collect()
    }

    /// Incoming mass minus `pi` for every state with `n_b <= window`.
    ///
    /// Sources inside the window are pushed through the kernel. Outside it,
    /// only `(tau', (n_2 - 1, ..., n_b - 1, l))` with `l > window` reach the
    /// window, by a path started at position `b`; over `l` their weights
    /// form a geometric series with ratio `z_{b-1}`.
    pub fn master_residuals(&self, window: u32) -> Result<Vec<(LabeledConfig, S)>> {
        self.master_residuals_of(self, window)
    }

    /// [`ImrjmcChain::master_residuals`] for the stationary formula of `law`
    /// (a chain with the same content) under this chain's kernel.
    pub fn master_residuals_of(
        &self,
        law: &Self,
        window: u32,
    ) -> Result<Vec<(LabeledConfig, S)>> {
        self.require_regular()?;
        law.require_regular()?;
        if law.content != self.content {
            return Err(Error::InvalidParameters(format!(
                "law has content {}, chain has {}",
                law.content, self.content
            )));
        }
        let b = self.b();
        let states = self.window_states(window);
        let mut incoming: BTreeMap<LabeledConfig, S> = BTreeMap::new();
        for v in &states {
            let pv = law.stationary(v)?;
            for (t, p) in self.step_distribution(v)?.entries() {
                if t.n.last().unwrap_or(0) <= window {
                    let slot = incoming.entry(t.clone()).or_insert_with(S::zero);
                    *slot = slot.clone() + pv.clone() * p.clone();
                }
            }
        }
        // label dynamics of the last-position start, by target
        let mut last_start: BTreeMap<Multipermutation, Vec<(Multipermutation, S)>> =
            BTreeMap::new();
        for source in enumerate_multipermutations(&self.content) {
            for path in bump_paths(&source, &self.alpha, b)? {
                last_start
                    .entry(path.result)
                    .or_default()
                    .push((source.clone(), path.prob));
            }
        }
        let ratio = self.x.get(b).clone() / law.sums.zbar(b - 1).clone();
        let mut out = Vec::with_capacity(states.len());
        for state in states {
            let mut mass = incoming.remove(&state).unwrap_or_else(S::zero);
            if state.n.positions()[0] == 1 {
                let mut first: Vec<u32> = state.n.positions()[1..].iter().map(|p| p - 1).collect();
                first.push(window + 1);
                let first = BallTuple::new(first)?;
                for (source, p) in last_start.get(&state.tau).into_iter().flatten() {
                    let src = LabeledConfig {
                        tau: source.clone(),
                        n: first.clone(),
                    };
                    mass = mass + law.stationary(&src)? * p.clone() * ratio.clone();
                }
            }
            let residual = mass - law.stationary(&state)?;
            out.push((state, residual));
        }
        Ok(out)
    }

    /// [`ImrjmcChain::master_residuals`] at one state.
    pub fn master_residual_truncated(&self, state: &LabeledConfig, window: u32) -> Result<S> {
        self.check(state)?;
        if state.n.last().unwrap_or(0) > window {
            return Err(Error::InvalidState(format!(
                "{state} lies outside the window {window}"
            )));
        }
        let all = self.master_residuals(window)?;
        let i = all
            .binary_search_by(|(s, _)| s.cmp(state))
            .expect("window states are sorted and contain the state");
        Ok(all[i].1.clone())
    }

    /// Direct sum of the unnormalized weight over the window plus the
    /// geometric tail over `n_b > window`.
    pub fn truncated_partition(&self, window: u32) -> Result<TruncatedSum<S>> {
        self.require_regular()?;
        let mut inside = S::zero();
        for state in self.window_states(window) {
            inside = inside + alpha_weight(&state.tau, &self.alpha)? * self.gap_weight(&state.n);
        }
        let label_mass = enumerate_multipermutations(&self.content)
            .iter()
            .try_fold(S::zero(), |acc, tau| Ok::<S, Error>(acc + alpha_weight(tau, &self.alpha)?))?;
        let positional = self.positions()?.truncated_partition(window)?;
        Ok(TruncatedSum {
            window,
            inside,
            tail: label_mass * positional.tail,
        })
    }

    /// `alpha^c(tau) / Z_content`, the law of the labels alone.
    pub fn label_marginal(&self, tau: &Multipermutation) -> Result<S> {
        self.require_regular()?;
        Ok(alpha_weight(tau, &self.alpha)? / crate::mrjmc::partition(&self.content, &self.alpha))
    }

    pub fn sample_run(
        &self,
        initial: LabeledConfig,
        steps: usize,
        seed: u64,
    ) -> Result<Vec<LabeledConfig>> {
        self.check(&initial)?;
        simulate(self, initial, steps, &mut seeded_rng(seed))
    }
}

impl<S: Scalar> MarkovChain<S> for ImrjmcChain<S> {
    type State = LabeledConfig;

    fn step_distribution(&self, c: &LabeledConfig) -> Result<TransitionKernel<LabeledConfig, S>> {
        self.check(c)?;
        let mut outcomes = vec![(
            LabeledConfig {
                tau: c.tau.clone(),
                n: c.n.shifted(),
            },
            self.x.get(0).clone(),
        )];
        for j in 1..=self.b() {
            let xj = self.x.get(j);
            if S::is_negligible(xj) {
                continue;
            }
            let n = c.n.jumped(j);
            for path in bump_paths(&c.tau, &self.alpha, j)? {
                outcomes.push((
                    LabeledConfig {
                        tau: path.result,
                        n: n.clone(),
                    },
                    xj.clone() * path.prob,
                ));
            }
        }
        Ok(TransitionKernel::from_outcomes(outcomes))
    }
}

impl<S: Scalar> StationaryLaw<S> for ImrjmcChain<S> {
    /// `alpha^c(tau) prod z_{k-1}^{gap_k} / Z`.
    fn stationary(&self, c: &LabeledConfig) -> Result<S> {
        self.check(c)?;
        let z = self.partition()?;
        Ok(alpha_weight(&c.tau, &self.alpha)? * self.gap_weight(&c.n) / z)
    }
}

/// The partition function as the product of its label and position parts.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSplit<S> {
    pub content_factors: Vec<PartitionFactor<S>>,
    /// `1/zbar_0, ..., 1/zbar_{b-1}`.
    pub position_factors: Vec<S>,
}

impl<S: Scalar> PartitionSplit<S> {
    pub fn content_part(&self) -> S {
        self.content_factors
            .iter()
            .fold(S::one(), |acc, f| acc * f.value.clone())
    }

    pub fn position_part(&self) -> S {
        self.position_factors
            .iter()
            .fold(S::one(), |acc, f| acc * f.clone())
    }

    pub fn total(&self) -> S {
        self.content_part() * self.position_part()
    }
}

/// The chain with all labels distinct, `alpha_i = 1/q` and the half-line
/// weights of [`crate::irjmc::knutson_weights`].
pub fn knutson_chain<S: Scalar>(q: u32, b: usize) -> Result<ImrjmcChain<S>> {
    let content = Content::new(vec![1; b])?;
    let x = crate::irjmc::knutson_weights::<S>(q, b)?;
    let alpha = vec![S::from_ratio(1, q as i64); content.alpha_len()];
    ImrjmcChain::new(content, x.into_inner(), alpha)
}

/// `q^{-l(tau, n)} (1 - 1/q)^b` with `l = inv(tau) + sum_i (n_i - i)`, the
/// stationary law of [`knutson_chain`].
pub fn knutson_stationary<S: Scalar>(q: u32, c: &LabeledConfig) -> S {
    let q_inv = S::from_ratio(1, q as i64);
    let b = c.tau.len() as u32;
    q_inv.powu(l_statistic_labeled(c) as u32) * (S::one() - q_inv).powu(b)
}

/// With every `alpha_i = 0`, sorted labels stay sorted and the positions
/// move exactly as the single-species chain: compares the two kernels at
/// every `(sorted, n)` with `n_b <= window`.
pub fn frozen_labels_match_single_species<S: Scalar>(
    content: &Content,
    x: &[S],
    window: u32,
) -> Result<bool> {
    let chain = ImrjmcChain::permissive(
        content.clone(),
        x.to_vec(),
        vec![S::zero(); content.alpha_len()],
    )?;
    let single = IrjmcChain::new(x.to_vec())?;
    let sorted = Multipermutation::sorted(content);
    for n in enumerate_ball_tuples(content.size(), window) {
        let lifted = TransitionKernel::from_outcomes(
            single
                .step_distribution(&n)?
                .entries()
                .iter()
                .map(|(m, p)| {
                    (
                        LabeledConfig {
                            tau: sorted.clone(),
                            n: m.clone(),
                        },
                        p.clone(),
                    )
                }),
        );
        let state = LabeledConfig {
            tau: sorted.clone(),
            n,
        };
        if chain.step_distribution(&state)? != lifted {
            return Ok(false);
        }
    }
    Ok(true)
}

/// With `x_0 = 0` and `x_i = s_i` the labels evolve as the finite chain
/// with rates `s`. Single jumps other than the last ball's leave the packed
/// tuple, so the comparison runs over the labels' projected kernel at every
/// state reachable from `(tau, (1, ..., b))` with `n_b <= window`.
pub fn packed_class_labels_match_finite<S: Scalar>(
    content: &Content,
    s: &[S],
    alpha: &[S],
    window: u32,
) -> Result<bool> {
    let mut x = vec![S::zero()];
    x.extend_from_slice(s);
    let chain = ImrjmcChain::permissive(content.clone(), x, alpha.to_vec())?;
    let finite = MrjmcChain::new(content.clone(), s.to_vec(), alpha.to_vec())?;
    let packed = BallTuple::packed(content.size());
    let mut seen: std::collections::BTreeSet<LabeledConfig> = enumerate_multipermutations(content)
        .into_iter()
        .map(|tau| LabeledConfig {
            tau,
            n: packed.clone(),
        })
        .collect();
    let mut queue: Vec<LabeledConfig> = seen.iter().cloned().collect();
    while let Some(state) = queue.pop() {
        let k = chain.step_distribution(&state)?;
        let projected = TransitionKernel::from_outcomes(
            k.entries().iter().map(|(t, p)| (t.tau.clone(), p.clone())),
        );
        if projected != MarkovChain::step_distribution(&finite, &state.tau)? {
            return Ok(false);
        }
        for (t, _) in k.entries() {
            if t.n.last().unwrap_or(0) <= window && seen.insert(t.clone()) {
                queue.push(t.clone());
            }
        }
    }
    Ok(true)
}
