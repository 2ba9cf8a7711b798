//! Multispecies chain on multipermutations. A ball chosen by position
//! starts a bumping path towards the front: it passes smaller-labelled
//! balls with the non-bump probabilities `alpha` or displaces one, which
//! then continues the path; the last mover lands at position 1.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kernel::{FiniteChain, MarkovChain, StationaryLaw, TransitionKernel};
use crate::numerics::{ProbVec, Scalar};
use crate::states::{alpha_weight, code, enumerate_multipermutations, Content, Multipermutation};

#[derive(Debug, Clone)]
pub struct MrjmcChain<S> {
    content: Content,
    s: ProbVec<S>,
    alpha: Vec<S>,
}

impl<S: Scalar> MrjmcChain<S> {
    /// `s = (s_1, ..., s_b)` with `s_b > 0`; `alpha = (alpha_1, ...,
    /// alpha_{b - b_T})`, each strictly inside `(0, 1)`.
    pub fn new(content: Content, s: Vec<S>, alpha: Vec<S>) -> Result<Self> {
        let b = content.size();
        if s.len() != b {
            return Err(Error::InvalidParameters(format!(
                "expected {b} start probabilities, got {}",
                s.len()
            )));
        }
        let s = ProbVec::distribution(s)?;
        if S::is_negligible(s.get(b - 1)) {
            return Err(Error::InvalidParameters(
                "s_b must be positive: otherwise the last position never moves and the chain is reducible"
                    .into(),
            ));
        }
        validate_alpha(&content, &alpha, false)?;
        Ok(Self { content, s, alpha })
    }

    pub fn content(&self) -> &Content {
        &self.content
    }

    pub fn s(&self) -> &ProbVec<S> {
        &self.s
    }

    pub fn alpha(&self) -> &[S] {
        &self.alpha
    }

    fn check(&self, tau: &Multipermutation) -> Result<()> {
        if *tau.content() == self.content {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "{tau} has content {}, chain has {}",
                tau.content(),
                self.content
            )))
        }
    }

    pub fn bump_paths(&self, tau: &Multipermutation, j: usize) -> Result<Vec<BumpPath<S>>> {
        self.check(tau)?;
        bump_paths(tau, &self.alpha, j)
    }

    /// `alpha^c(tau)`, the unnormalized stationary weight.
    pub fn weight(&self, tau: &Multipermutation) -> Result<S> {
        self.check(tau)?;
        alpha_weight(tau, &self.alpha)
    }

    pub fn partition(&self) -> S {
        partition(&self.content, &self.alpha)
    }

    /// Sums `alpha^c(tau') P(tau' -> tau)` over every source, split by the
    /// starting position `t` and the position `r` the final mover jumps
    /// from.
    pub fn refinement_index(&self) -> Result<RefinementIndex<S>> {
        let mut groups: BTreeMap<(Multipermutation, usize, usize), S> = BTreeMap::new();
        for source in self.states() {
            let w = self.weight(&source)?;
            for t in 1..=self.content.size() {
                let start = self.s.get(t - 1).clone() * w.clone();
                for path in bump_paths(&source, &self.alpha, t)? {
                    let key = (path.result, t, path.last_jump);
                    let slot = groups.entry(key).or_insert_with(S::zero);
                    *slot = slot.clone() + start.clone() * path.prob;
                }
            }
        }
        Ok(RefinementIndex {
            chain: self.clone(),
            groups,
        })
    }

    /// Closed form of the `(t, r)` group at `tau`, `1 <= r <= t <= b`:
    /// for `r = t`, `s_t alpha^c(tau) prod_{i<t, tau_{i+1} > tau_1} alpha_{c_{i+1}+1}`;
    /// for `r < t`, zero unless `tau_{r+1} > tau_1`, and otherwise the same
    /// product over `i < r` times `(1 - alpha_{c_{r+1}+1})`.
    pub fn refinement_formula(&self, tau: &Multipermutation, t: usize, r: usize) -> Result<S> {
        let b = self.content.size();
        if r == 0 || r > t || t > b {
            return Err(Error::InvalidParameters(format!(
                "need 1 <= r <= t <= {b}, got r = {r}, t = {t}"
            )));
        }
        Ok(self.refinement_table(tau)?[t - 1][r - 1].clone())
    }

    /// Every [`MrjmcChain::refinement_formula`] at `tau`: entry `[t-1][r-1]`
    /// for `1 <= r <= t <= b`.
    pub fn refinement_table(&self, tau: &Multipermutation) -> Result<Vec<Vec<S>>> {
        self.check(tau)?;
        let b = self.content.size();
        let letters = tau.letters();
        let c = code(tau);
        let a = |k: usize| self.alpha[k - 1].clone();
        // passes[u] = prod over 1 <= i < u with letters[i] > letters[0]
        let mut passes = vec![S::one(); b + 1];
        for u in 2..=b {
            let i = u - 1;
            passes[u] = if letters[i] > letters[0] {
                passes[u - 1].clone() * a(c[i] as usize + 1)
            } else {
                passes[u - 1].clone()
            };
        }
        // the r < t entries do not depend on t beyond the s_t factor
        let jumps: Vec<S> = (1..b)
            .map(|r| {
                if letters[r] > letters[0] {
                    (S::one() - a(c[r] as usize + 1)) * passes[r].clone()
                } else {
                    S::zero()
                }
            })
            .collect();
        let weight = self.weight(tau)?;
        Ok((1..=b)
            .map(|t| {
                let base = self.s.get(t - 1).clone() * weight.clone();
                (1..=t)
                    .map(|r| {
                        if r == t {
                            base.clone() * passes[t].clone()
                        } else {
                            base.clone() * jumps[r - 1].clone()
                        }
                    })
                    .collect()
            })
            .collect())
    }
}

fn validate_alpha<S: Scalar>(content: &Content, alpha: &[S], closed: bool) -> Result<()> {
    if alpha.len() != content.alpha_len() {
        return Err(Error::InvalidParameters(format!(
            "content {content} needs {} non-bump probabilities, got {}",
            content.alpha_len(),
            alpha.len()
        )));
    }
    for (i, a) in alpha.iter().enumerate() {
        let inside = if closed {
            *a >= S::zero() && *a <= S::one()
        } else {
            *a > S::zero() && *a < S::one()
        };
        if !inside {
            let range = if closed { "[0, 1]" } else { "(0, 1)" };
            return Err(Error::InvalidParameters(format!(
                "alpha_{} = {} is outside {range}",
                i + 1,
                a.to_text()
            )));
        }
    }
    Ok(())
}

pub(crate) fn validate_alpha_closed<S: Scalar>(content: &Content, alpha: &[S]) -> Result<()> {
    validate_alpha(content, alpha, true)
}

pub(crate) fn validate_alpha_open<S: Scalar>(content: &Content, alpha: &[S]) -> Result<()> {
    validate_alpha(content, alpha, false)
}

/// One bumping path with its probability; positions are 1-indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpPath<S> {
    pub start: usize,
    /// Bumped positions, strictly decreasing.
    pub bumps: Vec<usize>,
    /// Position the final mover jumps to the front from: the last bump, or
    /// the start when nothing was bumped.
    pub last_jump: usize,
    pub prob: S,
    pub result: Multipermutation,
}

/// Every bumping path started by the ball at position `j` of `tau`.
///
/// A mover with label `lambda` at position `p` sees the `l` balls left of
/// `p` with smaller labels, and `r` such balls to its right. Scanning the
/// `l` candidates nearest first, the `u`-th is bumped with probability
/// `alpha_{r+1} ... alpha_{r+u-1} (1 - alpha_{r+u})`; the mover reaches the
/// front past all of them with probability `alpha_{r+1} ... alpha_{r+l}`.
/// Branches of probability zero are not reported.
pub fn bump_paths<S: Scalar>(
    tau: &Multipermutation,
    alpha: &[S],
    j: usize,
) -> Result<Vec<BumpPath<S>>> {
    let b = tau.len();
    if j == 0 || j > b {
        return Err(Error::InvalidParameters(format!("start {j} outside 1..={b}")));
    }
    let mut out = Vec::new();
    let mut cur = tau.letters().to_vec();
    let label = cur[j - 1];
    explore(
        tau,
        alpha,
        j - 1,
        j - 1,
        label,
        &mut cur,
        &mut Vec::new(),
        S::one(),
        &mut out,
    )?;
    Ok(out)
}

/// Continues a path whose mover `label` sits at `pos`. After a bump
/// `cur[pos]` already holds the bumper's label; the vacated start keeps the
/// original mover's label, which is larger than every later mover's and so
/// never counts as smaller.
#[allow(clippy::too_many_arguments)]
fn explore<S: Scalar>(
    tau: &Multipermutation,
    alpha: &[S],
    start: usize,
    pos: usize,
    label: u32,
    cur: &mut Vec<u32>,
    bumps: &mut Vec<usize>,
    prob: S,
    out: &mut Vec<BumpPath<S>>,
) -> Result<()> {
    let right = cur[pos + 1..].iter().filter(|l| **l < label).count();
    let candidates: Vec<usize> = (0..pos).rev().filter(|&i| cur[i] < label).collect();
    let mut pass = prob;
    for (u, &cand) in candidates.iter().enumerate() {
        let k = right + u + 1;
        let a = alpha.get(k - 1).ok_or(Error::InsufficientAlphas {
            needed: k,
            got: alpha.len(),
        })?;
        let bump = pass.clone() * (S::one() - a.clone());
        if !S::is_negligible(&bump) {
            let displaced = cur[cand];
            cur[cand] = label;
            bumps.push(cand + 1);
            explore(tau, alpha, start, cand, displaced, cur, bumps, bump, out)?;
            bumps.pop();
            cur[cand] = displaced;
        }
        pass = pass * a.clone();
        if S::is_negligible(&pass) {
            return Ok(());
        }
    }
    finish(tau, start, pos, label, cur, bumps, pass, out);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish<S: Scalar>(
    tau: &Multipermutation,
    start: usize,
    pos: usize,
    label: u32,
    cur: &[u32],
    bumps: &[usize],
    prob: S,
    out: &mut Vec<BumpPath<S>>,
) {
    if S::is_negligible(&prob) {
        return;
    }
    let mut letters = Vec::with_capacity(cur.len());
    letters.push(label);
    letters.extend_from_slice(&cur[..start]);
    letters.extend_from_slice(&cur[start + 1..]);
    out.push(BumpPath {
        start: start + 1,
        bumps: bumps.to_vec(),
        last_jump: pos + 1,
        prob,
        result: Multipermutation::from_parts_unchecked(letters, tau.content().clone()),
    });
}

impl<S: Scalar> MarkovChain<S> for MrjmcChain<S> {
    type State = Multipermutation;

    /// `sum_j s_j` times the bump-path outcomes from position `j`.
    fn step_distribution(
        &self,
        tau: &Multipermutation,
    ) -> Result<TransitionKernel<Multipermutation, S>> {
        self.check(tau)?;
        let mut outcomes = Vec::new();
        for j in 1..=self.content.size() {
            let sj = self.s.get(j - 1);
            if S::is_negligible(sj) {
                continue;
            }
            for path in bump_paths(tau, &self.alpha, j)? {
                outcomes.push((path.result, sj.clone() * path.prob));
            }
        }
        Ok(TransitionKernel::from_outcomes(outcomes))
    }
}

impl<S: Scalar> FiniteChain<S> for MrjmcChain<S> {
    fn states(&self) -> Vec<Multipermutation> {
        enumerate_multipermutations(&self.content)
    }

    fn state_count(&self) -> usize {
        usize::try_from(self.content.multinomial()).unwrap_or(usize::MAX)
    }
}

impl<S: Scalar> StationaryLaw<S> for MrjmcChain<S> {
    /// `alpha^c(tau) / Z`; independent of `s`.
    fn stationary(&self, tau: &Multipermutation) -> Result<S> {
        Ok(self.weight(tau)? / self.partition())
    }
}

/// Grouped incoming weight, see [`MrjmcChain::refinement_index`].
#[derive(Debug, Clone)]
pub struct RefinementIndex<S> {
    chain: MrjmcChain<S>,
    groups: BTreeMap<(Multipermutation, usize, usize), S>,
}

impl<S: Scalar> RefinementIndex<S> {
    /// Incoming weight at `tau` from paths started at `t` whose final
    /// mover jumps from `r`.
    pub fn group(&self, tau: &Multipermutation, t: usize, r: usize) -> S {
        self.groups
            .get(&(tau.clone(), t, r))
            .cloned()
            .unwrap_or_else(S::zero)
    }

    /// Residuals of the per-start identity
    /// `sum_r group(tau, t, r) = s_t alpha^c(tau)` and of the per-`(t, r)`
    /// closed form.
    pub fn residuals(&self, tau: &Multipermutation, t: usize, r: usize) -> Result<RefineResiduals<S>> {
        let per_start = (1..=t).fold(S::zero(), |acc, k| acc + self.group(tau, t, k));
        let target = self.chain.s.get(t - 1).clone() * self.chain.weight(tau)?;
        let formula = self.chain.refinement_formula(tau, t, r)?;
        Ok(RefineResiduals {
            per_start: per_start - target,
            per_jump: self.group(tau, t, r) - formula,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineResiduals<S> {
    /// Summed over the jump position.
    pub per_start: S,
    /// A single `(t, r)` group against its closed form.
    pub per_jump: S,
}

impl<S: Scalar> RefineResiduals<S> {
    pub fn is_zero(&self) -> bool {
        S::is_negligible(&self.per_start) && S::is_negligible(&self.per_jump)
    }
}

/// Builds the index and evaluates both residuals at one `(tau, t, r)`.
pub fn verify_refine_lemmas<S: Scalar>(
    chain: &MrjmcChain<S>,
    tau: &Multipermutation,
    t: usize,
    r: usize,
) -> Result<RefineResiduals<S>> {
    chain.refinement_index()?.residuals(tau, t, r)
}

/// `Z_{p,q} = sum_{0 <= i_p <= ... <= i_1 <= q} alpha_1^{i_1} ... alpha_p^{i_p}`.
pub fn two_letter_partition<S: Scalar>(alpha: &[S], q: u32) -> S {
    // f[v] = weight of the chains q >= i_1 >= ... >= i_k = v
    let q = q as usize;
    let mut f = vec![S::zero(); q + 1];
    f[q] = S::one();
    for a in alpha {
        let mut suffix = S::zero();
        let mut next = vec![S::zero(); q + 1];
        for v in (0..=q).rev() {
            suffix = suffix + f[v].clone();
            next[v] = a.powu(v as u32) * suffix.clone();
        }
        f = next;
    }
    if alpha.is_empty() {
        return S::one();
    }
    f.into_iter().fold(S::zero(), |acc, v| acc + v)
}

/// One factor `Z_{b_1 + ... + b_{i-1}, b_i}` of the partition function.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionFactor<S> {
    pub label: usize,
    /// Balls with a smaller label.
    pub smaller: usize,
    pub count: u32,
    pub value: S,
}

/// `prod_{i=2}^{T} Z_{b_1 + ... + b_{i-1}, b_i}` with the factor for label
/// `i` evaluated at `alpha_1, ..., alpha_{b_1 + ... + b_{i-1}}`.
pub fn partition_factors<S: Scalar>(content: &Content, alpha: &[S]) -> Vec<PartitionFactor<S>> {
    let counts = content.counts();
    let mut smaller = counts[0] as usize;
    let mut out = Vec::new();
    for (i, &count) in counts.iter().enumerate().skip(1) {
        out.push(PartitionFactor {
            label: i + 1,
            smaller,
            count,
            value: two_letter_partition(&alpha[..smaller.min(alpha.len())], count),
        });
        smaller += count as usize;
    }
    out
}

pub fn partition<S: Scalar>(content: &Content, alpha: &[S]) -> S {
    partition_factors(content, alpha)
        .into_iter()
        .fold(S::one(), |acc, f| acc * f.value)
}

/// `sum_tau alpha^c(tau)` by enumeration.
pub fn partition_brute_force<S: Scalar>(content: &Content, alpha: &[S]) -> Result<S> {
    enumerate_multipermutations(content)
        .iter()
        .try_fold(S::zero(), |acc, tau| Ok(acc + alpha_weight(tau, alpha)?))
}

/// Gaussian multinomial `[b]_q! / ([b_1]_q! ... [b_T]_q!)` from
/// `[n]_q = 1 + q + ... + q^{n-1}`.
pub fn q_multinomial<S: Scalar>(content: &Content, q: &S) -> S {
    let q_int = |n: u32| (0..n).fold(S::zero(), |acc, k| acc + q.powu(k));
    let q_fact = |n: u32| (1..=n).fold(S::one(), |acc, k| acc * q_int(k));
    let denom = content
        .counts()
        .iter()
        .fold(S::one(), |acc, &c| acc * q_fact(c));
    q_fact(content.size() as u32) / denom
}

/// `prod_{k=1}^{T-1} (1 + alpha_1 + alpha_1 alpha_2 + ... + alpha_1 ... alpha_k)`,
/// the partition function over permutations of length `T`.
pub fn permutation_partition<S: Scalar>(alpha: &[S], t: usize) -> S {
    (1..t).fold(S::one(), |acc, k| {
        let mut term = S::one();
        let mut sum = S::one();
        for a in &alpha[..k] {
            term = term * a.clone();
            sum = sum + term.clone();
        }
        acc * sum
    })
}

/// For each label `i = 2, ..., T`: delete letters above `i`, write `i` as
/// 2 and every smaller letter as 1. `alpha^c` factors over the pieces.
pub fn phi_decompose(tau: &Multipermutation) -> Vec<Multipermutation> {
    let counts = tau.content().counts();
    let mut smaller = counts[0];
    let mut out = Vec::new();
    for (i, &count) in counts.iter().enumerate().skip(1) {
        let label = i as u32 + 1;
        let letters: Vec<u32> = tau
            .letters()
            .iter()
            .filter(|l| **l <= label)
            .map(|&l| if l == label { 2 } else { 1 })
            .collect();
        let content = Content::new(vec![smaller, count]).expect("label i occurs or smaller ones do");
        out.push(Multipermutation::from_parts_unchecked(letters, content));
        smaller += count;
    }
    out
}
