//! Finite single-species reverse juggling chain on words of length `m` with
//! at most `b` ones, its enriched shift-register chain and the lumping map
//! between them.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kernel::{FiniteChain, MarkovChain, StationaryLaw, TransitionKernel};
use crate::numerics::{prefix_sums, PrefixSums, ProbVec, Scalar};
use crate::oracle;
use crate::states::{enumerate_binary_words, ones_positions, BinaryWord, EnrichedWord};

/// Default cap on the number of states for exact matrix checks.
pub const DEFAULT_STATE_CAP: usize = 5000;

#[derive(Debug, Clone)]
pub struct RjmcChain<S> {
    m: usize,
    b: usize,
    x: ProbVec<S>,
    sums: PrefixSums<S>,
}

impl<S: Scalar> RjmcChain<S> {
    /// `x = (x_0, ..., x_b)`: `x_0` is the pure shift, `x_i` the jump of the
    /// `i`-th one.
    pub fn new(m: usize, b: usize, x: Vec<S>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameters("m must be at least 1".into()));
        }
        if b > m {
            return Err(Error::InvalidParameters(format!("b = {b} exceeds m = {m}")));
        }
        if x.len() != b + 1 {
            return Err(Error::InvalidParameters(format!(
                "expected {} jump probabilities, got {}",
                b + 1,
                x.len()
            )));
        }
        let x = ProbVec::distribution(x)?;
        let sums = prefix_sums(&x)?;
        Ok(Self { m, b, x, sums })
    }

    pub fn m(&self) -> usize {
        self.m
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

    pub fn contains(&self, w: &BinaryWord) -> bool {
        w.len() == self.m && w.ones() <= self.b
    }

    fn check(&self, w: &BinaryWord) -> Result<()> {
        if self.contains(w) {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "{w} is not a length-{} word with at most {} ones",
                self.m, self.b
            )))
        }
    }

    fn word_unnormalized(&self, w: &BinaryWord) -> S {
        let n = ones_positions(w);
        let k = n.len();
        let mut acc = S::one();
        for i in 0..k {
            acc = acc * self.sums.zbar(i).clone();
        }
        let mut prev = 0u32;
        for (i, &p) in n.positions().iter().enumerate() {
            acc = acc * self.sums.z(i).powu(p - prev - 1);
            prev = p;
        }
        acc * self.sums.z(k).powu(self.m as u32 + 1 - prev - 1)
    }

    /// Checks `pi(v') + pi(v'') = pi(v) / z_0` for `v = (0, v_2, ..., v_m)`,
    /// `v' = (v_2, ..., v_m, 0)`, `v'' = (v_2, ..., v_m, 1)`. The term
    /// `pi(v'')` is dropped when `v''` has more than `b` ones.
    pub fn sum_pair_identity(&self, v: &BinaryWord) -> Result<SumPairCheck<S>> {
        self.check(v)?;
        if v.bits()[0] != 0 {
            return Err(Error::InvalidState(format!("{v} does not start with 0")));
        }
        if S::is_negligible(self.sums.z(0)) {
            return Err(Error::DegenerateParameters("x_0 = 0".into()));
        }
        let tail = &v.bits()[1..];
        let mut with_zero = tail.to_vec();
        with_zero.push(0);
        let mut with_one = tail.to_vec();
        with_one.push(1);
        let v0 = BinaryWord::new(with_zero)?;
        let v1 = BinaryWord::new(with_one)?;
        let mut lhs = self.word_unnormalized(&v0);
        let extension_included = self.contains(&v1);
        if extension_included {
            lhs = lhs + self.word_unnormalized(&v1);
        }
        let rhs = self.word_unnormalized(v) / self.sums.z(0).clone();
        Ok(SumPairCheck {
            lhs,
            rhs,
            extension_included,
        })
    }

    /// Symbol `t` in `1..=b+1` enters on the left; the last symbol leaves.
    pub fn enriched_step(&self, t: u32, word: &EnrichedWord) -> Result<EnrichedWord> {
        if t == 0 || t as usize > self.b + 1 {
            return Err(Error::InvalidState(format!(
                "symbol {t} outside 1..={}",
                self.b + 1
            )));
        }
        let mut symbols = Vec::with_capacity(word.len());
        symbols.push(t);
        symbols.extend_from_slice(&word.symbols()[..word.len().saturating_sub(1)]);
        Ok(EnrichedWord::from_unchecked(symbols))
    }

    /// `prod_i x_{tau_i - 1}`.
    pub fn enriched_stationary(&self, word: &EnrichedWord) -> S {
        word.symbols()
            .iter()
            .fold(S::one(), |acc, &t| acc * self.x.get(t as usize - 1).clone())
    }

    /// The enriched chain on words over `{1, ..., b+1}`.
    pub fn enriched(&self) -> EnrichedChain<'_, S> {
        EnrichedChain { base: self }
    }

    /// Exact check that `M^{m+1} = M^m` and that every row of `M^m`
    /// equals the closed-form stationary vector.
    pub fn verify_ultrafast(&self, cap: usize) -> Result<UltrafastReport> {
        let matrix = oracle::build_matrix(self, cap)?;
        let power = oracle::matrix_power(&matrix, self.m);
        let next = oracle::matrix_mul_sparse(&power, &matrix);
        let idempotent = power == next;
        let rows_equal = power.windows(2).all(|w| w[0] == w[1]);
        let formula: Vec<S> = matrix
            .states()
            .iter()
            .map(|w| self.word_unnormalized(w))
            .collect();
        let rows_match_stationary = power.iter().all(|row| *row == formula);
        Ok(UltrafastReport {
            states: matrix.len(),
            steps: self.m,
            idempotent,
            rows_equal,
            rows_match_stationary,
        })
    }

    /// Exact check of the lumping `phi`: pushing the enriched kernel of
    /// every enriched word through `phi` must give the kernel row of its
    /// image, and pushing `Pi` forward must give `pi`.
    pub fn verify_lumping(&self, cap: usize) -> Result<LumpingReport<S>> {
        let enriched = self.enriched();
        let count = (self.b + 1).checked_pow(self.m as u32).unwrap_or(usize::MAX);
        if count > cap {
            return Err(Error::StateSpaceTooLarge { states: count, cap });
        }
        let mut kernel_residual = S::zero();
        let mut pushforward: BTreeMap<BinaryWord, S> = BTreeMap::new();
        for tau in enriched.states() {
            let image = lump(&tau);
            let lumped_row = TransitionKernel::from_outcomes(
                enriched
                    .step_distribution(&tau)?
                    .entries()
                    .iter()
                    .map(|(t, p)| (lump(t), p.clone())),
            );
            let row = self.step_distribution(&image)?;
            kernel_residual = kernel_residual + kernel_distance(&lumped_row, &row);
            let w = self.enriched_stationary(&tau);
            let slot = pushforward.entry(image).or_insert_with(S::zero);
            *slot = slot.clone() + w;
        }
        let states = self.states();
        let mut stationary_residual = S::zero();
        for w in &states {
            let pushed = pushforward.remove(w).unwrap_or_else(S::zero);
            stationary_residual =
                stationary_residual + (pushed - self.word_unnormalized(w)).abs_value();
        }
        // anything left was pushed onto a word outside the state space
        for (_, p) in pushforward {
            stationary_residual = stationary_residual + p;
        }
        Ok(LumpingReport {
            enriched_states: count,
            states: states.len(),
            kernel_residual,
            stationary_residual,
        })
    }
}

fn kernel_distance<St: Ord + Clone, S: Scalar>(
    a: &TransitionKernel<St, S>,
    b: &TransitionKernel<St, S>,
) -> S {
    let mut acc = S::zero();
    for (s, p) in a.entries() {
        acc = acc + (p.clone() - b.prob(s)).abs_value();
    }
    for (s, p) in b.entries() {
        if a.prob(s) == S::zero() {
            acc = acc + p.clone();
        }
    }
    acc
}

impl<S: Scalar> MarkovChain<S> for RjmcChain<S> {
    type State = BinaryWord;

    /// Only the first `m - 1` letters matter: the last one is shifted out.
    fn step_distribution(&self, w: &BinaryWord) -> Result<TransitionKernel<BinaryWord, S>> {
        self.check(w)?;
        let head = &w.bits()[..self.m - 1];
        let ell = head.iter().filter(|b| **b == 1).count();
        let prepend = |first: u8, body: &[u8]| {
            let mut bits = Vec::with_capacity(self.m);
            bits.push(first);
            bits.extend_from_slice(body);
            BinaryWord::new(bits).expect("bits are 0/1")
        };
        let mut outcomes = Vec::with_capacity(ell + 2);
        outcomes.push((prepend(0, head), self.x.get(0).clone()));
        let ones: Vec<usize> = head
            .iter()
            .enumerate()
            .filter(|(_, b)| **b == 1)
            .map(|(i, _)| i)
            .collect();
        for (i, &pos) in ones.iter().enumerate() {
            let mut body = head.to_vec();
            body[pos] = 0;
            outcomes.push((prepend(1, &body), self.x.get(i + 1).clone()));
        }
        if ell < self.b {
            let rest = self.x.weights()[ell + 1..]
                .iter()
                .fold(S::zero(), |acc, p| acc + p.clone());
            outcomes.push((prepend(1, head), rest));
        }
        Ok(TransitionKernel::from_outcomes(outcomes))
    }
}

impl<S: Scalar> FiniteChain<S> for RjmcChain<S> {
    fn states(&self) -> Vec<BinaryWord> {
        enumerate_binary_words(self.m, self.b).expect("b <= m checked at construction")
    }
}

impl<S: Scalar> StationaryLaw<S> for RjmcChain<S> {
    /// `prod_{i<k} zbar_i prod_{i<=k} z_i^{n_{i+1} - n_i - 1}` with
    /// `n_0 = 0`, `n_{k+1} = m + 1`. Normalized as it stands.
    fn stationary(&self, w: &BinaryWord) -> Result<S> {
        self.check(w)?;
        Ok(self.word_unnormalized(w))
    }
}

/// The enriched chain: prepend symbol `t` with probability `x_{t-1}`.
#[derive(Debug, Clone, Copy)]
pub struct EnrichedChain<'a, S> {
    base: &'a RjmcChain<S>,
}

impl<S: Scalar> MarkovChain<S> for EnrichedChain<'_, S> {
    type State = EnrichedWord;

    fn step_distribution(
        &self,
        word: &EnrichedWord,
    ) -> Result<TransitionKernel<EnrichedWord, S>> {
        let outcomes = (1..=self.base.b as u32 + 1)
            .map(|t| {
                Ok((
                    self.base.enriched_step(t, word)?,
                    self.base.x.get(t as usize - 1).clone(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TransitionKernel::from_outcomes(outcomes))
    }
}

impl<S: Scalar> FiniteChain<S> for EnrichedChain<'_, S> {
    fn states(&self) -> Vec<EnrichedWord> {
        let alphabet = self.base.b as u32 + 1;
        let mut out = Vec::new();
        let mut cur = vec![1u32; self.base.m];
        loop {
            out.push(EnrichedWord::from_unchecked(cur.clone()));
            // odometer increment from the right
            let mut i = cur.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < alphabet {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 1;
            }
        }
    }
}

impl<S: Scalar> StationaryLaw<S> for EnrichedChain<'_, S> {
    fn stationary(&self, word: &EnrichedWord) -> Result<S> {
        Ok(self.base.enriched_stationary(word))
    }
}

/// The lumping map: `phi(t, rest) = S_t(1, phi(rest))`, `phi(empty) = empty`,
/// where `S_i` zeroes the `i`-th one from the left when there is one.
pub fn lump(word: &EnrichedWord) -> BinaryWord {
    let mut bits: Vec<u8> = Vec::with_capacity(word.len());
    for &t in word.symbols().iter().rev() {
        bits.insert(0, 1);
        if let Some(pos) = bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b == 1)
            .nth(t as usize - 1)
            .map(|(i, _)| i)
        {
            bits[pos] = 0;
        }
    }
    BinaryWord::new(bits).expect("bits are 0/1")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumPairCheck<S> {
    /// `pi(v') + pi(v'')`.
    pub lhs: S,
    /// `pi(v) / z_0`.
    pub rhs: S,
    /// Whether `v''` lies in the state space.
    pub extension_included: bool,
}

impl<S: Scalar> SumPairCheck<S> {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UltrafastReport {
    pub states: usize,
    pub steps: usize,
    /// `M^{m+1} = M^m`.
    pub idempotent: bool,
    /// All rows of `M^m` coincide.
    pub rows_equal: bool,
    /// Every row of `M^m` is the closed-form stationary vector.
    pub rows_match_stationary: bool,
}

impl UltrafastReport {
    /// Idempotence at `m` with identical rows forces the spectrum to be `1`
    /// (simple) and `0`.
    pub fn passed(&self) -> bool {
        self.idempotent && self.rows_equal && self.rows_match_stationary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LumpingReport<S> {
    pub enriched_states: usize,
    pub states: usize,
    /// `sum |M_enriched Phi - Phi M|` over all entries.
    pub kernel_residual: S,
    /// `sum |Pi Phi - pi|`.
    pub stationary_residual: S,
}

impl<S: Scalar> LumpingReport<S> {
    pub fn passed(&self) -> bool {
        S::is_negligible(&self.kernel_residual) && S::is_negligible(&self.stationary_residual)
    }
}
