//! Brute-force ground truth for the closed forms: full transition matrices,
//! exact stationary solves, matrix powers and empirical occupancy.

mod modular;

pub(crate) use modular::is_prime;

use std::collections::BTreeMap;
use std::fmt::Display;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::kernel::{FiniteChain, MarkovChain};
use crate::numerics::{ProbVec, Rational, Scalar, SeededRng};

/// Default state cap for exact matrix work.
pub const EXACT_STATE_CAP: usize = 5000;
/// Default state cap for float matrix work.
pub const FLOAT_STATE_CAP: usize = 20000;
/// Max-entry residual at which float power iteration stops.
pub const POWER_TOLERANCE: f64 = 1e-14;
const POWER_MAX_ITERATIONS: usize = 200_000;

/// Transition matrix of a finite chain over its canonical state order.
///
/// Rows are stored sparsely as `(column, probability)` pairs with increasing
/// column; [`DenseKernel::dense_rows`] materializes the full matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseKernel<St, S> {
    states: Vec<St>,
    rows: Vec<Vec<(usize, S)>>,
}

impl<St: Clone + Ord + Display, S: Scalar> DenseKernel<St, S> {
    /// Builds a kernel from explicit dense rows.
    pub fn from_dense(states: Vec<St>, rows: Vec<Vec<S>>) -> Result<Self> {
        if rows.len() != states.len() || rows.iter().any(|r| r.len() != states.len()) {
            return Err(Error::IndexMismatch {
                left: states.len(),
                right: rows.len(),
            });
        }
        let rows = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .enumerate()
                    .filter(|(_, p)| !S::is_negligible(p))
                    .collect()
            })
            .collect();
        Ok(Self { states, rows })
    }

    pub fn states(&self) -> &[St] {
        &self.states
    }

    pub fn rows(&self) -> &[Vec<(usize, S)>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &St) -> Option<usize> {
        self.states.binary_search(state).ok()
    }

    pub fn entry(&self, i: usize, j: usize) -> S {
        self.rows[i]
            .binary_search_by_key(&j, |(c, _)| *c)
            .map(|k| self.rows[i][k].1.clone())
            .unwrap_or_else(|_| S::zero())
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn dense_rows(&self) -> Vec<Vec<S>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![S::zero(); self.len()];
                for (j, p) in row {
                    dense[*j] = p.clone();
                }
                dense
            })
            .collect()
    }

    pub fn rows_sum_to_one(&self) -> bool {
        self.rows.iter().all(|row| {
            let total = row.iter().fold(S::zero(), |acc, (_, p)| acc + p.clone());
            S::is_unit_sum(&total)
        })
    }

    /// `v M` for a dense row vector `v`.
    pub fn left_multiply(&self, v: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.len()];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (j, p) in &self.rows[i] {
                out[*j] = out[*j].clone() + vi.clone() * p.clone();
            }
        }
        out
    }

    /// Row-major CSV: a header of state labels, then one line per row led
    /// by its state label, entries in the scalar's text form.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let labels: Vec<String> = self.states.iter().map(ToString::to_string).collect();
        let mut header = vec!["state".to_string()];
        header.extend(labels.iter().cloned());
        w.write_record(&header).map_err(csv_error)?;
        for (label, row) in labels.iter().zip(self.dense_rows()) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(Scalar::to_text));
            w.write_record(&record).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// `M[i][j] = P(state_i -> state_j)` over the chain's canonical states.
pub fn build_matrix<S, C>(chain: &C, cap: usize) -> Result<DenseKernel<C::State, S>>
where
    S: Scalar,
    C: FiniteChain<S>,
{
    let count = chain.state_count();
    if count > cap {
        return Err(Error::StateSpaceTooLarge { states: count, cap });
    }
    let mut states = chain.states();
    states.sort();
    states.dedup();
    let mut rows = Vec::with_capacity(states.len());
    for s in &states {
        let kernel = chain.step_distribution(s)?;
        let mut row = Vec::with_capacity(kernel.len());
        for (t, p) in kernel.entries() {
            let j = states.binary_search(t).map_err(|_| {
                Error::InvalidState(format!("successor {t} of {s} is outside the state space"))
            })?;
            row.push((j, p.clone()));
        }
        row.sort_by_key(|(j, _)| *j);
        rows.push(row);
    }
    Ok(DenseKernel { states, rows })
}

/// Dense rows of `M^k`, each obtained by propagating a unit vector through
/// the sparse rows `k` times.
pub fn matrix_power<St, S>(m: &DenseKernel<St, S>, k: usize) -> Vec<Vec<S>>
where
    St: Clone + Ord + Display,
    S: Scalar,
{
    (0..m.len())
        .map(|i| {
            let mut v = vec![S::zero(); m.len()];
            v[i] = S::one();
            for _ in 0..k {
                v = m.left_multiply(&v);
            }
            v
        })
        .collect()
}

/// `A M` for dense rows `A`.
pub fn matrix_mul_sparse<St, S>(a: &[Vec<S>], m: &DenseKernel<St, S>) -> Vec<Vec<S>>
where
    St: Clone + Ord + Display,
    S: Scalar,
{
    a.iter().map(|row| m.left_multiply(row)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerCheck {
    /// `M^{k+1} = M^k`.
    pub idempotent: bool,
    /// All rows of `M^k` coincide.
    pub rows_equal: bool,
}

pub fn matrix_power_check<St, S>(m: &DenseKernel<St, S>, k: usize) -> PowerCheck
where
    St: Clone + Ord + Display,
    S: Scalar,
{
    let power = matrix_power(m, k);
    let next = matrix_mul_sparse(&power, m);
    PowerCheck {
        idempotent: power == next,
        rows_equal: power.windows(2).all(|w| w[0] == w[1]),
    }
}

/// `pi` with `pi M = pi` and `sum pi = 1`.
///
/// Exact scalars go through the multimodular solver and the result is
/// verified against `M` in rational arithmetic; floats use power iteration
/// on the lazy chain `(M + I) / 2`, which has the same stationary law and
/// no periodicity.
pub fn solve_stationary<St, S>(m: &DenseKernel<St, S>) -> Result<ProbVec<S>>
where
    St: Clone + Ord + Display,
    S: Scalar,
{
    if m.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if S::EXACT {
        let exact = rational_kernel(m);
        let pi = solve_rational(&exact)?;
        ProbVec::distribution(pi.iter().map(S::from_rational).collect())
    } else {
        power_iteration(m)
    }
}

fn rational_kernel<St: Clone, S: Scalar>(m: &DenseKernel<St, S>) -> DenseKernel<St, Rational> {
    DenseKernel {
        states: m.states.clone(),
        rows: m
            .rows
            .iter()
            .map(|row| row.iter().map(|(j, p)| (*j, p.to_rational())).collect())
            .collect(),
    }
}

/// The balance system `(M^T - I) pi = 0` with its last equation replaced
/// by `sum pi = 1`.
fn balance_system<St, S: Scalar>(m: &DenseKernel<St, S>) -> Vec<Vec<(usize, S)>> {
    let n = m.states.len();
    let mut cols: Vec<BTreeMap<usize, S>> = vec![BTreeMap::new(); n];
    for (i, row) in m.rows.iter().enumerate() {
        for (j, p) in row {
            cols[*j].insert(i, p.clone());
        }
    }
    let mut system = Vec::with_capacity(n);
    for (j, mut col) in cols.into_iter().enumerate() {
        if j + 1 == n {
            system.push((0..n).map(|i| (i, S::one())).collect());
            continue;
        }
        let diag = col.remove(&j).unwrap_or_else(S::zero) - S::one();
        col.insert(j, diag);
        system.push(col.into_iter().filter(|(_, v)| !v.is_zero()).collect());
    }
    system
}

fn is_stationary_exact<St>(m: &DenseKernel<St, Rational>, pi: &[Rational]) -> bool {
    if pi.iter().any(|p| p.is_negative()) {
        return false;
    }
    if !pi.iter().cloned().sum::<Rational>().is_one() {
        return false;
    }
    let mut image = vec![Rational::zero(); pi.len()];
    for (i, row) in m.rows.iter().enumerate() {
        if pi[i].is_zero() {
            continue;
        }
        for (j, p) in row {
            image[*j] += &pi[i] * p;
        }
    }
    image == pi
}

fn solve_rational<St>(m: &DenseKernel<St, Rational>) -> Result<Vec<Rational>> {
    let n = m.states.len();
    let system = balance_system(m);
    modular::solve_exact(&system, n - 1, |pi| is_stationary_exact(m, pi))
}

fn power_iteration<St, S>(m: &DenseKernel<St, S>) -> Result<ProbVec<S>>
where
    St: Clone + Ord + Display,
    S: Scalar,
{
    let n = m.len();
    let mut v: Vec<f64> = vec![1.0 / n as f64; n];
    let rows: Vec<Vec<(usize, f64)>> = m
        .rows
        .iter()
        .map(|r| r.iter().map(|(j, p)| (*j, p.to_f64())).collect())
        .collect();
    let apply = |v: &[f64]| {
        let mut out = vec![0.0; n];
        for (i, row) in rows.iter().enumerate() {
            for (j, p) in row {
                out[*j] += v[i] * p;
            }
        }
        out
    };
    let mut converged = false;
    for _ in 0..POWER_MAX_ITERATIONS {
        let image = apply(&v);
        let residual = image
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let total: f64 = image.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).sum();
        v = image
            .iter()
            .zip(&v)
            .map(|(a, b)| 0.5 * (a + b) / total)
            .collect();
        if residual < POWER_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("power iteration stopped after {POWER_MAX_ITERATIONS} iterations without reaching {POWER_TOLERANCE}");
    }
    ProbVec::distribution(v.iter().map(|p| S::from_rational(&p.to_rational())).collect())
}

/// Direct Gaussian elimination over `S` on the balance system. Exact
/// scalars pivot on the first nonzero entry, floats on the largest
/// magnitude. Cubic; intended for small systems and cross-checks.
pub fn solve_stationary_direct<St, S>(m: &DenseKernel<St, S>) -> Result<ProbVec<S>>
where
    St: Clone + Ord + Display,
    S: Scalar,
{
    let n = m.len();
    if n == 0 {
        return Err(Error::EmptyDistribution);
    }
    let mut a: Vec<Vec<S>> = balance_system(m)
        .into_iter()
        .map(|row| {
            let mut dense = vec![S::zero(); n + 1];
            for (j, v) in row {
                dense[j] = v;
            }
            dense
        })
        .collect();
    a[n - 1][n] = S::one();
    for col in 0..n {
        let piv = if S::EXACT {
            (col..n).find(|&r| !a[r][col].is_zero())
        } else {
            (col..n)
                .filter(|&r| !S::is_negligible(&a[r][col]))
                .max_by(|&x, &y| {
                    a[x][col]
                        .abs_value()
                        .partial_cmp(&a[y][col].abs_value())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
        }
        .ok_or(Error::SingularSystem)?;
        a.swap(piv, col);
        let inv = S::one() / a[col][col].clone();
        for j in col..=n {
            a[col][j] = a[col][j].clone() * inv.clone();
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in col..=n {
                let delta = f.clone() * a[col][j].clone();
                a[r][j] = a[r][j].clone() - delta;
            }
        }
    }
    let pi = a.into_iter().map(|row| row[n].clone()).collect();
    ProbVec::from_weights(pi)
}

/// Occupancy counts of a trajectory after burn-in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Empirical<St: Ord> {
    counts: BTreeMap<St, u64>,
    samples: u64,
}

impl<St: Ord + Clone> Empirical<St> {
    pub fn from_states<I: IntoIterator<Item = St>>(states: I) -> Self {
        let mut counts = BTreeMap::new();
        let mut samples = 0;
        for s in states {
            *counts.entry(s).or_insert(0) += 1;
            samples += 1;
        }
        Self { counts, samples }
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn counts(&self) -> &BTreeMap<St, u64> {
        &self.counts
    }

    pub fn count(&self, s: &St) -> u64 {
        self.counts.get(s).copied().unwrap_or(0)
    }

    pub fn frequency(&self, s: &St) -> f64 {
        self.count(s) as f64 / self.samples as f64
    }

    /// Visited states and their frequencies, in state order.
    pub fn distribution(&self) -> Result<(Vec<St>, ProbVec<f64>)> {
        let states: Vec<St> = self.counts.keys().cloned().collect();
        let freqs = states.iter().map(|s| self.frequency(s)).collect();
        Ok((states, ProbVec::distribution(freqs)?))
    }

    /// Total variation distance to `exact`, which lists the full support;
    /// unvisited support points and visited points outside it both count.
    pub fn tv_distance_to(&self, exact: &[(St, f64)]) -> f64 {
        let mut acc = 0.0;
        let mut seen = 0u64;
        for (s, p) in exact {
            let c = self.count(s);
            seen += c;
            acc += (c as f64 / self.samples as f64 - p).abs();
        }
        acc += (self.samples - seen) as f64 / self.samples as f64;
        0.5 * acc
    }
}

/// Runs `steps` transitions and counts the states at times
/// `burnin + 1, ..., steps`.
pub fn empirical_distribution<S, C>(
    chain: &C,
    initial: C::State,
    steps: usize,
    burnin: usize,
    rng: &mut SeededRng,
) -> Result<Empirical<C::State>>
where
    S: Scalar,
    C: MarkovChain<S>,
{
    if steps <= burnin {
        return Err(Error::InvalidParameters(format!(
            "steps ({steps}) must exceed burn-in ({burnin})"
        )));
    }
    let mut state = initial;
    let mut counts = BTreeMap::new();
    for t in 1..=steps {
        state = chain.step_distribution(&state)?.sample(rng)?;
        if t > burnin {
            *counts.entry(state.clone()).or_insert(0) += 1;
        }
    }
    Ok(Empirical {
        counts,
        samples: (steps - burnin) as u64,
    })
}
