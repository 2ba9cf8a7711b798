//! Random matrices over a prime field grown by prepending uniform columns,
//! and their two projections: the columns where the rank increases, and
//! those columns labelled by the row of their pivot under downward row
//! operations.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imrjmc::knutson_chain;
use crate::kernel::MarkovChain;
use crate::numerics::{format_rational, seeded_rng, Rational, Scalar, SeededRng};
use crate::states::{BallTuple, Content, LabeledConfig, Multipermutation};

/// Largest accepted |z| for every frequency comparison.
pub const SIGMA_TOLERANCE: f64 = 4.0;

/// Second-projection rows are compared only for states visited this often.
pub const MIN_VISITS: u64 = 200;

/// Cells with a smaller expected count are pooled per state.
pub const MIN_EXPECTED: f64 = 5.0;

/// Fewest prepends accepted by [`empirical_projection_check`].
pub const MIN_STEPS: usize = 10_000;

/// Arithmetic modulo a prime `q < 2^16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    q: u32,
}

impl PrimeField {
    pub fn new(q: u32) -> Result<Self> {
        if q >= 1 << 16 || !crate::oracle::is_prime(u64::from(q)) {
            return Err(Error::InvalidParameters(format!(
                "q = {q} is not a prime below 65536"
            )));
        }
        Ok(Self { q })
    }

    pub fn q(self) -> u32 {
        self.q
    }

    pub fn add(self, a: u32, b: u32) -> u32 {
        (a + b) % self.q
    }

    pub fn sub(self, a: u32, b: u32) -> u32 {
        (a + self.q - b) % self.q
    }

    pub fn mul(self, a: u32, b: u32) -> u32 {
        a * b % self.q
    }

    pub fn inv(self, a: u32) -> u32 {
        debug_assert!(a % self.q != 0);
        let (mut acc, mut base, mut exp) = (1, a % self.q, self.q - 2);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// `target -= f * v` entrywise.
    fn axpy(self, target: &mut [u32], f: u32, v: &[u32]) {
        for (t, &x) in target.iter_mut().zip(v) {
            *t = self.sub(*t, self.mul(f, x));
        }
    }
}

/// A `b`-row matrix stored as columns, newest first. Columns right of the
/// last rank increase are dropped once the rank is `b`: they can no longer
/// change either projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixState {
    field: PrimeField,
    b: usize,
    columns: VecDeque<Vec<u32>>,
}

impl MatrixState {
    /// The matrix with no columns.
    pub fn new(b: usize, q: u32) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidParameters("need at least one row".into()));
        }
        Ok(Self {
            field: PrimeField::new(q)?,
            b,
            columns: VecDeque::new(),
        })
    }

    /// Columns listed left to right.
    pub fn from_columns(b: usize, q: u32, columns: Vec<Vec<u32>>) -> Result<Self> {
        let mut state = Self::new(b, q)?;
        for c in columns.into_iter().rev() {
            state.prepend_column(c)?;
        }
        Ok(state)
    }

    /// The `b x b` identity: both projections are `(1, ..., b)`.
    pub fn identity(b: usize, q: u32) -> Result<Self> {
        let columns = (0..b)
            .map(|i| (0..b).map(|r| u32::from(r == i)).collect())
            .collect();
        Self::from_columns(b, q, columns)
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> impl Iterator<Item = &[u32]> {
        self.columns.iter().map(Vec::as_slice)
    }

    pub fn prepend_column(&mut self, column: Vec<u32>) -> Result<()> {
        if column.len() != self.b || column.iter().any(|&e| e >= self.field.q) {
            return Err(Error::InvalidParameters(format!(
                "column {column:?} is not in F_{}^{}",
                self.field.q, self.b
            )));
        }
        self.columns.push_front(column);
        self.truncate();
        Ok(())
    }

    /// Prepends a uniform column and returns it.
    pub fn prepend_random_column(&mut self, rng: &mut SeededRng) -> Vec<u32> {
        let column: Vec<u32> = (0..self.b).map(|_| rng.random_range(0..self.field.q)).collect();
        self.columns.push_front(column.clone());
        self.truncate();
        column
    }

    fn truncate(&mut self) {
        let n = self.rank_increase_positions();
        if n.len() == self.b {
            self.columns.truncate(n.last().unwrap_or(0) as usize);
        }
    }

    /// 1-based columns where the rank of the leading columns increases.
    pub fn rank_increase_positions(&self) -> BallTuple {
        // echelon basis keyed by the bottommost nonzero row
        let mut basis: Vec<Option<Vec<u32>>> = vec![None; self.b];
        let mut out = Vec::new();
        for (j, column) in self.columns.iter().enumerate() {
            let mut v = column.clone();
            loop {
                let Some(r) = v.iter().rposition(|&e| e != 0) else {
                    break;
                };
                match &basis[r] {
                    Some(u) => {
                        let f = self.field.mul(v[r], self.field.inv(u[r]));
                        self.field.axpy(&mut v, f, u);
                    }
                    None => {
                        basis[r] = Some(v);
                        out.push(j as u32 + 1);
                        break;
                    }
                }
            }
            if out.len() == self.b {
                break;
            }
        }
        BallTuple::new(out).expect("column indices increase")
    }

    /// Scans columns left to right, clearing the pivot rows chosen so far
    /// with the earlier pivot columns; a column with a nonzero remainder
    /// gets a ball labelled by its topmost nonzero row (1-based).
    pub fn pivot_labels(&self) -> PivotProfile {
        let mut pivots: Vec<(usize, Vec<u32>)> = Vec::new();
        let mut labels = Vec::new();
        let mut positions = Vec::new();
        for (j, column) in self.columns.iter().enumerate() {
            let mut v = column.clone();
            for (row, u) in &pivots {
                if v[*row] != 0 {
                    let f = self.field.mul(v[*row], self.field.inv(u[*row]));
                    self.field.axpy(&mut v, f, u);
                }
            }
            if let Some(top) = v.iter().position(|&e| e != 0) {
                labels.push(top as u32 + 1);
                positions.push(j as u32 + 1);
                pivots.push((top, v));
                if pivots.len() == self.b {
                    break;
                }
            }
        }
        PivotProfile {
            b: self.b,
            labels,
            positions: BallTuple::new(positions).expect("column indices increase"),
        }
    }
}

/// The second projection: pivot columns with the rows of their pivots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PivotProfile {
    b: usize,
    pub labels: Vec<u32>,
    pub positions: BallTuple,
}

impl PivotProfile {
    /// The labelled configuration, once the rank is `b`.
    pub fn config(&self) -> Option<LabeledConfig> {
        if self.labels.len() != self.b {
            return None;
        }
        let content = Content::new(vec![1; self.b]).ok()?;
        let tau = Multipermutation::new(self.labels.clone(), content).ok()?;
        Some(LabeledConfig {
            tau,
            n: self.positions.clone(),
        })
    }
}

/// `0` for a shift, `i` when ball `i` moves to the front, `None` otherwise.
pub fn classify_move(before: &BallTuple, after: &BallTuple) -> Option<usize> {
    if *after == before.shifted() {
        return Some(0);
    }
    (1..=before.len()).find(|&i| *after == before.jumped(i))
}

/// `1/q^b` for a shift and `1/q^{b-i} - 1/q^{b-i+1}` when ball `i` jumps.
pub fn move_probability(b: usize, q: u32, class: usize) -> Rational {
    let q_inv = Rational::from_ratio(1, i64::from(q));
    if class == 0 {
        q_inv.powu(b as u32)
    } else {
        let hi = q_inv.powu((b - class) as u32);
        hi.clone() - hi * q_inv
    }
}

/// Binomial z-score of `observed` successes in `trials` at probability `p`.
pub fn binomial_z(observed: u64, trials: u64, p: f64) -> f64 {
    let n = trials as f64;
    let var = n * p * (1.0 - p);
    let diff = observed as f64 - n * p;
    if var == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / var.sqrt()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FrequencyCheck {
    pub name: String,
    pub observed: u64,
    pub trials: u64,
    /// Exact value as `p/q`.
    pub expected: String,
    pub expected_value: f64,
    pub z: f64,
}

impl FrequencyCheck {
    fn new(name: String, observed: u64, trials: u64, expected: &Rational) -> Self {
        let p = expected.to_f64();
        Self {
            name,
            observed,
            trials,
            expected: format_rational(expected),
            expected_value: p,
            z: binomial_z(observed, trials, p),
        }
    }

    pub fn passed(&self) -> bool {
        self.z.abs() <= SIGMA_TOLERANCE
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    pub b: usize,
    pub q: u32,
    pub steps: usize,
    pub seed: u64,
    /// Shift first, then one entry per jumping ball.
    pub first_projection: Vec<FrequencyCheck>,
    /// The move out of `1324@(1,2,4,5)` to `1342@(1,2,3,5)`, present for
    /// `b = 4`.
    pub example_bump: Option<FrequencyCheck>,
    /// Labelled states visited at least [`MIN_VISITS`] times.
    pub compared_states: usize,
    /// One entry per transition with enough expected count, plus one pooled
    /// entry per state for the rest.
    pub second_projection: Vec<FrequencyCheck>,
    /// Observed moves that the labelled kernel gives probability zero.
    pub impossible_moves: u64,
    pub max_abs_z: f64,
}

impl ProjectionReport {
    pub fn checks(&self) -> impl Iterator<Item = &FrequencyCheck> {
        self.first_projection
            .iter()
            .chain(&self.example_bump)
            .chain(&self.second_projection)
    }

    pub fn passed(&self) -> bool {
        self.impossible_moves == 0 && self.checks().all(FrequencyCheck::passed)
    }
}

fn worked_bump() -> (LabeledConfig, LabeledConfig) {
    (
        "1324@(1,2,4,5)".parse().expect("valid configuration"),
        "1342@(1,2,3,5)".parse().expect("valid configuration"),
    )
}

/// Runs `steps` prepends from the identity matrix and compares both
/// projections with their kernels: move classes against
/// [`move_probability`], labelled moves against the labelled half-line
/// chain with the `q` parameters of [`knutson_chain`].
pub fn empirical_projection_check(
    b: usize,
    q: u32,
    steps: usize,
    seed: u64,
) -> Result<ProjectionReport> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidParameters(format!(
            "need at least {MIN_STEPS} steps, got {steps}"
        )));
    }
    let mut state = MatrixState::identity(b, q)?;
    let mut rng = seeded_rng(seed);
    let mut classes = vec![0u64; b + 1];
    let mut rows: BTreeMap<LabeledConfig, BTreeMap<LabeledConfig, u64>> = BTreeMap::new();
    let mut current = state.pivot_labels().config().expect("identity has full rank");
    for _ in 0..steps {
        state.prepend_random_column(&mut rng);
        let next = state.pivot_labels().config().expect("rank stays full");
        let class = classify_move(&current.n, &next.n)
            .expect("a prepend at full rank shifts or moves one ball to the front");
        classes[class] += 1;
        *rows
            .entry(current)
            .or_default()
            .entry(next.clone())
            .or_insert(0) += 1;
        current = next;
    }

    let trials = steps as u64;
    let first_projection = classes
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let name = if i == 0 {
                "shift".to_string()
            } else {
                format!("ball {i} jumps")
            };
            FrequencyCheck::new(name, count, trials, &move_probability(b, q, i))
        })
        .collect();

    let chain = knutson_chain::<Rational>(q, b)?;
    let example_bump = if b == 4 {
        let (from, to) = worked_bump();
        let row = rows.get(&from);
        let visits = row.map_or(0, |r| r.values().sum());
        let hits = row.and_then(|r| r.get(&to)).copied().unwrap_or(0);
        let p = chain.step_distribution(&from)?.prob(&to);
        Some(FrequencyCheck::new(format!("{from} -> {to}"), hits, visits, &p))
    } else {
        None
    };

    let mut second_projection = Vec::new();
    let mut impossible_moves = 0;
    let mut compared_states = 0;
    for (from, row) in &rows {
        let visits: u64 = row.values().sum();
        if visits < MIN_VISITS {
            continue;
        }
        compared_states += 1;
        let kernel = chain.step_distribution(from)?;
        for (to, &count) in row {
            if kernel.prob(to) == Rational::from_int(0) {
                impossible_moves += count;
            }
        }
        let mut pooled_p = Rational::from_int(0);
        let mut pooled_count = 0;
        for (to, p) in kernel.entries() {
            let count = row.get(to).copied().unwrap_or(0);
            if visits as f64 * p.to_f64() < MIN_EXPECTED {
                pooled_p = pooled_p + p.clone();
                pooled_count += count;
            } else {
                second_projection.push(FrequencyCheck::new(
                    format!("{from} -> {to}"),
                    count,
                    visits,
                    p,
                ));
            }
        }
        if visits as f64 * pooled_p.to_f64() >= MIN_EXPECTED {
            second_projection.push(FrequencyCheck::new(
                format!("{from} -> rare moves"),
                pooled_count,
                visits,
                &pooled_p,
            ));
        }
    }

    let mut report = ProjectionReport {
        b,
        q,
        steps,
        seed,
        first_projection,
        example_bump,
        compared_states,
        second_projection,
        impossible_moves,
        max_abs_z: 0.0,
    };
    report.max_abs_z = report.checks().map(|c| c.z.abs()).fold(0.0, f64::max);
    Ok(report)
}
