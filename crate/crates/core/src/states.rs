//! State representations for the four chains and the combinatorial
//! statistics their stationary laws are written in.
//!
//! Positions and letters are 1-indexed throughout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// A length-`m` 0/1 word; a state of the finite single-species chain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BinaryWord(Vec<u8>);

impl BinaryWord {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|b| **b > 1) {
            return Err(Error::InvalidState(format!("bit {b} is not 0 or 1")));
        }
        Ok(Self(bits))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0; m])
    }

    /// The length-`m` word with ones exactly at `positions`.
    pub fn from_positions(m: usize, positions: &BallTuple) -> Result<Self> {
        let mut bits = vec![0u8; m];
        for &p in positions.positions() {
            if p as usize > m {
                return Err(Error::InvalidState(format!(
                    "position {p} outside a word of length {m}"
                )));
            }
            bits[p as usize - 1] = 1;
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|b| **b == 1).count()
    }
}

impl fmt::Display for BinaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for BinaryWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Parse(format!("{c:?} is not a bit"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self(bits))
    }
}

/// Strictly increasing positive ball positions `(n_1, ..., n_b)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BallTuple(Vec<u32>);

impl BallTuple {
    pub fn new(positions: Vec<u32>) -> Result<Self> {
        if positions.first() == Some(&0) {
            return Err(Error::InvalidState("positions start at 1".into()));
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidState(format!(
                "positions {positions:?} are not strictly increasing"
            )));
        }
        Ok(Self(positions))
    }

    /// `(1, 2, ..., b)`.
    pub fn packed(b: usize) -> Self {
        Self((1..=b as u32).collect())
    }

    pub fn positions(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<u32> {
        self.0.last().copied()
    }

    /// Everything moved one step right.
    pub fn shifted(&self) -> Self {
        Self(self.0.iter().map(|n| n + 1).collect())
    }

    /// Ball `i` (1-indexed) jumps to the front; the others shift right.
    pub fn jumped(&self, i: usize) -> Self {
        let mut out = Vec::with_capacity(self.0.len());
        out.push(1);
        out.extend(
            self.0
                .iter()
                .enumerate()
                .filter(|(k, _)| k + 1 != i)
                .map(|(_, n)| n + 1),
        );
        Self(out)
    }

    /// Gaps `n_k - n_{k-1} - 1` with `n_0 = 0`.
    pub fn gaps(&self) -> Vec<u32> {
        let mut prev = 0;
        self.0
            .iter()
            .map(|&n| {
                let g = n - prev - 1;
                prev = n;
                g
            })
            .collect()
    }
}

impl fmt::Display for BallTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for BallTuple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .trim();
        if inner.is_empty() {
            return Ok(Self(Vec::new()));
        }
        let positions = inner
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad position {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(positions)
    }
}

/// Ball counts `(b_1, ..., b_T)` of each label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Content(Vec<u32>);

impl Content {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() || counts.iter().all(|c| *c == 0) {
            return Err(Error::InvalidParameters("empty content".into()));
        }
        Ok(Self(counts))
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    /// Number of label values `T`.
    pub fn labels(&self) -> usize {
        self.0.len()
    }

    /// Total number of balls `b`.
    pub fn size(&self) -> usize {
        self.0.iter().map(|c| *c as usize).sum()
    }

    /// `b - b_T`, the number of non-bump probabilities.
    pub fn alpha_len(&self) -> usize {
        self.size() - *self.0.last().unwrap() as usize
    }

    /// The sorted arrangement `1^{b_1} 2^{b_2} ... T^{b_T}`.
    pub fn sorted_letters(&self) -> Vec<u32> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i as u32 + 1, c as usize))
            .collect()
    }

    /// Multinomial coefficient `b! / (b_1! ... b_T!)`, saturating.
    pub fn multinomial(&self) -> u128 {
        let mut acc: u128 = 1;
        let mut n: u128 = 0;
        for &c in &self.0 {
            for k in 1..=c as u128 {
                n += 1;
                acc = acc.saturating_mul(n) / k;
            }
        }
        acc
    }

    /// Counts from `"1,1,1"`.
    pub fn parse(text: &str) -> Result<Self> {
        let counts = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad count {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(counts)
    }
}

impl fmt::Display for Content {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// An arrangement of the multiset `{1^{b_1}, ..., T^{b_T}}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Multipermutation {
    letters: Vec<u32>,
    content: Content,
}

impl Multipermutation {
    pub fn new(letters: Vec<u32>, content: Content) -> Result<Self> {
        let t = content.labels() as u32;
        if let Some(l) = letters.iter().find(|l| **l == 0 || **l > t) {
            return Err(Error::InvalidState(format!("letter {l} outside 1..={t}")));
        }
        for (i, &want) in content.counts().iter().enumerate() {
            let got = letters.iter().filter(|l| **l == i as u32 + 1).count();
            if got != want as usize {
                return Err(Error::InvalidState(format!(
                    "letter {} occurs {got} times, content wants {want}",
                    i + 1
                )));
            }
        }
        Ok(Self { letters, content })
    }

    /// Infers the content from the letters, with `T` the largest letter.
    pub fn from_letters(letters: Vec<u32>) -> Result<Self> {
        let t = letters.iter().copied().max().unwrap_or(0);
        if t == 0 {
            return Err(Error::InvalidState("empty or zero letters".into()));
        }
        let mut counts = vec![0u32; t as usize];
        for &l in &letters {
            counts[l as usize - 1] += 1;
        }
        Self::new(letters, Content::new(counts)?)
    }

    pub fn sorted(content: &Content) -> Self {
        Self {
            letters: content.sorted_letters(),
            content: content.clone(),
        }
    }

    pub(crate) fn from_parts_unchecked(letters: Vec<u32>, content: Content) -> Self {
        Self { letters, content }
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn content(&self) -> &Content {
        &self.content
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.letters.windows(2).all(|w| w[0] <= w[1])
    }
}

impl fmt::Display for Multipermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.content.labels() <= 9 { "" } else { "," };
        let parts: Vec<String> = self.letters.iter().map(u32::to_string).collect();
        write!(f, "{}", parts.join(sep))
    }
}

impl FromStr for Multipermutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let letters = if s.contains(',') {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::Parse(format!("bad letter {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .ok_or_else(|| Error::Parse(format!("bad letter {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Self::from_letters(letters)
    }
}

/// A labelled ball configuration `(tau, n)`: ball `tau_j` sits at `n_j`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabeledConfig {
    pub tau: Multipermutation,
    pub n: BallTuple,
}

impl LabeledConfig {
    pub fn new(tau: Multipermutation, n: BallTuple) -> Result<Self> {
        if tau.len() != n.len() {
            return Err(Error::InvalidState(format!(
                "{} labels for {} positions",
                tau.len(),
                n.len()
            )));
        }
        Ok(Self { tau, n })
    }
}

impl fmt::Display for LabeledConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.tau, self.n)
    }
}

impl FromStr for LabeledConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tau, n) = s
            .split_once('@')
            .ok_or_else(|| Error::Parse(format!("expected tau@(n...) in {s:?}")))?;
        Self::new(tau.parse()?, n.parse()?)
    }
}

/// A word over `{1, ..., b+1}`; a state of the enriched chain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EnrichedWord(Vec<u32>);

impl EnrichedWord {
    pub fn new(symbols: Vec<u32>, b: usize) -> Result<Self> {
        if let Some(s) = symbols.iter().find(|s| **s == 0 || **s as usize > b + 1) {
            return Err(Error::InvalidState(format!("symbol {s} outside 1..={}", b + 1)));
        }
        Ok(Self(symbols))
    }

    pub fn symbols(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn from_unchecked(symbols: Vec<u32>) -> Self {
        Self(symbols)
    }
}

impl fmt::Display for EnrichedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// All words of length `m` with at most `b` ones, lexicographically.
pub fn enumerate_binary_words(m: usize, b: usize) -> Result<Vec<BinaryWord>> {
    if b > m {
        return Err(Error::InvalidParameters(format!("b = {b} exceeds m = {m}")));
    }
    fn go(prefix: &mut Vec<u8>, m: usize, budget: usize, out: &mut Vec<BinaryWord>) {
        if prefix.len() == m {
            out.push(BinaryWord(prefix.clone()));
            return;
        }
        prefix.push(0);
        go(prefix, m, budget, out);
        prefix.pop();
        if budget > 0 {
            prefix.push(1);
            go(prefix, m, budget - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(m), m, b, &mut out);
    Ok(out)
}

/// Increasing 1-indexed positions of the ones.
pub fn ones_positions(w: &BinaryWord) -> BallTuple {
    BallTuple(
        w.0.iter()
            .enumerate()
            .filter(|(_, b)| **b == 1)
            .map(|(i, _)| i as u32 + 1)
            .collect(),
    )
}

/// Lehmer code: `c_i = #{k > i : tau_i > tau_k}`.
pub fn code(tau: &Multipermutation) -> Vec<u32> {
    let l = &tau.letters;
    (0..l.len())
        .map(|i| l[i + 1..].iter().filter(|x| **x < l[i]).count() as u32)
        .collect()
}

/// `prod_i (alpha_1 alpha_2 ... alpha_{c_i})`.
pub fn alpha_weight<S: Scalar>(tau: &Multipermutation, alpha: &[S]) -> Result<S> {
    let c = code(tau);
    let needed = c.iter().copied().max().unwrap_or(0) as usize;
    if needed > alpha.len() {
        return Err(Error::InsufficientAlphas {
            needed,
            got: alpha.len(),
        });
    }
    // exponent of alpha_j is #{i : c_i >= j}
    let mut acc = S::one();
    for (j, a) in alpha.iter().enumerate().take(needed) {
        let e = c.iter().filter(|ci| **ci as usize > j).count() as u32;
        acc = acc * a.powu(e);
    }
    Ok(acc)
}

/// Exponents `e_j` with `alpha^c(tau) = prod_j alpha_j^{e_j}`.
pub fn alpha_exponents(tau: &Multipermutation) -> Vec<u32> {
    let c = code(tau);
    let top = c.iter().copied().max().unwrap_or(0) as usize;
    (0..top)
        .map(|j| c.iter().filter(|ci| **ci as usize > j).count() as u32)
        .collect()
}

/// Number of pairs `i < j` with `tau_i > tau_j`.
pub fn inversions(tau: &Multipermutation) -> u64 {
    let l = &tau.letters;
    let mut count = 0u64;
    for i in 0..l.len() {
        for j in i + 1..l.len() {
            if l[i] > l[j] {
                count += 1;
            }
        }
    }
    count
}

/// Pairs `i < j` with `w_i = 0` and `w_j = 1`.
pub fn l_statistic_word(w: &BinaryWord) -> u64 {
    let mut zeros_seen = 0u64;
    let mut count = 0u64;
    for b in &w.0 {
        if *b == 0 {
            zeros_seen += 1;
        } else {
            count += zeros_seen;
        }
    }
    count
}

/// `sum_k (n_k - k)`: total displacement from the packed configuration.
pub fn displacement(n: &BallTuple) -> u64 {
    n.0.iter()
        .enumerate()
        .map(|(k, &p)| (p as u64) - (k as u64 + 1))
        .sum()
}

/// `inv(tau) + sum_i (n_i - i)`.
pub fn l_statistic_labeled(c: &LabeledConfig) -> u64 {
    inversions(&c.tau) + displacement(&c.n)
}

/// All distinct arrangements of `content`, lexicographically.
pub fn enumerate_multipermutations(content: &Content) -> Vec<Multipermutation> {
    let mut letters = content.sorted_letters();
    let mut out = vec![Multipermutation::from_parts_unchecked(
        letters.clone(),
        content.clone(),
    )];
    while next_permutation(&mut letters) {
        out.push(Multipermutation::from_parts_unchecked(
            letters.clone(),
            content.clone(),
        ));
    }
    out
}

fn next_permutation(v: &mut [u32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// All `k`-subsets of `{1, ..., max}` as ball tuples, lexicographically.
pub fn enumerate_ball_tuples(k: usize, max: u32) -> Vec<BallTuple> {
    fn go(start: u32, max: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<BallTuple>) {
        if cur.len() == k {
            out.push(BallTuple(cur.clone()));
            return;
        }
        let remaining = (k - cur.len()) as u32;
        let mut p = start;
        while p + remaining - 1 <= max {
            cur.push(p);
            go(p + 1, max, k, cur, out);
            cur.pop();
            p += 1;
        }
    }
    let mut out = Vec::new();
    go(1, max, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Compositions of `b` into positive parts: every content of size `b`
/// with no unused label.
pub fn compositions(b: usize) -> Vec<Vec<u32>> {
    if b == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=b {
        for mut rest in compositions(b - first) {
            rest.insert(0, first as u32);
            out.push(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rational;

    fn mp(s: &str) -> Multipermutation {
        s.parse().unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn binary_word_counts() {
        assert_eq!(enumerate_binary_words(3, 2).unwrap().len(), 7);
        let z = enumerate_binary_words(5, 0).unwrap();
        assert_eq!(z, vec![BinaryWord::zeros(5)]);
        assert_eq!(enumerate_binary_words(4, 4).unwrap().len(), 16);
        assert!(enumerate_binary_words(2, 3).is_err());
        let words = enumerate_binary_words(4, 2).unwrap();
        assert!(words.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ones_positions_examples() {
        let pos = |s: &str| ones_positions(&s.parse().unwrap()).to_string();
        assert_eq!(pos("0110"), "(2,3)");
        assert_eq!(pos("0000"), "()");
        assert_eq!(pos("1001"), "(1,4)");
    }

    #[test]
    fn code_examples() {
        assert_eq!(code(&mp("123")), vec![0, 0, 0]);
        assert_eq!(code(&mp("213")), vec![1, 0, 0]);
        assert_eq!(code(&mp("321321")), vec![4, 2, 0, 2, 1, 0]);
    }

    #[test]
    fn alpha_weight_examples() {
        assert_eq!(alpha_exponents(&mp("321321")), vec![4, 3, 1, 1]);
        assert_eq!(alpha_exponents(&mp("3142414232")), vec![6, 4, 4, 3, 2]);
        let alpha = [r(1, 2), r(1, 3), r(1, 5), r(1, 7), r(1, 11)];
        let direct = r(1, 2).powu(4) * r(1, 3).powu(3) * r(1, 5) * r(1, 7);
        assert_eq!(alpha_weight(&mp("321321"), &alpha).unwrap(), direct);
        let sorted = Multipermutation::sorted(&Content::new(vec![2, 3, 1]).unwrap());
        assert_eq!(alpha_weight(&sorted, &alpha[..0]).unwrap(), r(1, 1));
        assert_eq!(
            alpha_weight(&mp("321321"), &alpha[..3]),
            Err(Error::InsufficientAlphas { needed: 4, got: 3 })
        );
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(inversions(&mp("1234")), 0);
        assert_eq!(inversions(&mp("321321")), 9);
    }

    #[test]
    fn l_statistic_examples() {
        assert_eq!(l_statistic_word(&"10".parse().unwrap()), 0);
        assert_eq!(l_statistic_word(&"01".parse().unwrap()), 1);
        let w = BinaryWord::from_positions(7, &BallTuple::new(vec![1, 2, 4, 7]).unwrap()).unwrap();
        assert_eq!(l_statistic_word(&w), 4);
        assert_eq!(displacement(&ones_positions(&w)), 4);
    }

    #[test]
    fn l_statistic_labeled_examples() {
        let c = LabeledConfig::new(mp("123"), BallTuple::packed(3)).unwrap();
        assert_eq!(l_statistic_labeled(&c), 0);
        let c: LabeledConfig = "21@(1,2)".parse().unwrap();
        assert_eq!(l_statistic_labeled(&c), 1);
        let c: LabeledConfig = "12@(2,4)".parse().unwrap();
        assert_eq!(l_statistic_labeled(&c), 3);
    }

    #[test]
    fn labeled_equals_infinity_label_inversions() {
        // empty sites read as label infinity; count pairs (earlier > later)
        for c in ["12@(2,4)", "21@(1,3)", "132@(2,3,6)"] {
            let cfg: LabeledConfig = c.parse().unwrap();
            let span = cfg.n.last().unwrap() as usize;
            let mut sites = vec![u32::MAX; span];
            for (l, p) in cfg.tau.letters().iter().zip(cfg.n.positions()) {
                sites[*p as usize - 1] = *l;
            }
            let mut count = 0;
            for i in 0..span {
                for j in i + 1..span {
                    if sites[i] > sites[j] {
                        count += 1;
                    }
                }
            }
            assert_eq!(l_statistic_labeled(&cfg), count, "{c}");
        }
    }

    #[test]
    fn multipermutation_enumeration() {
        let c = Content::new(vec![1, 1, 1]).unwrap();
        let all: Vec<String> = enumerate_multipermutations(&c)
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(all, ["123", "132", "213", "231", "312", "321"]);
        let c = Content::new(vec![2, 1]).unwrap();
        let all: Vec<String> = enumerate_multipermutations(&c)
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(all, ["112", "121", "211"]);
        assert_eq!(enumerate_multipermutations(&Content::new(vec![3]).unwrap()).len(), 1);
        assert!(Content::new(vec![]).is_err());
        assert!(Content::new(vec![0, 0]).is_err());
    }

    #[test]
    fn multinomial_counts_match_enumeration() {
        for counts in [vec![1, 1, 1, 1], vec![2, 2], vec![3, 1, 2], vec![1, 5]] {
            let c = Content::new(counts).unwrap();
            assert_eq!(
                enumerate_multipermutations(&c).len() as u128,
                c.multinomial()
            );
        }
    }

    #[test]
    fn text_forms() {
        assert_eq!(BallTuple::new(vec![1, 3, 7]).unwrap().to_string(), "(1,3,7)");
        assert_eq!("(1,3,7)".parse::<BallTuple>().unwrap().positions(), &[1, 3, 7]);
        assert!("(3,1)".parse::<BallTuple>().is_err());
        let big = Multipermutation::from_letters((1..=10).rev().collect()).unwrap();
        assert_eq!(big.to_string(), "10,9,8,7,6,5,4,3,2,1");
        assert_eq!(big.to_string().parse::<Multipermutation>().unwrap(), big);
        assert!(Multipermutation::new(vec![1, 1], Content::new(vec![1, 1]).unwrap()).is_err());
    }

    #[test]
    fn ball_tuple_moves() {
        let n = BallTuple::new(vec![1, 2, 4, 7]).unwrap();
        assert_eq!(n.shifted().positions(), &[2, 3, 5, 8]);
        assert_eq!(n.jumped(3).positions(), &[1, 2, 3, 8]);
        assert_eq!(n.gaps(), vec![0, 0, 1, 2]);
        assert_eq!(enumerate_ball_tuples(2, 4).len(), 6);
        assert_eq!(enumerate_ball_tuples(0, 4), vec![BallTuple::packed(0)]);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::numerics::{draw, seeded_rng, Rational};
    use proptest::prelude::*;

    #[test]
    fn positions_round_trip_exhaustive() {
        for m in 0..=10 {
            for w in enumerate_binary_words(m, m).unwrap() {
                let back = BinaryWord::from_positions(m, &ones_positions(&w)).unwrap();
                assert_eq!(back, w);
            }
        }
    }

    #[test]
    fn code_sums_to_inversions_exhaustive() {
        for b in 1..=7usize {
            for counts in compositions(b) {
                let c = Content::new(counts).unwrap();
                for tau in enumerate_multipermutations(&c) {
                    let s: u64 = code(&tau).iter().map(|x| *x as u64).sum();
                    assert_eq!(s, inversions(&tau));
                }
            }
        }
    }

    #[test]
    fn l_statistic_pair_count_equals_displacement() {
        for m in 0..=10 {
            for w in enumerate_binary_words(m, m).unwrap() {
                assert_eq!(l_statistic_word(&w), displacement(&ones_positions(&w)));
            }
        }
    }

    #[test]
    fn equal_alphas_give_inversion_power() {
        let mut rng = seeded_rng(11);
        for b in 1..=6usize {
            for counts in compositions(b) {
                let c = Content::new(counts).unwrap();
                let a = draw::open_unit(&mut rng);
                let alpha = vec![a.clone(); c.alpha_len()];
                for tau in enumerate_multipermutations(&c) {
                    let w: Rational = alpha_weight(&tau, &alpha).unwrap();
                    assert_eq!(w, a.powu(inversions(&tau) as u32));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn text_round_trip(letters in prop::collection::vec(1u32..6, 1..9)) {
            let tau = Multipermutation::from_letters(letters).unwrap();
            let back: Multipermutation = tau.to_string().parse().unwrap();
            prop_assert_eq!(back.letters(), tau.letters());
        }
    }
}
