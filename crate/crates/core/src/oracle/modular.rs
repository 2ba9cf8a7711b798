//! Exact solution of square rational systems by elimination modulo
//! word-sized primes, Chinese remaindering and rational reconstruction.
//!
//! Dense elimination over big rationals suffers coefficient growth at a few
//! hundred states; modular images are cheap and the candidate solution is
//! checked exactly by the caller before it is accepted, so the result never
//! depends on a heuristic bound.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numerics::Rational;

/// Consecutive primes for which the system may be singular before the
/// system is declared singular over the rationals.
const SINGULAR_PRIME_LIMIT: usize = 3;

/// Barrett reduction for a fixed prime below `2^31`.
#[derive(Debug, Clone, Copy)]
struct Modulus {
    p: u64,
    mu: u64,
}

impl Modulus {
    fn new(p: u64) -> Self {
        debug_assert!(p > 2 && p < (1 << 31));
        let mu = (u128::from(u64::MAX) / u128::from(p)) as u64;
        Self { p, mu }
    }

    /// Reduces `x < 2^63`.
    #[inline]
    fn reduce(self, x: u64) -> u64 {
        let q = ((u128::from(x) * u128::from(self.mu)) >> 64) as u64;
        let mut r = x - q * self.p;
        while r >= self.p {
            r -= self.p;
        }
        r
    }

    #[inline]
    fn mul(self, a: u64, b: u64) -> u64 {
        self.reduce(a * b)
    }

    fn pow(self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    fn inv(self, a: u64) -> u64 {
        self.pow(a, self.p - 2)
    }

    fn residue(self, r: &Rational) -> Option<u64> {
        let p = BigInt::from(self.p);
        let den = r.denom().mod_floor(&p).to_u64().expect("residue fits");
        if den == 0 {
            return None;
        }
        let num = r.numer().mod_floor(&p).to_u64().expect("residue fits");
        Some(self.mul(num, self.inv(den)))
    }
}

/// Deterministic Miller-Rabin, valid for all `n < 3.3 * 10^24`.
pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &a in &BASES {
        if n % a == 0 {
            return n == a;
        }
    }
    let mulmod = |a: u64, b: u64| ((u128::from(a) * u128::from(b)) % u128::from(n)) as u64;
    let powmod = |mut base: u64, mut exp: u64| {
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mulmod(acc, base);
            }
            base = mulmod(base, base);
            exp >>= 1;
        }
        acc
    };
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes below `2^31`, largest first.
fn primes() -> impl Iterator<Item = u64> {
    (3..(1u64 << 31)).rev().step_by(2).filter(|&n| is_prime(n))
}

enum ModularSolve {
    /// Some coefficient has a denominator divisible by the prime.
    BadPrime,
    Singular,
    Solved(Vec<u64>),
}

/// Solves `A x = e_rhs` modulo `p` by dense elimination; `rows[i]` lists
/// the nonzero `(column, value)` entries of row `i`.
fn solve_mod(rows: &[Vec<(usize, Rational)>], rhs: usize, modulus: Modulus) -> ModularSolve {
    let n = rows.len();
    let width = n + 1;
    let mut a = vec![0u64; n * width];
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row {
            match modulus.residue(v) {
                Some(r) => a[i * width + j] = r,
                None => return ModularSolve::BadPrime,
            }
        }
    }
    a[rhs * width + n] = 1;
    let p = modulus.p;
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| a[r * width + col] != 0) else {
            return ModularSolve::Singular;
        };
        if piv != col {
            for j in 0..width {
                a.swap(piv * width + j, col * width + j);
            }
        }
        let inv = modulus.inv(a[col * width + col]);
        for j in col..width {
            a[col * width + j] = modulus.mul(a[col * width + j], inv);
        }
        let (head, tail) = a.split_at_mut((col + 1) * width);
        let pivot_row = &head[col * width..];
        for row in tail.chunks_exact_mut(width) {
            let f = row[col];
            if f == 0 {
                continue;
            }
            let neg = p - f;
            for j in col..width {
                if pivot_row[j] != 0 {
                    row[j] = modulus.reduce(row[j] + neg * pivot_row[j]);
                }
            }
        }
    }
    let mut x = vec![0u64; n];
    for i in (0..n).rev() {
        let mut acc = a[i * width + n];
        for j in i + 1..n {
            let c = a[i * width + j];
            if c != 0 {
                acc = modulus.reduce(acc + modulus.mul(p - c, x[j]));
            }
        }
        x[i] = acc;
    }
    ModularSolve::Solved(x)
}

/// Smallest-height rational congruent to `u` modulo `m`, with numerator
/// and denominator bounded by `sqrt(m / 2)`.
fn reconstruct(u: &BigInt, m: &BigInt) -> Option<Rational> {
    let bound = (m >> 1usize).sqrt();
    let (mut r0, mut r1) = (m.clone(), u.mod_floor(m));
    let (mut s0, mut s1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let s2 = &s0 - &q * &s1;
        r0 = std::mem::replace(&mut r1, r2);
        s0 = std::mem::replace(&mut s1, s2);
    }
    if s1.is_zero() || s1.abs() > bound || !r1.gcd(&s1).is_one() {
        return None;
    }
    Some(Rational::new(r1, s1))
}

/// Solves the nonsingular system `A x = e_rhs` exactly. `accept` must
/// verify a candidate against the original problem; reconstruction is
/// retried with more primes until it does.
pub(crate) fn solve_exact<F>(
    rows: &[Vec<(usize, Rational)>],
    rhs: usize,
    mut accept: F,
) -> Result<Vec<Rational>>
where
    F: FnMut(&[Rational]) -> bool,
{
    let n = rows.len();
    let mut residues: Vec<BigInt> = vec![BigInt::zero(); n];
    let mut modulus_product = BigInt::one();
    let mut singular_run = 0;
    for p in primes() {
        let modulus = Modulus::new(p);
        let image = match solve_mod(rows, rhs, modulus) {
            ModularSolve::BadPrime => continue,
            ModularSolve::Singular => {
                singular_run += 1;
                if singular_run >= SINGULAR_PRIME_LIMIT {
                    return Err(Error::SingularSystem);
                }
                continue;
            }
            ModularSolve::Solved(x) => x,
        };
        singular_run = 0;
        // Garner step: x <- x + M * ((r - x) / M mod p)
        let big_p = BigInt::from(p);
        let m_inv = modulus.inv(modulus_product.mod_floor(&big_p).to_u64().expect("fits"));
        for (x, r) in residues.iter_mut().zip(&image) {
            let cur = x.mod_floor(&big_p).to_u64().expect("fits");
            let delta = modulus.mul((r + p - cur) % p, m_inv);
            *x += &modulus_product * BigInt::from(delta);
        }
        modulus_product *= &big_p;
        // cheap screen on the extreme entries before reconstructing all
        if reconstruct(&residues[0], &modulus_product).is_none()
            || reconstruct(&residues[n - 1], &modulus_product).is_none()
        {
            continue;
        }
        let candidate: Option<Vec<Rational>> = residues
            .iter()
            .map(|u| reconstruct(u, &modulus_product))
            .collect();
        if let Some(c) = candidate {
            if accept(&c) {
                return Ok(c);
            }
        }
    }
    unreachable!("the prime supply below 2^31 is never exhausted")
}
