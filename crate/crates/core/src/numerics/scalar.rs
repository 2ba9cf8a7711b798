use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator by `num-rational`.
pub type Rational = BigRational;

/// Absolute tolerance on `|sum - 1|` accepted for float distributions.
pub const FLOAT_SUM_TOLERANCE: f64 = 1e-12;

/// Number type the chains are generic over.
///
/// Two implementations exist: [`Rational`] for exact verification and `f64`
/// for Monte Carlo. A computation never mixes the two; the only bridge is
/// [`Scalar::to_f64`].
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// True for exact arithmetic.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_int(value: i64) -> Self {
        Self::from_ratio(value, 1)
    }

    fn to_f64(&self) -> f64;

    /// Exact value as a rational (floats convert exactly; non-finite floats
    /// map to zero).
    fn to_rational(&self) -> Rational;

    fn from_rational(value: &Rational) -> Self;

    fn abs_value(&self) -> Self;

    /// Whether `sum` is acceptably close to one for this arithmetic.
    fn is_unit_sum(sum: &Self) -> bool;

    /// Whether `value` should be treated as zero (exact: `== 0`).
    fn is_negligible(value: &Self) -> bool;

    /// Render as text: `"p/q"` for rationals, shortest round-trip for floats.
    fn to_text(&self) -> String;

    fn powu(&self, exp: u32) -> Self {
        num_traits::pow::pow(self.clone(), exp as usize)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }

    fn is_unit_sum(sum: &Self) -> bool {
        sum.is_one()
    }

    fn is_negligible(value: &Self) -> bool {
        value.is_zero()
    }

    fn to_text(&self) -> String {
        format_rational(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Rational {
        Rational::from_float(*self).unwrap_or_else(Rational::zero)
    }

    fn from_rational(value: &Rational) -> Self {
        Scalar::to_f64(value)
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }

    fn is_unit_sum(sum: &Self) -> bool {
        (sum - 1.0).abs() <= FLOAT_SUM_TOLERANCE
    }

    fn is_negligible(value: &Self) -> bool {
        *value == 0.0
    }

    fn to_text(&self) -> String {
        format!("{self}")
    }
}

/// `"p/q"` with `q > 0`, including `"n/1"` for integers.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.125"` or
/// `"-2.5e-3"`. Decimals are converted exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let den: BigInt = d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(num, den));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("not a number: {s:?}"));
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Parses a comma-separated list of rationals.
pub fn parse_rational_list(text: &str) -> Result<Vec<Rational>> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_rational)
        .collect()
}

/// Exact rational to the float scalar used by simulations.
pub fn to_float_vec(values: &[Rational]) -> Vec<f64> {
    values.iter().map(Scalar::to_f64).collect()
}
