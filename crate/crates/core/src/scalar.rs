//! Scalar plumbing shared by the probability and state modules: the
//! float/exact mode switch, exact rational parsing, and the JSON value
//! form used for probabilities, amplitudes and instants.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether probabilities and amplitudes are carried as `f64` or as exact rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    #[default]
    Float,
    Exact,
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Float => f.write_str("float"),
            ScalarMode::Exact => f.write_str("exact"),
        }
    }
}

/// A number as it appears in JSON input: either a JSON number or a string
/// holding a fraction (`"3/10"`) or a decimal (`"0.25"`, `"1e-3"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberSpec {
    Num(serde_json::Number),
    Text(String),
}

impl NumberSpec {
    /// Exact value. JSON numbers are read through their shortest decimal
    /// rendering, so `0.1` becomes 1/10 rather than the nearest double.
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            NumberSpec::Num(n) => parse_rational(&n.to_string()),
            NumberSpec::Text(s) => parse_rational(s),
        }
    }

    pub fn to_f64(&self) -> Result<f64> {
        match self {
            NumberSpec::Num(n) => n
                .as_f64()
                .ok_or_else(|| Error::parse(format!("number {n} is not representable"))),
            NumberSpec::Text(s) => {
                let q = parse_rational(s)?;
                q.to_f64()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::parse(format!("{s} does not fit a double")))
            }
        }
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        serde_json::Number::from_f64(x)
            .map(NumberSpec::Num)
            .ok_or_else(|| Error::domain(format!("{x} is not a finite number")))
    }

    pub fn from_rational(q: &BigRational) -> Self {
        NumberSpec::Text(rational_to_string(q))
    }

    /// Reads the value in the given mode: floats stay floats, exact values stay exact.
    pub fn to_scalar(&self, mode: ScalarMode) -> Result<Scalar> {
        match mode {
            ScalarMode::Float => self.to_f64().map(Scalar::Float),
            ScalarMode::Exact => self.to_rational().map(Scalar::Exact),
        }
    }
}

/// One scalar in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Float(f64),
    Exact(BigRational),
}

/// Parses `p/q`, an integer, or a decimal with optional exponent into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::parse("empty number"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::parse(format!("bad numerator in {s:?}")))?;
        let den: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::parse(format!("bad denominator in {s:?}")))?;
        if den.is_zero() {
            return Err(Error::parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<BigRational> {
    let bad = || Error::parse(format!("not a number: {s:?}"));
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    if exponent.unsigned_abs() > 100_000 {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().map_err(|_| bad())?
    };
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// `p/q` in lowest terms, or just `p` for integers.
pub fn rational_to_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// The exact value of a finite double.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::domain(format!("{x} is not finite")))
}

/// Floor and fractional part of a non-negative rational.
pub fn split_integer_fraction(q: &BigRational) -> Result<(BigUint, BigRational)> {
    if q.is_negative() {
        return Err(Error::domain(format!("{} is negative", rational_to_string(q))));
    }
    let floor = q.floor();
    let frac = q - &floor;
    let m = floor
        .to_integer()
        .to_biguint()
        .expect("floor of a non-negative rational is non-negative");
    Ok((m, frac))
}
