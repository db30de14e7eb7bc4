//! Reals in `[0, 1)` held as finite binary expansions `0.b1 b2 ... bB`.
//!
//! A `UnitReal` stores exactly `budget` digits. Digits past the budget are
//! unknown: nothing here reads them or pretends they are zero, and an
//! operation that would need them fails with [`Error::Exhausted`].
//!
//! Bits are packed most-significant-first into `u64` words. The textual
//! form is `"<budget>:<HEX>"`, e.g. `"12:DA4"`, with `ceil(budget / 4)`
//! hex digits and zero padding in the unused low bits of the last digit.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// Default bit budget for seeds created without an explicit size.
pub const DEFAULT_SEED_BUDGET: usize = 4096;

#[derive(Clone)]
pub struct UnitReal {
    words: Vec<u64>,
    budget: usize,
}

fn word_count(budget: usize) -> usize {
    budget.div_ceil(WORD_BITS)
}

/// Mask selecting the first `budget % 64` bits of the final word.
fn tail_mask(budget: usize) -> u64 {
    match budget % WORD_BITS {
        0 => u64::MAX,
        rem => u64::MAX << (WORD_BITS - rem),
    }
}

impl UnitReal {
    fn from_words(mut words: Vec<u64>, budget: usize) -> Self {
        debug_assert!(budget > 0);
        words.truncate(word_count(budget));
        words.resize(word_count(budget), 0);
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(budget);
        }
        UnitReal { words, budget }
    }

    /// Value from packed most-significant-first words; bits past `budget` are discarded.
    pub fn from_packed_words(words: Vec<u64>, budget: usize) -> Result<Self> {
        if budget == 0 {
            return Err(Error::domain("bit budget must be positive"));
        }
        Ok(Self::from_words(words, budget))
    }

    /// Word `w` with every bit past the budget cleared.
    fn word(&self, w: usize) -> u64 {
        let raw = self.words[w];
        if w + 1 == self.words.len() {
            raw & tail_mask(self.budget)
        } else {
            raw
        }
    }

    /// Number of stored binary digits.
    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Digit `b_{index+1}` (zero-based index), or `None` past the budget.
    pub fn bit(&self, index: usize) -> Option<bool> {
        (index < self.budget)
            .then(|| self.words[index / WORD_BITS] >> (WORD_BITS - 1 - index % WORD_BITS) & 1 == 1)
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.budget).map(move |i| self.bit(i).expect("index within budget"))
    }

    /// Builds a value from a string of `0`/`1` digits, most significant first.
    pub fn from_bit_str(digits: &str) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::domain("a UnitReal needs at least one bit"));
        }
        let mut writer = BitWriter::with_capacity(digits.len());
        for c in digits.chars() {
            match c {
                '0' => writer.push(false),
                '1' => writer.push(true),
                other => return Err(Error::parse(format!("{other:?} is not a binary digit"))),
            }
        }
        Ok(writer.finish())
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Result<Self> {
        let mut writer = BitWriter::with_capacity(0);
        bits.into_iter().for_each(|b| writer.push(b));
        if writer.len == 0 {
            return Err(Error::domain("a UnitReal needs at least one bit"));
        }
        Ok(writer.finish())
    }

    /// The value `numerator / 2^budget`; requires `numerator < 2^budget`.
    pub fn from_scaled(numerator: &BigUint, budget: usize) -> Result<Self> {
        if budget == 0 {
            return Err(Error::domain("bit budget must be positive"));
        }
        if numerator.bits() > budget as u64 {
            return Err(Error::domain("scaled numerator does not fit the budget"));
        }
        let words = word_count(budget);
        let shifted = numerator << (words * WORD_BITS - budget);
        let bytes = shifted.to_bytes_be();
        let mut padded = vec![0u8; words * 8 - bytes.len()];
        padded.extend_from_slice(&bytes);
        let packed = padded
            .chunks_exact(8)
            .map(|c| u64::from_be_bytes(c.try_into().expect("chunk of 8 bytes")))
            .collect();
        Ok(Self::from_words(packed, budget))
    }

    /// First `budget` binary digits of `numerator / denominator`, truncated.
    pub fn from_fraction(
        numerator: impl Into<BigUint>,
        denominator: impl Into<BigUint>,
        budget: usize,
    ) -> Result<Self> {
        let numerator = numerator.into();
        let denominator = denominator.into();
        if budget == 0 {
            return Err(Error::domain("bit budget must be positive"));
        }
        if denominator.is_zero() {
            return Err(Error::domain("denominator must be positive"));
        }
        if numerator >= denominator {
            return Err(Error::domain("numerator must be smaller than denominator"));
        }
        let scaled = (numerator << budget) / denominator;
        Self::from_scaled(&scaled, budget)
    }

    /// Truncated expansion of a rational in `[0, 1)`.
    pub fn from_rational(value: &BigRational, budget: usize) -> Result<Self> {
        if value.is_negative() || value >= &BigRational::one() {
            return Err(Error::domain("value must lie in [0, 1)"));
        }
        let numer = value.numer().to_biguint().expect("non-negative");
        let denom = value.denom().to_biguint().expect("positive");
        Self::from_fraction(numer, denom, budget)
    }

    /// `N` such that the represented value is `N / 2^budget`.
    pub fn scaled_numerator(&self) -> BigUint {
        let mut bytes = Vec::with_capacity(self.words.len() * 8);
        for w in 0..self.words.len() {
            bytes.extend_from_slice(&self.word(w).to_be_bytes());
        }
        BigUint::from_bytes_be(&bytes) >> (self.words.len() * WORD_BITS - self.budget)
    }

    /// Represented value `sum b_i 2^-i` as an exact rational.
    pub fn to_rational(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.scaled_numerator()),
            BigInt::one() << self.budget,
        )
    }

    /// Nearest-below double built from the leading 53 digits; always `< 1`.
    pub fn to_f64(&self) -> f64 {
        (self.word(0) >> 11) as f64 / (1u64 << 53) as f64
    }

    /// The first 32 digits packed into a `u32`.
    pub fn leading_u32(&self) -> Result<u32> {
        if self.budget < 32 {
            return Err(Error::exhausted(format!(
                "32 leading bits requested from a {}-bit value",
                self.budget
            )));
        }
        Ok((self.word(0) >> 32) as u32)
    }

    /// Drops the leading `k` digits: `0.b1 b2 ... -> 0.b(k+1) b(k+2) ...`,
    /// which is `k` iterations of the doubling map `x -> frac(2x)`.
    pub fn shift_left(&self, k: usize) -> Result<Self> {
        if k >= self.budget {
            return Err(Error::exhausted(format!(
                "shift by {k} consumes the whole {}-bit budget",
                self.budget
            )));
        }
        let budget = self.budget - k;
        let skip = k / WORD_BITS;
        let offset = k % WORD_BITS;
        let out = (0..word_count(budget))
            .map(|w| {
                let hi = self.words[w + skip];
                if offset == 0 {
                    hi
                } else {
                    let lo = self.words.get(w + skip + 1).copied().unwrap_or(0);
                    (hi << offset) | (lo >> (WORD_BITS - offset))
                }
            })
            .collect();
        Ok(Self::from_words(out, budget))
    }

    /// Keeps only the first `len` digits.
    pub fn truncate(&self, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::domain("cannot truncate to zero bits"));
        }
        if len > self.budget {
            return Err(Error::exhausted(format!(
                "{len} bits requested from a {}-bit value",
                self.budget
            )));
        }
        Ok(Self::from_words(self.words[..word_count(len)].to_vec(), len))
    }

    /// Exact comparison of represented values.
    ///
    /// The common prefix decides when it differs. With an identical prefix
    /// the operands are equal if the longer one continues with zeros only;
    /// otherwise the shorter operand's unknown digits would be needed and the
    /// comparison fails with an exhaustion error.
    pub fn compare(&self, other: &UnitReal) -> Result<Ordering> {
        let common = self.budget.min(other.budget);
        let full = common / WORD_BITS;
        for w in 0..full {
            match self.words[w].cmp(&other.words[w]) {
                Ordering::Equal => {}
                ord => return Ok(ord),
            }
        }
        if !common.is_multiple_of(WORD_BITS) {
            let mask = tail_mask(common);
            match (self.words[full] & mask).cmp(&(other.words[full] & mask)) {
                Ordering::Equal => {}
                ord => return Ok(ord),
            }
        }
        let longer = match self.budget.cmp(&other.budget) {
            Ordering::Equal => return Ok(Ordering::Equal),
            Ordering::Greater => self,
            Ordering::Less => other,
        };
        if longer.has_nonzero_bits_from(common) {
            Err(Error::exhausted(format!(
                "operands agree on all {common} bits of the shorter one"
            )))
        } else {
            Ok(Ordering::Equal)
        }
    }

    fn has_nonzero_bits_from(&self, start: usize) -> bool {
        let first = start / WORD_BITS;
        (first..self.words.len()).any(|w| {
            let mut word = self.word(w);
            if w == first && !start.is_multiple_of(WORD_BITS) {
                word &= !tail_mask(start);
            }
            word != 0
        })
    }

    /// Copy with every storage bit past the budget set, for checking that
    /// no operation reads beyond the budget.
    #[cfg(test)]
    pub(crate) fn poisoned(&self) -> Self {
        let mut words = self.words.clone();
        if let Some(last) = words.last_mut() {
            *last |= !tail_mask(self.budget);
        }
        UnitReal {
            words,
            budget: self.budget,
        }
    }
}

impl PartialEq for UnitReal {
    fn eq(&self, other: &Self) -> bool {
        self.budget == other.budget && (0..self.words.len()).all(|w| self.word(w) == other.word(w))
    }
}

impl Eq for UnitReal {}

impl Hash for UnitReal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.budget.hash(state);
        for w in 0..self.words.len() {
            self.word(w).hash(state);
        }
    }
}

impl fmt::Display for UnitReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.budget)?;
        for i in 0..self.budget.div_ceil(4) {
            let word = self.word(i / 16);
            let nibble = (word >> (60 - 4 * (i % 16))) & 0xF;
            write!(f, "{nibble:X}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for UnitReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UnitReal({self})")
    }
}

impl FromStr for UnitReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (budget, hex) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::parse(format!("expected <bits>:<hex>, got {s:?}")))?;
        let budget: usize = budget
            .parse()
            .map_err(|_| Error::parse(format!("bad bit count in {s:?}")))?;
        if budget == 0 {
            return Err(Error::domain("bit budget must be positive"));
        }
        if hex.len() != budget.div_ceil(4) {
            return Err(Error::parse(format!(
                "{budget} bits need {} hex digits, found {}",
                budget.div_ceil(4),
                hex.len()
            )));
        }
        let mut words = vec![0u64; word_count(budget)];
        for (i, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::parse(format!("{c:?} is not a hex digit")))?
                as u64;
            words[i / 16] |= nibble << (60 - 4 * (i % 16));
        }
        let value = UnitReal { words, budget };
        if value.words.last().copied().unwrap_or(0) & !tail_mask(budget) != 0 {
            return Err(Error::parse(format!("padding bits of {s:?} are not zero")));
        }
        Ok(value)
    }
}

impl Serialize for UnitReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UnitReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

struct BitWriter {
    words: Vec<u64>,
    len: usize,
}

impl BitWriter {
    fn with_capacity(bits: usize) -> Self {
        BitWriter {
            words: Vec::with_capacity(word_count(bits)),
            len: 0,
        }
    }

    fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD_BITS) {
            self.words.push(0);
        }
        if bit {
            let last = self.words.last_mut().expect("word pushed above");
            *last |= 1 << (WORD_BITS - 1 - self.len % WORD_BITS);
        }
        self.len += 1;
    }

    fn finish(self) -> UnitReal {
        UnitReal::from_words(self.words, self.len)
    }
}

/// Constants whose binary expansions can seed the bit-shift driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeedConstant {
    /// Binary Champernowne constant `0.1 10 11 100 101 ...`, normal in base 2.
    Champernowne2,
    /// Fractional part of the square root of two.
    Sqrt2Frac,
    /// Fractional part of pi.
    PiFrac,
    /// `(sqrt(5) - 1) / 2`, the golden-ratio conjugate.
    GoldenFrac,
}

impl SeedConstant {
    pub const ALL: [SeedConstant; 4] = [
        SeedConstant::Champernowne2,
        SeedConstant::Sqrt2Frac,
        SeedConstant::PiFrac,
        SeedConstant::GoldenFrac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeedConstant::Champernowne2 => "champernowne2",
            SeedConstant::Sqrt2Frac => "sqrt2_frac",
            SeedConstant::PiFrac => "pi_frac",
            SeedConstant::GoldenFrac => "golden_frac",
        }
    }
}

impl fmt::Display for SeedConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SeedConstant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SeedConstant::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown seed constant {s:?}")))
    }
}

/// First `budget` binary digits of the named constant's fractional part.
pub fn seed_constant(name: SeedConstant, budget: usize) -> Result<UnitReal> {
    if budget == 0 {
        return Err(Error::domain("bit budget must be positive"));
    }
    match name {
        SeedConstant::Champernowne2 => Ok(champernowne2(budget)),
        SeedConstant::Sqrt2Frac => {
            let root = (BigUint::from(2u32) << (2 * budget)).sqrt();
            UnitReal::from_scaled(&(root - (BigUint::one() << budget)), budget)
        }
        SeedConstant::GoldenFrac => {
            let root = (BigUint::from(5u32) << (2 * budget)).sqrt();
            UnitReal::from_scaled(&((root - (BigUint::one() << budget)) >> 1), budget)
        }
        SeedConstant::PiFrac => {
            let scaled = pi_scaled(budget);
            UnitReal::from_scaled(&(scaled - (BigUint::from(3u32) << budget)), budget)
        }
    }
}

fn champernowne2(budget: usize) -> UnitReal {
    let mut writer = BitWriter::with_capacity(budget);
    let mut k: u64 = 1;
    'outer: loop {
        let width = 64 - k.leading_zeros();
        for shift in (0..width).rev() {
            if writer.len == budget {
                break 'outer;
            }
            writer.push(k >> shift & 1 == 1);
        }
        k += 1;
    }
    writer.finish()
}

/// `floor(pi * 2^bits)` via Machin's formula with 64 guard bits.
fn pi_scaled(bits: usize) -> BigUint {
    const GUARD: usize = 64;
    let scale = BigUint::one() << (bits + GUARD);
    let pi = BigInt::from(16u32) * arctan_inverse(5, &scale) - BigInt::from(4u32) * arctan_inverse(239, &scale);
    (pi >> GUARD).to_biguint().expect("pi is positive")
}

/// `atan(1/x) * scale`, truncated term by term.
fn arctan_inverse(x: u32, scale: &BigUint) -> BigInt {
    let x_squared = BigUint::from(x * x);
    let mut power = scale / x;
    let mut sum = BigInt::from(power.clone());
    let mut k: u32 = 1;
    loop {
        power /= &x_squared;
        if power.is_zero() {
            break;
        }
        let term = BigInt::from(&power / (2 * k + 1));
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        k += 1;
    }
    sum
}
