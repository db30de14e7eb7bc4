//! Discrete distributions, their cumulative partition of `[0, 1)`, the
//! canonical outcome ordering, and selection of an outcome by a real `r`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{rational_from_f64, rational_to_string, NumberSpec, ScalarMode};
use crate::unit_real::UnitReal;

/// Normalization tolerance for float-valued distributions (2^-40).
pub const EPS_NORM: f64 = 1.0 / (1u64 << 40) as f64;

/// Probabilities `p_1 .. p_n` over `n >= 2` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Probs,
}

#[derive(Debug, Clone, PartialEq)]
enum Probs {
    Float(Vec<f64>),
    Exact(Vec<BigRational>),
}

fn check_len(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 outcomes, got {n}")));
    }
    Ok(())
}

impl DiscreteDistribution {
    /// Float-valued distribution; the sum must be within [`EPS_NORM`] of one.
    pub fn from_f64(probs: Vec<f64>) -> Result<Self> {
        check_len(probs.len())?;
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::domain(format!("invalid probability {bad}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > EPS_NORM {
            return Err(Error::Normalization {
                sum: sum.to_string(),
                tolerance: EPS_NORM.to_string(),
            });
        }
        Ok(DiscreteDistribution {
            probs: Probs::Float(probs),
        })
    }

    /// Exact distribution; the sum must be exactly one.
    pub fn from_rationals(probs: Vec<BigRational>) -> Result<Self> {
        check_len(probs.len())?;
        if let Some(bad) = probs.iter().find(|p| p.is_negative()) {
            return Err(Error::domain(format!(
                "invalid probability {}",
                rational_to_string(bad)
            )));
        }
        let sum: BigRational = probs.iter().sum();
        if !sum.is_one() {
            return Err(Error::Normalization {
                sum: rational_to_string(&sum),
                tolerance: "0".into(),
            });
        }
        Ok(DiscreteDistribution {
            probs: Probs::Exact(probs),
        })
    }

    pub fn from_specs(values: &[NumberSpec], mode: ScalarMode) -> Result<Self> {
        match mode {
            ScalarMode::Float => {
                Self::from_f64(values.iter().map(NumberSpec::to_f64).collect::<Result<_>>()?)
            }
            ScalarMode::Exact => Self::from_rationals(
                values.iter().map(NumberSpec::to_rational).collect::<Result<_>>()?,
            ),
        }
    }

    /// JSON form: numbers in float mode, fraction strings in exact mode.
    pub fn to_specs(&self) -> Vec<NumberSpec> {
        match &self.probs {
            Probs::Float(p) => p
                .iter()
                .map(|x| NumberSpec::from_f64(*x).expect("validated finite"))
                .collect(),
            Probs::Exact(p) => p.iter().map(NumberSpec::from_rational).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match &self.probs {
            Probs::Float(p) => p.len(),
            Probs::Exact(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> ScalarMode {
        match self.probs {
            Probs::Float(_) => ScalarMode::Float,
            Probs::Exact(_) => ScalarMode::Exact,
        }
    }

    pub fn probs_f64(&self) -> Vec<f64> {
        match &self.probs {
            Probs::Float(p) => p.clone(),
            Probs::Exact(p) => p.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect(),
        }
    }

    /// Exact values; in float mode these are the doubles' exact values.
    pub fn probs_rational(&self) -> Vec<BigRational> {
        match &self.probs {
            Probs::Float(p) => p
                .iter()
                .map(|x| rational_from_f64(*x).expect("validated finite"))
                .collect(),
            Probs::Exact(p) => p.clone(),
        }
    }

    /// The distribution read through `order`: position `k` holds the
    /// probability of original outcome `order.original(k)`.
    pub fn permuted(&self, order: &OutcomeOrdering) -> Self {
        let idx = order.permutation.iter().map(|&i| i - 1);
        let probs = match &self.probs {
            Probs::Float(p) => Probs::Float(idx.map(|i| p[i]).collect()),
            Probs::Exact(p) => Probs::Exact(idx.map(|i| p[i].clone()).collect()),
        };
        DiscreteDistribution { probs }
    }

    fn cmp_outcomes(&self, a: usize, b: usize) -> Ordering {
        match &self.probs {
            Probs::Float(p) => p[a].total_cmp(&p[b]),
            Probs::Exact(p) => p[a].cmp(&p[b]),
        }
    }
}

/// Where residual ties in the canonical order were ranked from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRankSource {
    None,
    DerivativeHints,
}

/// Bijection from canonical positions to original outcome indices, both 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeOrdering {
    permutation: Vec<usize>,
    tie_rank_source: TieRankSource,
}

impl OutcomeOrdering {
    pub fn identity(n: usize) -> Self {
        OutcomeOrdering {
            permutation: (1..=n).collect(),
            tie_rank_source: TieRankSource::None,
        }
    }

    /// Checks that `permutation` is a bijection on `1..=n`.
    pub fn from_permutation(permutation: Vec<usize>) -> Result<Self> {
        let n = permutation.len();
        let mut seen = vec![false; n];
        for &i in &permutation {
            if i == 0 || i > n || std::mem::replace(&mut seen[i - 1], true) {
                return Err(Error::domain(format!("{permutation:?} is not a permutation of 1..={n}")));
            }
        }
        Ok(OutcomeOrdering {
            permutation,
            tie_rank_source: TieRankSource::None,
        })
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn tie_rank_source(&self) -> TieRankSource {
        self.tie_rank_source
    }

    /// Original outcome index at canonical `position` (1-based).
    pub fn original(&self, position: usize) -> usize {
        self.permutation[position - 1]
    }
}

/// Whether selection uses the canonical descending order or raw basis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingMode {
    #[default]
    Canonical,
    Basis,
}

/// Sorts outcomes by descending probability. Equal probabilities are
/// ranked by descending `derivative_hints` (which outcome is larger just
/// after the jump instant); remaining ties keep ascending original index.
pub fn canonical_order(
    dist: &DiscreteDistribution,
    derivative_hints: Option<&[f64]>,
) -> Result<OutcomeOrdering> {
    let n = dist.len();
    if let Some(hints) = derivative_hints {
        if hints.len() != n {
            return Err(Error::domain(format!(
                "{} derivative hints for {n} outcomes",
                hints.len()
            )));
        }
        if hints.iter().any(|h| !h.is_finite()) {
            return Err(Error::domain("derivative hints must be finite"));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        dist.cmp_outcomes(b, a).then_with(|| match derivative_hints {
            Some(h) => h[b].total_cmp(&h[a]),
            None => Ordering::Equal,
        })
    });
    Ok(OutcomeOrdering {
        permutation: order.into_iter().map(|i| i + 1).collect(),
        tie_rank_source: if derivative_hints.is_some() {
            TieRankSource::DerivativeHints
        } else {
            TieRankSource::None
        },
    })
}

/// Boundaries `0 = r_0 <= r_1 <= ... <= r_n = 1` with `r_i = p_1 + ... + p_i`.
///
/// Boundaries are held as exact rationals. In float mode they are the
/// exact values of the `f64` prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativePartition {
    boundaries: Vec<BigRational>,
    mode: ScalarMode,
}

impl CumulativePartition {
    pub fn boundaries(&self) -> &[BigRational] {
        &self.boundaries
    }

    pub fn mode(&self) -> ScalarMode {
        self.mode
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lebesgue measure of `[r_{i-1}, r_i)`, for 1-based `i`.
    pub fn interval_length(&self, i: usize) -> BigRational {
        &self.boundaries[i] - &self.boundaries[i - 1]
    }

    /// `F(x)`: zero below the first boundary, `r_i` on `[r_i, r_{i+1})`, one from 1 on.
    pub fn cdf(&self, x: &BigRational) -> BigRational {
        let reached = self.boundaries[1..].partition_point(|b| b <= x);
        self.boundaries[reached].clone()
    }
}

impl Serialize for CumulativePartition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Audit {
            mode: ScalarMode,
            boundaries: Vec<NumberSpec>,
        }
        let boundaries = self
            .boundaries
            .iter()
            .map(|b| match self.mode {
                ScalarMode::Float => NumberSpec::from_f64(b.to_f64().unwrap_or(f64::NAN))
                    .unwrap_or_else(|_| NumberSpec::from_rational(b)),
                ScalarMode::Exact => NumberSpec::from_rational(b),
            })
            .collect();
        Audit {
            mode: self.mode,
            boundaries,
        }
        .serialize(serializer)
    }
}

/// Prefix sums of `dist` in its own order; the last boundary is exactly one.
pub fn partition(dist: &DiscreteDistribution) -> CumulativePartition {
    let mut boundaries = Vec::with_capacity(dist.len() + 1);
    boundaries.push(BigRational::zero());
    match &dist.probs {
        Probs::Float(p) => {
            let mut sum = 0.0f64;
            for (i, x) in p.iter().enumerate() {
                sum += x;
                let b = if i + 1 == p.len() { 1.0 } else { sum.min(1.0) };
                boundaries.push(rational_from_f64(b).expect("finite prefix sum"));
            }
        }
        Probs::Exact(p) => {
            let mut sum = BigRational::zero();
            for x in p {
                sum += x;
                boundaries.push(sum.clone());
            }
        }
    }
    CumulativePartition {
        boundaries,
        mode: dist.mode(),
    }
}

/// The 1-based `i` with `r_{i-1} <= r < r_i`.
///
/// `r` with budget `B` pins the real only to `[v, v + 2^-B)` where `v` is
/// the represented value; if a boundary falls strictly inside that range
/// the digits at hand cannot decide and an exhaustion error is returned.
/// Empty intervals are never selected.
pub fn select_outcome(part: &CumulativePartition, r: &UnitReal) -> Result<usize> {
    let budget = r.budget();
    let low = BigInt::from(r.scaled_numerator());
    let high = &low + 1u32;
    for (i, b) in part.boundaries.iter().enumerate().skip(1) {
        let scaled = b.numer() << budget;
        // b > v  <=>  numer * 2^B > low * denom
        if scaled > &low * b.denom() {
            if scaled < &high * b.denom() {
                return Err(Error::exhausted(format!(
                    "{budget} bits of r cannot separate it from boundary {}",
                    rational_to_string(b)
                )));
            }
            return Ok(i);
        }
    }
    unreachable!("last boundary is 1 and r < 1")
}

/// Distribution function `F(x) = P(xi <= x)` with `xi(omega_i) = r_i`.
pub fn cdf(dist: &DiscreteDistribution, x: &BigRational) -> BigRational {
    partition(dist).cdf(x)
}

/// Selection under an ordering mode: returns the ordering used, the
/// 1-based canonical slot hit by `r`, and the original outcome index.
pub fn select_ordered(
    dist: &DiscreteDistribution,
    r: &UnitReal,
    derivative_hints: Option<&[f64]>,
    mode: OrderingMode,
) -> Result<(OutcomeOrdering, usize, usize)> {
    let ordering = match mode {
        OrderingMode::Canonical => canonical_order(dist, derivative_hints)?,
        OrderingMode::Basis => {
            if let Some(h) = derivative_hints {
                if h.len() != dist.len() {
                    return Err(Error::domain("derivative hints length mismatch"));
                }
            }
            OutcomeOrdering::identity(dist.len())
        }
    };
    let slot = select_outcome(&partition(&dist.permuted(&ordering)), r)?;
    let outcome = ordering.original(slot);
    Ok((ordering, slot, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn floats(p: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::from_f64(p.to_vec()).unwrap()
    }

    fn exact(p: &[(i64, i64)]) -> DiscreteDistribution {
        DiscreteDistribution::from_rationals(p.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    fn r_of(n: u64, d: u64) -> UnitReal {
        UnitReal::from_fraction(n, d, 64).unwrap()
    }

    /// All distributions `k_i / den` with `den <= max_den` and `2 <= n <= max_n`.
    fn all_rational_distributions(max_den: i64, max_n: usize) -> Vec<Vec<BigRational>> {
        fn compositions(total: i64, parts: usize, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
            if parts == 1 {
                prefix.push(total);
                out.push(prefix.clone());
                prefix.pop();
                return;
            }
            for k in 0..=total {
                prefix.push(k);
                compositions(total - k, parts - 1, prefix, out);
                prefix.pop();
            }
        }
        let mut dists = Vec::new();
        for n in 2..=max_n {
            for den in 1..=max_den {
                let mut out = Vec::new();
                compositions(den, n, &mut Vec::new(), &mut out);
                dists.extend(out.into_iter().map(|c| c.iter().map(|&k| q(k, den)).collect()));
            }
        }
        dists
    }

    #[test]
    fn canonical_order_examples() {
        let o = canonical_order(&floats(&[0.2, 0.5, 0.3]), None).unwrap();
        assert_eq!(o.permutation(), &[2, 3, 1]);
        assert_eq!(o.tie_rank_source(), TieRankSource::None);
        let o = canonical_order(&floats(&[0.4, 0.4, 0.2]), Some(&[-0.1, 0.1, 0.0])).unwrap();
        assert_eq!(o.permutation(), &[2, 1, 3]);
        assert_eq!(o.tie_rank_source(), TieRankSource::DerivativeHints);
        let o = canonical_order(&floats(&[0.5, 0.5]), None).unwrap();
        assert_eq!(o.permutation(), &[1, 2]);
    }

    #[test]
    fn canonical_order_hint_errors() {
        let d = floats(&[0.5, 0.5]);
        assert!(matches!(canonical_order(&d, Some(&[1.0])), Err(Error::Domain(_))));
        assert!(matches!(canonical_order(&d, Some(&[1.0, f64::NAN])), Err(Error::Domain(_))));
    }

    #[test]
    fn hints_only_break_ties() {
        // Hints never override a strict probability ordering.
        let o = canonical_order(&floats(&[0.3, 0.7]), Some(&[5.0, -5.0])).unwrap();
        assert_eq!(o.permutation(), &[2, 1]);
        // Equal hints fall back to index order.
        let o = canonical_order(&exact(&[(1, 3), (1, 3), (1, 3)]), Some(&[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(o.permutation(), &[2, 1, 3]);
    }

    #[test]
    fn partition_examples() {
        let b = |d: &DiscreteDistribution| partition(d).boundaries().to_vec();
        assert_eq!(b(&floats(&[0.5, 0.3, 0.2])), vec![q(0, 1), q(1, 2), rational_from_f64(0.8).unwrap(), q(1, 1)]);
        assert_eq!(b(&exact(&[(1, 2), (3, 10), (1, 5)])), vec![q(0, 1), q(1, 2), q(4, 5), q(1, 1)]);
        assert_eq!(b(&floats(&[0.75, 0.25])), vec![q(0, 1), q(3, 4), q(1, 1)]);
        assert_eq!(b(&floats(&[0.5, 0.5])), vec![q(0, 1), q(1, 2), q(1, 1)]);
    }

    #[test]
    fn normalization_and_domain_errors() {
        assert!(matches!(
            DiscreteDistribution::from_f64(vec![0.5, 0.4]),
            Err(Error::Normalization { .. })
        ));
        assert!(matches!(
            DiscreteDistribution::from_rationals(vec![q(1, 2), q(1, 3)]),
            Err(Error::Normalization { .. })
        ));
        assert!(matches!(DiscreteDistribution::from_f64(vec![1.0]), Err(Error::Domain(_))));
        assert!(matches!(DiscreteDistribution::from_f64(vec![1.5, -0.5]), Err(Error::Domain(_))));
        assert!(matches!(DiscreteDistribution::from_f64(vec![f64::NAN, 1.0]), Err(Error::Domain(_))));
        // Within tolerance is accepted and the last boundary forced to one.
        let d = DiscreteDistribution::from_f64(vec![0.5, 0.5 - 1e-14]).unwrap();
        assert_eq!(partition(&d).boundaries()[2], q(1, 1));
    }

    #[test]
    fn select_outcome_examples() {
        let part = partition(&floats(&[0.5, 0.3, 0.2]));
        assert_eq!(select_outcome(&part, &r_of(0, 1)).unwrap(), 1);
        assert_eq!(select_outcome(&part, &r_of(1, 2)).unwrap(), 2);
        assert_eq!(select_outcome(&part, &r_of(99, 100)).unwrap(), 3);
    }

    #[test]
    fn select_outcome_skips_empty_intervals() {
        let part = partition(&exact(&[(0, 1), (1, 2), (0, 1), (1, 2)]));
        assert_eq!(select_outcome(&part, &r_of(0, 1)).unwrap(), 2);
        assert_eq!(select_outcome(&part, &r_of(1, 2)).unwrap(), 4);
    }

    #[test]
    fn select_outcome_reports_undecidable_r() {
        let part = partition(&exact(&[(1, 3), (2, 3)]));
        // 0.0101 covers [5/16, 6/16), which contains the boundary 1/3.
        let r = UnitReal::from_bit_str("0101").unwrap();
        assert!(select_outcome(&part, &r).unwrap_err().is_exhaustion());
        // One bit of r = 0.1 covers [1/2, 1): inside outcome 2 entirely.
        assert_eq!(select_outcome(&part, &UnitReal::from_bit_str("1").unwrap()).unwrap(), 2);
        // A boundary equal to v is decided (left end included).
        let half = partition(&exact(&[(1, 2), (1, 2)]));
        assert_eq!(select_outcome(&half, &UnitReal::from_bit_str("1").unwrap()).unwrap(), 2);
        // ... but one strictly inside [0, 1/2) is not.
        let quarter = partition(&exact(&[(1, 4), (3, 4)]));
        assert!(select_outcome(&quarter, &UnitReal::from_bit_str("0").unwrap()).is_err());
    }

    #[test]
    fn cdf_examples() {
        let d = floats(&[0.5, 0.3, 0.2]);
        assert_eq!(cdf(&d, &q(2, 5)), q(0, 1));
        assert_eq!(cdf(&d, &q(6, 5)), q(1, 1));
        assert_eq!(cdf(&d, &q(3, 5)), q(1, 2));
        let e = exact(&[(1, 2), (3, 10), (1, 5)]);
        assert_eq!(cdf(&e, &q(4, 5)), q(4, 5));
        assert_eq!(cdf(&e, &q(-1, 1)), q(0, 1));
        assert_eq!(cdf(&e, &q(1, 1)), q(1, 1));
    }

    #[test]
    fn partition_measure_identity_brute_force() {
        for probs in all_rational_distributions(16, 5) {
            let dist = DiscreteDistribution::from_rationals(probs.clone()).unwrap();
            let part = partition(&dist);
            let b = part.boundaries();
            assert!(b[0].is_zero());
            assert!(b.last().unwrap().is_one());
            assert!(b.windows(2).all(|w| w[0] <= w[1]));
            let total: BigRational = (1..=part.len()).map(|i| part.interval_length(i)).sum();
            assert!(total.is_one());
            for (i, p) in probs.iter().enumerate() {
                assert_eq!(&part.interval_length(i + 1), p);
            }
        }
    }

    #[test]
    fn select_consistency_at_ten_bits() {
        for probs in all_rational_distributions(8, 4) {
            let part = partition(&DiscreteDistribution::from_rationals(probs).unwrap());
            for k in 0u64..1024 {
                let v = q(k as i64, 1024);
                let expected = (1..=part.len())
                    .find(|&i| part.boundaries()[i - 1] <= v && v < part.boundaries()[i])
                    .unwrap();
                let r = UnitReal::from_fraction(k, 1024u64, 40).unwrap();
                assert_eq!(select_outcome(&part, &r).unwrap(), expected);
            }
        }
    }

    #[test]
    fn inverse_transform_frequencies_small_sweep() {
        let bits = 12;
        for probs in all_rational_distributions(6, 3) {
            let part = partition(&DiscreteDistribution::from_rationals(probs.clone()).unwrap());
            let mut counts = vec![0u64; probs.len()];
            for k in 0u64..1 << bits {
                let r = UnitReal::from_fraction(k, 1u64 << bits, 64).unwrap();
                counts[select_outcome(&part, &r).unwrap() - 1] += 1;
            }
            for (c, p) in counts.iter().zip(&probs) {
                let freq = q(*c as i64, 1 << bits);
                assert!((freq - p).abs() <= q(1, 1 << (bits - 1)));
            }
        }
    }

    #[test]
    fn partition_serializes_for_audit() {
        let json = serde_json::to_string(&partition(&exact(&[(1, 2), (3, 10), (1, 5)]))).unwrap();
        assert_eq!(json, r#"{"mode":"exact","boundaries":["0","1/2","4/5","1"]}"#);
        let json = serde_json::to_string(&partition(&floats(&[0.5, 0.5]))).unwrap();
        assert_eq!(json, r#"{"mode":"float","boundaries":[0.0,0.5,1.0]}"#);
    }

    #[test]
    fn select_ordered_maps_back_to_basis_index() {
        let d = floats(&[0.2, 0.5, 0.3]);
        let (order, slot, outcome) =
            select_ordered(&d, &r_of(3, 5), None, OrderingMode::Canonical).unwrap();
        assert_eq!(order.permutation(), &[2, 3, 1]);
        assert_eq!((slot, outcome), (2, 3));
        let (_, slot, outcome) = select_ordered(&d, &r_of(3, 5), None, OrderingMode::Basis).unwrap();
        assert_eq!((slot, outcome), (2, 2));
    }

    fn arb_float_distribution() -> impl Strategy<Value = DiscreteDistribution> {
        prop::collection::vec(0u32..1000, 2..8)
            .prop_filter("non-zero total", |w| w.iter().any(|&x| x > 0))
            .prop_map(|w| {
                let total: u32 = w.iter().sum();
                DiscreteDistribution::from_f64(w.iter().map(|&x| x as f64 / total as f64).collect())
                    .unwrap()
            })
    }

    proptest! {
        #[test]
        fn canonical_order_is_non_increasing(
            dist in arb_float_distribution(),
            hints in prop::collection::vec(-1.0f64..1.0, 8),
            use_hints in any::<bool>(),
        ) {
            let hints = &hints[..dist.len()];
            let order = canonical_order(&dist, use_hints.then_some(hints)).unwrap();
            let sorted = dist.permuted(&order).probs_f64();
            prop_assert!(sorted.windows(2).all(|w| w[0] >= w[1]));
            let mut seen = order.permutation().to_vec();
            seen.sort_unstable();
            prop_assert_eq!(seen, (1..=dist.len()).collect::<Vec<_>>());
        }

        #[test]
        fn cdf_is_a_right_continuous_staircase(dist in arb_float_distribution()) {
            let part = partition(&dist);
            let b = part.boundaries();
            let probs = dist.probs_rational();
            let eps = q(1, 1 << 30);
            for i in 1..=dist.len() {
                // Value at a boundary equals the value just to its right.
                let at = cdf(&dist, &b[i]);
                prop_assert_eq!(&at, &cdf(&dist, &(&b[i] + &eps / q(1024, 1))));
                if b[i] > b[i - 1] {
                    // Jump of exactly p_i when approaching r_i from the left.
                    let before = cdf(&dist, &(&b[i] - &eps / q(1 << 20, 1)));
                    prop_assert_eq!(&at - &before, part.interval_length(i));
                    if dist.mode() == ScalarMode::Exact {
                        prop_assert_eq!(&at - before, probs[i - 1].clone());
                    }
                }
            }
            let samples: Vec<BigRational> = (-4..=36).map(|k| q(k, 32)).collect();
            let values: Vec<BigRational> = samples.iter().map(|x| cdf(&dist, x)).collect();
            prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
