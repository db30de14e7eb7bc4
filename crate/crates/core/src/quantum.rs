//! State vectors over the standard basis `|1>, ..., |n>`, Born
//! probabilities, reduction to a basis state, and the retrodiction witness.

use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::{
    canonical_order, partition, select_ordered, DiscreteDistribution, OrderingMode,
    OutcomeOrdering, EPS_NORM,
};
use crate::scalar::{NumberSpec, ScalarMode};
use crate::unit_real::UnitReal;

/// Normalized amplitudes `c_1 .. c_n`, `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Amplitudes,
}

#[derive(Debug, Clone, PartialEq)]
enum Amplitudes {
    Float(Vec<Complex64>),
    Exact(Vec<Complex<BigRational>>),
}

/// One amplitude in JSON: a `[re, im]` pair or a bare real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmplitudeSpec {
    Pair([NumberSpec; 2]),
    Real(NumberSpec),
}

/// Scales `amplitudes` to unit norm. Input already within [`EPS_NORM`] of
/// unit norm is returned unchanged, so re-reading a stored state is exact.
pub fn normalize(amplitudes: Vec<Complex64>) -> Result<StateVector> {
    if amplitudes.len() < 2 {
        return Err(Error::domain(format!(
            "a state needs dimension >= 2, got {}",
            amplitudes.len()
        )));
    }
    if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::domain("amplitudes must be finite"));
    }
    let norm_sqr: f64 = amplitudes.iter().map(Complex64::norm_sqr).sum();
    if norm_sqr == 0.0 {
        return Err(Error::domain("all amplitudes are zero"));
    }
    let amps = if (norm_sqr - 1.0).abs() <= EPS_NORM {
        amplitudes
    } else {
        let norm = norm_sqr.sqrt();
        amplitudes.into_iter().map(|c| c / norm).collect()
    };
    Ok(StateVector {
        amps: Amplitudes::Float(amps),
    })
}

/// Exact counterpart of [`normalize`]. The norm must itself be rational.
pub fn normalize_exact(amplitudes: Vec<Complex<BigRational>>) -> Result<StateVector> {
    if amplitudes.len() < 2 {
        return Err(Error::domain(format!(
            "a state needs dimension >= 2, got {}",
            amplitudes.len()
        )));
    }
    let norm_sqr: BigRational = amplitudes.iter().map(|c| &c.re * &c.re + &c.im * &c.im).sum();
    if norm_sqr.is_zero() {
        return Err(Error::domain("all amplitudes are zero"));
    }
    if norm_sqr.is_one() {
        return Ok(StateVector {
            amps: Amplitudes::Exact(amplitudes),
        });
    }
    let (num, den) = (norm_sqr.numer(), norm_sqr.denom());
    let (root_num, root_den) = (num.sqrt(), den.sqrt());
    if &(&root_num * &root_num) != num || &(&root_den * &root_den) != den {
        return Err(Error::domain(
            "exact mode needs a rational norm; supply normalized amplitudes or use float mode",
        ));
    }
    let norm = BigRational::new(root_num, root_den);
    Ok(StateVector {
        amps: Amplitudes::Exact(amplitudes.into_iter().map(|c| c / norm.clone()).collect()),
    })
}

impl StateVector {
    /// Basis state `|index>` (1-based) of dimension `n`.
    pub fn basis(n: usize, index: usize, mode: ScalarMode) -> Result<Self> {
        if n < 2 || index == 0 || index > n {
            return Err(Error::domain(format!("no basis state {index} in dimension {n}")));
        }
        Ok(match mode {
            ScalarMode::Float => {
                let mut v = vec![Complex64::zero(); n];
                v[index - 1] = Complex64::one();
                StateVector {
                    amps: Amplitudes::Float(v),
                }
            }
            ScalarMode::Exact => {
                let mut v = vec![Complex::<BigRational>::zero(); n];
                v[index - 1] = Complex::one();
                StateVector {
                    amps: Amplitudes::Exact(v),
                }
            }
        })
    }

    pub fn from_specs(values: &[AmplitudeSpec], mode: ScalarMode) -> Result<Self> {
        let pair = |a: &AmplitudeSpec| match a {
            AmplitudeSpec::Pair([re, im]) => (re.clone(), Some(im.clone())),
            AmplitudeSpec::Real(re) => (re.clone(), None),
        };
        match mode {
            ScalarMode::Float => {
                let amps = values
                    .iter()
                    .map(|a| {
                        let (re, im) = pair(a);
                        let im = im.map(|x| x.to_f64()).transpose()?.unwrap_or(0.0);
                        Ok(Complex64::new(re.to_f64()?, im))
                    })
                    .collect::<Result<Vec<_>>>()?;
                normalize(amps)
            }
            ScalarMode::Exact => {
                let amps = values
                    .iter()
                    .map(|a| {
                        let (re, im) = pair(a);
                        let im = im.map(|x| x.to_rational()).transpose()?.unwrap_or_default();
                        Ok(Complex::new(re.to_rational()?, im))
                    })
                    .collect::<Result<Vec<_>>>()?;
                normalize_exact(amps)
            }
        }
    }

    /// JSON form: `[re, im]` pairs, numbers in float mode and fraction strings in exact mode.
    pub fn to_specs(&self) -> Vec<AmplitudeSpec> {
        match &self.amps {
            Amplitudes::Float(v) => v
                .iter()
                .map(|c| {
                    AmplitudeSpec::Pair([
                        NumberSpec::from_f64(c.re).expect("finite"),
                        NumberSpec::from_f64(c.im).expect("finite"),
                    ])
                })
                .collect(),
            Amplitudes::Exact(v) => v
                .iter()
                .map(|c| {
                    AmplitudeSpec::Pair([NumberSpec::from_rational(&c.re), NumberSpec::from_rational(&c.im)])
                })
                .collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        match &self.amps {
            Amplitudes::Float(v) => v.len(),
            Amplitudes::Exact(v) => v.len(),
        }
    }

    pub fn mode(&self) -> ScalarMode {
        match self.amps {
            Amplitudes::Float(_) => ScalarMode::Float,
            Amplitudes::Exact(_) => ScalarMode::Exact,
        }
    }

    /// Amplitudes as doubles (exact ones rounded).
    pub fn amplitudes_f64(&self) -> Vec<Complex64> {
        use num_traits::ToPrimitive;
        match &self.amps {
            Amplitudes::Float(v) => v.clone(),
            Amplitudes::Exact(v) => v
                .iter()
                .map(|c| Complex64::new(c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN)))
                .collect(),
        }
    }

    /// Multiplies every amplitude by the same unit complex number.
    pub fn with_global_phase(&self, phase: Complex64) -> Result<Self> {
        if (phase.norm_sqr() - 1.0).abs() > EPS_NORM {
            return Err(Error::domain("global phase must have unit modulus"));
        }
        match &self.amps {
            Amplitudes::Float(v) => Ok(StateVector {
                amps: Amplitudes::Float(v.iter().map(|c| c * phase).collect()),
            }),
            Amplitudes::Exact(_) => Err(Error::domain(
                "use with_exact_global_phase for exact states",
            )),
        }
    }

    /// Exact global phase `phase`, which must satisfy `|phase| = 1` exactly.
    pub fn with_exact_global_phase(&self, phase: &Complex<BigRational>) -> Result<Self> {
        if !(&phase.re * &phase.re + &phase.im * &phase.im).is_one() {
            return Err(Error::domain("global phase must have unit modulus"));
        }
        match &self.amps {
            Amplitudes::Exact(v) => Ok(StateVector {
                amps: Amplitudes::Exact(v.iter().map(|c| c * phase).collect()),
            }),
            Amplitudes::Float(_) => Err(Error::domain("use with_global_phase for float states")),
        }
    }

    /// True when the states differ only by a global phase, i.e. `|<a|b>| = 1`
    /// (exactly in exact mode, within [`EPS_NORM`] otherwise).
    pub fn same_ray(&self, other: &StateVector) -> bool {
        if self.dimension() != other.dimension() {
            return false;
        }
        if let (Amplitudes::Exact(a), Amplitudes::Exact(b)) = (&self.amps, &other.amps) {
            let inner: Complex<BigRational> =
                a.iter().zip(b).map(|(x, y)| x.conj() * y).fold(Complex::zero(), |s, t| s + t);
            return (&inner.re * &inner.re + &inner.im * &inner.im).is_one();
        }
        let (a, b) = (self.amplitudes_f64(), other.amplitudes_f64());
        let inner: Complex64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        (inner.norm_sqr() - 1.0).abs() <= EPS_NORM
    }
}

/// `p_i = |c_i|^2` in basis order.
pub fn born_probabilities(state: &StateVector) -> DiscreteDistribution {
    match &state.amps {
        Amplitudes::Float(v) => DiscreteDistribution::from_f64(v.iter().map(Complex64::norm_sqr).collect())
            .expect("normalized state has normalized probabilities"),
        Amplitudes::Exact(v) => DiscreteDistribution::from_rationals(
            v.iter().map(|c| &c.re * &c.re + &c.im * &c.im).collect(),
        )
        .expect("normalized state has normalized probabilities"),
    }
}

/// One reduction `|psi> -> |i>` and everything needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionEvent {
    pub pre_state: StateVector,
    /// Basis index of the outcome (1-based).
    pub outcome: usize,
    /// Position of the outcome in the selection order (1-based).
    pub canonical_outcome: usize,
    pub ordering: OutcomeOrdering,
    pub r_used: UnitReal,
    pub probs: DiscreteDistribution,
}

impl ReductionEvent {
    /// The post-jump state, the basis state of the outcome.
    pub fn post_state(&self) -> StateVector {
        StateVector::basis(self.pre_state.dimension(), self.outcome, self.pre_state.mode())
            .expect("outcome lies within the dimension")
    }
}

/// Reduction with canonical ordering.
pub fn reduce(state: &StateVector, r: &UnitReal, derivative_hints: Option<&[f64]>) -> Result<ReductionEvent> {
    reduce_with(state, r, derivative_hints, OrderingMode::Canonical)
}

/// Born probabilities are ordered (canonically or in basis order), laid
/// out as a cumulative partition, and `r` picks the interval; the slot is
/// then mapped back to the basis index.
pub fn reduce_with(
    state: &StateVector,
    r: &UnitReal,
    derivative_hints: Option<&[f64]>,
    mode: OrderingMode,
) -> Result<ReductionEvent> {
    let probs = born_probabilities(state);
    let (ordering, canonical_outcome, outcome) = select_ordered(&probs, r, derivative_hints, mode)?;
    Ok(ReductionEvent {
        pre_state: state.clone(),
        outcome,
        canonical_outcome,
        ordering,
        r_used: r.clone(),
        probs,
    })
}

/// Two distinct states that reduce to the same outcome under the same `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrodictionWitness {
    pub outcome: usize,
    pub first: StateVector,
    pub second: StateVector,
    pub r: UnitReal,
}

impl RetrodictionWitness {
    /// Re-derives the claim: distinct rays, nonzero Born weight on the
    /// outcome in both, and both reductions under `r` land on it.
    pub fn verify(&self) -> Result<bool> {
        if self.first.same_ray(&self.second) {
            return Ok(false);
        }
        for state in [&self.first, &self.second] {
            let p = born_probabilities(state).probs_rational();
            if p[self.outcome - 1].is_zero() || !p[self.outcome - 1].is_positive() {
                return Ok(false);
            }
            if reduce(state, &self.r, None)?.outcome != self.outcome {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Constructs a witness that an outcome does not determine the pre-jump state.
///
/// The first state is `|outcome>` itself. The second is `(|1> + |2>)/sqrt(2)`
/// in dimension 2 and `0.8|outcome> + 0.6|neighbour>` above that. The shared
/// `r` is the midpoint of the outcome's interval in the second state's
/// canonical partition, truncated to 64 bits.
pub fn retrodiction_witness(outcome: usize, n: usize) -> Result<RetrodictionWitness> {
    if n < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {n}")));
    }
    if outcome == 0 || outcome > n {
        return Err(Error::domain(format!("outcome {outcome} outside 1..={n}")));
    }
    let first = StateVector::basis(n, outcome, ScalarMode::Float)?;
    let mut amps = vec![Complex64::zero(); n];
    if n == 2 {
        amps.fill(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    } else {
        let neighbour = if outcome < n { outcome + 1 } else { outcome - 1 };
        amps[outcome - 1] = Complex64::new(0.8, 0.0);
        amps[neighbour - 1] = Complex64::new(0.6, 0.0);
    }
    let second = normalize(amps)?;
    let probs = born_probabilities(&second);
    let order = canonical_order(&probs, None)?;
    let slot = order
        .permutation()
        .iter()
        .position(|&i| i == outcome)
        .expect("permutation covers every outcome")
        + 1;
    let part = partition(&probs.permuted(&order));
    let b = part.boundaries();
    let mid = (&b[slot - 1] + &b[slot]) / BigRational::from_integer(2.into());
    let r = UnitReal::from_rational(&mid, 64)?;
    Ok(RetrodictionWitness {
        outcome,
        first,
        second,
        r,
    })
}
