//! Sources of the sequence `r_1, r_2, ...` that selects jump outcomes.
//!
//! * `stochastic` draws fresh bits from a seeded ChaCha20 generator. It
//!   stands in for genuinely contingent values; the seed exists so runs
//!   can be replayed in tests.
//! * `preassigned` replays a fixed list.
//! * `bitshift` reads `r_j = 0.b_j b_(j+1) ...` off one seed expansion.
//! * `cosmic_time` takes the fractional part of each jump instant
//!   `tau_j = m_j + r_j`, with `tau = t / t_unit`.

use std::fmt;
use std::path::Path;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, rational_to_string, split_integer_fraction, NumberSpec};
use crate::unit_real::{seed_constant, SeedConstant, UnitReal, DEFAULT_SEED_BUDGET};

/// Default number of bits of `r_j` used to select an outcome.
pub const DEFAULT_RESOLUTION: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverKind {
    Stochastic,
    Preassigned,
    Bitshift,
    CosmicTime,
}

impl DriverKind {
    pub fn is_deterministic(self) -> bool {
        self != DriverKind::Stochastic
    }
}

impl fmt::Display for DriverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DriverKind::Stochastic => "stochastic",
            DriverKind::Preassigned => "preassigned",
            DriverKind::Bitshift => "bitshift",
            DriverKind::CosmicTime => "cosmic_time",
        })
    }
}

/// Jump instants in physical time units of `t_Planck`.
#[derive(Debug, Clone, PartialEq)]
pub enum InstantSource {
    /// Strictly increasing, non-negative instants.
    Explicit(Vec<BigRational>),
    /// `t_j = start + j * step` for `j = 1, 2, ...`.
    Arithmetic { start: BigRational, step: BigRational },
}

impl InstantSource {
    pub fn explicit(instants: Vec<BigRational>) -> Result<Self> {
        if let Some(t) = instants.iter().find(|t| t.is_negative()) {
            return Err(Error::domain(format!(
                "instant {} precedes the start of the cycle",
                rational_to_string(t)
            )));
        }
        if let Some(w) = instants.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::domain(format!(
                "instants must strictly increase: {} then {}",
                rational_to_string(&w[0]),
                rational_to_string(&w[1])
            )));
        }
        Ok(InstantSource::Explicit(instants))
    }

    pub fn arithmetic(start: BigRational, step: BigRational) -> Result<Self> {
        if start.is_negative() {
            return Err(Error::domain("arithmetic instants need start >= 0"));
        }
        if !step.is_positive() {
            return Err(Error::domain("arithmetic instants need step > 0"));
        }
        Ok(InstantSource::Arithmetic { start, step })
    }

    /// Instant of jump `j` (1-based), if the source has one.
    fn instant(&self, j: usize) -> Option<BigRational> {
        match self {
            InstantSource::Explicit(list) => list.get(j - 1).cloned(),
            InstantSource::Arithmetic { start, step } => {
                Some(start + step * BigRational::from_integer(j.into()))
            }
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            InstantSource::Explicit(list) => Some(list.len()),
            InstantSource::Arithmetic { .. } => None,
        }
    }
}

/// Choice of time unit: `t_Planck`, or `(kappa Lambda) t_Planck`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnitSelector {
    Planck,
    KappaLambda,
}

/// Multiplier converting `t` (in Planck times) into `tau = t / multiplier`.
///
/// `kappa_lambda` is the dimensionless product `kappa * Lambda`; it is
/// used as given and required only for [`TimeUnitSelector::KappaLambda`].
pub fn time_unit(selector: TimeUnitSelector, kappa_lambda: Option<&BigRational>) -> Result<BigRational> {
    match selector {
        TimeUnitSelector::Planck => Ok(BigRational::one()),
        TimeUnitSelector::KappaLambda => {
            let value = kappa_lambda
                .ok_or_else(|| Error::domain("kappa_lambda unit needs the kappa*Lambda product"))?;
            if !value.is_positive() {
                return Err(Error::domain("time unit multiplier must be positive"));
            }
            Ok(value.clone())
        }
    }
}

/// Integer and fractional part of `tau = t / multiplier`.
pub fn split_instant(t: &BigRational, multiplier: &BigRational) -> Result<(BigUint, BigRational)> {
    if !multiplier.is_positive() {
        return Err(Error::domain("time unit multiplier must be positive"));
    }
    split_integer_fraction(&(t / multiplier))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriverConfig {
    Stochastic { entropy_seed: u64 },
    Preassigned { values: Vec<UnitReal> },
    Bitshift { seed: UnitReal },
    CosmicTime { instants: InstantSource, unit_multiplier: BigRational },
}

impl DriverConfig {
    pub fn kind(&self) -> DriverKind {
        match self {
            DriverConfig::Stochastic { .. } => DriverKind::Stochastic,
            DriverConfig::Preassigned { .. } => DriverKind::Preassigned,
            DriverConfig::Bitshift { .. } => DriverKind::Bitshift,
            DriverConfig::CosmicTime { .. } => DriverKind::CosmicTime,
        }
    }

    /// Canonical JSON form: seeds and preassigned values as hex, instants
    /// inlined as exact rationals.
    pub fn to_spec(&self) -> DriverSpec {
        match self {
            DriverConfig::Stochastic { entropy_seed } => DriverSpec::Stochastic {
                entropy_seed: *entropy_seed,
            },
            DriverConfig::Preassigned { values } => DriverSpec::Preassigned {
                values: values.iter().map(|v| NumberSpec::Text(v.to_string())).collect(),
            },
            DriverConfig::Bitshift { seed } => DriverSpec::Bitshift {
                seed: SeedSpec::Hex(seed.to_string()),
            },
            DriverConfig::CosmicTime {
                instants,
                unit_multiplier,
            } => DriverSpec::CosmicTime {
                instants: match instants {
                    InstantSource::Explicit(list) => {
                        InstantsSpec::List(list.iter().map(NumberSpec::from_rational).collect())
                    }
                    InstantSource::Arithmetic { start, step } => InstantsSpec::Arithmetic {
                        start: NumberSpec::from_rational(start),
                        step: NumberSpec::from_rational(step),
                    },
                },
                time_unit: if unit_multiplier.is_one() {
                    TimeUnitSpec::Planck
                } else {
                    TimeUnitSpec::KappaLambda(NumberSpec::from_rational(unit_multiplier))
                },
            },
        }
    }
}

/// One real as written in a config: a number, a fraction or decimal
/// string, or a `"<bits>:<HEX>"` expansion.
pub fn real_from_spec(spec: &NumberSpec) -> Result<BigRational> {
    match spec {
        NumberSpec::Text(s) if s.contains(':') => Ok(s.parse::<UnitReal>()?.to_rational()),
        other => other.to_rational(),
    }
}

/// Driver section of a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriverSpec {
    Stochastic {
        entropy_seed: u64,
    },
    Preassigned {
        values: Vec<NumberSpec>,
    },
    Bitshift {
        seed: SeedSpec,
    },
    CosmicTime {
        instants: InstantsSpec,
        #[serde(default)]
        time_unit: TimeUnitSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    /// `"<bits>:<HEX>"`.
    Hex(String),
    Constant(ConstantSeed),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantSeed {
    pub constant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstantsSpec {
    List(Vec<NumberSpec>),
    Arithmetic { start: NumberSpec, step: NumberSpec },
    /// Newline-delimited instants, resolved relative to the config's directory.
    File(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnitSpec {
    #[default]
    Planck,
    KappaLambda(NumberSpec),
}

impl DriverSpec {
    /// Resolves the spec. Decimal preassigned values are truncated to
    /// `resolution` bits; relative instant files are looked up under `base_dir`.
    pub fn build(&self, resolution: usize, base_dir: Option<&Path>) -> Result<DriverConfig> {
        Ok(match self {
            DriverSpec::Stochastic { entropy_seed } => DriverConfig::Stochastic {
                entropy_seed: *entropy_seed,
            },
            DriverSpec::Preassigned { values } => DriverConfig::Preassigned {
                values: values
                    .iter()
                    .map(|v| match v {
                        NumberSpec::Text(s) if s.contains(':') => s.parse(),
                        other => UnitReal::from_rational(&other.to_rational()?, resolution),
                    })
                    .collect::<Result<_>>()?,
            },
            DriverSpec::Bitshift { seed } => DriverConfig::Bitshift {
                seed: match seed {
                    SeedSpec::Hex(s) => s.parse()?,
                    SeedSpec::Constant(c) => seed_constant(
                        c.constant.parse::<SeedConstant>()?,
                        c.budget.unwrap_or(DEFAULT_SEED_BUDGET),
                    )?,
                },
            },
            DriverSpec::CosmicTime {
                instants,
                time_unit: unit,
            } => {
                let instants = match instants {
                    InstantsSpec::List(list) => {
                        InstantSource::explicit(list.iter().map(real_from_spec).collect::<Result<_>>()?)?
                    }
                    InstantsSpec::Arithmetic { start, step } => {
                        InstantSource::arithmetic(real_from_spec(start)?, real_from_spec(step)?)?
                    }
                    InstantsSpec::File(path) => {
                        let path = match base_dir {
                            Some(dir) if Path::new(path).is_relative() => dir.join(path),
                            _ => Path::new(path).to_path_buf(),
                        };
                        InstantSource::explicit(load_instants(&path)?)?
                    }
                };
                let unit_multiplier = match unit {
                    TimeUnitSpec::Planck => time_unit(TimeUnitSelector::Planck, None)?,
                    TimeUnitSpec::KappaLambda(v) => {
                        time_unit(TimeUnitSelector::KappaLambda, Some(&real_from_spec(v)?))?
                    }
                };
                DriverConfig::CosmicTime {
                    instants,
                    unit_multiplier,
                }
            }
        })
    }
}

/// Parses newline-delimited decimal or `p/q` values; blank lines and `#` comments are skipped.
pub fn parse_instants(text: &str) -> Result<Vec<BigRational>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then_some((i, line))
        })
        .map(|(i, line)| {
            parse_rational(line).map_err(|e| Error::parse(format!("instants line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn load_instants(path: &Path) -> Result<Vec<BigRational>> {
    parse_instants(&std::fs::read_to_string(path)?)
}

/// Integer part and rescaled instant of a cosmic-time jump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpInstant {
    /// `tau_j = t_j / t_unit`.
    pub tau: BigRational,
    /// `m_j = floor(tau_j)`.
    pub m: BigUint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverOutput {
    pub r: UnitReal,
    pub instant: Option<JumpInstant>,
}

/// A running driver. The cursor counts values already emitted; cloning
/// snapshots it.
#[derive(Debug, Clone)]
pub struct Driver {
    config: DriverConfig,
    resolution: usize,
    cursor: usize,
    rng: Option<ChaCha20Rng>,
}

impl Driver {
    /// `resolution` is the number of bits each jump needs from `r_j`.
    pub fn new(config: DriverConfig, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::domain("per-jump resolution must be positive"));
        }
        let rng = match &config {
            DriverConfig::Stochastic { entropy_seed } => Some(ChaCha20Rng::seed_from_u64(*entropy_seed)),
            _ => None,
        };
        Ok(Driver {
            config,
            resolution,
            cursor: 0,
            rng,
        })
    }

    /// Like [`Driver::new`], but fails immediately when a bit-shift seed
    /// cannot serve `planned_jumps` jumps: the budget must cover
    /// `planned_jumps + resolution` bits.
    pub fn with_planned_jumps(config: DriverConfig, resolution: usize, planned_jumps: usize) -> Result<Self> {
        let driver = Self::new(config, resolution)?;
        if let DriverConfig::Bitshift { seed } = &driver.config {
            if seed.budget() < planned_jumps + resolution {
                return Err(Error::exhausted(format!(
                    "{planned_jumps} jumps at {resolution}-bit resolution need a seed of at least {} bits, got {}",
                    planned_jumps + resolution,
                    seed.budget()
                )));
            }
        }
        Ok(driver)
    }

    pub fn config(&self) -> &DriverConfig {
        &self.config
    }

    pub fn kind(&self) -> DriverKind {
        self.config.kind()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Values emitted so far.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Total number of values this driver can ever emit, if finite.
    pub fn capacity(&self) -> Option<usize> {
        match &self.config {
            DriverConfig::Stochastic { .. } => None,
            DriverConfig::Preassigned { values } => Some(values.len()),
            DriverConfig::Bitshift { seed } => Some(seed.budget().saturating_sub(self.resolution)),
            DriverConfig::CosmicTime { instants, .. } => instants.len(),
        }
    }

    /// Emits `r_j` for the next jump and advances the cursor. On error the
    /// cursor stays put.
    pub fn next_r(&mut self) -> Result<DriverOutput> {
        let j = self.cursor + 1;
        if let Some(cap) = self.capacity() {
            if j > cap {
                return Err(Error::exhausted(format!(
                    "{} driver has no value for jump {j} (capacity {cap})",
                    self.kind()
                )));
            }
        }
        let output = match &self.config {
            DriverConfig::Stochastic { .. } => {
                let rng = self.rng.as_mut().expect("stochastic driver has a generator");
                let words = (0..self.resolution.div_ceil(64)).map(|_| rng.next_u64()).collect();
                DriverOutput {
                    r: UnitReal::from_packed_words(words, self.resolution)?,
                    instant: None,
                }
            }
            DriverConfig::Preassigned { values } => DriverOutput {
                r: values[j - 1].clone(),
                instant: None,
            },
            DriverConfig::Bitshift { seed } => DriverOutput {
                r: seed.shift_left(j - 1)?,
                instant: None,
            },
            DriverConfig::CosmicTime {
                instants,
                unit_multiplier,
            } => {
                let t = instants.instant(j).expect("capacity checked above");
                let tau = &t / unit_multiplier;
                let (m, frac) = split_integer_fraction(&tau)?;
                DriverOutput {
                    r: UnitReal::from_rational(&frac, self.resolution)?,
                    instant: Some(JumpInstant { tau, m }),
                }
            }
        };
        self.cursor = j;
        Ok(output)
    }
}

impl Iterator for Driver {
    type Item = Result<DriverOutput>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.next_r() {
            Err(e) if e.is_exhaustion() => None,
            other => Some(other),
        }
    }
}
