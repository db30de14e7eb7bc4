//! The jump sequence: per-jump distributions from a [`JumpScript`], one
//! `r_j` per jump from a driver, one [`JumpRecord`] per reduction.
//!
//! Trajectory files are newline-delimited JSON. The first line is a
//! header carrying the config digest, driver kind and the canonical run
//! config; each following line is one jump; an optional last line marks
//! where a finite driver ran out:
//!
//! ```text
//! {"type":"header","format":"qjump-trajectory","version":1,"config_digest":"sha256:…","driver_kind":"preassigned","config":{…}}
//! {"type":"jump","j":1,"r":"64:1999999999999999","probs":[0.5,0.3,0.2],"permutation":[1,2,3],"outcome":1,"canonical_outcome":1}
//! {"type":"exhausted","at_j":4,"reason":"…"}
//! ```
//!
//! The config digest is SHA-256 over the compact `serde_json` encoding of
//! the canonical [`RunConfigSpec`], written as `sha256:<hex>`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use num_bigint::BigUint;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::drivers::{Driver, DriverConfig, DriverKind, DriverSpec, JumpInstant, DEFAULT_RESOLUTION};
use crate::error::{Error, Result};
use crate::probability::{select_ordered, DiscreteDistribution, OrderingMode, OutcomeOrdering};
use crate::quantum::{born_probabilities, AmplitudeSpec, StateVector};
use crate::scalar::{parse_rational, rational_to_string, NumberSpec, ScalarMode};
use crate::unit_real::UnitReal;

pub const TRAJECTORY_FORMAT: &str = "qjump-trajectory";
pub const TRAJECTORY_VERSION: u32 = 1;

/// How many jumps to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpCount {
    Finite(usize),
    /// Until the script or the driver runs out; one of them must be finite.
    UntilExhaustion,
}

impl JumpCount {
    pub fn finite(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n_jumps must be at least 1"));
        }
        Ok(JumpCount::Finite(n))
    }
}

impl Serialize for JumpCount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            JumpCount::Finite(n) => s.serialize_u64(*n as u64),
            JumpCount::UntilExhaustion => s.serialize_str("until_exhaustion"),
        }
    }
}

impl<'de> Deserialize<'de> for JumpCount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => JumpCount::finite(n).map_err(serde::de::Error::custom),
            Raw::Word(w) if w == "until_exhaustion" => Ok(JumpCount::UntilExhaustion),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "n_jumps must be a positive integer or \"until_exhaustion\", got {w:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptMode {
    FixedState,
    StateList,
    FixedDistribution,
    DistributionList,
}

/// Where a jump's distribution comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpSource {
    State(StateVector),
    Distribution(DiscreteDistribution),
}

impl JumpSource {
    fn distribution(&self) -> DiscreteDistribution {
        match self {
            JumpSource::State(s) => born_probabilities(s),
            JumpSource::Distribution(d) => d.clone(),
        }
    }

    fn dimension(&self) -> usize {
        match self {
            JumpSource::State(s) => s.dimension(),
            JumpSource::Distribution(d) => d.len(),
        }
    }

    fn mode(&self) -> ScalarMode {
        match self {
            JumpSource::State(s) => s.mode(),
            JumpSource::Distribution(d) => d.mode(),
        }
    }
}

/// Per-jump distributions. This is an injection point for whatever
/// produces the states between jumps, not a dynamical law.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpScript {
    mode: ScriptMode,
    entries: Vec<JumpSource>,
    hints: Vec<Option<Vec<f64>>>,
    n_jumps: JumpCount,
}

impl JumpScript {
    fn new(mode: ScriptMode, entries: Vec<JumpSource>, n_jumps: JumpCount) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("jump script is empty"));
        }
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.mode() != first.mode()) {
                return Err(Error::domain("script mixes float and exact entries"));
            }
        }
        if let (ScriptMode::StateList | ScriptMode::DistributionList, JumpCount::Finite(n)) = (mode, n_jumps) {
            if entries.len() < n {
                return Err(Error::domain(format!(
                    "script lists {} entries but n_jumps is {n}",
                    entries.len()
                )));
            }
        }
        let hints = vec![None; entries.len()];
        Ok(JumpScript {
            mode,
            entries,
            hints,
            n_jumps,
        })
    }

    pub fn fixed_state(state: StateVector, n_jumps: JumpCount) -> Result<Self> {
        Self::new(ScriptMode::FixedState, vec![JumpSource::State(state)], n_jumps)
    }

    pub fn state_list(states: Vec<StateVector>, n_jumps: JumpCount) -> Result<Self> {
        Self::new(
            ScriptMode::StateList,
            states.into_iter().map(JumpSource::State).collect(),
            n_jumps,
        )
    }

    pub fn fixed_distribution(dist: DiscreteDistribution, n_jumps: JumpCount) -> Result<Self> {
        Self::new(ScriptMode::FixedDistribution, vec![JumpSource::Distribution(dist)], n_jumps)
    }

    pub fn distribution_list(dists: Vec<DiscreteDistribution>, n_jumps: JumpCount) -> Result<Self> {
        Self::new(
            ScriptMode::DistributionList,
            dists.into_iter().map(JumpSource::Distribution).collect(),
            n_jumps,
        )
    }

    /// Derivative hints for tie-breaking, one optional vector per entry.
    pub fn with_hints(mut self, hints: Vec<Option<Vec<f64>>>) -> Result<Self> {
        if hints.len() != self.entries.len() {
            return Err(Error::domain(format!(
                "{} hint vectors for {} script entries",
                hints.len(),
                self.entries.len()
            )));
        }
        for (h, e) in hints.iter().zip(&self.entries) {
            if let Some(h) = h {
                if h.len() != e.dimension() {
                    return Err(Error::domain("derivative hints length mismatch"));
                }
                if h.iter().any(|x| !x.is_finite()) {
                    return Err(Error::domain("derivative hints must be finite"));
                }
            }
        }
        self.hints = hints;
        Ok(self)
    }

    pub fn with_jumps(mut self, n_jumps: JumpCount) -> Result<Self> {
        let hints = std::mem::take(&mut self.hints);
        Self::new(self.mode, self.entries, n_jumps)?.with_hints(hints)
    }

    pub fn mode(&self) -> ScriptMode {
        self.mode
    }

    pub fn scalar_mode(&self) -> ScalarMode {
        self.entries[0].mode()
    }

    pub fn n_jumps(&self) -> JumpCount {
        self.n_jumps
    }

    fn is_fixed(&self) -> bool {
        matches!(self.mode, ScriptMode::FixedState | ScriptMode::FixedDistribution)
    }

    /// Entries available, if the script is a finite list.
    pub fn capacity(&self) -> Option<usize> {
        (!self.is_fixed()).then_some(self.entries.len())
    }

    fn entry(&self, j: usize) -> Option<(&JumpSource, Option<&[f64]>)> {
        let i = if self.is_fixed() { 0 } else { j - 1 };
        self.entries.get(i).map(|e| (e, self.hints[i].as_deref()))
    }

    pub fn to_spec(&self) -> ScriptSpec {
        let states = || {
            self.entries
                .iter()
                .map(|e| match e {
                    JumpSource::State(s) => s.to_specs(),
                    JumpSource::Distribution(_) => unreachable!("state script holds states"),
                })
                .collect::<Vec<_>>()
        };
        let dists = || {
            self.entries
                .iter()
                .map(|e| match e {
                    JumpSource::Distribution(d) => d.to_specs(),
                    JumpSource::State(_) => unreachable!("distribution script holds distributions"),
                })
                .collect::<Vec<_>>()
        };
        let list_hints = || self.hints.iter().any(Option::is_some).then(|| self.hints.clone());
        match self.mode {
            ScriptMode::FixedState => ScriptSpec::FixedState {
                state: states().remove(0),
                hints: self.hints[0].clone(),
            },
            ScriptMode::StateList => ScriptSpec::StateList {
                states: states(),
                hints: list_hints(),
            },
            ScriptMode::FixedDistribution => ScriptSpec::FixedDistribution {
                distribution: dists().remove(0),
                hints: self.hints[0].clone(),
            },
            ScriptMode::DistributionList => ScriptSpec::DistributionList {
                distributions: dists(),
                hints: list_hints(),
            },
        }
    }
}

/// Script section of a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptSpec {
    FixedState {
        state: Vec<AmplitudeSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hints: Option<Vec<f64>>,
    },
    StateList {
        states: Vec<Vec<AmplitudeSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hints: Option<Vec<Option<Vec<f64>>>>,
    },
    FixedDistribution {
        distribution: Vec<NumberSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hints: Option<Vec<f64>>,
    },
    DistributionList {
        distributions: Vec<Vec<NumberSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hints: Option<Vec<Option<Vec<f64>>>>,
    },
}

impl ScriptSpec {
    pub fn build(&self, mode: ScalarMode, n_jumps: JumpCount) -> Result<JumpScript> {
        match self {
            ScriptSpec::FixedState { state, hints } => {
                JumpScript::fixed_state(StateVector::from_specs(state, mode)?, n_jumps)?
                    .with_hints(vec![hints.clone()])
            }
            ScriptSpec::StateList { states, hints } => {
                let states = states
                    .iter()
                    .map(|s| StateVector::from_specs(s, mode))
                    .collect::<Result<Vec<_>>>()?;
                let n = states.len();
                JumpScript::state_list(states, n_jumps)?.with_hints(hints.clone().unwrap_or_else(|| vec![None; n]))
            }
            ScriptSpec::FixedDistribution { distribution, hints } => JumpScript::fixed_distribution(
                DiscreteDistribution::from_specs(distribution, mode)?,
                n_jumps,
            )?
            .with_hints(vec![hints.clone()]),
            ScriptSpec::DistributionList { distributions, hints } => {
                let dists = distributions
                    .iter()
                    .map(|d| DiscreteDistribution::from_specs(d, mode))
                    .collect::<Result<Vec<_>>>()?;
                let n = dists.len();
                JumpScript::distribution_list(dists, n_jumps)?
                    .with_hints(hints.clone().unwrap_or_else(|| vec![None; n]))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Bits of each `r_j` used for selection; longer values are truncated.
    pub resolution: usize,
    pub ordering: OrderingMode,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            resolution: DEFAULT_RESOLUTION,
            ordering: OrderingMode::Canonical,
        }
    }
}

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

/// Serialized run configuration. Its canonical re-encoding is what the
/// config digest covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigSpec {
    #[serde(default)]
    pub mode: ScalarMode,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub ordering: OrderingMode,
    pub n_jumps: JumpCount,
    pub script: ScriptSpec,
    pub driver: DriverSpec,
}

impl RunConfigSpec {
    pub fn build(&self, base_dir: Option<&Path>) -> Result<RunConfig> {
        if self.resolution == 0 {
            return Err(Error::domain("resolution must be positive"));
        }
        Ok(RunConfig {
            script: self.script.build(self.mode, self.n_jumps)?,
            driver: self.driver.build(self.resolution, base_dir)?,
            options: RunOptions {
                resolution: self.resolution,
                ordering: self.ordering,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub script: JumpScript,
    pub driver: DriverConfig,
    pub options: RunOptions,
}

impl RunConfig {
    pub fn to_spec(&self) -> RunConfigSpec {
        canonical_spec(&self.script, &self.driver, &self.options)
    }

    pub fn digest(&self) -> String {
        digest_of(&self.to_spec())
    }

    pub fn run(&self) -> Result<Trajectory> {
        run(&self.script, &self.driver, &self.options)
    }
}

fn canonical_spec(script: &JumpScript, driver: &DriverConfig, options: &RunOptions) -> RunConfigSpec {
    RunConfigSpec {
        mode: script.scalar_mode(),
        resolution: options.resolution,
        ordering: options.ordering,
        n_jumps: script.n_jumps(),
        script: script.to_spec(),
        driver: driver.to_spec(),
    }
}

fn digest_of(spec: &RunConfigSpec) -> String {
    let bytes = serde_json::to_vec(spec).expect("config serializes");
    format!("sha256:{}", hex::encode(Sha256::digest(&bytes)))
}

/// One jump as recorded in a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub j: usize,
    /// The value used for selection, truncated to the run's resolution.
    pub r: UnitReal,
    /// Probabilities in basis order.
    pub probs: DiscreteDistribution,
    /// Canonical position to basis index, 1-based.
    pub permutation: Vec<usize>,
    pub outcome: usize,
    pub canonical_outcome: usize,
    pub instant: Option<JumpInstant>,
}

/// Where a finite driver (or an undecidable `r`) stopped the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustionMarker {
    /// The jump that could not be performed.
    pub at_j: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config_digest: String,
    pub driver_kind: DriverKind,
    pub config: RunConfigSpec,
    pub records: Vec<JumpRecord>,
    pub exhaustion: Option<ExhaustionMarker>,
}

/// Runs the script against the driver. A finite driver running dry
/// mid-run ends the trajectory with an [`ExhaustionMarker`]; a bit-shift
/// seed too short for the planned jumps is rejected before any jump.
pub fn run(script: &JumpScript, driver: &DriverConfig, options: &RunOptions) -> Result<Trajectory> {
    let spec = canonical_spec(script, driver, options);
    let config_digest = digest_of(&spec);
    let probe = Driver::new(driver.clone(), options.resolution)?;
    let planned = match script.n_jumps() {
        JumpCount::Finite(n) => n,
        JumpCount::UntilExhaustion => match (script.capacity(), probe.capacity()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => {
                return Err(Error::domain(
                    "until_exhaustion needs a finite script or a finite driver",
                ))
            }
        },
    };
    let mut driver = Driver::with_planned_jumps(driver.clone(), options.resolution, planned)?;
    let mut records = Vec::with_capacity(planned.min(1 << 20));
    let mut exhaustion = None;
    for j in 1..=planned {
        let (source, hints) = script.entry(j).expect("script covers the planned jumps");
        let output = match driver.next_r() {
            Ok(o) => o,
            Err(e) if e.is_exhaustion() => {
                exhaustion = Some(ExhaustionMarker {
                    at_j: j,
                    reason: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let r = if output.r.budget() > options.resolution {
            output.r.truncate(options.resolution)?
        } else {
            output.r
        };
        let probs = source.distribution();
        let (ordering, canonical_outcome, outcome) = match select_ordered(&probs, &r, hints, options.ordering) {
            Ok(sel) => sel,
            Err(e) if e.is_exhaustion() => {
                exhaustion = Some(ExhaustionMarker {
                    at_j: j,
                    reason: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        records.push(JumpRecord {
            j,
            r,
            probs,
            permutation: ordering.permutation().to_vec(),
            outcome,
            canonical_outcome,
            instant: output.instant,
        });
    }
    Ok(Trajectory {
        config_digest,
        driver_kind: driver.kind(),
        config: spec,
        records,
        exhaustion,
    })
}

/// Re-runs the configuration and checks the records match bit for bit.
/// Fails with a domain error if the configuration is not the one the
/// trajectory was produced from.
pub fn replay_verify(
    traj: &Trajectory,
    script: &JumpScript,
    driver: &DriverConfig,
    options: &RunOptions,
) -> Result<bool> {
    let digest = digest_of(&canonical_spec(script, driver, options));
    if digest != traj.config_digest {
        return Err(Error::domain(format!(
            "config digest {digest} does not match trajectory digest {}",
            traj.config_digest
        )));
    }
    let fresh = run(script, driver, options)?;
    Ok(fresh.records == traj.records && fresh.exhaustion == traj.exhaustion)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(HeaderLine),
    Jump(RecordLine),
    Exhausted(ExhaustedLine),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderLine {
    format: String,
    version: u32,
    config_digest: String,
    driver_kind: DriverKind,
    config: RunConfigSpec,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    j: usize,
    r: UnitReal,
    probs: Vec<NumberSpec>,
    permutation: Vec<usize>,
    outcome: usize,
    canonical_outcome: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExhaustedLine {
    at_j: usize,
    reason: String,
}

impl Trajectory {
    /// Rebuilds the run configuration from the embedded canonical config.
    pub fn run_config(&self) -> Result<RunConfig> {
        self.config.build(None)
    }

    /// [`replay_verify`] against the configuration stored in the trajectory.
    pub fn replay_verify(&self) -> Result<bool> {
        let config = self.run_config()?;
        replay_verify(self, &config.script, &config.driver, &config.options)
    }

    /// Outcome counts keyed by basis index.
    pub fn histogram(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for rec in &self.records {
            *counts.entry(rec.outcome).or_insert(0) += 1;
        }
        counts
    }

    pub fn outcomes(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.outcome).collect()
    }

    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Line::Header(HeaderLine {
            format: TRAJECTORY_FORMAT.into(),
            version: TRAJECTORY_VERSION,
            config_digest: self.config_digest.clone(),
            driver_kind: self.driver_kind,
            config: self.config.clone(),
        });
        write_line(&mut out, &header)?;
        for rec in &self.records {
            let line = Line::Jump(RecordLine {
                j: rec.j,
                r: rec.r.clone(),
                probs: rec.probs.to_specs(),
                permutation: rec.permutation.clone(),
                outcome: rec.outcome,
                canonical_outcome: rec.canonical_outcome,
                tau: rec.instant.as_ref().map(|i| rational_to_string(&i.tau)),
                m: rec.instant.as_ref().map(|i| i.m.to_string()),
            });
            write_line(&mut out, &line)?;
        }
        if let Some(ex) = &self.exhaustion {
            write_line(
                &mut out,
                &Line::Exhausted(ExhaustedLine {
                    at_j: ex.at_j,
                    reason: ex.reason.clone(),
                }),
            )?;
        }
        Ok(())
    }

    pub fn to_ndjson(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_ndjson(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    /// Parses a trajectory file; errors name the offending line.
    pub fn read_ndjson<R: BufRead>(input: R) -> Result<Self> {
        let mut header: Option<HeaderLine> = None;
        let mut records = Vec::new();
        let mut exhaustion = None;
        for (idx, line) in input.lines().enumerate() {
            let lineno = idx + 1;
            let at = |msg: String| Error::parse(format!("line {lineno}: {msg}"));
            let text = line?;
            if text.trim().is_empty() {
                continue;
            }
            if exhaustion.is_some() {
                return Err(at("content after the exhaustion marker".into()));
            }
            let parsed: Line = serde_json::from_str(&text).map_err(|e| at(e.to_string()))?;
            match parsed {
                Line::Header(h) => {
                    if header.is_some() || lineno != 1 {
                        return Err(at("header must be the first line and appear once".into()));
                    }
                    if h.format != TRAJECTORY_FORMAT || h.version != TRAJECTORY_VERSION {
                        return Err(at(format!("unsupported format {} v{}", h.format, h.version)));
                    }
                    header = Some(h);
                }
                Line::Jump(rec) => {
                    let h = header.as_ref().ok_or_else(|| at("record before header".into()))?;
                    if rec.j != records.len() + 1 {
                        return Err(at(format!("expected j = {}, found {}", records.len() + 1, rec.j)));
                    }
                    records.push(record_from_line(rec, h.config.mode).map_err(|e| at(e.to_string()))?);
                }
                Line::Exhausted(ex) => {
                    header.as_ref().ok_or_else(|| at("marker before header".into()))?;
                    exhaustion = Some(ExhaustionMarker {
                        at_j: ex.at_j,
                        reason: ex.reason,
                    });
                }
            }
        }
        let header = header.ok_or_else(|| Error::parse("line 1: missing header"))?;
        Ok(Trajectory {
            config_digest: header.config_digest,
            driver_kind: header.driver_kind,
            config: header.config,
            records,
            exhaustion,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_ndjson(std::io::BufReader::new(file))
    }

    /// CSV export: `j,r,outcome,tau` with `r` in hex form and `tau` empty
    /// unless the driver supplies instants.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "j,r,outcome,tau")?;
        for rec in &self.records {
            let tau = rec.instant.as_ref().map(|i| rational_to_string(&i.tau)).unwrap_or_default();
            writeln!(out, "{},{},{},{}", rec.j, rec.r, rec.outcome, tau)?;
        }
        Ok(())
    }
}

fn write_line<W: Write>(out: &mut W, line: &Line) -> Result<()> {
    serde_json::to_writer(&mut *out, line).map_err(|e| Error::parse(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

fn record_from_line(rec: RecordLine, mode: ScalarMode) -> Result<JumpRecord> {
    let probs = DiscreteDistribution::from_specs(&rec.probs, mode)?;
    let n = probs.len();
    OutcomeOrdering::from_permutation(rec.permutation.clone())?;
    if rec.permutation.len() != n {
        return Err(Error::domain("permutation length differs from outcome count"));
    }
    if !(1..=n).contains(&rec.outcome) || !(1..=n).contains(&rec.canonical_outcome) {
        return Err(Error::domain("outcome index out of range"));
    }
    let instant = match (rec.tau, rec.m) {
        (Some(tau), Some(m)) => Some(JumpInstant {
            tau: parse_rational(&tau)?,
            m: m.parse::<BigUint>().map_err(|_| Error::parse(format!("bad m {m:?}")))?,
        }),
        (None, None) => None,
        _ => return Err(Error::domain("tau and m must appear together")),
    };
    Ok(JumpRecord {
        j: rec.j,
        r: rec.r,
        probs,
        permutation: rec.permutation,
        outcome: rec.outcome,
        canonical_outcome: rec.canonical_outcome,
        instant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{partition, select_outcome};
    use crate::unit_real::{seed_constant, SeedConstant};
    use num_complex::Complex64;

    fn dist(p: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::from_f64(p.to_vec()).unwrap()
    }

    fn preassigned(vals: &[(u64, u64)]) -> DriverConfig {
        DriverConfig::Preassigned {
            values: vals
                .iter()
                .map(|&(n, d)| UnitReal::from_fraction(n, d, 64).unwrap())
                .collect(),
        }
    }

    fn spec(json: &str) -> RunConfig {
        serde_json::from_str::<RunConfigSpec>(json).unwrap().build(None).unwrap()
    }

    #[test]
    fn certain_state_always_gives_outcome_one() {
        let state = StateVector::basis(2, 1, ScalarMode::Float).unwrap();
        let script = JumpScript::fixed_state(state, JumpCount::finite(5).unwrap()).unwrap();
        let traj = run(&script, &DriverConfig::Stochastic { entropy_seed: 3 }, &RunOptions::default()).unwrap();
        assert_eq!(traj.outcomes(), vec![1; 5]);
        assert_eq!(traj.records.iter().map(|r| r.j).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn preassigned_example() {
        let script = JumpScript::fixed_distribution(dist(&[0.5, 0.3, 0.2]), JumpCount::finite(3).unwrap()).unwrap();
        let traj = run(&script, &preassigned(&[(1, 10), (6, 10), (95, 100)]), &RunOptions::default()).unwrap();
        assert_eq!(traj.outcomes(), vec![1, 2, 3]);
        assert!(traj.exhaustion.is_none());
    }

    #[test]
    fn champernowne_bitshift_example() {
        let script = JumpScript::fixed_distribution(dist(&[0.5, 0.5]), JumpCount::finite(8).unwrap()).unwrap();
        let seed = seed_constant(SeedConstant::Champernowne2, 128).unwrap();
        let traj = run(&script, &DriverConfig::Bitshift { seed }, &RunOptions::default()).unwrap();
        assert_eq!(traj.outcomes(), vec![2, 2, 1, 2, 2, 2, 1, 1]);
        assert!(traj.records.iter().all(|r| r.r.budget() == 64));
    }

    #[test]
    fn exhaustion_mid_run_gives_partial_trajectory() {
        let script = JumpScript::fixed_distribution(dist(&[0.5, 0.5]), JumpCount::finite(5).unwrap()).unwrap();
        let traj = run(&script, &preassigned(&[(1, 10), (9, 10)]), &RunOptions::default()).unwrap();
        assert_eq!(traj.records.len(), 2);
        assert_eq!(traj.exhaustion.as_ref().unwrap().at_j, 3);
    }

    #[test]
    fn bitshift_short_seed_fails_before_running() {
        let script = JumpScript::fixed_distribution(dist(&[0.5, 0.5]), JumpCount::finite(100).unwrap()).unwrap();
        let seed = seed_constant(SeedConstant::Champernowne2, 10).unwrap();
        assert!(run(&script, &DriverConfig::Bitshift { seed }, &RunOptions::default())
            .unwrap_err()
            .is_exhaustion());
    }

    #[test]
    fn until_exhaustion_counts_are_exact() {
        let script = JumpScript::fixed_distribution(dist(&[0.5, 0.5]), JumpCount::UntilExhaustion).unwrap();
        let seed = seed_constant(SeedConstant::Sqrt2Frac, 100).unwrap();
        let traj = run(&script, &DriverConfig::Bitshift { seed }, &RunOptions::default()).unwrap();
        assert_eq!(traj.records.len(), 36);
        let traj = run(&script, &preassigned(&[(1, 3), (2, 3)]), &RunOptions::default()).unwrap();
        assert_eq!(traj.records.len(), 2);
        assert!(run(&script, &DriverConfig::Stochastic { entropy_seed: 1 }, &RunOptions::default()).is_err());
        // A finite list script bounds an infinite driver.
        let list = JumpScript::distribution_list(vec![dist(&[0.5, 0.5]); 4], JumpCount::UntilExhaustion).unwrap();
        let traj = run(&list, &DriverConfig::Stochastic { entropy_seed: 1 }, &RunOptions::default()).unwrap();
        assert_eq!(traj.records.len(), 4);
        // min(n_jumps, capacity) with a finite count.
        for n in 1..6 {
            let script = JumpScript::fixed_distribution(dist(&[0.5, 0.5]), JumpCount::finite(n).unwrap()).unwrap();
            let traj = run(&script, &preassigned(&[(1, 3), (1, 5), (1, 7)]), &RunOptions::default()).unwrap();
            assert_eq!(traj.records.len(), n.min(3));
        }
    }

    #[test]
    fn script_validation() {
        assert!(JumpCount::finite(0).is_err());
        assert!(JumpScript::distribution_list(vec![], JumpCount::UntilExhaustion).is_err());
        assert!(JumpScript::distribution_list(vec![dist(&[0.5, 0.5])], JumpCount::finite(2).unwrap()).is_err());
        let s = JumpScript::fixed_distribution(dist(&[0.5, 0.5]), JumpCount::finite(2).unwrap()).unwrap();
        assert!(s.clone().with_hints(vec![Some(vec![1.0])]).is_err());
        assert!(s.with_hints(vec![Some(vec![1.0, 0.0])]).is_ok());
    }

    #[test]
    fn records_satisfy_reduction_consistency() {
        let states: Vec<StateVector> = (0..20)
            .map(|k| {
                let t = k as f64 * 0.37;
                crate::quantum::normalize(vec![
                    Complex64::new(t.cos(), 0.1),
                    Complex64::new(t.sin(), -0.2),
                    Complex64::new(0.3, t),
                ])
                .unwrap()
            })
            .collect();
        let script = JumpScript::state_list(states.clone(), JumpCount::finite(20).unwrap()).unwrap();
        let traj = run(&script, &DriverConfig::Stochastic { entropy_seed: 11 }, &RunOptions::default()).unwrap();
        for (rec, state) in traj.records.iter().zip(&states) {
            assert_eq!(rec.probs, born_probabilities(state));
            let order = OutcomeOrdering::from_permutation(rec.permutation.clone()).unwrap();
            let slot = select_outcome(&partition(&rec.probs.permuted(&order)), &rec.r).unwrap();
            assert_eq!(slot, rec.canonical_outcome);
            assert_eq!(order.original(slot), rec.outcome);
        }
    }

    #[test]
    fn replay_detects_tampering_and_rejects_unlike_configs() {
        let config = spec(
            r#"{"n_jumps":6,"script":{"kind":"fixed_distribution","distribution":[0.5,0.3,0.2]},
                "driver":{"kind":"stochastic","entropy_seed":99}}"#,
        );
        let traj = config.run().unwrap();
        assert!(replay_verify(&traj, &config.script, &config.driver, &config.options).unwrap());
        assert!(traj.replay_verify().unwrap());
        let mut tampered = traj.clone();
        tampered.records[2].outcome = tampered.records[2].outcome % 3 + 1;
        assert!(!tampered.replay_verify().unwrap());
        let other = DriverConfig::Stochastic { entropy_seed: 100 };
        assert!(matches!(
            replay_verify(&traj, &config.script, &other, &config.options),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ndjson_round_trip_and_byte_stability() {
        let config = spec(
            r#"{"n_jumps":4,"mode":"exact","script":{"kind":"fixed_distribution","distribution":["1/2","3/10","1/5"]},
                "driver":{"kind":"cosmic_time","instants":{"list":["5.25","6.5","7.8","9"]},"time_unit":{"kappa_lambda":"1/2"}}}"#,
        );
        let traj = config.run().unwrap();
        let bytes = traj.to_ndjson();
        assert_eq!(bytes, config.run().unwrap().to_ndjson());
        let back = Trajectory::read_ndjson(&bytes[..]).unwrap();
        assert_eq!(back, traj);
        assert!(back.replay_verify().unwrap());
        let text = String::from_utf8(bytes).unwrap();
        let second = text.lines().nth(1).unwrap();
        assert!(second.contains(r#""tau":"21/2","m":"10""#), "{second}");
        assert!(second.contains(r#""probs":["1/2","3/10","1/5"]"#), "{second}");
    }

    #[test]
    fn ndjson_errors_carry_line_numbers() {
        let config = spec(
            r#"{"n_jumps":3,"script":{"kind":"fixed_distribution","distribution":[0.5,0.5]},
                "driver":{"kind":"preassigned","values":["0.1","0.6"]}}"#,
        );
        let traj = config.run().unwrap();
        assert_eq!(traj.exhaustion.as_ref().unwrap().at_j, 3);
        let text = String::from_utf8(traj.to_ndjson()).unwrap();
        assert_eq!(text.lines().count(), 4);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[2] = lines[2].replace(r#""j":2"#, r#""j":7"#);
        let err = Trajectory::read_ndjson(lines.join("\n").as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = Trajectory::read_ndjson("{\"type\":\"jump\"}\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = Trajectory::read_ndjson(&b""[..]).unwrap_err();
        assert!(err.to_string().contains("missing header"));
    }

    #[test]
    fn csv_export() {
        let config = spec(
            r#"{"n_jumps":2,"resolution":8,"script":{"kind":"fixed_distribution","distribution":[0.5,0.5]},
                "driver":{"kind":"cosmic_time","instants":{"list":["5.25","6.5"]}}}"#,
        );
        let mut buf = Vec::new();
        config.run().unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "j,r,outcome,tau\n1,8:40,1,21/4\n2,8:80,2,13/2\n");
    }

    #[test]
    fn digest_is_stable_under_respelling() {
        let a = spec(
            r#"{"n_jumps":3,"script":{"kind":"fixed_distribution","distribution":[0.5,0.5]},
                "driver":{"kind":"bitshift","seed":{"constant":"champernowne2","budget":80}}}"#,
        );
        let hex = seed_constant(SeedConstant::Champernowne2, 80).unwrap().to_string();
        let b = spec(&format!(
            r#"{{"resolution":64,"ordering":"canonical","n_jumps":3,"script":{{"kind":"fixed_distribution","distribution":[0.5,0.5]}},
                "driver":{{"kind":"bitshift","seed":"{hex}"}}}}"#
        ));
        assert_eq!(a.digest(), b.digest());
        assert!(a.digest().starts_with("sha256:"));
        let c = spec(
            r#"{"n_jumps":4,"script":{"kind":"fixed_distribution","distribution":[0.5,0.5]},
                "driver":{"kind":"bitshift","seed":{"constant":"champernowne2","budget":80}}}"#,
        );
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let bad = r#"{"n_jumps":3,"colour":"red","script":{"kind":"fixed_distribution","distribution":[0.5,0.5]},
                      "driver":{"kind":"stochastic","entropy_seed":1}}"#;
        assert!(serde_json::from_str::<RunConfigSpec>(bad).is_err());
        let bad = r#"{"n_jumps":3,"script":{"kind":"fixed_distribution","distribution":[0.5,0.5],"extra":1},
                      "driver":{"kind":"stochastic","entropy_seed":1}}"#;
        assert!(serde_json::from_str::<RunConfigSpec>(bad).is_err());
        let bad = r#"{"n_jumps":0,"script":{"kind":"fixed_distribution","distribution":[0.5,0.5]},
                      "driver":{"kind":"stochastic","entropy_seed":1}}"#;
        assert!(serde_json::from_str::<RunConfigSpec>(bad).is_err());
    }

    #[test]
    fn hints_reach_the_ordering() {
        let config = spec(
            r#"{"n_jumps":1,"script":{"kind":"fixed_distribution","distribution":[0.4,0.4,0.2],"hints":[-0.1,0.1,0]},
                "driver":{"kind":"preassigned","values":["0.1"]}}"#,
        );
        let traj = config.run().unwrap();
        assert_eq!(traj.records[0].permutation, vec![2, 1, 3]);
        assert_eq!(traj.records[0].outcome, 2);
        assert!(Trajectory::read_ndjson(&traj.to_ndjson()[..]).unwrap().replay_verify().unwrap());
    }
}
