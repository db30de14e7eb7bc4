//! Finite test battery for driver output: outcome frequencies with a χ²
//! goodness-of-fit test, and a uniformity report (Kolmogorov–Smirnov,
//! lag-1 serial correlation, monobit, runs) over the `r_j` values.
//!
//! These are the operational stand-in for "pseudorandom": passing them
//! says nothing about algorithmic randomness.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::drivers::{DriverConfig, DriverKind};
use crate::error::{Error, Result};
use crate::jump::{run, JumpCount, JumpScript, RunOptions, Trajectory};
use crate::probability::DiscreteDistribution;
use crate::scalar::rational_to_string;
use crate::unit_real::UnitReal;

/// Bits read from the front of each sample by the bit-level tests.
pub const BIT_PREFIX: usize = 32;

/// Cells with expected count below this make χ² unreliable.
pub const MIN_EXPECTED: f64 = 5.0;

fn ser_rationals<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(rational_to_string))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyReport {
    pub samples: usize,
    /// Indexed by basis outcome, 0-based position for outcome `k + 1`.
    pub counts: Vec<usize>,
    #[serde(serialize_with = "ser_rationals")]
    pub frequencies: Vec<BigRational>,
    pub targets: Vec<f64>,
    pub max_abs_deviation: f64,
    /// Infinite when an outcome of probability zero was observed.
    pub chi_squared: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Some cell with positive probability expects fewer than five hits.
    pub low_expected_count: bool,
}

/// Counts `outcomes` (1-based) against `dist`.
pub fn frequency_report_from(outcomes: &[usize], dist: &DiscreteDistribution) -> Result<FrequencyReport> {
    if outcomes.is_empty() {
        return Err(Error::domain("frequency report needs at least one outcome"));
    }
    let k = dist.len();
    let mut counts = vec![0usize; k];
    for &o in outcomes {
        if !(1..=k).contains(&o) {
            return Err(Error::domain(format!("outcome {o} outside 1..={k}")));
        }
        counts[o - 1] += 1;
    }
    let n = outcomes.len();
    let n_big = BigInt::from(n);
    let targets = dist.probs_rational();
    let frequencies: Vec<BigRational> = counts
        .iter()
        .map(|&c| BigRational::new(BigInt::from(c), n_big.clone()))
        .collect();
    let max_abs_deviation = frequencies
        .iter()
        .zip(&targets)
        .map(|(f, p)| (f - p).abs())
        .max()
        .map(|d| to_f64(&d))
        .unwrap_or(0.0);

    // Exact χ² over cells with positive probability.
    let mut chi = BigRational::zero();
    let mut impossible_hit = false;
    let mut cells = 0usize;
    let mut low_expected_count = false;
    for (&c, p) in counts.iter().zip(&targets) {
        if p.is_zero() {
            impossible_hit |= c > 0;
            continue;
        }
        cells += 1;
        let expected = p * BigRational::from_integer(n_big.clone());
        low_expected_count |= to_f64(&expected) < MIN_EXPECTED;
        let diff = BigRational::from_integer(BigInt::from(c)) - &expected;
        chi += &diff * &diff / expected;
    }
    let degrees_of_freedom = cells.saturating_sub(1);
    let (chi_squared, p_value) = if impossible_hit {
        (f64::INFINITY, 0.0)
    } else {
        let chi = to_f64(&chi);
        let p = if degrees_of_freedom == 0 {
            if chi == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            chi_squared_sf(chi, degrees_of_freedom)
        };
        (chi, p)
    };
    Ok(FrequencyReport {
        samples: n,
        counts,
        frequencies,
        targets: dist.probs_f64(),
        max_abs_deviation,
        chi_squared,
        degrees_of_freedom,
        p_value,
        low_expected_count,
    })
}

/// Report for a trajectory whose jumps all share one distribution.
pub fn frequency_report(traj: &Trajectory) -> Result<FrequencyReport> {
    let first = traj
        .records
        .first()
        .ok_or_else(|| Error::domain("trajectory has no records"))?;
    if traj.records.iter().any(|r| r.probs != first.probs) {
        return Err(Error::domain(
            "per-jump distributions differ; use stratified_frequency_reports",
        ));
    }
    frequency_report_from(&traj.outcomes(), &first.probs)
}

/// One report per distinct per-jump distribution, in order of first appearance.
pub fn stratified_frequency_reports(traj: &Trajectory) -> Result<Vec<(DiscreteDistribution, FrequencyReport)>> {
    if traj.records.is_empty() {
        return Err(Error::domain("trajectory has no records"));
    }
    let mut strata: Vec<(DiscreteDistribution, Vec<usize>)> = Vec::new();
    for rec in &traj.records {
        match strata.iter_mut().find(|(d, _)| *d == rec.probs) {
            Some((_, outs)) => outs.push(rec.outcome),
            None => strata.push((rec.probs.clone(), vec![rec.outcome])),
        }
    }
    strata
        .into_iter()
        .map(|(d, outs)| frequency_report_from(&outs, &d).map(|r| (d, r)))
        .collect()
}

impl FrequencyReport {
    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>7}  {:>8}  {:>12}  {:>12}  {:>12}", "outcome", "count", "frequency", "target", "deviation");
        for (i, (&c, t)) in self.counts.iter().zip(&self.targets).enumerate() {
            let f = to_f64(&self.frequencies[i]);
            let _ = writeln!(out, "{:>7}  {:>8}  {:>12.6}  {:>12.6}  {:>12.6}", i + 1, c, f, t, f - t);
        }
        let _ = writeln!(out, "samples            {}", self.samples);
        let _ = writeln!(out, "max |freq - p|     {:.6}", self.max_abs_deviation);
        let _ = writeln!(
            out,
            "chi-squared        {:.6} (df {}, p = {:.6e})",
            self.chi_squared, self.degrees_of_freedom, self.p_value
        );
        if self.low_expected_count {
            let _ = writeln!(out, "warning: some expected counts are below {MIN_EXPECTED}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub samples: usize,
    pub ks_statistic: f64,
    /// `None` when the values have zero variance.
    pub serial_correlation: Option<f64>,
    pub degenerate_correlation: bool,
    pub bits_tested: usize,
    pub monobit_fraction: f64,
    /// `(ones - zeros) / sqrt(bits)`.
    pub monobit_z: f64,
    pub runs: Option<RunsTest>,
}

/// Wald–Wolfowitz runs test on a binary sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunsTest {
    pub runs: usize,
    pub expected: f64,
    pub z: f64,
}

/// `None` when the sequence is constant, where the statistic is undefined.
pub fn runs_test(bits: &[bool]) -> Option<RunsTest> {
    let n = bits.len();
    let ones = bits.iter().filter(|&&b| b).count();
    let zeros = n - ones;
    if ones == 0 || zeros == 0 {
        return None;
    }
    let runs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let (n, n1, n0) = (n as f64, ones as f64, zeros as f64);
    let expected = 2.0 * n1 * n0 / n + 1.0;
    let variance = (expected - 1.0) * (expected - 2.0) / (n - 1.0);
    if variance <= 0.0 {
        return None;
    }
    Some(RunsTest {
        runs,
        expected,
        z: (runs as f64 - expected) / variance.sqrt(),
    })
}

/// One-sample KS distance between the samples and the uniform law on `[0, 1)`.
pub fn ks_statistic(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Lag-1 autocorrelation; `None` for zero variance.
pub fn serial_correlation(values: &[f64]) -> Option<f64> {
    if values.len() < 2 || values.iter().all(|&x| x == values[0]) {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    if var == 0.0 {
        return None;
    }
    let cov: f64 = values.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    Some(cov / var)
}

/// Bit tests read the first [`BIT_PREFIX`] bits of each sample, or all of
/// them when its budget is shorter.
pub fn uniformity_report(rs: &[UnitReal]) -> Result<UniformityReport> {
    if rs.len() < 2 {
        return Err(Error::domain("uniformity report needs at least two samples"));
    }
    let values: Vec<f64> = rs.iter().map(UnitReal::to_f64).collect();
    let bits: Vec<bool> = rs.iter().flat_map(|r| r.bits().take(BIT_PREFIX)).collect();
    let ones = bits.iter().filter(|&&b| b).count();
    let total = bits.len();
    let serial = serial_correlation(&values);
    Ok(UniformityReport {
        samples: rs.len(),
        ks_statistic: ks_statistic(&values),
        serial_correlation: serial,
        degenerate_correlation: serial.is_none(),
        bits_tested: total,
        monobit_fraction: if total == 0 { 0.0 } else { ones as f64 / total as f64 },
        monobit_z: if total == 0 {
            0.0
        } else {
            (2.0 * ones as f64 - total as f64) / (total as f64).sqrt()
        },
        runs: runs_test(&bits),
    })
}

impl UniformityReport {
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"));
        let mut out = String::new();
        let _ = writeln!(out, "samples            {}", self.samples);
        let _ = writeln!(out, "KS statistic       {:.6}", self.ks_statistic);
        let _ = writeln!(out, "serial corr lag 1  {}", opt(self.serial_correlation));
        let _ = writeln!(out, "bits tested        {}", self.bits_tested);
        let _ = writeln!(out, "monobit fraction   {:.6} (z = {:.3})", self.monobit_fraction, self.monobit_z);
        let _ = writeln!(out, "runs z             {}", opt(self.runs.map(|r| r.z)));
        out
    }
}

/// Upper tail of the χ² law with `df` degrees of freedom.
pub fn chi_squared_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(df as f64 / 2.0, x / 2.0)
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`: series
/// for `x < a + 1`, modified Lentz continued fraction otherwise.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_q domain: a > 0, x >= 0");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_MAX_ITER: usize = 10_000;

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    let tiny = f64::MIN_POSITIVE / GAMMA_EPS;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Lanczos approximation (g = 7, nine coefficients), reflection below 1/2.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + G + 0.5;
    let series = COEF[1..]
        .iter()
        .enumerate()
        .fold(COEF[0], |acc, (i, c)| acc + c / (x + (i + 1) as f64));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// One driver's line in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverRow {
    pub driver_kind: DriverKind,
    pub label: String,
    pub jumps: usize,
    /// Jump at which the driver ran dry, if it did.
    pub exhausted_at: Option<usize>,
    pub frequency: Option<FrequencyReport>,
    pub uniformity: Option<UniformityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverComparison {
    pub requested_jumps: usize,
    pub rows: Vec<DriverRow>,
}

fn driver_label(config: &DriverConfig) -> String {
    match config {
        DriverConfig::Stochastic { entropy_seed } => format!("stochastic(seed={entropy_seed})"),
        DriverConfig::Preassigned { values } => format!("preassigned(len={})", values.len()),
        DriverConfig::Bitshift { seed } => format!("bitshift(budget={})", seed.budget()),
        DriverConfig::CosmicTime { .. } => "cosmic_time".to_string(),
    }
}

fn compare_row(config: &DriverConfig, script: &JumpScript, options: &RunOptions) -> Result<DriverRow> {
    let traj = run(script, config, options)?;
    let rs: Vec<UnitReal> = traj.records.iter().map(|r| r.r.clone()).collect();
    Ok(DriverRow {
        driver_kind: config.kind(),
        label: driver_label(config),
        jumps: traj.records.len(),
        exhausted_at: traj.exhaustion.as_ref().map(|e| e.at_j),
        frequency: if traj.records.is_empty() {
            None
        } else {
            Some(frequency_report(&traj)?)
        },
        uniformity: if rs.len() < 2 { None } else { Some(uniformity_report(&rs)?) },
    })
}

/// Runs every driver on the same script for `n` jumps, one thread per
/// driver. Rows come back in `configs` order.
pub fn compare_drivers(
    configs: &[DriverConfig],
    script: &JumpScript,
    n: usize,
    options: &RunOptions,
) -> Result<DriverComparison> {
    let script = script.clone().with_jumps(JumpCount::finite(n)?)?;
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(|| compare_row(c, &script, options)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("comparison worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(DriverComparison {
        requested_jumps: n,
        rows,
    })
}

const COMPARISON_COLUMNS: [&str; 10] = [
    "driver",
    "jumps",
    "exhausted_at",
    "max_dev",
    "chi2",
    "p_value",
    "ks",
    "serial_corr",
    "monobit",
    "runs_z",
];

impl DriverRow {
    fn cells(&self) -> Vec<String> {
        let f = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6}"));
        let freq = self.frequency.as_ref();
        let uni = self.uniformity.as_ref();
        vec![
            self.label.clone(),
            self.jumps.to_string(),
            self.exhausted_at.map_or_else(String::new, |j| j.to_string()),
            f(freq.map(|r| r.max_abs_deviation)),
            f(freq.map(|r| r.chi_squared)),
            f(freq.map(|r| r.p_value)),
            f(uni.map(|r| r.ks_statistic)),
            f(uni.and_then(|r| r.serial_correlation)),
            f(uni.map(|r| r.monobit_fraction)),
            f(uni.and_then(|r| r.runs.map(|t| t.z))),
        ]
    }
}

impl DriverComparison {
    pub fn to_csv(&self) -> String {
        let mut out = COMPARISON_COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.cells().join(","));
            out.push('\n');
        }
        out
    }

    /// Aligned columns; exhausted rows carry a trailing marker.
    pub fn to_text(&self) -> String {
        let mut table: Vec<Vec<String>> = vec![COMPARISON_COLUMNS.iter().map(|s| s.to_string()).collect()];
        table.extend(self.rows.iter().map(|r| {
            let mut cells = r.cells();
            if r.exhausted_at.is_none() {
                cells[2] = "-".into();
            }
            cells.iter_mut().skip(3).filter(|c| c.is_empty()).for_each(|c| *c = "-".into());
            cells
        }));
        let widths: Vec<usize> = (0..COMPARISON_COLUMNS.len())
            .map(|i| table.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (k, row) in table.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            out.push_str(line.join("  ").trim_end());
            if k > 0 && self.rows[k - 1].exhausted_at.is_some() {
                out.push_str("  [exhausted]");
            }
            out.push('\n');
        }
        out
    }
}
