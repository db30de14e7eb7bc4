//! `qjump`: run jump simulations, write seed files, analyze trajectories
//! and print retrodiction witnesses.
//!
//! Exit codes: 0 success, 2 invalid input, 3 a finite driver or seed ran out.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use qjump::statistics::{frequency_report, stratified_frequency_reports, uniformity_report};
use qjump::{reduce, retrodiction_witness, seed_constant, Error, RunManifest, ScalarMode, SeedConstant, Trajectory, UnitReal};
use serde_json::json;

const OUT_DIR_ENV: &str = "QJUMP_OUT_DIR";

#[derive(Parser)]
#[command(name = "qjump", version, about = "Quantum jump simulations with deterministic drivers")]
struct Cli {
    /// Use exact rational arithmetic for states and probabilities.
    #[arg(long, global = true)]
    exact: bool,
    /// Bits of each r_j used for outcome selection.
    #[arg(long, global = true, value_name = "BITS")]
    resolution: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation described by a JSON manifest.
    Simulate { manifest: PathBuf },
    /// Write the first BITS binary digits of a named constant as a seed file.
    Seed { name: String, bits: usize, out: PathBuf },
    /// Frequency and uniformity reports; with a second file, a replay comparison.
    Analyze { trajectory: PathBuf, other: Option<PathBuf> },
    /// Show two different states that reduce to the same outcome under one r.
    Retro { dimension: usize },
}

/// A failed command: exit code plus diagnostic.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_exhaustion() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn fail(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    fail(format!("{}: {e}", path.display()))
}

fn out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Writes through a temporary sibling so readers never see half a file.
fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| io_fail(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_fail(path, e))
}

fn unix_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn simulate(cli: &Cli, manifest_path: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(manifest_path).map_err(|e| io_fail(manifest_path, e))?;
    let mut manifest = RunManifest::from_json(&text)?;
    if cli.exact {
        manifest.mode = ScalarMode::Exact;
    }
    if let Some(bits) = cli.resolution {
        manifest.resolution = bits;
    }
    let manifest_dir = parent_dir(manifest_path);
    let config = manifest.build(Some(&manifest_dir))?;
    let stem = manifest_path.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
    let paths = manifest.output_paths(stem, &manifest_dir, out_dir().as_deref());

    let started = unix_seconds();
    let traj = config.run()?;
    write_file(&paths.trajectory, &traj.to_ndjson())?;
    if let Some(csv) = &paths.csv {
        let mut buf = Vec::new();
        traj.write_csv(&mut buf)?;
        write_file(csv, &buf)?;
    }
    let meta = json!({
        "trajectory": paths.trajectory.display().to_string(),
        "config_digest": traj.config_digest,
        "started_unix": started,
        "finished_unix": unix_seconds(),
        "records": traj.records.len(),
        "exhausted_at": traj.exhaustion.as_ref().map(|e| e.at_j),
    });
    write_file(&paths.meta, format!("{meta:#}\n").as_bytes())?;

    let histogram: Vec<String> = traj.histogram().iter().map(|(k, v)| format!("{k}:{v}")).collect();
    println!(
        "{} records -> {}\nhistogram {}\ndigest {}",
        traj.records.len(),
        paths.trajectory.display(),
        histogram.join(" "),
        traj.config_digest
    );
    match &traj.exhaustion {
        Some(ex) => Err(Failure {
            code: 3,
            message: format!("driver exhausted at jump {}: {}; partial trajectory written", ex.at_j, ex.reason),
        }),
        None => Ok(()),
    }
}

fn seed(name: &str, bits: usize, out: &Path) -> Result<(), Failure> {
    let constant: SeedConstant = name.parse()?;
    let value = seed_constant(constant, bits)?;
    let path = match out_dir() {
        Some(dir) if out.is_relative() => dir.join(out),
        _ => out.to_path_buf(),
    };
    write_file(&path, format!("{value}\n").as_bytes())?;
    println!("{} bits of {} -> {}", bits, constant.name(), path.display());
    Ok(())
}

fn load_trajectory(path: &Path) -> Result<Trajectory, Failure> {
    Trajectory::load(path).map_err(|e| match e {
        Error::Io(io) => io_fail(path, io),
        other => fail(format!("{}: {other}", path.display())),
    })
}

/// First `j` whose records differ, counting a missing record as a difference.
fn first_divergence(a: &Trajectory, b: &Trajectory) -> Option<usize> {
    let common = a.records.len().min(b.records.len());
    (0..common)
        .find(|&i| a.records[i] != b.records[i])
        .map(|i| i + 1)
        .or_else(|| (a.records.len() != b.records.len()).then_some(common + 1))
}

fn analyze(path: &Path, other: Option<&Path>) -> Result<(), Failure> {
    let traj = load_trajectory(path)?;
    let mut text = String::new();
    let mut report = serde_json::Map::new();
    report.insert("trajectory".into(), json!(path.display().to_string()));
    report.insert("config_digest".into(), json!(traj.config_digest));
    report.insert("driver_kind".into(), json!(traj.driver_kind));
    report.insert("records".into(), json!(traj.records.len()));
    report.insert("exhausted_at".into(), json!(traj.exhaustion.as_ref().map(|e| e.at_j)));
    text.push_str(&format!(
        "trajectory {}\ndriver {}  records {}  digest {}\n",
        path.display(),
        traj.driver_kind,
        traj.records.len(),
        traj.config_digest
    ));
    if let Some(ex) = &traj.exhaustion {
        text.push_str(&format!("exhausted at jump {}\n", ex.at_j));
    }

    if !traj.records.is_empty() {
        match frequency_report(&traj) {
            Ok(freq) => {
                text.push_str("\nfrequencies\n");
                text.push_str(&freq.to_text());
                report.insert("frequency".into(), json!(freq));
            }
            Err(_) => {
                let strata = stratified_frequency_reports(&traj)?;
                let mut list = Vec::new();
                for (i, (dist, freq)) in strata.iter().enumerate() {
                    text.push_str(&format!("\nfrequencies, stratum {} (probs {:?})\n", i + 1, dist.probs_f64()));
                    text.push_str(&freq.to_text());
                    list.push(json!({"probs": dist.to_specs(), "report": freq}));
                }
                report.insert("stratified_frequency".into(), json!(list));
            }
        }
    }
    if traj.records.len() >= 2 {
        let rs: Vec<UnitReal> = traj.records.iter().map(|r| r.r.clone()).collect();
        let uni = uniformity_report(&rs)?;
        text.push_str("\nuniformity\n");
        text.push_str(&uni.to_text());
        report.insert("uniformity".into(), json!(uni));
    }

    if let Some(other_path) = other {
        let second = load_trajectory(other_path)?;
        let divergence = if traj.config_digest != second.config_digest {
            None
        } else {
            first_divergence(&traj, &second)
        };
        let same_config = traj.config_digest == second.config_digest;
        let replay = traj.replay_verify()?;
        let verdict = same_config && divergence.is_none() && traj.exhaustion == second.exhaustion && replay;
        text.push_str(&format!("\ncompared with {}\n", other_path.display()));
        if !same_config {
            text.push_str("config digests differ\n");
        } else if let Some(j) = divergence {
            text.push_str(&format!("first divergent j {j}\n"));
        } else {
            text.push_str("records identical\n");
        }
        text.push_str(&format!("replay {replay}\nverdict {verdict}\n"));
        report.insert(
            "comparison".into(),
            json!({
                "other": other_path.display().to_string(),
                "same_config": same_config,
                "first_divergent_j": divergence,
                "replay_verified": replay,
                "verdict": verdict,
            }),
        );
    }

    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
    let dir = out_dir().unwrap_or_else(|| parent_dir(path));
    write_file(&dir.join(format!("{stem}.report.txt")), text.as_bytes())?;
    write_file(
        &dir.join(format!("{stem}.report.json")),
        format!("{:#}\n", serde_json::Value::Object(report)).as_bytes(),
    )?;
    print!("{text}");
    Ok(())
}

fn retro(dimension: usize) -> Result<(), Failure> {
    if dimension < 2 {
        return Err(fail(format!("dimension must be at least 2, got {dimension}")));
    }
    let witness = retrodiction_witness(1, dimension)?;
    let verified = witness.verify()?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "dimension {dimension}, shared outcome {}", witness.outcome);
    let _ = writeln!(out, "shared r {} (~{:.6})", witness.r, witness.r.to_f64());
    for (label, state) in [("first", &witness.first), ("second", &witness.second)] {
        let event = reduce(state, &witness.r, None)?;
        let _ = writeln!(out, "\n{label} state {}", serde_json::to_string(&state.to_specs()).unwrap_or_default());
        let _ = writeln!(out, "  probs       {:?}", event.probs.probs_f64());
        let _ = writeln!(out, "  ordering    {:?}", event.ordering.permutation());
        let _ = writeln!(out, "  slot        {}", event.canonical_outcome);
        let _ = writeln!(out, "  outcome     {}", event.outcome);
    }
    let _ = writeln!(out, "\nverified {verified}");
    if verified {
        Ok(())
    } else {
        Err(fail("witness failed verification"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { manifest } => simulate(&cli, manifest),
        Command::Seed { name, bits, out } => seed(name, *bits, out),
        Command::Analyze { trajectory, other } => analyze(trajectory, other.as_deref()),
        Command::Retro { dimension } => retro(*dimension),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qjump: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
