//! Run manifests: a run config plus where to put the results.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "mode": "float",
//!   "resolution": 64,
//!   "n_jumps": 3,
//!   "script": {"kind": "fixed_distribution", "distribution": [0.5, 0.3, 0.2]},
//!   "driver": {"kind": "preassigned", "values": ["0.1", "0.6", "0.95"]},
//!   "output": {"trajectory": "run.ndjson", "csv": "run.csv"}
//! }
//! ```
//!
//! Unknown fields are rejected at every level so that two manifests with
//! the same digest cannot differ in some silently ignored setting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::drivers::{DriverSpec, DEFAULT_RESOLUTION};
use crate::error::{Error, Result};
use crate::jump::{JumpCount, RunConfig, RunConfigSpec, ScriptSpec};
use crate::probability::OrderingMode;
use crate::scalar::ScalarMode;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    #[serde(default)]
    pub mode: ScalarMode,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub ordering: OrderingMode,
    pub n_jumps: JumpCount,
    pub script: ScriptSpec,
    pub driver: DriverSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Output file names, relative to the output directory unless absolute.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub trajectory: PathBuf,
    pub csv: Option<PathBuf>,
    /// Sidecar for run metadata that must stay out of the data file.
    pub meta: PathBuf,
}

impl RunManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: RunManifest = serde_json::from_str(text).map_err(|e| Error::parse(format!("manifest: {e}")))?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::domain(format!(
                "unsupported manifest schema_version {} (expected {MANIFEST_SCHEMA_VERSION})",
                manifest.schema_version
            )));
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn config_spec(&self) -> RunConfigSpec {
        RunConfigSpec {
            mode: self.mode,
            resolution: self.resolution,
            ordering: self.ordering,
            n_jumps: self.n_jumps,
            script: self.script.clone(),
            driver: self.driver.clone(),
        }
    }

    /// Resolves and validates everything the run needs. Relative instant
    /// files are looked up under `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<RunConfig> {
        self.config_spec().build(base_dir)
    }

    /// Output locations: under `out_dir` if given, else `manifest_dir`.
    /// The trajectory defaults to `<stem>.ndjson`.
    pub fn output_paths(&self, stem: &str, manifest_dir: &Path, out_dir: Option<&Path>) -> OutputPaths {
        let dir = out_dir.unwrap_or(manifest_dir);
        let place = |name: &str| {
            let p = Path::new(name);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                dir.join(p)
            }
        };
        let trajectory = place(self.output.trajectory.as_deref().unwrap_or(&format!("{stem}.ndjson")));
        let mut meta = trajectory.clone().into_os_string();
        meta.push(".meta.json");
        OutputPaths {
            csv: self.output.csv.as_deref().map(place),
            meta: PathBuf::from(meta),
            trajectory,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"{"schema_version":1,"n_jumps":3,
        "script":{"kind":"fixed_distribution","distribution":[0.5,0.3,0.2]},
        "driver":{"kind":"preassigned","values":["0.1","0.6","0.95"]}}"#;

    #[test]
    fn basic_manifest_runs() {
        let m = RunManifest::from_json(BASIC).unwrap();
        let traj = m.build(None).unwrap().run().unwrap();
        assert_eq!(traj.outcomes(), vec![1, 2, 3]);
    }

    #[test]
    fn rejects_bad_manifests() {
        assert!(RunManifest::from_json(&BASIC.replace("\"n_jumps\":3", "\"n_jumps\":0")).is_err());
        assert!(RunManifest::from_json(&BASIC.replace("\"schema_version\":1", "\"schema_version\":2")).is_err());
        assert!(RunManifest::from_json(&BASIC.replace("\"n_jumps\"", "\"typo\":1,\"n_jumps\"")).is_err());
        assert!(RunManifest::from_json(&BASIC.replace("[0.5,0.3,0.2]", "[0.5,0.3,0.3]"))
            .unwrap()
            .build(None)
            .is_err());
    }

    #[test]
    fn output_paths() {
        let m = RunManifest::from_json(BASIC).unwrap();
        let p = m.output_paths("run", Path::new("/a"), None);
        assert_eq!(p.trajectory, PathBuf::from("/a/run.ndjson"));
        assert_eq!(p.meta, PathBuf::from("/a/run.ndjson.meta.json"));
        assert_eq!(p.csv, None);
        let m = RunManifest::from_json(&BASIC.replace(
            "\"n_jumps\"",
            r#""output":{"trajectory":"t.ndjson","csv":"/abs/t.csv"},"n_jumps""#,
        ))
        .unwrap();
        let p = m.output_paths("run", Path::new("/a"), Some(Path::new("/b")));
        assert_eq!(p.trajectory, PathBuf::from("/b/t.ndjson"));
        assert_eq!(p.csv, Some(PathBuf::from("/abs/t.csv")));
    }
}
