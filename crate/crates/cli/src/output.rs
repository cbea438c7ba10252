use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use geoshift::eval::TrainConfig;
use geoshift::export::{to_json_bytes, write_atomic};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Parameters of one invocation. Echoed into every JSON and SVG artifact and
/// into `run.json`, which also lists a digest of every file written.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grouping: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<&'static str, serde_json::Value>,
}

impl RunConfig {
    pub fn new(command: &'static str) -> Self {
        RunConfig {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            ..RunConfig::default()
        }
    }

    pub fn manifest(mut self, path: &Path) -> Self {
        self.manifest = Some(path.display().to_string());
        self
    }

    pub fn output_dir(mut self, path: &Path) -> Self {
        self.output_dir = Some(path.display().to_string());
        self
    }

    pub fn param(mut self, name: &'static str, value: impl Serialize) -> Self {
        self.parameters
            .insert(name, serde_json::to_value(value).expect("parameters serialize"));
        self
    }
}

#[derive(Serialize)]
struct WithRun<'a, T> {
    run: &'a RunConfig,
    #[serde(flatten)]
    payload: &'a T,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    run: &'a RunConfig,
    artifacts: &'a BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects the files of one run; every write is atomic.
pub struct Outputs {
    dir: PathBuf,
    run: RunConfig,
    artifacts: BTreeMap<String, String>,
}

impl Outputs {
    pub fn new(dir: &Path, run: RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            run,
            artifacts: BTreeMap::new(),
        })
    }

    pub fn run(&self) -> &RunConfig {
        &self.run
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.artifacts.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// JSON payload with the run block merged in at the top level.
    pub fn json<T: Serialize>(&mut self, name: &str, payload: &T) -> Result<()> {
        let bytes = to_json_bytes(&WithRun {
            run: &self.run,
            payload,
        })?;
        self.bytes(name, &bytes)
    }

    /// SVG with the run block as JSON inside `<metadata>`.
    pub fn svg(&mut self, name: &str, svg: &str) -> Result<()> {
        let run = serde_json::to_string(&self.run)?;
        let run = run.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let body = match svg.find('>') {
            Some(i) => format!("{}\n<metadata>{run}</metadata>{}", &svg[..=i], &svg[i + 1..]),
            None => svg.to_string(),
        };
        self.bytes(name, body.as_bytes())
    }

    /// Writes `run.json` and returns the artifact names.
    pub fn finish(self) -> Result<Vec<String>> {
        let bytes = to_json_bytes(&RunRecord {
            run: &self.run,
            artifacts: &self.artifacts,
        })?;
        let path = self.dir.join("run.json");
        write_atomic(&path, &bytes).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(self.artifacts.into_keys().collect())
    }
}

/// File-name form of a group label: `North America` becomes `north_america`.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}
