//! Experiment reports: deterministic JSON with sorted keys and no timings.

use crate::error::Result;
use crate::grid_field::GridSpec;
use crate::TOOL_VERSION;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool_version: String,
    pub model_hash: Option<String>,
    pub grid: Option<GridSpec>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub inputs_digest: String,
    pub meta: ReportMeta,
    pub scalars: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub flags: BTreeMap<String, bool>,
    pub convergence: Vec<f64>,
    pub notes: Vec<String>,
    pub passed: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ExperimentReport {
    /// `inputs` is any serializable description of the experiment inputs; its JSON is hashed.
    pub fn new<I: Serialize>(name: &str, inputs: &I) -> Self {
        let json = serde_json::to_string(inputs).unwrap_or_default();
        Self {
            name: name.to_string(),
            inputs_digest: sha256_hex(json.as_bytes()),
            meta: ReportMeta {
                tool_version: TOOL_VERSION.to_string(),
                model_hash: None,
                grid: None,
                seed: None,
            },
            scalars: BTreeMap::new(),
            series: BTreeMap::new(),
            flags: BTreeMap::new(),
            convergence: Vec::new(),
            notes: Vec::new(),
            passed: true,
        }
    }

    pub fn model(mut self, hash: String) -> Self {
        self.meta.model_hash = Some(hash);
        self
    }

    pub fn grid(mut self, grid: GridSpec) -> Self {
        self.meta.grid = Some(grid);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.meta.seed = Some(seed);
        self
    }

    pub fn scalar(&mut self, key: &str, v: f64) {
        self.scalars.insert(key.to_string(), v);
    }

    pub fn get(&self, key: &str) -> f64 {
        self.scalars.get(key).copied().unwrap_or(f64::NAN)
    }

    pub fn series(&mut self, key: &str, v: Vec<f64>) {
        self.series.insert(key.to_string(), v);
    }

    /// Records a check; the report passes only if every flag does.
    pub fn flag(&mut self, key: &str, ok: bool) {
        self.flags.insert(key.to_string(), ok);
        self.passed = self.flags.values().all(|&b| b);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn summary_line(&self) -> String {
        let failed: Vec<&str> = self.flags.iter().filter(|(_, &v)| !v).map(|(k, _)| k.as_str()).collect();
        if self.passed {
            format!("PASS {}", self.name)
        } else {
            format!("FAIL {} ({})", self.name, failed.join(", "))
        }
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
