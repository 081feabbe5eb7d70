//! Result records, the append-only `index.json`, and CSV writing.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

pub const INDEX_FILE: &str = "index.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordKey {
    pub n_sites: usize,
    pub lambda: f64,
    pub theta_over_pi: f64,
    /// `None` for exact-only records.
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub e_var: Option<f64>,
    pub e_exact: Option<f64>,
    pub rel_energy_error: Option<f64>,
    pub infidelity: Option<f64>,
    pub sign_average: Option<f64>,
    pub parity: Option<f64>,
    /// Raw `E_1 - E_0`.
    pub gap: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordStatus {
    Ok,
    /// A realization stopped early; the point as a whole still produced results.
    SoftFailure,
    /// The grid point produced no usable result.
    HardFailure,
    /// The grid point exceeded a size limit and was not attempted.
    Refused,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub run_id: String,
    pub invocation: String,
    pub experiment: String,
    pub key: RecordKey,
    pub metrics: Metrics,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A record before it has been assigned a run id.
#[derive(Clone, Debug)]
pub struct PendingRecord {
    pub key: RecordKey,
    pub metrics: Metrics,
    pub artifacts: Vec<String>,
    pub status: RecordStatus,
    pub note: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct ResultIndex {
    pub records: Vec<ResultRecord>,
}

impl ResultIndex {
    pub fn load(out: &Path) -> anyhow::Result<Self> {
        let path = out.join(INDEX_FILE);
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Next free invocation label for `experiment`, e.g. `cumulant-003`.
    pub fn next_invocation(&self, experiment: &str) -> String {
        let mut seen: Vec<&str> = self
            .records
            .iter()
            .filter(|r| r.experiment == experiment)
            .map(|r| r.invocation.as_str())
            .collect();
        seen.sort_unstable();
        seen.dedup();
        format!("{experiment}-{:03}", seen.len() + 1)
    }

    /// Assigns run ids and appends; existing records are never touched.
    pub fn append(&mut self, experiment: &str, invocation: &str, pending: Vec<PendingRecord>) {
        for p in pending {
            let run_id = format!("r{:06}", self.records.len() + 1);
            self.records.push(ResultRecord {
                run_id,
                invocation: invocation.to_string(),
                experiment: experiment.to_string(),
                key: p.key,
                metrics: p.metrics,
                artifacts: p.artifacts,
                status: p.status,
                note: p.note,
            });
        }
    }

    pub fn save(&self, out: &Path) -> anyhow::Result<()> {
        let path = out.join(INDEX_FILE);
        let tmp = out.join(format!("{INDEX_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))
    }
}

/// Directory for one invocation's artifacts, relative paths resolved against `root`.
pub struct ArtifactDir {
    root: PathBuf,
    sub: String,
}

impl ArtifactDir {
    pub fn create(root: &Path, sub: &str) -> anyhow::Result<Self> {
        fs::create_dir_all(root.join(sub)).with_context(|| format!("creating {}/{sub}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            sub: sub.to_string(),
        })
    }

    /// `(absolute path, path relative to the output root)`.
    pub fn file(&self, name: &str) -> (PathBuf, String) {
        let rel = format!("{}/{name}", self.sub);
        (self.root.join(&rel), rel)
    }

    pub fn write_csv<R: Serialize>(&self, name: &str, rows: &[R]) -> anyhow::Result<String> {
        let (path, rel) = self.file(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(rel)
    }

    pub fn write_text(&self, name: &str, text: &str) -> anyhow::Result<String> {
        let (path, rel) = self.file(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(rel)
    }
}

/// `0.25` -> `0.2500`, for file names.
pub fn angle_tag(theta_over_pi: f64) -> String {
    format!("{theta_over_pi:.4}")
}
