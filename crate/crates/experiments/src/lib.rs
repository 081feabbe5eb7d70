//! Batch experiments over the rotated Ising chain: exact references, RBM
//! training sweeps and cumulant truncation studies, emitted as CSV files plus
//! an append-only `index.json`.

pub mod config;
pub mod output;
pub mod runs;
pub mod training;

use std::path::Path;

use anyhow::Context;

pub use config::{ExperimentConfig, ExperimentKind, Profile};
use output::{ArtifactDir, RecordStatus, ResultIndex};

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub invocation: String,
    pub n_records: usize,
    pub hard_failures: usize,
    pub refused: usize,
}

/// Runs one experiment and appends its records to `out/index.json`.
pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<RunSummary> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut index = ResultIndex::load(out)?;
    let invocation = index.next_invocation(kind.name());
    let dir = ArtifactDir::create(out, &invocation)?;
    dir.write_text("config.toml", &toml::to_string_pretty(cfg)?)?;

    let records = match kind {
        ExperimentKind::PhaseDiagram => runs::phase_diagram(cfg, &dir),
        ExperimentKind::Degeneracy => runs::degeneracy(cfg, &dir),
        ExperimentKind::PiCompare => runs::pi_compare(cfg, &dir),
        ExperimentKind::Uniformity => runs::uniformity(cfg, &dir),
        ExperimentKind::Cumulant => runs::cumulant(cfg, &dir),
        ExperimentKind::SizeScaling => runs::size_scaling(cfg, &dir),
    }?;

    let count = |s: RecordStatus| records.iter().filter(|r| r.status == s).count();
    let summary = RunSummary {
        invocation: invocation.clone(),
        n_records: records.len(),
        hard_failures: count(RecordStatus::HardFailure),
        refused: count(RecordStatus::Refused),
    };
    index.append(kind.name(), &invocation, records);
    index.save(out)?;
    Ok(summary)
}
