//! Experiment configuration: a TOML document layered over a built-in profile.
//!
//! Every experiment kind ships one default file per profile under
//! `configs/<profile>/<kind>.toml`. A user file only needs the keys it
//! changes; tables are merged key by key.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context};
use clap::ValueEnum;
use nqs_core::cumulant::DEFAULT_FLOOR;
use nqs_core::sr::{EtaSampling, SrConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PhaseDiagram,
    Degeneracy,
    PiCompare,
    Uniformity,
    Cumulant,
    SizeScaling,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::PhaseDiagram,
        ExperimentKind::Degeneracy,
        ExperimentKind::PiCompare,
        ExperimentKind::Uniformity,
        ExperimentKind::Cumulant,
        ExperimentKind::SizeScaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PhaseDiagram => "phase-diagram",
            ExperimentKind::Degeneracy => "degeneracy",
            ExperimentKind::PiCompare => "pi-compare",
            ExperimentKind::Uniformity => "uniformity",
            ExperimentKind::Cumulant => "cumulant",
            ExperimentKind::SizeScaling => "size-scaling",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Full-scale settings.
    Paper,
    /// Small chains and short runs.
    #[default]
    Ci,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Ci => "ci",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsGrid {
    pub sizes: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// Rotation angles in units of pi.
    pub thetas_over_pi: Vec<f64>,
    /// Angles at which full probability dumps are written.
    #[serde(default)]
    pub showcase_thetas_over_pi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbmSettings {
    pub alphas: Vec<f64>,
    pub init_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrSettings {
    /// Used as is when `search_trials` is 0, otherwise ignored.
    pub eta: f64,
    pub search_trials: usize,
    #[serde(default)]
    pub eta_sampling: EtaSampling,
    pub epsilon: f64,
    pub n_iter: usize,
    pub n_realizations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CumulantSettings {
    pub floor: f64,
}

impl Default for CumulantSettings {
    fn default() -> Self {
        Self { floor: DEFAULT_FLOOR }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub physics: PhysicsGrid,
    pub rbm: RbmSettings,
    pub sr: SrSettings,
    #[serde(default)]
    pub cumulant: CumulantSettings,
}

fn builtin_text(kind: ExperimentKind, profile: Profile) -> &'static str {
    use ExperimentKind::*;
    match (profile, kind) {
        (Profile::Ci, PhaseDiagram) => include_str!("../configs/ci/phase-diagram.toml"),
        (Profile::Ci, Degeneracy) => include_str!("../configs/ci/degeneracy.toml"),
        (Profile::Ci, PiCompare) => include_str!("../configs/ci/pi-compare.toml"),
        (Profile::Ci, Uniformity) => include_str!("../configs/ci/uniformity.toml"),
        (Profile::Ci, Cumulant) => include_str!("../configs/ci/cumulant.toml"),
        (Profile::Ci, SizeScaling) => include_str!("../configs/ci/size-scaling.toml"),
        (Profile::Paper, PhaseDiagram) => include_str!("../configs/paper/phase-diagram.toml"),
        (Profile::Paper, Degeneracy) => include_str!("../configs/paper/degeneracy.toml"),
        (Profile::Paper, PiCompare) => include_str!("../configs/paper/pi-compare.toml"),
        (Profile::Paper, Uniformity) => include_str!("../configs/paper/uniformity.toml"),
        (Profile::Paper, Cumulant) => include_str!("../configs/paper/cumulant.toml"),
        (Profile::Paper, SizeScaling) => include_str!("../configs/paper/size-scaling.toml"),
    }
}

/// Recursively overlays `top` onto `base`; tables merge, everything else replaces.
fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl ExperimentConfig {
    pub fn builtin(kind: ExperimentKind, profile: Profile) -> anyhow::Result<Self> {
        Self::layered(kind, profile, None)
    }

    /// The profile default with `overrides` (TOML text) merged on top.
    pub fn layered(kind: ExperimentKind, profile: Profile, overrides: Option<&str>) -> anyhow::Result<Self> {
        let mut value: toml::Value = toml::from_str(builtin_text(kind, profile))
            .with_context(|| format!("built-in {} config for {kind}", profile.name()))?;
        if let Some(text) = overrides {
            merge(&mut value, toml::from_str(text).context("parsing config overrides")?);
        }
        let cfg: Self = value.try_into().context("invalid experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(kind: ExperimentKind, profile: Profile, path: Option<&Path>) -> anyhow::Result<Self> {
        let text = path
            .map(|p| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
            .transpose()?;
        Self::layered(kind, profile, text.as_deref())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let p = &self.physics;
        if p.sizes.is_empty() || p.lambdas.is_empty() || p.thetas_over_pi.is_empty() {
            bail!("physics grid needs at least one size, field and angle");
        }
        if let Some(&l) = p.sizes.iter().find(|&&l| l == 0) {
            bail!("chain length {l} is not allowed");
        }
        if self.rbm.alphas.is_empty() || self.rbm.alphas.iter().any(|&a| !(a > 0.0)) {
            bail!("alphas must be a non-empty list of positive numbers");
        }
        if self.sr.n_realizations == 0 {
            bail!("need at least one realization");
        }
        if !(self.cumulant.floor > 0.0) {
            bail!("cumulant floor must be positive");
        }
        self.sr_config(self.rbm.alphas[0], self.sr.eta, self.seed)
            .validate()
            .map_err(anyhow::Error::from)
    }

    pub fn sr_config(&self, alpha: f64, eta: f64, seed: u64) -> SrConfig {
        SrConfig {
            alpha,
            eta,
            epsilon: self.sr.epsilon,
            n_iter: self.sr.n_iter,
            seed,
            init_scale: self.rbm.init_scale,
            ..SrConfig::default()
        }
    }
}
