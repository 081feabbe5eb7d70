//! Exact references and RBM training shared by the experiment runners.

use anyhow::Context;
use nqs_core::exact::{
    approximate_sign_average, degenerate_superpositions, ground_states, relative_energy_error, sign_average,
    SpectrumSummary,
};
use nqs_core::sr::{derive_seed, hyperparameter_search, multi_seed_run, MultiSeedRun, Realization, TrialSummary};
use nqs_core::{RotatedTfim, StateVector};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{ArtifactDir, Metrics, PendingRecord, RecordKey, RecordStatus};

/// Seed of one grid point, derived from the master seed and the point's key
/// so that the same key gets the same seed in every experiment.
pub fn point_seed(master: u64, n_sites: usize, lambda: f64, theta_over_pi: f64, alpha: f64) -> u64 {
    let s = derive_seed(master, 1, n_sites as u64);
    let s = derive_seed(s, 2, lambda.to_bits());
    let s = derive_seed(s, 3, theta_over_pi.to_bits());
    derive_seed(s, 4, alpha.to_bits())
}

pub struct ExactReference {
    pub spectrum: SpectrumSummary,
    pub plus: Option<StateVector>,
    pub minus: Option<StateVector>,
}

impl ExactReference {
    pub fn compute(h: &RotatedTfim) -> anyhow::Result<Self> {
        let spectrum = ground_states(h, 2).with_context(|| {
            format!("exact solve at L={} lambda={} theta={}", h.n_sites, h.lambda, h.theta)
        })?;
        let (plus, minus) = match degenerate_superpositions(&spectrum.eigenvectors[0], &spectrum.eigenvectors[1]) {
            Ok((p, m)) => (Some(p), Some(m)),
            Err(_) => (None, None),
        };
        Ok(Self { spectrum, plus, minus })
    }

    pub fn ground_energy(&self) -> f64 {
        self.spectrum.ground_energy()
    }

    pub fn ground_state(&self) -> &StateVector {
        self.spectrum.ground_state()
    }

    pub fn gap(&self) -> Option<f64> {
        self.spectrum.gap()
    }
}

pub struct TrainedPoint {
    pub alpha: f64,
    pub eta: f64,
    pub trials: Vec<TrialSummary>,
    pub run: MultiSeedRun,
}

impl TrainedPoint {
    pub fn best(&self) -> Option<&Realization> {
        self.run.best()
    }
}

/// Learning-rate search (if configured) followed by independent realizations.
pub fn train_point(
    h: &RotatedTfim,
    cfg: &ExperimentConfig,
    alpha: f64,
    theta_over_pi: f64,
    reference: &StateVector,
) -> anyhow::Result<TrainedPoint> {
    let seed = point_seed(cfg.seed, h.n_sites, h.lambda, theta_over_pi, alpha);
    let (eta, trials) = if cfg.sr.search_trials > 0 {
        // Trials start from realization 0's initialization.
        let base = cfg.sr_config(alpha, cfg.sr.eta, derive_seed(seed, 0, 0));
        let search = hyperparameter_search(h, &base, cfg.sr.search_trials, derive_seed(seed, 1, 0), cfg.sr.eta_sampling)
            .context("learning-rate search")?;
        (search.best_config.eta, search.trials)
    } else {
        (cfg.sr.eta, Vec::new())
    };
    let run = multi_seed_run(h, &cfg.sr_config(alpha, eta, seed), cfg.sr.n_realizations, Some(reference))?;
    log::info!(
        "L={} lambda={} theta={}pi alpha={alpha}: eta={eta:.3e}, best E={:?}",
        h.n_sites,
        h.lambda,
        theta_over_pi,
        run.best().map(|r| r.final_energy)
    );
    Ok(TrainedPoint {
        alpha,
        eta,
        trials,
        run,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizationRow {
    pub n_sites: usize,
    pub lambda: f64,
    pub theta_over_pi: f64,
    pub alpha: f64,
    pub seed: u64,
    pub eta: f64,
    pub status: String,
    pub iterations: usize,
    pub e_var: f64,
    pub e_exact: f64,
    pub rel_energy_error: Option<f64>,
    pub infidelity: Option<f64>,
    pub sign_average: Option<f64>,
    /// Largest imaginary amplitude after phase fixing.
    pub max_imag: Option<f64>,
    pub parity: Option<f64>,
    pub fidelity_plus: Option<f64>,
    pub fidelity_minus: Option<f64>,
    pub is_best: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceCsvRow {
    pub iteration: usize,
    pub energy_re: f64,
    pub energy_im: f64,
    pub variance: f64,
    pub grad_norm: f64,
    pub param_norm: f64,
}

pub fn status_label(r: &Realization) -> String {
    serde_json::to_value(r.trace.status)
        .ok()
        .and_then(|v| v.get("status").and_then(|s| s.as_str()).map(str::to_string))
        .unwrap_or_else(|| format!("{:?}", r.trace.status))
}

/// Per-realization rows and records; the best realization also gets its
/// trace CSV and checkpoint written.
pub fn summarize_point(
    h: &RotatedTfim,
    theta_over_pi: f64,
    exact: &ExactReference,
    point: &TrainedPoint,
    dir: &ArtifactDir,
) -> anyhow::Result<(Vec<RealizationRow>, Vec<PendingRecord>)> {
    let e0 = exact.ground_energy();
    let best_seed = point.best().map(|r| r.seed);
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for r in &point.run.realizations {
        let completed = r.trace.status.is_completed();
        let is_best = Some(r.seed) == best_seed;
        let state = r.state.as_ref();
        let (sign, imag) = state.map(approximate_sign_average).unzip();
        let parity = state.map(|s| h.parity_expectation(s));
        let fid = |other: &Option<StateVector>| match (state, other) {
            (Some(s), Some(o)) => Some(1.0 - s.infidelity(o)),
            _ => None,
        };
        let rel = relative_energy_error(r.final_energy, e0).ok();
        rows.push(RealizationRow {
            n_sites: h.n_sites,
            lambda: h.lambda,
            theta_over_pi,
            alpha: point.alpha,
            seed: r.seed,
            eta: point.eta,
            status: status_label(r),
            iterations: r.trace.rows.len(),
            e_var: r.final_energy,
            e_exact: e0,
            rel_energy_error: rel,
            infidelity: r.infidelity,
            sign_average: sign,
            max_imag: imag,
            parity,
            fidelity_plus: fid(&exact.plus),
            fidelity_minus: fid(&exact.minus),
            is_best,
        });

        let mut artifacts = Vec::new();
        if is_best {
            let stem = format!(
                "L{}_lam{}_th{}_a{}_s{}",
                h.n_sites,
                h.lambda,
                crate::output::angle_tag(theta_over_pi),
                point.alpha,
                r.seed
            );
            let trace: Vec<TraceCsvRow> = r
                .trace
                .rows
                .iter()
                .map(|t| TraceCsvRow {
                    iteration: t.iteration,
                    energy_re: t.energy.re,
                    energy_im: t.energy.im,
                    variance: t.variance,
                    grad_norm: t.grad_norm,
                    param_norm: t.param_norm,
                })
                .collect();
            artifacts.push(dir.write_csv(&format!("trace_{stem}.csv"), &trace)?);
            let ckpt = r.trace.final_params.to_checkpoint(r.seed, r.trace.rows.len());
            artifacts.push(dir.write_text(&format!("checkpoint_{stem}.json"), &ckpt.to_json()?)?);
        }
        records.push(PendingRecord {
            key: RecordKey {
                n_sites: h.n_sites,
                lambda: h.lambda,
                theta_over_pi,
                alpha: Some(point.alpha),
                seed: Some(r.seed),
            },
            metrics: Metrics {
                e_var: Some(r.final_energy),
                e_exact: Some(e0),
                rel_energy_error: rel,
                infidelity: r.infidelity,
                sign_average: sign,
                parity,
                gap: exact.gap(),
            },
            artifacts,
            status: if best_seed.is_none() {
                RecordStatus::HardFailure
            } else if completed {
                RecordStatus::Ok
            } else {
                RecordStatus::SoftFailure
            },
            note: (!completed).then(|| format!("{:?}", r.trace.status)),
        });
    }
    Ok((rows, records))
}

/// Exact sign average, `None` where the state is not real.
pub fn exact_sign(psi: &StateVector) -> Option<f64> {
    sign_average(psi).ok()
}

pub fn exact_record(
    h: &RotatedTfim,
    theta_over_pi: f64,
    exact: &ExactReference,
    artifacts: Vec<String>,
) -> PendingRecord {
    PendingRecord {
        key: RecordKey {
            n_sites: h.n_sites,
            lambda: h.lambda,
            theta_over_pi,
            alpha: None,
            seed: None,
        },
        metrics: Metrics {
            e_exact: Some(exact.ground_energy()),
            sign_average: exact_sign(exact.ground_state()),
            parity: Some(h.parity_expectation(exact.ground_state())),
            gap: exact.gap(),
            ..Metrics::default()
        },
        artifacts,
        status: RecordStatus::Ok,
        note: None,
    }
}

pub fn failure_record(
    n_sites: usize,
    lambda: f64,
    theta_over_pi: f64,
    alpha: Option<f64>,
    status: RecordStatus,
    err: &anyhow::Error,
) -> PendingRecord {
    log::warn!("L={n_sites} lambda={lambda} theta={theta_over_pi}pi: {err:#}");
    PendingRecord {
        key: RecordKey {
            n_sites,
            lambda,
            theta_over_pi,
            alpha,
            seed: None,
        },
        metrics: Metrics::default(),
        artifacts: Vec::new(),
        status,
        note: Some(format!("{err:#}")),
    }
}
