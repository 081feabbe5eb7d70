//! One runner per experiment kind. Each writes its CSVs into the invocation's
//! artifact directory and returns the records to append to the index.

use anyhow::Context;
use nqs_core::cumulant::{coefficient_relative_errors, cumulant_coefficients, default_grid, infidelity_curve};
use nqs_core::exact::{sorted_probabilities, EXACT_MAX_SITES};
use nqs_core::rbm::n_var;
use nqs_core::sr::VariationalProblem;
use nqs_core::state::fix_global_phase;
use nqs_core::{RotatedTfim, StateVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{angle_tag, ArtifactDir, Metrics, PendingRecord, RecordKey, RecordStatus};
use crate::training::{
    exact_record, exact_sign, failure_record, summarize_point, train_point, ExactReference, RealizationRow,
};

type Outcome = anyhow::Result<Vec<PendingRecord>>;

fn grid(cfg: &ExperimentConfig, thetas: &[f64]) -> Vec<(usize, f64, f64)> {
    let mut points = Vec::new();
    for &l in &cfg.physics.sizes {
        for &lambda in &cfg.physics.lambdas {
            for &t in thetas {
                points.push((l, lambda, t));
            }
        }
    }
    points
}

fn refuse_if_too_large(n_sites: usize) -> anyhow::Result<()> {
    if n_sites > EXACT_MAX_SITES {
        anyhow::bail!("L = {n_sites} exceeds the exact-summation limit of {EXACT_MAX_SITES} sites");
    }
    Ok(())
}

#[derive(Serialize)]
struct GapRow {
    n_sites: usize,
    lambda: f64,
    theta_over_pi: f64,
    e0: f64,
    e1: f64,
    gap: f64,
}

pub fn phase_diagram(cfg: &ExperimentConfig, dir: &ArtifactDir) -> Outcome {
    let points = grid(cfg, &cfg.physics.thetas_over_pi);
    let results: Vec<_> = points
        .par_iter()
        .map(|&(l, lambda, t)| -> anyhow::Result<(GapRow, RotatedTfim, ExactReference)> {
            refuse_if_too_large(l)?;
            let h = RotatedTfim::with_theta_over_pi(l, lambda, t)?;
            let exact = ExactReference::compute(&h)?;
            let e = &exact.spectrum.eigenvalues;
            Ok((
                GapRow {
                    n_sites: l,
                    lambda,
                    theta_over_pi: t,
                    e0: e[0],
                    e1: e[1],
                    gap: e[1] - e[0],
                },
                h,
                exact,
            ))
        })
        .collect();

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (&(l, lambda, t), res) in points.iter().zip(results) {
        match res {
            Ok((row, h, exact)) => {
                rows.push(row);
                records.push(exact_record(&h, t, &exact, Vec::new()));
            }
            Err(e) => {
                let status = if l > EXACT_MAX_SITES {
                    RecordStatus::Refused
                } else {
                    RecordStatus::HardFailure
                };
                records.push(failure_record(l, lambda, t, None, status, &e));
            }
        }
    }
    let rel = dir.write_csv("gaps.csv", &rows)?;
    records.iter_mut().for_each(|r| r.artifacts.push(rel.clone()));
    Ok(records)
}

#[derive(Serialize)]
struct ExactRow {
    n_sites: usize,
    lambda: f64,
    theta_over_pi: f64,
    e0: f64,
    e1: f64,
    gap: f64,
    sign_ground: Option<f64>,
    sign_excited: Option<f64>,
    sign_plus: Option<f64>,
    sign_minus: Option<f64>,
    parity_ground: f64,
    parity_excited: f64,
    stoquastic: bool,
}

fn exact_row(h: &RotatedTfim, t: f64, exact: &ExactReference) -> ExactRow {
    let e = &exact.spectrum.eigenvalues;
    let v = &exact.spectrum.eigenvectors;
    ExactRow {
        n_sites: h.n_sites,
        lambda: h.lambda,
        theta_over_pi: t,
        e0: e[0],
        e1: e[1],
        gap: e[1] - e[0],
        sign_ground: exact_sign(&v[0]),
        sign_excited: exact_sign(&v[1]),
        sign_plus: exact.plus.as_ref().and_then(exact_sign),
        sign_minus: exact.minus.as_ref().and_then(exact_sign),
        parity_ground: h.parity_expectation(&v[0]),
        parity_excited: h.parity_expectation(&v[1]),
        stoquastic: h.is_stoquastic(1e-12),
    }
}

#[derive(Serialize)]
struct SortedRow {
    n_sites: usize,
    lambda: f64,
    theta_over_pi: f64,
    source: String,
    rank: usize,
    index: usize,
    probability: f64,
    /// Sign of the real part after phase fixing.
    sign: i8,
}

fn sorted_rows(h: &RotatedTfim, t: f64, source: &str, psi: &StateVector) -> Vec<SortedRow> {
    let mut amps = psi.amplitudes().to_vec();
    fix_global_phase(&mut amps);
    sorted_probabilities(psi)
        .into_iter()
        .enumerate()
        .map(|(rank, p)| SortedRow {
            n_sites: h.n_sites,
            lambda: h.lambda,
            theta_over_pi: t,
            source: source.to_string(),
            rank,
            index: p.index,
            probability: p.probability,
            sign: p.sign.unwrap_or_else(|| {
                let re = amps[p.index].re;
                if re > 0.0 {
                    1
                } else if re < 0.0 {
                    -1
                } else {
                    0
                }
            }),
        })
        .collect()
}

struct PointResult {
    exact_row: ExactRow,
    realizations: Vec<RealizationRow>,
    sorted: Vec<SortedRow>,
    records: Vec<PendingRecord>,
    best: Option<(u64, StateVector, nqs_core::RbmParams)>,
}

/// Exact reference plus trained realizations at one point; `dump` adds
/// sorted-probability rows for the exact states and the best realization.
fn exact_and_trained(
    cfg: &ExperimentConfig,
    dir: &ArtifactDir,
    l: usize,
    lambda: f64,
    t: f64,
    alpha: f64,
    dump: bool,
) -> anyhow::Result<PointResult> {
    refuse_if_too_large(l)?;
    let h = RotatedTfim::with_theta_over_pi(l, lambda, t)?;
    let exact = ExactReference::compute(&h)?;
    let point = train_point(&h, cfg, alpha, t, exact.ground_state())?;
    let (realizations, mut records) = summarize_point(&h, t, &exact, &point, dir)?;
    records.push(exact_record(&h, t, &exact, Vec::new()));
    let best = point.best().and_then(|r| {
        r.state
            .clone()
            .map(|s| (r.seed, s, r.trace.final_params.clone()))
    });
    let mut sorted = Vec::new();
    if dump {
        sorted.extend(sorted_rows(&h, t, "ground", exact.ground_state()));
        sorted.extend(sorted_rows(&h, t, "excited", &exact.spectrum.eigenvectors[1]));
        if let (Some(p), Some(m)) = (&exact.plus, &exact.minus) {
            sorted.extend(sorted_rows(&h, t, "plus", p));
            sorted.extend(sorted_rows(&h, t, "minus", m));
        }
        if let Some((_, s, _)) = &best {
            sorted.extend(sorted_rows(&h, t, "rbm", s));
        }
    }
    Ok(PointResult {
        exact_row: exact_row(&h, t, &exact),
        realizations,
        sorted,
        records,
        best,
    })
}

fn union_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

struct Collected {
    exact: Vec<ExactRow>,
    realizations: Vec<RealizationRow>,
    sorted: Vec<SortedRow>,
    records: Vec<PendingRecord>,
    bests: Vec<((usize, f64, f64, f64), (u64, StateVector, nqs_core::RbmParams))>,
}

fn run_training_grid(cfg: &ExperimentConfig, dir: &ArtifactDir, thetas: &[f64], dump_at: &[f64]) -> anyhow::Result<Collected> {
    let mut points = Vec::new();
    for (l, lambda, t) in grid(cfg, thetas) {
        for &alpha in &cfg.rbm.alphas {
            points.push((l, lambda, t, alpha));
        }
    }
    let results: Vec<_> = points
        .par_iter()
        .map(|&(l, lambda, t, alpha)| exact_and_trained(cfg, dir, l, lambda, t, alpha, dump_at.contains(&t)))
        .collect();
    let mut out = Collected {
        exact: Vec::new(),
        realizations: Vec::new(),
        sorted: Vec::new(),
        records: Vec::new(),
        bests: Vec::new(),
    };
    for (&(l, lambda, t, alpha), res) in points.iter().zip(results) {
        match res {
            Ok(p) => {
                out.exact.push(p.exact_row);
                out.realizations.extend(p.realizations);
                out.sorted.extend(p.sorted);
                out.records.extend(p.records);
                if let Some(b) = p.best {
                    out.bests.push(((l, lambda, t, alpha), b));
                }
            }
            Err(e) => {
                let status = if l > EXACT_MAX_SITES {
                    RecordStatus::Refused
                } else {
                    RecordStatus::HardFailure
                };
                out.records.push(failure_record(l, lambda, t, Some(alpha), status, &e));
            }
        }
    }
    Ok(out)
}

fn attach(records: &mut [PendingRecord], artifacts: &[String]) {
    for r in records {
        r.artifacts.extend(artifacts.iter().cloned());
    }
}

pub fn degeneracy(cfg: &ExperimentConfig, dir: &ArtifactDir) -> Outcome {
    let thetas = union_sorted(&cfg.physics.thetas_over_pi, &cfg.physics.showcase_thetas_over_pi);
    let mut c = run_training_grid(cfg, dir, &thetas, &cfg.physics.showcase_thetas_over_pi)?;
    let files = [
        dir.write_csv("exact.csv", &c.exact)?,
        dir.write_csv("realizations.csv", &c.realizations)?,
        dir.write_csv("sorted_probabilities.csv", &c.sorted)?,
    ];
    attach(&mut c.records, &files);
    Ok(c.records)
}

#[derive(Serialize)]
struct MappingRow {
    n_sites: usize,
    lambda: f64,
    theta_over_pi: f64,
    seed: u64,
    energy: f64,
    mapped_theta_over_pi: f64,
    mapped_energy: f64,
    abs_diff: f64,
}

/// Relative tolerance for the rotated-parameter energy check.
const MAPPING_TOL: f64 = 1e-9;

pub fn pi_compare(cfg: &ExperimentConfig, dir: &ArtifactDir) -> Outcome {
    let thetas = &cfg.physics.thetas_over_pi;
    let mut c = run_training_grid(cfg, dir, thetas, thetas)?;

    // Rotating every site by pi maps a trained state at theta onto H(theta + pi).
    let mut mapping = Vec::new();
    for ((l, lambda, t, alpha), (seed, _, params)) in &c.bests {
        let h = RotatedTfim::with_theta_over_pi(*l, *lambda, *t)?;
        let h_rot = RotatedTfim::with_theta_over_pi(*l, *lambda, t + 1.0)?;
        let mapped = (0..*l).fold(params.clone(), |w, j| w.apply_pi_rotation(j));
        let energy = VariationalProblem::new(&h).energy(params).re;
        let mapped_energy = VariationalProblem::new(&h_rot).energy(&mapped).re;
        let abs_diff = (energy - mapped_energy).abs();
        mapping.push(MappingRow {
            n_sites: *l,
            lambda: *lambda,
            theta_over_pi: *t,
            seed: *seed,
            energy,
            mapped_theta_over_pi: t + 1.0,
            mapped_energy,
            abs_diff,
        });
        if abs_diff > MAPPING_TOL * energy.abs().max(1.0) {
            c.records.push(PendingRecord {
                key: RecordKey {
                    n_sites: *l,
                    lambda: *lambda,
                    theta_over_pi: t + 1.0,
                    alpha: Some(*alpha),
                    seed: Some(*seed),
                },
                metrics: Metrics {
                    e_var: Some(mapped_energy),
                    ..Metrics::default()
                },
                artifacts: Vec::new(),
                status: RecordStatus::HardFailure,
                note: Some(format!("pi-rotated parameters changed the energy by {abs_diff:.3e}")),
            });
        }
    }
    let files = [
        dir.write_csv("exact.csv", &c.exact)?,
        dir.write_csv("realizations.csv", &c.realizations)?,
        dir.write_csv("sorted_probabilities.csv", &c.sorted)?,
        dir.write_csv("pi_mapping.csv", &mapping)?,
    ];
    attach(&mut c.records, &files);
    Ok(c.records)
}

#[derive(Serialize)]
struct BestRow {
    n_sites: usize,
    lambda: f64,
    theta_over_pi: f64,
    alpha: f64,
    seed: u64,
    rel_energy_error: Option<f64>,
    infidelity: Option<f64>,
    exact_sign_average: Option<f64>,
}

pub fn uniformity(cfg: &ExperimentConfig, dir: &ArtifactDir) -> Outcome {
    let mut c = run_training_grid(cfg, dir, &cfg.physics.thetas_over_pi, &[])?;
    let best: Vec<BestRow> = c
        .realizations
        .iter()
        .filter(|r| r.is_best)
        .map(|r| BestRow {
            n_sites: r.n_sites,
            lambda: r.lambda,
            theta_over_pi: r.theta_over_pi,
            alpha: r.alpha,
            seed: r.seed,
            rel_energy_error: r.rel_energy_error,
            infidelity: r.infidelity,
            exact_sign_average: c
                .exact
                .iter()
                .find(|e| e.n_sites == r.n_sites && e.lambda == r.lambda && e.theta_over_pi == r.theta_over_pi)
                .and_then(|e| e.sign_ground),
        })
        .collect();
    let files = [
        dir.write_csv("exact.csv", &c.exact)?,
        dir.write_csv("realizations.csv", &c.realizations)?,
        dir.write_csv("best.csv", &best)?,
    ];
    attach(&mut c.records, &files);
    Ok(c.records)
}

#[derive(Serialize)]
struct CurveRow {
    n_sites: usize,
    lambda: f64,
    theta_over_pi: f64,
    source: String,
    alpha: Option<f64>,
    seed: Option<u64>,
    n_var: Option<usize>,
    n_kept: usize,
    infidelity: f64,
}

#[derive(Serialize)]
struct CoefficientCsvRow {
    bitmask: usize,
    order: usize,
    re: f64,
    im: f64,
    abs: f64,
    rank: usize,
}

#[derive(Serialize)]
struct RelErrorRow {
    n_sites: usize,
    lambda: f64,
    theta_over_pi: f64,
    alpha: f64,
    seed: u64,
    n_var: usize,
    rank: usize,
    bitmask: usize,
    rel_error: Option<f64>,
}

fn write_coefficients(dir: &ArtifactDir, name: &str, psi: &StateVector, floor: f64) -> anyhow::Result<String> {
    let rows: Vec<CoefficientCsvRow> = cumulant_coefficients(psi, floor)?
        .rows()
        .into_iter()
        .map(|r| CoefficientCsvRow {
            bitmask: r.bitmask,
            order: r.order,
            re: r.re,
            im: r.im,
            abs: r.abs,
            rank: r.rank,
        })
        .collect();
    dir.write_csv(name, &rows)
}

/// Truncation curves of the exact state and of the best realization for
/// each alpha, with coefficient tables and relative errors.
fn cumulant_study(cfg: &ExperimentConfig, dir: &ArtifactDir, prefix: &str) -> Outcome {
    let thetas = &cfg.physics.thetas_over_pi;
    let mut c = run_training_grid(cfg, dir, thetas, &[])?;
    let floor = cfg.cumulant.floor;

    let mut curves = Vec::new();
    let mut rel_errors = Vec::new();
    let mut files = Vec::new();
    for (l, lambda, t) in grid(cfg, thetas) {
        let fed: Vec<_> = c
            .bests
            .iter()
            .filter(|((bl, bla, bt, _), _)| *bl == l && *bla == lambda && *bt == t)
            .collect();
        if fed.is_empty() {
            continue;
        }
        let h = RotatedTfim::with_theta_over_pi(l, lambda, t)?;
        let exact = ExactReference::compute(&h)?;
        let psi = exact.ground_state();
        let ns = default_grid(l);
        let stem = format!("L{l}_lam{lambda}_th{}", angle_tag(t));

        for (n, inf) in infidelity_curve(psi, psi, &ns, floor)? {
            curves.push(CurveRow {
                n_sites: l,
                lambda,
                theta_over_pi: t,
                source: "exact".into(),
                alpha: None,
                seed: None,
                n_var: None,
                n_kept: n,
                infidelity: inf,
            });
        }
        files.push(write_coefficients(dir, &format!("coefficients_{stem}_exact.csv"), psi, floor)?);
        let c_exact = cumulant_coefficients(psi, floor)?;

        for ((_, _, _, alpha), (seed, state, _)) in fed {
            let nv = n_var(l, *alpha);
            let curve = infidelity_curve(state, psi, &ns, floor)
                .with_context(|| format!("truncating the alpha={alpha} state at {stem}"))?;
            for (n, inf) in curve {
                curves.push(CurveRow {
                    n_sites: l,
                    lambda,
                    theta_over_pi: t,
                    source: "rbm".into(),
                    alpha: Some(*alpha),
                    seed: Some(*seed),
                    n_var: Some(nv),
                    n_kept: n,
                    infidelity: inf,
                });
            }
            files.push(write_coefficients(dir, &format!("coefficients_{stem}_a{alpha}_rbm.csv"), state, floor)?);
            let c_model = cumulant_coefficients(state, floor)?;
            let ranking = c_exact.ranking();
            for (rank, err) in coefficient_relative_errors(&c_model, &c_exact, floor)? {
                rel_errors.push(RelErrorRow {
                    n_sites: l,
                    lambda,
                    theta_over_pi: t,
                    alpha: *alpha,
                    seed: *seed,
                    n_var: nv,
                    rank,
                    bitmask: ranking[rank],
                    rel_error: err,
                });
            }
        }
    }
    files.push(dir.write_csv(&format!("{prefix}curves.csv"), &curves)?);
    files.push(dir.write_csv(&format!("{prefix}relative_errors.csv"), &rel_errors)?);
    files.push(dir.write_csv("realizations.csv", &c.realizations)?);
    files.push(dir.write_csv("exact.csv", &c.exact)?);

    // Mark which realization fed the analysis.
    for r in c.records.iter_mut() {
        let fed = c.bests.iter().any(|((l, la, t, a), (s, _, _))| {
            r.key.n_sites == *l
                && r.key.lambda == *la
                && r.key.theta_over_pi == *t
                && r.key.alpha == Some(*a)
                && r.key.seed == Some(*s)
        });
        if fed {
            r.note = Some("feeds the cumulant analysis".into());
        }
    }
    attach(&mut c.records, &files);
    Ok(c.records)
}

pub fn cumulant(cfg: &ExperimentConfig, dir: &ArtifactDir) -> Outcome {
    cumulant_study(cfg, dir, "")
}

pub fn size_scaling(cfg: &ExperimentConfig, dir: &ArtifactDir) -> Outcome {
    cumulant_study(cfg, dir, "size_scaling_")
}

