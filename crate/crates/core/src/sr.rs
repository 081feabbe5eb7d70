//! Ground-state optimization by stochastic reconfiguration, with every
//! expectation value computed by exact summation over all `2^L`
//! configurations weighted by `p(s) = |Psi(s)|^2 / sum |Psi|^2`.
//!
//! Sign convention: [`Expectations::forces`] holds
//! `F_k = <E_loc O_k^*> - <E_loc><O_k^*>`, which is `dE/d(omega_k^*)`, so
//! the update descends along it: `omega' = omega - eta (S + eps)^-1 F`.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{RotatedTfim, SparseRows};
use crate::hilbert;
use crate::rbm::{RbmParams, DEFAULT_INIT_SCALE};
use crate::state::StateVector;

/// Configurations with relative weight below `exp(-EXCLUDE_LOG_WEIGHT)` are
/// dropped from the averages.
const EXCLUDE_LOG_WEIGHT: f64 = 700.0;
/// Direct (Cholesky) solves are used up to this many parameters.
pub const DIRECT_SOLVE_MAX: usize = 2000;
pub const SOLVE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolver {
    /// Cholesky up to [`DIRECT_SOLVE_MAX`] parameters, conjugate gradient above.
    #[default]
    Auto,
    Direct,
    ConjugateGradient,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// The quantum Fisher matrix `S`.
    #[default]
    Fisher,
    /// `S = 1`: plain gradient descent, for debugging.
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrConfig {
    /// Hidden-unit density `M / L`.
    pub alpha: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub n_iter: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub solver: LinearSolver,
    pub metric: Metric,
    /// Abort once `|E|` exceeds this multiple of the initial `|E|`.
    pub divergence_factor: f64,
}

impl Default for SrConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            eta: 0.01,
            epsilon: 1e-4,
            n_iter: 2000,
            seed: 0,
            init_scale: DEFAULT_INIT_SCALE,
            solver: LinearSolver::Auto,
            metric: Metric::Fisher,
            divergence_factor: 1e3,
        }
    }
}

impl SrConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.eta > 0.0) {
            return bad("learning rate must be > 0");
        }
        if !(self.epsilon > 0.0) {
            return bad("diagonal shift must be > 0");
        }
        if self.n_iter == 0 {
            return bad("need at least one iteration");
        }
        if !(self.alpha > 0.0) {
            return bad("alpha must be > 0");
        }
        if !(self.init_scale > 0.0) {
            return bad("init scale must be > 0");
        }
        Ok(())
    }
}

/// `E_loc(s) = sum_s' H_ss' Psi(s') / Psi(s)` for a single configuration.
pub fn local_energy(h: &RotatedTfim, w: &RbmParams, s: usize) -> Result<Complex64> {
    let log_s = w.log_psi(s);
    let mut acc = Complex64::new(0.0, 0.0);
    h.for_each_in_row(s, |t, v| {
        acc += (w.log_psi(t) - log_s).exp() * v;
    });
    if !acc.is_finite() {
        return Err(Error::DegenerateState("amplitude underflow in local energy"));
    }
    Ok(acc)
}

/// Local energies of arbitrary amplitudes; `None` where `Psi(s) = 0`.
pub fn local_energies_of_amplitudes(h: &RotatedTfim, amplitudes: &[Complex64]) -> Vec<Option<Complex64>> {
    assert_eq!(amplitudes.len(), h.dim());
    let sparse = h.sparse();
    (0..h.dim())
        .into_par_iter()
        .map(|s| {
            (amplitudes[s] != Complex64::new(0.0, 0.0)).then(|| {
                sparse.row(s).map(|(t, v)| amplitudes[t] * v).sum::<Complex64>() / amplitudes[s]
            })
        })
        .collect()
}

/// Born-weighted mean and variance of the local energy of a state.
pub fn local_energy_statistics(h: &RotatedTfim, psi: &StateVector) -> (Complex64, f64) {
    let e_loc = local_energies_of_amplitudes(h, psi.amplitudes());
    let probs = psi.probabilities();
    let total: f64 = probs.iter().sum();
    let mean: Complex64 = e_loc
        .iter()
        .zip(&probs)
        .filter_map(|(e, p)| e.map(|e| e * *p))
        .sum::<Complex64>()
        / total;
    let var = e_loc
        .iter()
        .zip(&probs)
        .filter_map(|(e, p)| e.map(|e| (e - mean).norm_sqr() * p))
        .sum::<f64>()
        / total;
    (mean, var)
}

/// Exact Born averages for one parameter point.
#[derive(Clone, Debug)]
pub struct Expectations {
    pub energy: Complex64,
    pub variance: f64,
    pub forces: DVector<Complex64>,
    pub s_matrix: DMatrix<Complex64>,
    /// Configurations dropped because their weight underflowed.
    pub n_excluded: usize,
}

struct Weighted {
    /// Indices of the retained configurations.
    kept: Vec<usize>,
    probs: Vec<f64>,
    e_loc: Vec<Complex64>,
    energy: Complex64,
    variance: f64,
}

/// A Hamiltonian with its rows cached for repeated exact evaluations.
pub struct VariationalProblem {
    h: RotatedTfim,
    rows: SparseRows,
}

impl VariationalProblem {
    pub fn new(h: &RotatedTfim) -> Self {
        Self {
            h: *h,
            rows: h.sparse(),
        }
    }

    pub fn hamiltonian(&self) -> &RotatedTfim {
        &self.h
    }

    fn weighted(&self, w: &RbmParams) -> Weighted {
        assert_eq!(w.n_sites(), self.h.n_sites, "RBM and Hamiltonian sizes differ");
        let logs = w.log_psi_all();
        let max_re = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        let kept: Vec<usize> = (0..logs.len())
            .filter(|&s| 2.0 * (logs[s].re - max_re) > -EXCLUDE_LOG_WEIGHT)
            .collect();
        let raw: Vec<f64> = kept.iter().map(|&s| (2.0 * (logs[s].re - max_re)).exp()).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let e_loc: Vec<Complex64> = kept
            .par_iter()
            .map(|&s| {
                self.rows
                    .row(s)
                    .map(|(t, v)| (logs[t] - logs[s]).exp() * v)
                    .sum()
            })
            .collect();
        let energy: Complex64 = e_loc.iter().zip(&probs).map(|(e, p)| e * p).sum();
        let variance = e_loc
            .iter()
            .zip(&probs)
            .map(|(e, p)| (e - energy).norm_sqr() * p)
            .sum();
        Weighted {
            kept,
            probs,
            e_loc,
            energy,
            variance,
        }
    }

    /// Variational energy `<Psi|H|Psi> / <Psi|Psi>`.
    pub fn energy(&self, w: &RbmParams) -> Complex64 {
        self.weighted(w).energy
    }

    /// Energy, local-energy variance, forces and the quantum Fisher matrix.
    pub fn expectations(&self, w: &RbmParams) -> Expectations {
        let wt = self.weighted(w);
        let n_var = w.n_var();
        let n_kept = wt.kept.len();

        let derivs: Vec<Vec<Complex64>> = wt.kept.par_iter().map(|&s| w.log_derivatives(s)).collect();
        let mut mean_o = vec![Complex64::new(0.0, 0.0); n_var];
        for (o, p) in derivs.iter().zip(&wt.probs) {
            mean_o.iter_mut().zip(o).for_each(|(m, x)| *m += x * p);
        }

        // X[s, k] = sqrt(p_s) (O_k(s) - <O_k>), split into real and imaginary parts.
        let mut xr = DMatrix::<f64>::zeros(n_kept, n_var);
        let mut xi = DMatrix::<f64>::zeros(n_kept, n_var);
        for (row, (o, p)) in derivs.iter().zip(&wt.probs).enumerate() {
            let sp = p.sqrt();
            for k in 0..n_var {
                let d = (o[k] - mean_o[k]) * sp;
                xr[(row, k)] = d.re;
                xi[(row, k)] = d.im;
            }
        }
        let (yr, yi): (Vec<f64>, Vec<f64>) = wt
            .e_loc
            .iter()
            .zip(&wt.probs)
            .map(|(e, p)| {
                let d = (e - wt.energy) * p.sqrt();
                (d.re, d.im)
            })
            .unzip();
        let (yr, yi) = (DVector::from_vec(yr), DVector::from_vec(yi));

        // S = X^H X,  F = X^H y.
        let s_re = xr.tr_mul(&xr) + xi.tr_mul(&xi);
        let s_im = xr.tr_mul(&xi) - xi.tr_mul(&xr);
        let f_re = xr.tr_mul(&yr) + xi.tr_mul(&yi);
        let f_im = xr.tr_mul(&yi) - xi.tr_mul(&yr);

        let mut s_matrix = DMatrix::from_fn(n_var, n_var, |i, j| Complex64::new(s_re[(i, j)], s_im[(i, j)]));
        // Exact Hermitian symmetry; the two products above agree only to rounding.
        for i in 0..n_var {
            s_matrix[(i, i)].im = 0.0;
            for j in 0..i {
                let avg = (s_matrix[(i, j)] + s_matrix[(j, i)].conj()) * 0.5;
                s_matrix[(i, j)] = avg;
                s_matrix[(j, i)] = avg.conj();
            }
        }
        let forces = DVector::from_fn(n_var, |k, _| Complex64::new(f_re[k], f_im[k]));

        Expectations {
            energy: wt.energy,
            variance: wt.variance,
            forces,
            s_matrix,
            n_excluded: hilbert::dim(w.n_sites()) - n_kept,
        }
    }
}

/// Convenience wrapper around [`VariationalProblem::expectations`].
pub fn expectations(h: &RotatedTfim, w: &RbmParams) -> Expectations {
    VariationalProblem::new(h).expectations(w)
}

/// Solves `(S + eps 1) delta = f`.
pub fn solve_shifted(
    s: &DMatrix<Complex64>,
    f: &DVector<Complex64>,
    epsilon: f64,
    solver: LinearSolver,
) -> Result<DVector<Complex64>> {
    let n = f.len();
    let mut a = s.clone();
    for i in 0..n {
        a[(i, i)] += epsilon;
    }
    let f_norm = f.norm();
    if f_norm == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let use_direct = match solver {
        LinearSolver::Auto => n <= DIRECT_SOLVE_MAX,
        LinearSolver::Direct => true,
        LinearSolver::ConjugateGradient => false,
    };
    let delta = if use_direct {
        let chol = Cholesky::new(a.clone()).ok_or(Error::SolverBreakdown { residual: f64::NAN })?;
        let mut x = chol.solve(f);
        // One step of iterative refinement.
        let r = f - &a * &x;
        x += chol.solve(&r);
        x
    } else {
        conjugate_gradient(&a, f, SOLVE_TOL * 1e-2, 10 * n + 100)
    };
    let residual = (f - &a * &delta).norm() / f_norm;
    if !(residual <= SOLVE_TOL) {
        return Err(Error::SolverBreakdown { residual });
    }
    Ok(delta)
}

fn conjugate_gradient(
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    rel_tol: f64,
    max_iter: usize,
) -> DVector<Complex64> {
    let mut x = DVector::zeros(b.len());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dotc(&r).re;
    let target = rel_tol * b.norm();
    for _ in 0..max_iter {
        if rr.sqrt() <= target {
            break;
        }
        let ap = a * &p;
        let step = rr / p.dotc(&ap).re;
        x.axpy(Complex64::new(step, 0.0), &p, Complex64::new(1.0, 0.0));
        r.axpy(Complex64::new(-step, 0.0), &ap, Complex64::new(1.0, 0.0));
        let rr_new = r.dotc(&r).re;
        p = &r + &p * Complex64::new(rr_new / rr, 0.0);
        rr = rr_new;
    }
    x
}

/// One update `omega' = omega - eta (S + eps 1)^-1 F`.
pub fn sr_step(
    w: &RbmParams,
    forces: &DVector<Complex64>,
    s_matrix: &DMatrix<Complex64>,
    config: &SrConfig,
) -> Result<RbmParams> {
    let delta = match config.metric {
        Metric::Fisher => solve_shifted(s_matrix, forces, config.epsilon, config.solver)?,
        Metric::Identity => forces.clone(),
    };
    Ok(w.shifted(delta.as_slice(), -config.eta))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// `|E|` grew past the divergence guard.
    Diverged { iteration: usize },
    NonFinite { iteration: usize },
    SolverFailed { iteration: usize },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: Complex64,
    pub variance: f64,
    pub grad_norm: f64,
    pub param_norm: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizationTrace {
    pub config: SrConfig,
    /// One row per completed iteration, evaluated before that iteration's update.
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    pub final_params: RbmParams,
    pub final_energy: Complex64,
}

/// Runs `config.n_iter` SR steps from a seeded random initialization.
pub fn optimize(h: &RotatedTfim, config: &SrConfig) -> Result<OptimizationTrace> {
    config.validate()?;
    let problem = VariationalProblem::new(h);
    let init = RbmParams::init_random(h.n_sites, config.alpha, config.seed, config.init_scale)?;
    Ok(optimize_from(&problem, init, config))
}

/// Runs SR from explicit starting parameters.
pub fn optimize_from(problem: &VariationalProblem, init: RbmParams, config: &SrConfig) -> OptimizationTrace {
    let mut w = init;
    let mut rows = Vec::with_capacity(config.n_iter);
    let mut status = RunStatus::Completed;
    let mut initial_scale = None;

    for iteration in 0..config.n_iter {
        let ex = problem.expectations(&w);
        let e0 = *initial_scale.get_or_insert(ex.energy.norm().max(1e-12));
        rows.push(TraceRow {
            iteration,
            energy: ex.energy,
            variance: ex.variance,
            grad_norm: ex.forces.norm(),
            param_norm: w.norm(),
        });
        if !ex.energy.is_finite() || !ex.forces.iter().all(|f| f.is_finite()) {
            status = RunStatus::NonFinite { iteration };
            break;
        }
        if ex.energy.norm() > config.divergence_factor * e0 {
            status = RunStatus::Diverged { iteration };
            break;
        }
        match sr_step(&w, &ex.forces, &ex.s_matrix, config) {
            Ok(next) => w = next,
            Err(_) => {
                status = RunStatus::SolverFailed { iteration };
                break;
            }
        }
    }

    let final_energy = problem.energy(&w);
    if status.is_completed() && !final_energy.is_finite() {
        status = RunStatus::NonFinite {
            iteration: config.n_iter,
        };
    }
    OptimizationTrace {
        config: *config,
        rows,
        status,
        final_params: w,
        final_energy,
    }
}

/// SplitMix64 mix of `(master, stream, index)`; realization `r` of a run
/// seeded with `master` uses `derive_seed(master, 0, r)`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct Realization {
    pub seed: u64,
    pub trace: OptimizationTrace,
    pub final_energy: f64,
    pub state: Option<StateVector>,
    /// Against the reference passed to [`multi_seed_run`], if any.
    pub infidelity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct MultiSeedRun {
    pub realizations: Vec<Realization>,
}

impl MultiSeedRun {
    /// The completed realization with the lowest final energy.
    pub fn best(&self) -> Option<&Realization> {
        self.realizations
            .iter()
            .filter(|r| r.trace.status.is_completed() && r.final_energy.is_finite())
            .min_by(|a, b| a.final_energy.total_cmp(&b.final_energy))
    }
}

/// Independent runs with seeds `derive_seed(config.seed, 0, r)`, `r < n`.
pub fn multi_seed_run(
    h: &RotatedTfim,
    config: &SrConfig,
    n_realizations: usize,
    reference: Option<&StateVector>,
) -> Result<MultiSeedRun> {
    if n_realizations == 0 {
        return Err(Error::InvalidArgument("need at least one realization".into()));
    }
    config.validate()?;
    let problem = VariationalProblem::new(h);
    let realizations = (0..n_realizations as u64)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(config.seed, 0, r);
            let cfg = SrConfig { seed, ..*config };
            let init = RbmParams::init_random(h.n_sites, cfg.alpha, seed, cfg.init_scale)?;
            let trace = optimize_from(&problem, init, &cfg);
            let state = trace.final_params.full_state_vector().ok();
            let infidelity = match (reference, &state) {
                (Some(r), Some(s)) => Some(s.infidelity(r)),
                _ => None,
            };
            Ok(Realization {
                seed,
                final_energy: trace.final_energy.re,
                trace,
                state,
                infidelity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiSeedRun { realizations })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaSampling {
    /// Uniform on `[1e-5, 1e-1]`.
    #[default]
    Linear,
    /// Uniform in `log10(eta)` on the same range.
    LogUniform,
}

pub const ETA_RANGE: (f64, f64) = (1e-5, 1e-1);

impl EtaSampling {
    pub fn sample(self, rng: &mut impl Rng) -> f64 {
        let (lo, hi) = ETA_RANGE;
        match self {
            EtaSampling::Linear => rng.random_range(lo..=hi),
            EtaSampling::LogUniform => 10f64.powf(rng.random_range(lo.log10()..=hi.log10())),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialSummary {
    pub eta: f64,
    pub final_energy: f64,
    pub status: RunStatus,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best_config: SrConfig,
    pub best_trace: OptimizationTrace,
    pub trials: Vec<TrialSummary>,
}

/// Random search over the learning rate; keeps the trial with the lowest
/// final energy. All trials start from the initialization of `base.seed`.
pub fn hyperparameter_search(
    h: &RotatedTfim,
    base: &SrConfig,
    trials: usize,
    seed: u64,
    sampling: EtaSampling,
) -> Result<SearchResult> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    base.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let etas: Vec<f64> = (0..trials).map(|_| sampling.sample(&mut rng)).collect();
    let problem = VariationalProblem::new(h);
    let init = RbmParams::init_random(h.n_sites, base.alpha, base.seed, base.init_scale)?;

    let traces: Vec<OptimizationTrace> = etas
        .par_iter()
        .map(|&eta| optimize_from(&problem, init.clone(), &SrConfig { eta, ..*base }))
        .collect();

    let summaries: Vec<TrialSummary> = traces
        .iter()
        .map(|t| TrialSummary {
            eta: t.config.eta,
            final_energy: t.final_energy.re,
            status: t.status,
        })
        .collect();
    let best = traces
        .into_iter()
        .filter(|t| t.status.is_completed() && t.final_energy.re.is_finite())
        .min_by(|a, b| a.final_energy.re.total_cmp(&b.final_energy.re));
    match best {
        Some(best_trace) => Ok(SearchResult {
            best_config: best_trace.config,
            best_trace,
            trials: summaries,
        }),
        None => Err(Error::AllTrialsFailed(
            summaries
                .iter()
                .map(|s| format!("eta={:.3e}: {:?}", s.eta, s.status))
                .collect(),
        )),
    }
}
