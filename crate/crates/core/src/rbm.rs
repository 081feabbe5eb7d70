//! Complex-parameter restricted Boltzmann machine,
//!
//! ```text
//! Psi(s) = exp(sum_i a_i s_i) * prod_j cosh(chi_j(s)),   chi_j(s) = b_j + sum_i W_ij s_i.
//! ```
//!
//! Flat parameter order, used by every gradient and metric in the crate:
//! `[a_0 .. a_{L-1}, b_0 .. b_{M-1}, W_00, W_01, .., W_0(M-1), W_10, ..]`,
//! i.e. the weights row-major by visible site, then hidden unit.

use std::f64::consts::{FRAC_PI_2, LN_2};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{self, spin, MAX_SITES};
use crate::state::StateVector;

/// Default standard deviation of the random initialization.
pub const DEFAULT_INIT_SCALE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct RbmParams {
    n_sites: usize,
    n_hidden: usize,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// Row-major `n_sites x n_hidden`.
    pub w: Vec<Complex64>,
}

/// `M = round(alpha L)`, at least one hidden unit.
pub fn hidden_units(n_sites: usize, alpha: f64) -> usize {
    ((alpha * n_sites as f64).round() as usize).max(1)
}

/// `L + M + L M`.
pub fn n_var(n_sites: usize, alpha: f64) -> usize {
    let m = hidden_units(n_sites, alpha);
    n_sites + m + n_sites * m
}

/// Principal-branch `log cosh z`, stable for large `|Re z|`.
///
/// Uses `cosh z = cosh(-z)` to move to `Re z >= 0`, then
/// `log cosh z = z + log(1 + exp(-2z)) - log 2`. The result may differ from
/// the principal log by multiples of `2 pi i`, which cancel in `exp` and in
/// every derivative.
#[inline]
pub fn log_cosh(z: Complex64) -> Complex64 {
    let z = if z.re < 0.0 { -z } else { z };
    z + (Complex64::new(1.0, 0.0) + (-2.0 * z).exp()).ln() - LN_2
}

impl RbmParams {
    pub fn zeros(n_sites: usize, n_hidden: usize) -> Self {
        assert!((1..=MAX_SITES).contains(&n_sites), "bad site count {n_sites}");
        assert!(n_hidden >= 1, "need at least one hidden unit");
        let zero = Complex64::new(0.0, 0.0);
        Self {
            n_sites,
            n_hidden,
            a: vec![zero; n_sites],
            b: vec![zero; n_hidden],
            w: vec![zero; n_sites * n_hidden],
        }
    }

    /// All real and imaginary parts drawn i.i.d. from `N(0, scale^2)`.
    pub fn init_random(n_sites: usize, alpha: f64, seed: u64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!("init scale must be > 0, got {scale}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
        }
        if !(1..=MAX_SITES).contains(&n_sites) {
            return Err(Error::TooManySites {
                what: "the RBM",
                n_sites,
                max: MAX_SITES,
            });
        }
        let mut params = Self::zeros(n_sites, hidden_units(n_sites, alpha));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, scale).expect("valid normal");
        params
            .a
            .iter_mut()
            .chain(params.b.iter_mut())
            .chain(params.w.iter_mut())
            .for_each(|p| *p = Complex64::new(rng.sample(normal), rng.sample(normal)));
        Ok(params)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn alpha(&self) -> f64 {
        self.n_hidden as f64 / self.n_sites as f64
    }

    pub fn n_var(&self) -> usize {
        self.n_sites + self.n_hidden + self.n_sites * self.n_hidden
    }

    #[inline]
    pub fn weight(&self, site: usize, hidden: usize) -> Complex64 {
        self.w[site * self.n_hidden + hidden]
    }

    pub fn to_flat(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.n_var());
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.b);
        v.extend_from_slice(&self.w);
        v
    }

    pub fn from_flat(n_sites: usize, n_hidden: usize, flat: &[Complex64]) -> Result<Self> {
        let mut p = Self::zeros(n_sites, n_hidden);
        if flat.len() != p.n_var() {
            return Err(Error::LengthMismatch {
                expected: p.n_var(),
                actual: flat.len(),
            });
        }
        let (a, rest) = flat.split_at(n_sites);
        let (b, w) = rest.split_at(n_hidden);
        p.a.copy_from_slice(a);
        p.b.copy_from_slice(b);
        p.w.copy_from_slice(w);
        Ok(p)
    }

    /// `self + scale * delta` in flat ordering.
    pub fn shifted(&self, delta: &[Complex64], scale: f64) -> Self {
        assert_eq!(delta.len(), self.n_var());
        let mut out = self.clone();
        out.a
            .iter_mut()
            .chain(out.b.iter_mut())
            .chain(out.w.iter_mut())
            .zip(delta)
            .for_each(|(p, d)| *p += d * scale);
        out
    }

    pub fn norm(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .chain(&self.w)
            .map(|p| p.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn check_config(&self, s: usize) {
        assert!(
            s < hilbert::dim(self.n_sites),
            "configuration {s} out of range for L={}",
            self.n_sites
        );
    }

    /// Hidden-unit activations `chi_j(s)`.
    pub fn activations(&self, s: usize) -> Vec<Complex64> {
        self.check_config(s);
        let mut chi = self.b.clone();
        for i in 0..self.n_sites {
            let si = f64::from(spin(s, i));
            let row = &self.w[i * self.n_hidden..(i + 1) * self.n_hidden];
            chi.iter_mut().zip(row).for_each(|(c, w)| *c += w * si);
        }
        chi
    }

    pub fn log_psi(&self, s: usize) -> Complex64 {
        let visible: Complex64 = (0..self.n_sites)
            .map(|i| self.a[i] * f64::from(spin(s, i)))
            .sum();
        visible + self.activations(s).into_iter().map(log_cosh).sum::<Complex64>()
    }

    /// `O_k(s) = d log Psi(s) / d omega_k` in flat ordering.
    pub fn log_derivatives(&self, s: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_var()];
        self.log_derivatives_into(s, &mut out);
        out
    }

    pub fn log_derivatives_into(&self, s: usize, out: &mut [Complex64]) {
        assert_eq!(out.len(), self.n_var());
        let (l, m) = (self.n_sites, self.n_hidden);
        let tanh: Vec<Complex64> = self.activations(s).into_iter().map(|c| c.tanh()).collect();
        for i in 0..l {
            out[i] = Complex64::new(f64::from(spin(s, i)), 0.0);
        }
        out[l..l + m].copy_from_slice(&tanh);
        for i in 0..l {
            let si = f64::from(spin(s, i));
            let row = &mut out[l + m + i * m..l + m + (i + 1) * m];
            row.iter_mut().zip(&tanh).for_each(|(o, t)| *o = t * si);
        }
    }

    /// `log Psi(s)` for every configuration, in index order.
    pub fn log_psi_all(&self) -> Vec<Complex64> {
        (0..hilbert::dim(self.n_sites))
            .into_par_iter()
            .map(|s| self.log_psi(s))
            .collect()
    }

    /// Normalized, phase-fixed amplitudes over the full Hilbert space.
    pub fn full_state_vector(&self) -> Result<StateVector> {
        let logs = self.log_psi_all();
        let max_re = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        if !max_re.is_finite() {
            return Err(Error::DegenerateState("RBM log-amplitudes are not finite"));
        }
        let amps: Vec<Complex64> = logs.iter().map(|l| (l - max_re).exp()).collect();
        if amps.iter().any(|a| !a.is_finite()) {
            return Err(Error::DegenerateState("RBM amplitudes are not finite"));
        }
        StateVector::new(self.n_sites, amps)
    }

    /// Parameters of `i sigma^y_j |Psi>` (up to a global phase):
    /// `a_j -> -(a_j + i pi/2)`, `W_jl -> -W_jl`, everything else unchanged.
    pub fn apply_pi_rotation(&self, site: usize) -> Self {
        assert!(site < self.n_sites, "site {site} out of range for L={}", self.n_sites);
        let mut out = self.clone();
        out.a[site] = -(self.a[site] + Complex64::new(0.0, FRAC_PI_2));
        let m = self.n_hidden;
        out.w[site * m..(site + 1) * m]
            .iter_mut()
            .for_each(|w| *w = -*w);
        out
    }

    pub fn to_checkpoint(&self, seed: u64, iteration: usize) -> RbmCheckpoint {
        let pair = |c: &Complex64| [c.re, c.im];
        RbmCheckpoint {
            n_sites: self.n_sites,
            alpha: self.alpha(),
            n_hidden: self.n_hidden,
            seed,
            iteration,
            a: self.a.iter().map(pair).collect(),
            b: self.b.iter().map(pair).collect(),
            w: self
                .w
                .chunks(self.n_hidden)
                .map(|row| row.iter().map(pair).collect())
                .collect(),
        }
    }
}

/// On-disk checkpoint: complex numbers as `[re, im]` pairs, `w[site][hidden]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbmCheckpoint {
    pub n_sites: usize,
    pub alpha: f64,
    pub n_hidden: usize,
    pub seed: u64,
    pub iteration: usize,
    pub a: Vec<[f64; 2]>,
    pub b: Vec<[f64; 2]>,
    pub w: Vec<Vec<[f64; 2]>>,
}

impl RbmCheckpoint {
    pub fn to_params(&self) -> Result<RbmParams> {
        let c = |p: &[f64; 2]| Complex64::new(p[0], p[1]);
        if self.w.len() != self.n_sites || self.w.iter().any(|r| r.len() != self.n_hidden) {
            return Err(Error::InvalidArgument("checkpoint weight matrix has wrong shape".into()));
        }
        let flat: Vec<Complex64> = self
            .a
            .iter()
            .chain(&self.b)
            .chain(self.w.iter().flatten())
            .map(c)
            .collect();
        RbmParams::from_flat(self.n_sites, self.n_hidden, &flat)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
