//! Normalized complex state vectors over the full `2^L` configuration space.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert;

/// A normalized state with the global phase fixed: the largest-magnitude
/// amplitude (lowest index on ties) is real and positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_sites: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n_sites: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = hilbert::dim(n_sites);
        if amplitudes.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        let norm = norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        fix_global_phase(&mut amplitudes);
        Ok(Self {
            n_sites,
            amplitudes,
        })
    }

    pub fn from_real(n_sites: usize, amplitudes: &[f64]) -> Result<Self> {
        Self::new(
            n_sites,
            amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn uniform(n_sites: usize) -> Self {
        let dim = hilbert::dim(n_sites);
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self {
            n_sites,
            amplitudes: vec![a; dim],
        }
    }

    pub fn basis_state(n_sites: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); hilbert::dim(n_sites)];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self {
            n_sites,
            amplitudes,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "states live on different chains");
        inner(&self.amplitudes, &other.amplitudes)
    }

    /// `1 - |<self|other>|^2`, clamped to `[0, 1]`.
    pub fn infidelity(&self, other: &StateVector) -> f64 {
        (1.0 - self.overlap(other).norm_sqr()).clamp(0.0, 1.0)
    }

    /// Largest imaginary part, which vanishes for a state real up to global phase.
    pub fn max_imag(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.im.abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Rotates `amplitudes` so that the entry of largest modulus (lowest index on
/// ties) becomes real and positive.
pub fn fix_global_phase(amplitudes: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, a) in amplitudes.iter().enumerate() {
        let m = a.norm_sqr();
        if m > best_mag {
            best = i;
            best_mag = m;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let pivot = amplitudes[best];
    let rot = pivot.conj() / pivot.norm();
    amplitudes.iter_mut().for_each(|a| *a *= rot);
    amplitudes[best] = Complex64::new(amplitudes[best].re, 0.0);
}
