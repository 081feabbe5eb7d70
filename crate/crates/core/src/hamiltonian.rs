//! The basis-rotated transverse-field Ising chain with open boundaries,
//!
//! ```text
//! H(theta) = - sum_{i<L-1} Zt_i Zt_{i+1} - lambda sum_i Xt_i,
//! Xt = cos(theta) X + sin(theta) Z,   Zt = cos(theta) Z - sin(theta) X.
//! ```
//!
//! Expanding the rotated operators, every bond contributes `ZZ`, `ZX`, `XZ`
//! and `XX` strings with coefficients `-c^2, +cs, +cs, -s^2` and every site
//! contributes `X` and `Z` with `-lambda c` and `-lambda s`. All matrix
//! elements in the computational basis are therefore real.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{self, spin, MAX_SITES};
use crate::state::StateVector;

/// Largest chain for which a dense `2^L x 2^L` matrix is built.
pub const MAX_DENSE_SITES: usize = 14;

/// Merged amplitudes smaller than this are not emitted.
pub const DROP_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatedTfim {
    pub n_sites: usize,
    pub lambda: f64,
    pub theta: f64,
}

/// Nonzero entries `(s', H_{s s'})` of one row; the diagonal comes first.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRow {
    pub entries: Vec<(usize, f64)>,
}

impl MatrixRow {
    pub fn get(&self, col: usize) -> f64 {
        self.entries
            .iter()
            .find(|(c, _)| *c == col)
            .map_or(0.0, |(_, v)| *v)
    }
}

/// All rows of `H` packed in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseRows {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    pub fn dim(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[s]..self.offsets[s + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim());
        (0..self.dim())
            .into_par_iter()
            .map(|s| self.row(s).map(|(t, h)| h * v[t]).sum())
            .collect()
    }

    pub fn matvec_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim());
        (0..self.dim())
            .into_par_iter()
            .map(|s| self.row(s).map(|(t, h)| v[t] * h).sum())
            .collect()
    }
}

impl RotatedTfim {
    pub fn new(n_sites: usize, lambda: f64, theta: f64) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidArgument("chain needs at least one site".into()));
        }
        if n_sites > MAX_SITES {
            return Err(Error::TooManySites {
                what: "the Hamiltonian",
                n_sites,
                max: MAX_SITES,
            });
        }
        if !lambda.is_finite() || !theta.is_finite() {
            return Err(Error::InvalidArgument("lambda and theta must be finite".into()));
        }
        Ok(Self {
            n_sites,
            lambda,
            theta,
        })
    }

    /// Same as [`new`](Self::new) with the angle given in units of pi.
    pub fn with_theta_over_pi(n_sites: usize, lambda: f64, theta_over_pi: f64) -> Result<Self> {
        Self::new(n_sites, lambda, theta_over_pi * PI)
    }

    pub fn dim(&self) -> usize {
        hilbert::dim(self.n_sites)
    }

    pub fn row(&self, s: usize) -> MatrixRow {
        let mut entries = Vec::with_capacity(2 * self.n_sites);
        self.for_each_in_row(s, |t, v| entries.push((t, v)));
        MatrixRow { entries }
    }

    /// Calls `f(s', H_{s s'})` for every nonzero element of row `s`, diagonal first.
    pub fn for_each_in_row(&self, s: usize, mut f: impl FnMut(usize, f64)) {
        let n = self.n_sites;
        assert!(s < self.dim(), "configuration {s} out of range for L={n}");
        let (sn, c) = self.theta.sin_cos();
        let (cc, cs, ss) = (c * c, c * sn, sn * sn);

        let mut diag = 0.0;
        for i in 0..n - 1 {
            diag -= cc * f64::from(spin(s, i) * spin(s, i + 1));
        }
        for i in 0..n {
            diag -= self.lambda * sn * f64::from(spin(s, i));
        }
        if diag.abs() >= DROP_TOL {
            f(s, diag);
        }

        // X_i from the field, Z_j X_i / X_i Z_j from the two neighbouring bonds.
        for i in 0..n {
            let mut v = -self.lambda * c;
            if i > 0 {
                v += cs * f64::from(spin(s, i - 1));
            }
            if i + 1 < n {
                v += cs * f64::from(spin(s, i + 1));
            }
            if v.abs() >= DROP_TOL {
                f(s ^ (1 << i), v);
            }
        }

        if ss >= DROP_TOL {
            for i in 0..n - 1 {
                f(s ^ (0b11 << i), -ss);
            }
        }
    }

    /// `H_{s s'}`.
    pub fn element(&self, s: usize, s_prime: usize) -> f64 {
        let mut out = 0.0;
        self.for_each_in_row(s, |t, v| {
            if t == s_prime {
                out = v;
            }
        });
        out
    }

    pub fn sparse(&self) -> SparseRows {
        let rows: Vec<MatrixRow> = (0..self.dim()).into_par_iter().map(|s| self.row(s)).collect();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let nnz = rows.iter().map(|r| r.entries.len()).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        offsets.push(0);
        for r in rows {
            for (t, v) in r.entries {
                cols.push(t);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        SparseRows {
            offsets,
            cols,
            vals,
        }
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<f64>> {
        if self.n_sites > MAX_DENSE_SITES {
            return Err(Error::TooManySites {
                what: "dense matrix assembly",
                n_sites: self.n_sites,
                max: MAX_DENSE_SITES,
            });
        }
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for s in 0..d {
            self.for_each_in_row(s, |t, v| m[(s, t)] = v);
        }
        Ok(m)
    }

    /// True iff every off-diagonal element is `<= tol`.
    pub fn is_stoquastic(&self, tol: f64) -> bool {
        (0..self.dim()).into_par_iter().all(|s| {
            let mut ok = true;
            self.for_each_in_row(s, |t, v| ok &= t == s || v <= tol);
            ok
        })
    }

    /// Writes `H_{s's} = -|H_{s's}| exp(i Theta)` and returns `(|H_{s's}|, Theta)`
    /// with `Theta` in `{0, pi}`.
    pub fn phase_amplitude(&self, s: usize, s_prime: usize) -> Result<(f64, f64)> {
        let h = self.element(s_prime, s);
        if h == 0.0 {
            return Err(Error::ZeroElement {
                row: s_prime,
                col: s,
            });
        }
        Ok((h.abs(), if h < 0.0 { 0.0 } else { PI }))
    }

    /// Energy of `A(s) exp(i phi(s))` written through the magnitude/phase split
    /// of the matrix elements:
    /// `-sum_{ss'} |H_{s's}| A(s') A(s) exp(i (phi(s') - phi(s) + Theta)) / sum A^2`.
    pub fn decomposed_energy(&self, amplitudes: &[f64], phases: &[f64]) -> Result<Complex64> {
        self.check_len(amplitudes.len())?;
        self.check_len(phases.len())?;
        let norm: f64 = amplitudes.iter().map(|a| a * a).sum();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let total: Complex64 = (0..self.dim())
            .into_par_iter()
            .map(|s| {
                let mut acc = Complex64::new(0.0, 0.0);
                self.for_each_in_row(s, |t, h| {
                    let theta_h = if h < 0.0 { 0.0 } else { PI };
                    let phase = phases[t] - phases[s] + theta_h;
                    acc -= Complex64::from_polar(h.abs() * amplitudes[t] * amplitudes[s], phase);
                });
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        Ok(total / norm)
    }

    /// The uniform-amplitude limit `|Psi(s)|^2 = 2^-L` of [`decomposed_energy`](Self::decomposed_energy).
    pub fn uniform_amplitude_energy(&self, phases: &[f64]) -> Result<Complex64> {
        self.decomposed_energy(&vec![1.0; self.dim()], phases)
    }

    /// Energy of the amplitudes `A` with every off-diagonal phase factor removed:
    /// `(sum_s H_ss A(s)^2 - sum_{s != s'} |H_{s's}| A(s') A(s)) / sum_s A(s)^2`.
    ///
    /// Diagonal elements keep their sign since `phi(s) - phi(s)` cannot absorb a
    /// diagonal phase; for stoquastic `H` this is the exact energy of the
    /// nonnegative state `A`.
    pub fn stoquastic_energy(&self, amplitudes: &[f64]) -> Result<f64> {
        self.check_len(amplitudes.len())?;
        if amplitudes.iter().any(|&a| a < 0.0 || !a.is_finite()) {
            return Err(Error::InvalidArgument(
                "amplitudes must be finite and nonnegative".into(),
            ));
        }
        let norm: f64 = amplitudes.iter().map(|a| a * a).sum();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let partial: Vec<f64> = (0..self.dim())
            .into_par_iter()
            .map(|s| {
                let mut acc = 0.0;
                self.for_each_in_row(s, |t, h| {
                    let h = if t == s { h } else { -h.abs() };
                    acc += h * amplitudes[t] * amplitudes[s];
                });
                acc
            })
            .collect();
        Ok(partial.iter().sum::<f64>() / norm)
    }

    /// `P |psi>` with `P = prod_i Xt_i`.
    pub fn apply_parity(&self, amplitudes: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(amplitudes.len(), self.dim());
        let (sn, c) = self.theta.sin_cos();
        let mut v = amplitudes.to_vec();
        let mut next = vec![Complex64::new(0.0, 0.0); v.len()];
        for i in 0..self.n_sites {
            next.par_iter_mut().enumerate().for_each(|(x, out)| {
                *out = v[x ^ (1 << i)] * c + v[x] * (sn * f64::from(spin(x, i)));
            });
            std::mem::swap(&mut v, &mut next);
        }
        v
    }

    /// `<psi| P |psi>` for a normalized state.
    pub fn parity_expectation(&self, psi: &StateVector) -> f64 {
        let p = self.apply_parity(psi.amplitudes());
        psi.amplitudes()
            .iter()
            .zip(&p)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .re
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    use nalgebra::{DMatrix, SymmetricEigen};

    // Oracle: build H(theta) from explicit 2x2 Pauli matrices and Kronecker
    // products. Single-site basis order is (down, up), site 0 is the last
    // factor, so bit i of the row index is site i.
    fn pauli_x() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }
    fn pauli_z() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0])
    }

    fn embed(n: usize, ops: &[(usize, DMatrix<f64>)]) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::identity(1, 1);
        for site in (0..n).rev() {
            let op = ops
                .iter()
                .find(|(i, _)| *i == site)
                .map(|(_, o)| o.clone())
                .unwrap_or_else(|| DMatrix::identity(2, 2));
            m = m.kronecker(&op);
        }
        m
    }

    fn kron_oracle(n: usize, lambda: f64, theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        let xt = pauli_x() * c + pauli_z() * s;
        let zt = pauli_z() * c - pauli_x() * s;
        let d = 1 << n;
        let mut h = DMatrix::zeros(d, d);
        for i in 0..n.saturating_sub(1) {
            h -= embed(n, &[(i, zt.clone()), (i + 1, zt.clone())]);
        }
        for i in 0..n {
            h -= embed(n, &[(i, xt.clone())]) * lambda;
        }
        h
    }

    fn sorted_eigs(m: DMatrix<f64>) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn row_l2_theta0() {
        let h = RotatedTfim::new(2, 1.0, 0.0).unwrap();
        let row = h.row(0b11);
        assert_eq!(row.entries, vec![(0b11, -1.0), (0b10, -1.0), (0b01, -1.0)]);
    }

    #[test]
    fn row_l1_single_field() {
        let h = RotatedTfim::new(1, 0.7, 0.0).unwrap();
        assert_eq!(h.row(0).entries, vec![(1, -0.7)]);
    }

    #[test]
    fn row_l2_half_pi_matches_oracle() {
        let h = RotatedTfim::new(2, 1.0, FRAC_PI_2).unwrap();
        let oracle = kron_oracle(2, 1.0, FRAC_PI_2);
        let row = h.row(0b11);
        // diagonal -lambda (s_0 + s_1) = -2, one XX double flip -1.
        assert_eq!(row.entries.len(), 2);
        for t in 0..4 {
            assert!((row.get(t) - oracle[(0b11, t)]).abs() < 1e-14);
        }
        assert!((row.get(0b11) + 2.0).abs() < 1e-14);
    }

    #[test]
    fn dense_small_cases() {
        let m = RotatedTfim::new(1, 1.0, 0.0).unwrap().dense_matrix().unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]));
        // -lambda Z in index order (down, up).
        let m = RotatedTfim::new(1, 1.0, FRAC_PI_2).unwrap().dense_matrix().unwrap();
        assert!((m - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).amax() < 1e-15);

        let m = RotatedTfim::new(2, 1.0, 0.0).unwrap().dense_matrix().unwrap();
        let oracle = kron_oracle(2, 1.0, 0.0);
        assert!((&m - &oracle).amax() < 1e-15);
        assert_eq!(m.diagonal().as_slice(), &[-1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn dense_matches_kronecker_oracle() {
        for n in 1..=6 {
            for &theta in &[0.0, 0.1 * PI, 0.25 * PI, 0.38 * PI, FRAC_PI_2, PI, 1.3] {
                let h = RotatedTfim::new(n, 1.3, theta).unwrap();
                let diff = (h.dense_matrix().unwrap() - kron_oracle(n, 1.3, theta)).amax();
                assert!(diff < 1e-13, "n={n} theta={theta}: {diff}");
            }
        }
    }

    #[test]
    fn dense_refuses_large_chains() {
        let h = RotatedTfim::new(15, 1.0, 0.0).unwrap();
        assert!(matches!(h.dense_matrix(), Err(Error::TooManySites { .. })));
        assert!(RotatedTfim::new(25, 1.0, 0.0).is_err());
    }

    #[test]
    fn rows_are_symmetric_and_bounded() {
        for &theta in &[0.0, 0.3, FRAC_PI_2, PI] {
            let h = RotatedTfim::new(6, 0.8, theta).unwrap();
            for s in 0..h.dim() {
                let row = h.row(s);
                assert!(row.entries.len() <= 1 + 2 * 6 + 3 * 5);
                let mut targets: Vec<_> = row.entries.iter().map(|e| e.0).collect();
                targets.sort_unstable();
                targets.dedup();
                assert_eq!(targets.len(), row.entries.len());
                for &(t, v) in &row.entries {
                    assert_eq!(h.row(t).get(s), v);
                }
            }
        }
    }

    #[test]
    fn near_zero_angle_drops_spurious_terms() {
        let h = RotatedTfim::new(4, 1.0, 1e-18).unwrap();
        assert_eq!(h.row(0b1010).entries.len(), 5);
    }

    #[test]
    fn stoquastic_classification() {
        assert!(RotatedTfim::new(4, 0.5, 0.0).unwrap().is_stoquastic(1e-12));
        assert!(!RotatedTfim::new(4, 1.5, PI).unwrap().is_stoquastic(1e-12));
        assert!(RotatedTfim::new(4, 1.5, FRAC_PI_2).unwrap().is_stoquastic(1e-12));
        // Single flips carry cs(s_{j-1} + s_{j+1}) - lambda c, positive only for small lambda.
        assert!(!RotatedTfim::new(4, 0.5, 0.25 * PI).unwrap().is_stoquastic(1e-12));
        assert!(RotatedTfim::new(4, 1.5, 0.25 * PI).unwrap().is_stoquastic(1e-12));
    }

    #[test]
    fn phase_amplitude_split() {
        let h = RotatedTfim::new(3, 1.0, 0.0).unwrap();
        assert_eq!(h.phase_amplitude(0b000, 0b001).unwrap(), (1.0, 0.0));
        // all-up diagonal at L=2 is -1.
        let h2 = RotatedTfim::new(2, 1.0, 0.0).unwrap();
        assert_eq!(h2.phase_amplitude(0b11, 0b11).unwrap(), (1.0, 0.0));
        assert!(matches!(
            h.phase_amplitude(0b000, 0b111),
            Err(Error::ZeroElement { .. })
        ));

        let h = RotatedTfim::new(4, 1.5, PI).unwrap();
        let dense = h.dense_matrix().unwrap();
        let mut saw_positive = false;
        for s in 0..16 {
            for i in 0..4 {
                let t = s ^ (1 << i);
                let v = dense[(t, s)];
                let (mag, phase) = h.phase_amplitude(s, t).unwrap();
                assert!((mag - v.abs()).abs() < 1e-15);
                let rebuilt = -mag * phase.cos();
                assert!((rebuilt - v).abs() < 1e-14);
                if v > 0.0 {
                    saw_positive = true;
                    assert_eq!(phase, PI);
                }
            }
        }
        assert!(saw_positive);
    }

    #[test]
    fn stoquastic_energy_cases() {
        let h = RotatedTfim::new(1, 1.0, 0.0).unwrap();
        assert!((h.stoquastic_energy(&[1.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(h.stoquastic_energy(&[0.0, 0.0]), Err(Error::ZeroNorm)));

        // delta-peaked on all-up: diagonal -(L-1) - lambda sin(theta) L.
        let h = RotatedTfim::new(4, 1.2, 0.0).unwrap();
        let mut a = vec![0.0; 16];
        a[15] = 0.3;
        assert!((h.stoquastic_energy(&a).unwrap() + 3.0).abs() < 1e-14);

        // exact ground-state magnitudes of a stoquastic H reproduce E_0.
        let h = RotatedTfim::new(6, 0.9, 0.0).unwrap();
        let eig = SymmetricEigen::new(h.dense_matrix().unwrap());
        let (k, e0) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let mags: Vec<f64> = eig.eigenvectors.column(k).iter().map(|x| x.abs()).collect();
        assert!((h.stoquastic_energy(&mags).unwrap() - e0).abs() < 1e-10);
    }

    #[test]
    fn decomposed_energy_is_rayleigh_quotient() {
        let h = RotatedTfim::new(4, 1.1, 0.3 * PI).unwrap();
        let dense = h.dense_matrix().unwrap();
        let amps: Vec<f64> = (0..16).map(|i| 0.2 + 0.05 * f64::from(i % 5)).collect();
        let phases: Vec<f64> = (0..16).map(|i| 0.37 * f64::from(i)).collect();
        let psi: Vec<Complex64> = amps
            .iter()
            .zip(&phases)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        let mut num = Complex64::new(0.0, 0.0);
        for s in 0..16 {
            for t in 0..16 {
                num += psi[s].conj() * dense[(s, t)] * psi[t];
            }
        }
        let norm: f64 = amps.iter().map(|a| a * a).sum();
        let e = h.decomposed_energy(&amps, &phases).unwrap();
        assert!((e - num / norm).norm() < 1e-12);

        let zero = vec![0.0; 16];
        let uniform = h.uniform_amplitude_energy(&zero).unwrap();
        let sum: f64 = dense.iter().sum();
        assert!((uniform.re - sum / 16.0).abs() < 1e-12);
    }

    #[test]
    fn parity_of_simple_states() {
        let h = RotatedTfim::new(5, 0.7, FRAC_PI_2).unwrap();
        let up = StateVector::basis_state(5, 31);
        assert!((h.parity_expectation(&up) - 1.0).abs() < 1e-14);

        let h = RotatedTfim::new(5, 0.7, 0.0).unwrap();
        let uniform = StateVector::uniform(5);
        assert!((h.parity_expectation(&uniform) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn parity_commutes_with_h() {
        for &theta in &[0.0, 0.2 * PI, FRAC_PI_2, 2.0] {
            let h = RotatedTfim::new(5, 0.6, theta).unwrap();
            let sparse = h.sparse();
            let v: Vec<Complex64> = (0..32)
                .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()))
                .collect();
            let ph = h.apply_parity(&sparse.matvec_complex(&v));
            let hp = sparse.matvec_complex(&h.apply_parity(&v));
            let diff = ph.iter().zip(&hp).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12);
            // P^2 = 1
            let pp = h.apply_parity(&h.apply_parity(&v));
            let diff = pp.iter().zip(&v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn spectrum_is_rotation_invariant() {
        for n in [3, 6, 8] {
            let reference = sorted_eigs(RotatedTfim::new(n, 0.9, 0.0).unwrap().dense_matrix().unwrap());
            for f in [0.1, 0.25, 0.5, 1.0] {
                let h = RotatedTfim::with_theta_over_pi(n, 0.9, f).unwrap();
                let e = sorted_eigs(h.dense_matrix().unwrap());
                let diff = e.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(diff < 1e-10, "n={n} theta={f}pi: {diff}");
            }
        }
    }

    #[test]
    fn half_pi_is_hadamard_conjugate_of_zero() {
        // Hadamard in the (down, up) ordering mapping X <-> Z.
        let had = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, 1.0]) / 2f64.sqrt();
        for n in 1..=6 {
            let mut u = DMatrix::<f64>::identity(1, 1);
            for _ in 0..n {
                u = u.kronecker(&had);
            }
            let h0 = RotatedTfim::new(n, 1.4, 0.0).unwrap().dense_matrix().unwrap();
            let h90 = RotatedTfim::new(n, 1.4, FRAC_PI_2).unwrap().dense_matrix().unwrap();
            assert!((&u * h0 * &u - h90).amax() < 1e-12);
        }
    }

    #[test]
    fn sparse_matvec_matches_dense() {
        let h = RotatedTfim::new(7, 1.2, 0.3).unwrap();
        let dense = h.dense_matrix().unwrap();
        let v: Vec<f64> = (0..128).map(|i| (i as f64).cos()).collect();
        let y = h.sparse().matvec(&v);
        let y_ref = &dense * nalgebra::DVector::from_vec(v);
        let diff = y.iter().zip(y_ref.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }
}
