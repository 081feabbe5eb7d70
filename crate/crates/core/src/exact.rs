//! Exact diagonalization of the rotated chain and the metrics used to compare
//! variational states against it.

use std::cmp::Ordering;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::RotatedTfim;
use crate::lanczos::{self, LanczosOptions};
use crate::state::{self, StateVector};

/// Chains up to this length are diagonalized densely.
pub const DENSE_MAX_SITES: usize = 10;
/// Longest chain accepted by [`ground_states`].
pub const EXACT_MAX_SITES: usize = 16;
/// Maximum imaginary part tolerated by the sign diagnostics.
pub const REAL_TOL: f64 = 1e-8;
/// Relative splitting below which the lowest doublet is flagged.
pub const NEAR_DEGENERATE_REL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub hamiltonian: RotatedTfim,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
    /// `||H v - E v||` per pair.
    pub residuals: Vec<f64>,
}

impl SpectrumSummary {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_state(&self) -> &StateVector {
        &self.eigenvectors[0]
    }

    /// `E_1 - E_0`, if at least two levels were computed.
    pub fn gap(&self) -> Option<f64> {
        (self.eigenvalues.len() > 1).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }

    pub fn near_degenerate(&self) -> bool {
        self.gap()
            .is_some_and(|g| g.abs() < NEAR_DEGENERATE_REL * self.eigenvalues[0].abs())
    }
}

/// Lowest `k` eigenpairs: dense for short chains, restarted Lanczos above.
pub fn ground_states(h: &RotatedTfim, k: usize) -> Result<SpectrumSummary> {
    if k == 0 || k > h.dim() {
        return Err(Error::InvalidArgument(format!(
            "cannot compute {k} eigenpairs of a {}-dimensional space",
            h.dim()
        )));
    }
    if h.n_sites > EXACT_MAX_SITES {
        return Err(Error::TooManySites {
            what: "exact diagonalization",
            n_sites: h.n_sites,
            max: EXACT_MAX_SITES,
        });
    }

    let pairs: Vec<(f64, Vec<f64>)> = if h.n_sites <= DENSE_MAX_SITES {
        let eig = SymmetricEigen::new(h.dense_matrix()?);
        let mut order: Vec<usize> = (0..h.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order
            .into_iter()
            .take(k)
            .map(|i| {
                (
                    eig.eigenvalues[i],
                    eig.eigenvectors.column(i).iter().copied().collect(),
                )
            })
            .collect()
    } else {
        lanczos::lowest_eigenpairs(&h.sparse(), k, LanczosOptions::default())?
    };

    let sparse = h.sparse();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (e, v) in pairs {
        let hv = sparse.matvec(&v);
        let r = hv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - e * b).powi(2))
            .sum::<f64>()
            .sqrt();
        eigenvalues.push(e);
        eigenvectors.push(StateVector::from_real(h.n_sites, &v)?);
        residuals.push(r);
    }
    Ok(SpectrumSummary {
        hamiltonian: *h,
        eigenvalues,
        eigenvectors,
        residuals,
    })
}

fn sgn(x: f64) -> i8 {
    match x.partial_cmp(&0.0) {
        Some(Ordering::Greater) => 1,
        Some(Ordering::Less) => -1,
        _ => 0,
    }
}

/// Phase-fixed real parts, or an error if the state is genuinely complex.
fn real_parts(psi: &StateVector) -> Result<Vec<f64>> {
    let mut amps = psi.amplitudes().to_vec();
    state::fix_global_phase(&mut amps);
    let max_imag = amps.iter().map(|a| a.im.abs()).fold(0.0, f64::max);
    if max_imag > REAL_TOL {
        return Err(Error::NotReal { max_imag });
    }
    Ok(amps.iter().map(|a| a.re).collect())
}

/// Born-weighted mean sign `sum_s |Psi(s)|^2 sgn(Psi(s))`.
pub fn sign_average(psi: &StateVector) -> Result<f64> {
    Ok(real_parts(psi)?
        .iter()
        .map(|&x| x * x * f64::from(sgn(x)))
        .sum())
}

/// Sign average from the real parts of a nearly real state (a trained RBM),
/// returned with the largest imaginary part left after phase fixing.
pub fn approximate_sign_average(psi: &StateVector) -> (f64, f64) {
    let mut amps = psi.amplitudes().to_vec();
    state::fix_global_phase(&mut amps);
    let max_imag = amps.iter().map(|a| a.im.abs()).fold(0.0, f64::max);
    let avg = amps.iter().map(|a| a.norm_sqr() * f64::from(sgn(a.re))).sum();
    (avg, max_imag)
}

/// `(psi0 + psi1)/sqrt(2)` and `(psi0 - psi1)/sqrt(2)`, renormalized and phase-fixed.
pub fn degenerate_superpositions(
    psi0: &StateVector,
    psi1: &StateVector,
) -> Result<(StateVector, StateVector)> {
    if psi0.dim() != psi1.dim() {
        return Err(Error::LengthMismatch {
            expected: psi0.dim(),
            actual: psi1.dim(),
        });
    }
    let combine = |sign: f64| {
        let v = psi0
            .amplitudes()
            .iter()
            .zip(psi1.amplitudes())
            .map(|(a, b)| (a + b * sign) / std::f64::consts::SQRT_2)
            .collect();
        StateVector::new(psi0.n_sites(), v)
    };
    Ok((combine(1.0)?, combine(-1.0)?))
}

/// `1 - |<psi|phi>|^2 / (<psi|psi> <phi|phi>)` for unnormalized vectors.
pub fn infidelity(phi: &[Complex64], psi: &[Complex64]) -> Result<f64> {
    if phi.len() != psi.len() {
        return Err(Error::LengthMismatch {
            expected: phi.len(),
            actual: psi.len(),
        });
    }
    let (n_phi, n_psi) = (state::norm(phi), state::norm(psi));
    if n_phi == 0.0 || n_psi == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let overlap = state::inner(psi, phi).norm() / (n_phi * n_psi);
    Ok((1.0 - overlap * overlap).clamp(0.0, 1.0))
}

/// `|e_var - e0| / |e0|`.
pub fn relative_energy_error(e_var: f64, e0: f64) -> Result<f64> {
    if e0 == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((e_var - e0).abs() / e0.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SortedProbability {
    pub probability: f64,
    /// `+1`, `-1` or `0`; `None` when the state is not real up to a global phase.
    pub sign: Option<i8>,
    /// Configuration index the entry came from.
    pub index: usize,
}

/// `|Psi(s)|^2` in ascending order, tagged with the amplitude sign when defined.
pub fn sorted_probabilities(psi: &StateVector) -> Vec<SortedProbability> {
    let reals = real_parts(psi).ok();
    let mut out: Vec<SortedProbability> = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(index, a)| SortedProbability {
            probability: a.norm_sqr(),
            sign: reals.as_ref().map(|r| sgn(r[index])),
            index,
        })
        .collect();
    out.sort_by(|a, b| {
        a.probability
            .total_cmp(&b.probability)
            .then(a.index.cmp(&b.index))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_spin_spectrum() {
        let h = RotatedTfim::new(1, 1.0, 0.0).unwrap();
        let spec = ground_states(&h, 2).unwrap();
        assert!((spec.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((spec.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!((spec.gap().unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn two_spin_ground_energy() {
        // H = -ZZ - X1 - X2 has E_0 = -sqrt(5) on the symmetric sector.
        let h = RotatedTfim::new(2, 1.0, 0.0).unwrap();
        let spec = ground_states(&h, 1).unwrap();
        assert!((spec.ground_energy() + 5f64.sqrt()).abs() < 1e-13);
        assert!(spec.residuals[0] < 1e-12);
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let h = RotatedTfim::new(10, 0.8, 0.3 * PI).unwrap();
        let dense = ground_states(&h, 3).unwrap();
        let pairs = lanczos::lowest_eigenpairs(&h.sparse(), 3, LanczosOptions::default()).unwrap();
        for (k, (e, v)) in pairs.iter().enumerate() {
            assert!((e - dense.eigenvalues[k]).abs() < 1e-9);
            if k == 0 {
                let s = StateVector::from_real(10, v).unwrap();
                assert!(s.infidelity(dense.ground_state()) < 1e-12);
            }
        }
    }

    #[test]
    fn lanczos_path_for_long_chains() {
        let h = RotatedTfim::new(12, 1.5, 0.2 * PI).unwrap();
        let spec = ground_states(&h, 2).unwrap();
        assert!(spec.residuals.iter().all(|&r| r < 1e-8));
        assert!(spec.eigenvalues[0] < spec.eigenvalues[1]);
        let h0 = RotatedTfim::new(12, 1.5, 0.0).unwrap();
        let spec0 = ground_states(&h0, 2).unwrap();
        assert!((spec0.eigenvalues[0] - spec.eigenvalues[0]).abs() < 1e-9);
        assert!(matches!(
            ground_states(&RotatedTfim::new(17, 1.0, 0.0).unwrap(), 1),
            Err(Error::TooManySites { .. })
        ));
    }

    #[test]
    fn sign_average_cases() {
        let pos = StateVector::from_real(1, &[0.6, 0.8]).unwrap();
        assert!((sign_average(&pos).unwrap() - 1.0).abs() < 1e-15);
        let mixed = StateVector::from_real(1, &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2]).unwrap();
        assert!(sign_average(&mixed).unwrap().abs() < 1e-15);
        // a global phase does not matter
        let rotated = StateVector::new(1, vec![c(0.0, 0.6), c(0.0, -0.8)]).unwrap();
        assert!((sign_average(&rotated).unwrap() - 0.28).abs() < 1e-15);
        let complex = StateVector::new(1, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert!(matches!(sign_average(&complex), Err(Error::NotReal { .. })));
    }

    #[test]
    fn perron_frobenius_at_stoquastic_points() {
        for &theta in &[0.0, FRAC_PI_2] {
            for &lambda in &[0.5, 1.0, 1.5] {
                let h = RotatedTfim::new(8, lambda, theta).unwrap();
                let spec = ground_states(&h, 1).unwrap();
                let s = sign_average(spec.ground_state()).unwrap();
                assert!((s - 1.0).abs() < 1e-10, "lambda={lambda} theta={theta}: {s}");
            }
        }
    }

    #[test]
    fn superpositions() {
        let a = StateVector::from_real(1, &[1.0, 0.0]).unwrap();
        let b = StateVector::from_real(1, &[0.0, 1.0]).unwrap();
        let (p, m) = degenerate_superpositions(&a, &b).unwrap();
        assert!((p.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((p.amplitudes()[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((m.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((m.amplitudes()[1] - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn classical_doublet_splits_into_product_states() {
        // At lambda = 0 the doublet is exactly degenerate, so build the parity
        // eigenstates (cat states) explicitly and check they are eigenstates.
        let h = RotatedTfim::new(5, 0.0, 0.0).unwrap();
        let e0 = ground_states(&h, 2).unwrap().eigenvalues;
        let cat = |sign: f64| {
            let mut v = vec![0.0; 32];
            v[31] = 1.0;
            v[0] = sign;
            StateVector::from_real(5, &v).unwrap()
        };
        let (even, odd) = (cat(1.0), cat(-1.0));
        for s in [&even, &odd] {
            let hs = h.sparse().matvec_complex(s.amplitudes());
            let e = crate::state::inner(s.amplitudes(), &hs).re;
            assert!((e - e0[0]).abs() < 1e-14 && (e - e0[1]).abs() < 1e-14);
            assert!((h.parity_expectation(s).abs() - 1.0).abs() < 1e-14);
        }
        let (p, m) = degenerate_superpositions(&even, &odd).unwrap();
        let (up, down) = (StateVector::basis_state(5, 31), StateVector::basis_state(5, 0));
        let fits = |a: &StateVector, b: &StateVector| a.infidelity(b) < 1e-15;
        assert!((fits(&p, &up) && fits(&m, &down)) || (fits(&p, &down) && fits(&m, &up)));
    }

    #[test]
    fn approximate_sign_tolerates_small_phases() {
        let v = vec![c(0.6, 1e-4), c(-0.8, 0.0)];
        let psi = StateVector::new(1, v).unwrap();
        assert!(sign_average(&psi).is_err());
        let (avg, imag) = approximate_sign_average(&psi);
        // The largest amplitude is made positive.
        assert!((avg - (0.64 - 0.36)).abs() < 1e-6);
        assert!(imag > 0.0 && imag < 1e-3);
    }

    #[test]
    fn infidelity_cases() {
        let v = vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0)];
        assert!(infidelity(&v, &v).unwrap() < 1e-15);
        let rot: Vec<_> = v.iter().map(|a| a * Complex64::from_polar(2.0, 1.234)).collect();
        assert!(infidelity(&rot, &v).unwrap() < 1e-15);
        let e0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let e1 = vec![c(0.0, 0.0), c(0.0, 3.0)];
        assert_eq!(infidelity(&e0, &e1).unwrap(), 1.0);
        assert!(matches!(infidelity(&e0, &[c(0.0, 0.0); 2]), Err(Error::ZeroNorm)));
    }

    #[test]
    fn relative_error_cases() {
        assert_eq!(relative_energy_error(-10.0, -10.0).unwrap(), 0.0);
        assert!((relative_energy_error(-9.9, -10.0).unwrap() - 0.01).abs() < 1e-15);
        assert!(matches!(relative_energy_error(1.0, 0.0), Err(Error::ZeroReference)));
    }

    #[test]
    fn sorted_probability_cases() {
        let u = StateVector::uniform(2);
        let sp = sorted_probabilities(&u);
        assert!(sp.iter().all(|e| (e.probability - 0.25).abs() < 1e-15 && e.sign == Some(1)));

        let d = StateVector::basis_state(2, 2);
        let sp = sorted_probabilities(&d);
        assert_eq!(sp[3].probability, 1.0);
        assert_eq!(sp[3].sign, Some(1));
        assert!(sp[..3].iter().all(|e| e.probability == 0.0 && e.sign == Some(0)));

        let complex = StateVector::new(1, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert!(sorted_probabilities(&complex).iter().all(|e| e.sign.is_none()));
    }

    #[test]
    fn half_pi_ferromagnet_occupies_one_parity_sector() {
        let h = RotatedTfim::new(10, 0.5, FRAC_PI_2).unwrap();
        let spec = ground_states(&h, 1).unwrap();
        let sp = sorted_probabilities(spec.ground_state());
        let negligible = sp.iter().filter(|e| e.probability < 1e-20).count();
        assert_eq!(negligible, 512);
        for e in &sp {
            if e.probability < 1e-20 {
                assert_eq!(e.index.count_ones() % 2, 1, "odd number of up spins");
            }
        }
    }

    #[test]
    fn gap_is_small_in_ordered_phase() {
        let gap = |lambda| {
            ground_states(&RotatedTfim::new(10, lambda, 0.0).unwrap(), 2)
                .unwrap()
                .gap()
                .unwrap()
        };
        let (g05, g1, g2) = (gap(0.5), gap(1.0), gap(2.0));
        assert!(g05 < 1e-2 * g2);
        assert!(g05 < g1 && g1 < g2);
    }

    #[test]
    fn doublet_has_opposite_parity() {
        let h = RotatedTfim::new(8, 0.5, 0.0).unwrap();
        let spec = ground_states(&h, 2).unwrap();
        let p0 = h.parity_expectation(&spec.eigenvectors[0]);
        let p1 = h.parity_expectation(&spec.eigenvectors[1]);
        assert!((p0.abs() - 1.0).abs() < 1e-10 && (p1.abs() - 1.0).abs() < 1e-10);
        assert!((p0 + p1).abs() < 1e-10);
    }
}
