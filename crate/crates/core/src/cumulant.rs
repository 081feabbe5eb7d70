//! Cumulant expansion `log Psi(s) = sum_A c_A S_A(s)` with `S_A = prod_{i in A} s_i`,
//! computed with a fast Walsh-Hadamard transform, and its magnitude-ranked truncation.
//!
//! With `s_i = +1` for a set bit, `S_A(s) = (-1)^{|A| - popcount(A & s)}`, so the
//! coefficients are the standard transform times `(-1)^{|A|}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert;
use crate::state::StateVector;

/// Amplitudes below this modulus are clamped before taking the log. States
/// with exact zeros therefore have regularization-dependent coefficients.
pub const DEFAULT_FLOOR: f64 = 1e-30;

/// Unnormalized Walsh-Hadamard transform; applying it twice multiplies by `len`.
pub fn fwht(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

pub fn fwht_in_place(v: &mut [Complex64]) -> Result<()> {
    let n = v.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
    Ok(())
}

fn order_sign(mask: usize) -> f64 {
    if mask.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Expansion of `f(s) = sum_A w_A S_A(s)`, i.e. `w = transform(f) / 2^L` up to order signs.
fn expand(values: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c = fwht(values)?;
    let scale = 1.0 / values.len() as f64;
    for (mask, x) in c.iter_mut().enumerate() {
        *x *= order_sign(mask) * scale;
    }
    Ok(c)
}

/// Inverse of [`expand`]: evaluates `sum_A w_A S_A(s)` for every `s`.
fn evaluate(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .map(|(mask, x)| x * order_sign(mask))
        .collect();
    fwht_in_place(&mut v).expect("power-of-two length");
    v
}

/// Coefficients of the expansion of `Psi` itself (not its log).
pub fn walsh_coefficients(psi: &StateVector) -> Vec<Complex64> {
    expand(psi.amplitudes()).expect("state length is a power of two")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantCoefficients {
    n_sites: usize,
    /// Indexed by subset bitmask `A`.
    c: Vec<Complex64>,
}

impl CumulantCoefficients {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn values(&self) -> &[Complex64] {
        &self.c
    }

    pub fn get(&self, mask: usize) -> Complex64 {
        self.c[mask]
    }

    /// Subset bitmasks by descending `|c_A|`, ties by ascending mask.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.c.len()).collect();
        order.sort_by(|&a, &b| self.c[b].norm().total_cmp(&self.c[a].norm()).then(a.cmp(&b)));
        order
    }

    /// Reconstructs `exp(sum_{A in kept} c_A S_A)`, normalized and phase-fixed.
    pub fn reconstruct(&self, kept: &[usize]) -> Result<StateVector> {
        let mut masked = vec![Complex64::new(0.0, 0.0); self.c.len()];
        for &a in kept {
            masked[a] = self.c[a];
        }
        let logs = evaluate(&masked);
        let max_re = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        let amps = logs
            .iter()
            .map(|l| (l - max_re).exp())
            .collect();
        StateVector::new(self.n_sites, amps)
    }

    pub fn reconstruct_full(&self) -> Result<StateVector> {
        let all: Vec<usize> = (0..self.c.len()).collect();
        self.reconstruct(&all)
    }

    /// One CSV-ready row per coefficient, in rank order.
    pub fn rows(&self) -> Vec<CoefficientRow> {
        self.ranking()
            .into_iter()
            .enumerate()
            .map(|(rank, mask)| CoefficientRow {
                bitmask: mask,
                order: mask.count_ones() as usize,
                re: self.c[mask].re,
                im: self.c[mask].im,
                abs: self.c[mask].norm(),
                rank,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub bitmask: usize,
    pub order: usize,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub rank: usize,
}

/// `c = transform(log|psi| + i arg psi) / 2^L`, with `|psi|` clamped below at `floor`.
pub fn cumulant_coefficients(psi: &StateVector, floor: f64) -> Result<CumulantCoefficients> {
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument("clamp floor must be > 0".into()));
    }
    let amps = psi.amplitudes();
    if amps.iter().all(|a| a.norm() <= floor) {
        return Err(Error::DegenerateState("every amplitude is at the clamp floor"));
    }
    let logs: Vec<Complex64> = amps
        .iter()
        .map(|a| {
            let m = a.norm().max(floor);
            let phase = if a.norm() > 0.0 { a.arg() } else { 0.0 };
            Complex64::new(m.ln(), phase)
        })
        .collect();
    Ok(CumulantCoefficients {
        n_sites: psi.n_sites(),
        c: expand(&logs)?,
    })
}

#[derive(Clone, Debug)]
pub struct TruncationResult {
    pub kept: Vec<usize>,
    pub state: StateVector,
    /// Against the reference, when one was given.
    pub infidelity: Option<f64>,
}

/// Keeps the `n` largest coefficients of `c` itself.
pub fn truncate(c: &CumulantCoefficients, n: usize) -> Result<TruncationResult> {
    truncate_with_ranking(c, &c.ranking(), n, None)
}

/// Keeps the first `n` masks of `ranking`, taking values from `c`.
pub fn truncate_with_ranking(
    c: &CumulantCoefficients,
    ranking: &[usize],
    n: usize,
    reference: Option<&StateVector>,
) -> Result<TruncationResult> {
    let dim = c.c.len();
    if n == 0 || n > dim || ranking.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "truncation size {n} outside 1..={dim} or ranking of wrong length"
        )));
    }
    let kept = ranking[..n].to_vec();
    let state = c.reconstruct(&kept)?;
    let infidelity = reference.map(|r| state.infidelity(r));
    Ok(TruncationResult {
        kept,
        state,
        infidelity,
    })
}

/// Truncation curve of `source`: for each `N`, keep the coefficients at the
/// `N` largest positions of the *reference* expansion, with values taken
/// from the source expansion, and measure the infidelity to the reference.
pub fn infidelity_curve(
    source: &StateVector,
    reference: &StateVector,
    ns: &[usize],
    floor: f64,
) -> Result<Vec<(usize, f64)>> {
    if source.n_sites() != reference.n_sites() {
        return Err(Error::LengthMismatch {
            expected: reference.dim(),
            actual: source.dim(),
        });
    }
    let c_src = cumulant_coefficients(source, floor)?;
    let ranking = cumulant_coefficients(reference, floor)?.ranking();
    ns.par_iter()
        .map(|&n| {
            let t = truncate_with_ranking(&c_src, &ranking, n, Some(reference))?;
            Ok((n, t.infidelity.expect("reference given")))
        })
        .collect()
}

/// Every `N` for `L <= 10`, otherwise about 200 log-spaced values from 1 to `2^L`.
pub fn default_grid(n_sites: usize) -> Vec<usize> {
    let dim = hilbert::dim(n_sites);
    if n_sites <= 10 {
        return (1..=dim).collect();
    }
    let top = (dim as f64).ln();
    let mut grid: Vec<usize> = (0..200)
        .map(|k| (top * k as f64 / 199.0).exp().round() as usize)
        .map(|n| n.clamp(1, dim))
        .collect();
    grid.dedup();
    grid
}

/// `|c_model(A) - c_exact(A)| / |c_exact(A)|` in the exact ranking order;
/// `None` where `|c_exact(A)| < floor`.
pub fn coefficient_relative_errors(
    c_model: &CumulantCoefficients,
    c_exact: &CumulantCoefficients,
    floor: f64,
) -> Result<Vec<(usize, Option<f64>)>> {
    if c_model.c.len() != c_exact.c.len() {
        return Err(Error::LengthMismatch {
            expected: c_exact.c.len(),
            actual: c_model.c.len(),
        });
    }
    Ok(c_exact
        .ranking()
        .into_iter()
        .enumerate()
        .map(|(rank, a)| {
            let e = c_exact.c[a].norm();
            (rank, (e >= floor).then(|| (c_model.c[a] - c_exact.c[a]).norm() / e))
        })
        .collect())
}

/// Number of coefficients of each order `0..=L`, i.e. binomial coefficients.
pub fn order_counts(n_sites: usize) -> Vec<usize> {
    let mut counts = vec![0; n_sites + 1];
    for mask in 0..hilbert::dim(n_sites) {
        counts[(mask as u32).count_ones() as usize] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ground_states;
    use crate::hamiltonian::RotatedTfim;
    use crate::hilbert::spin;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Oracle: evaluate S_A(s) directly from spins.
    fn monomial(mask: usize, s: usize, l: usize) -> f64 {
        (0..l)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| f64::from(spin(s, i)))
            .product()
    }

    #[test]
    fn fwht_small_cases() {
        assert_eq!(fwht(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap(), vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let out = fwht(&[c(0.5, -1.0); 8]).unwrap();
        assert_eq!(out[0], c(4.0, -8.0));
        assert!(out[1..].iter().all(|x| x.norm() == 0.0));
        assert!(matches!(fwht(&[c(1.0, 0.0); 3]), Err(Error::NotPowerOfTwo(3))));
    }

    #[test]
    fn expansion_matches_direct_monomials() {
        let l = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f: Vec<Complex64> = (0..16).map(|_| c(rng.random(), rng.random())).collect();
        let w = expand(&f).unwrap();
        for s in 0..16 {
            let direct: Complex64 = (0..16).map(|a| w[a] * monomial(a, s, l)).sum();
            assert!((direct - f[s]).norm() < 1e-13);
        }
    }

    #[test]
    fn uniform_state() {
        let coeffs = cumulant_coefficients(&StateVector::uniform(3), DEFAULT_FLOOR).unwrap();
        assert!((coeffs.get(0) - c((1.0 / 8f64.sqrt()).ln(), 0.0)).norm() < 1e-14);
        assert!(coeffs.values()[1..].iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn product_state_gives_fields() {
        let a = [0.3, -0.7, 0.1, 1.2];
        let amps: Vec<f64> = (0..16)
            .map(|s| (0..4).map(|i| a[i] * f64::from(spin(s, i))).sum::<f64>().exp())
            .collect();
        let psi = StateVector::from_real(4, &amps).unwrap();
        let coeffs = cumulant_coefficients(&psi, DEFAULT_FLOOR).unwrap();
        for mask in 1..16usize {
            let expected = if mask.count_ones() == 1 { a[mask.trailing_zeros() as usize] } else { 0.0 };
            assert!((coeffs.get(mask) - c(expected, 0.0)).norm() < 1e-13, "{mask}");
        }
    }

    #[test]
    fn sign_flips_enter_as_imaginary_pi() {
        // Psi(s) = s_0 / 2 on two sites: log = i pi (1 - s_0) / 2.
        let psi = StateVector::from_real(2, &[-1.0, 1.0, -1.0, 1.0]).unwrap();
        let coeffs = cumulant_coefficients(&psi, DEFAULT_FLOOR).unwrap();
        assert!((coeffs.get(1) - c(0.0, -std::f64::consts::FRAC_PI_2)).norm() < 1e-14);
        assert!((coeffs.reconstruct_full().unwrap().infidelity(&psi)) < 1e-14);
    }

    #[test]
    fn ground_state_round_trip() {
        let h = RotatedTfim::new(10, 1.5, 0.0).unwrap();
        let psi = ground_states(&h, 1).unwrap().ground_state().clone();
        let coeffs = cumulant_coefficients(&psi, DEFAULT_FLOOR).unwrap();
        let t = truncate(&coeffs, 1 << 10).unwrap();
        assert!(t.state.infidelity(&psi) <= 1e-12);
        let curve = infidelity_curve(&psi, &psi, &[1, 1024], DEFAULT_FLOOR).unwrap();
        assert!(curve[1].1 <= 1e-12);
    }

    #[test]
    fn single_coefficient_is_uniform_state() {
        let h = RotatedTfim::with_theta_over_pi(6, 1.5, 0.2).unwrap();
        let psi = ground_states(&h, 1).unwrap().ground_state().clone();
        let coeffs = cumulant_coefficients(&psi, DEFAULT_FLOOR).unwrap();
        let t = truncate(&coeffs, 1).unwrap();
        assert_eq!(t.kept, vec![0]);
        assert!(t.state.infidelity(&StateVector::uniform(6)) < 1e-14);
    }

    #[test]
    fn ranking_breaks_ties_by_mask() {
        let coeffs = CumulantCoefficients {
            n_sites: 2,
            c: vec![c(1.0, 0.0), c(0.0, 2.0), c(-2.0, 0.0), c(1.0, 0.0)],
        };
        assert_eq!(coeffs.ranking(), vec![1, 2, 0, 3]);
        let rows = coeffs.rows();
        assert_eq!(rows[0].bitmask, 1);
        assert_eq!(rows[3].order, 2);
    }

    #[test]
    fn relative_errors() {
        let h = RotatedTfim::new(5, 1.0, 0.4).unwrap();
        let psi = ground_states(&h, 1).unwrap().ground_state().clone();
        let exact = cumulant_coefficients(&psi, DEFAULT_FLOOR).unwrap();
        let same = coefficient_relative_errors(&exact, &exact, 1e-14).unwrap();
        assert!(same.iter().all(|(_, e)| e.is_none_or(|e| e == 0.0)));
        let doubled = CumulantCoefficients {
            n_sites: 5,
            c: exact.values().iter().map(|x| x * 2.0).collect(),
        };
        let errs = coefficient_relative_errors(&doubled, &exact, 1e-14).unwrap();
        assert!(errs.iter().all(|(_, e)| e.is_none_or(|e| (e - 1.0).abs() < 1e-12)));
        assert_eq!(errs[0].0, 0);
    }

    #[test]
    fn zero_state_is_rejected() {
        let mut amps = vec![c(0.0, 0.0); 4];
        amps[0] = c(1e-40, 0.0);
        let psi = StateVector::new(2, amps).unwrap();
        // Normalization lifts the lone amplitude to 1, so this is fine...
        assert!(cumulant_coefficients(&psi, DEFAULT_FLOOR).is_ok());
        // ...but a floor above every amplitude is not.
        assert!(cumulant_coefficients(&psi, 2.0).is_err());
    }

    #[test]
    fn order_counts_are_binomial() {
        assert_eq!(order_counts(5), vec![1, 5, 10, 10, 5, 1]);
        assert_eq!(order_counts(10).iter().sum::<usize>(), 1024);
    }

    #[test]
    fn grids() {
        assert_eq!(default_grid(3), (1..=8).collect::<Vec<_>>());
        let g = default_grid(14);
        assert_eq!(*g.first().unwrap(), 1);
        assert_eq!(*g.last().unwrap(), 1 << 14);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.len() > 150 && g.len() <= 200);
    }

    proptest! {
        #[test]
        fn fwht_is_self_inverse(l in 0usize..=8, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<Complex64> = (0..1usize << l).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let back = fwht(&fwht(&v).unwrap()).unwrap();
            for (x, y) in back.iter().zip(&v) {
                prop_assert!((x - y * (1usize << l) as f64).norm() < 1e-12);
            }
        }

        #[test]
        fn round_trip_on_nonzero_states(l in 1usize..=6, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let amps: Vec<Complex64> = (0..1usize << l)
                .map(|_| Complex64::from_polar(rng.random_range(0.1..1.0), rng.random_range(-3.0..3.0)))
                .collect();
            let psi = StateVector::new(l, amps).unwrap();
            let coeffs = cumulant_coefficients(&psi, DEFAULT_FLOOR).unwrap();
            prop_assert!(coeffs.reconstruct_full().unwrap().infidelity(&psi) <= 1e-12);
        }
    }
}
