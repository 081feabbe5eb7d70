//! Restarted Lanczos with full reorthogonalization and explicit deflation,
//! used for the lowest few eigenpairs of chains too long for dense solves.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::SparseRows;

#[derive(Clone, Copy, Debug)]
pub(crate) struct LanczosOptions {
    pub max_basis: usize,
    pub max_restarts: usize,
    pub eigenvalue_tol: f64,
    pub residual_tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_basis: 200,
            max_restarts: 200,
            eigenvalue_tol: 1e-10,
            residual_tol: 1e-9,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

// Two passes of classical Gram-Schmidt.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(v, -c, b);
        }
    }
}

/// Lowest `k` eigenpairs of the symmetric operator `op`, ascending.
pub(crate) fn lowest_eigenpairs(
    op: &SparseRows,
    k: usize,
    opts: LanczosOptions,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let dim = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c);
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);

    for _ in 0..k {
        let mut start: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut start, &locked);
        normalize(&mut start);

        let mut previous = f64::INFINITY;
        let mut last_residual = f64::INFINITY;
        let mut converged = None;
        for _ in 0..opts.max_restarts {
            let (theta, x, residual) = lanczos_cycle(op, &start, &locked, opts.max_basis);
            last_residual = residual;
            if residual <= opts.residual_tol && (theta - previous).abs() <= opts.eigenvalue_tol {
                converged = Some((theta, x));
                break;
            }
            previous = theta;
            start = x;
        }
        let (theta, x) = converged.ok_or(Error::NoConvergence {
            iterations: opts.max_restarts,
            residual: last_residual,
        })?;
        values.push(theta);
        locked.push(x);
    }

    let mut pairs: Vec<_> = values.into_iter().zip(locked).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

/// One Lanczos cycle from `start`; returns the lowest Ritz pair and its true residual.
fn lanczos_cycle(
    op: &SparseRows,
    start: &[f64],
    locked: &[Vec<f64>],
    max_basis: usize,
) -> (f64, Vec<f64>, f64) {
    let dim = op.dim();
    let m_max = max_basis.min(dim - locked.len()).max(1);
    let mut basis: Vec<Vec<f64>> = vec![start.to_vec()];
    let mut alpha = Vec::with_capacity(m_max);
    let mut beta: Vec<f64> = Vec::with_capacity(m_max);

    loop {
        let j = basis.len() - 1;
        let mut w = op.matvec(&basis[j]);
        orthogonalize(&mut w, locked);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        if basis.len() == m_max {
            break;
        }
        orthogonalize(&mut w, &basis);
        let b = normalize(&mut w);
        if b < 1e-12 {
            break;
        }
        beta.push(b);
        basis.push(w);
    }

    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty tridiagonal");
    let y = eig.eigenvectors.column(idx);

    let mut x = vec![0.0; dim];
    for (coef, v) in y.iter().zip(&basis) {
        axpy(&mut x, *coef, v);
    }
    orthogonalize(&mut x, locked);
    normalize(&mut x);

    let mut r = op.matvec(&x);
    orthogonalize(&mut r, locked);
    axpy(&mut r, -theta, &x);
    let residual = dot(&r, &r).sqrt();
    (theta, x, residual)
}
