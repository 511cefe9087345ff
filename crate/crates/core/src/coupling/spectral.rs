//! Eigenvalue computation: dense symmetric solve below the storage
//! cutoff, deflated power iteration (top two only) above it.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::CouplingMatrix;
use crate::error::{Error, Result};

/// Full spectrum in decreasing order (dense path, `n <= DENSE_LIMIT`).
pub(crate) fn dense_spectrum(a: &CouplingMatrix) -> Vec<f64> {
    let n = a.n();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a.for_row(i, |j, v| m[(i, j)] = v);
    }
    let mut eigs: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eigs
}

/// Top two eigenvalues by shifted power iteration with deflation.
///
/// The shift `c = max_i R_i` keeps every eigenvalue of `A + cI`
/// nonnegative (Gershgorin), so the algebraically largest eigenvalues
/// are also largest in magnitude.  Convergence is certified by the
/// residual `||Bv - theta v|| <= tol * theta`.
pub(crate) fn top_two_power(
    a: &CouplingMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    let n = a.n();
    if n == 1 {
        return Ok((0.0, 0.0));
    }
    let shift = a.row_sums().iter().fold(0.0, |m: f64, &r| m.max(r)) + 1.0;

    let ones = vec![1.0 / (n as f64).sqrt(); n];
    let (theta1, v1) = power_iterate(a, shift, ones, None, tol, max_iter)?;

    let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_0002);
    let mut v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v0);
    let (theta2, _) = power_iterate(a, shift, v0, Some(&v1), tol, max_iter)?;

    let l1 = theta1 - shift;
    let l2 = theta2 - shift;
    Ok(if l2 > l1 { (l2, l1) } else { (l1, l2) })
}

fn power_iterate(
    a: &CouplingMatrix,
    shift: f64,
    mut v: Vec<f64>,
    deflate: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    let n = a.n();
    let mut w = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iter in 0..max_iter {
        if let Some(d) = deflate {
            orthogonalize(&mut v, d);
            normalize(&mut v);
        }
        a.matvec(&v, &mut w);
        for i in 0..n {
            w[i] += shift * v[i];
        }
        if let Some(d) = deflate {
            orthogonalize(&mut w, d);
        }
        let theta: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        residual = v
            .iter()
            .zip(&w)
            .map(|(x, y)| (y - theta * x) * (y - theta * x))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * theta.abs().max(1e-300) {
            return Ok((theta, v));
        }
        std::mem::swap(&mut v, &mut w);
        normalize(&mut v);
        let _ = iter;
    }
    Err(Error::EigenNoConvergence {
        residual,
        iterations: max_iter,
        tolerance: tol,
    })
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

fn orthogonalize(v: &mut [f64], against: &[f64]) {
    let dot: f64 = v.iter().zip(against).map(|(x, y)| x * y).sum();
    v.iter_mut().zip(against).for_each(|(x, y)| *x -= dot * y);
}
