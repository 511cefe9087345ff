//! Coupling matrices: construction, storage, spectral/regularity
//! diagnostics, and the rate terms appearing in the fluctuation bounds.

mod build;
mod io;
mod spectral;

pub use build::{
    build_block_spin, build_disjoint_union, build_erdos_renyi, build_line_graph_complete,
    build_regular, build_sbm, build_wigner, RegularKind, WignerLaw,
};
pub use io::{read_matrix, write_matrix};

use serde::Serialize;

use crate::error::{Error, Result};

/// Matrices up to this order are stored dense and use the dense
/// symmetric eigensolver; larger ones are stored in compressed sparse
/// rows and use deflated power iteration for the top two eigenvalues.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone)]
enum Storage {
    /// Row-major `n * n`, symmetric, zero diagonal.
    Dense(Vec<f64>),
    /// Compressed sparse rows holding both `(i, j)` and `(j, i)`.
    Csr {
        row_ptr: Vec<usize>,
        cols: Vec<u32>,
        vals: Vec<f64>,
    },
}

/// Symmetric nonnegative coupling matrix with zero diagonal.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    n: usize,
    storage: Storage,
    label: String,
}

impl CouplingMatrix {
    /// Build from a full row-major `n * n` buffer, validating symmetry,
    /// zero diagonal and nonnegativity.
    pub fn from_dense(n: usize, entries: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("matrix order must be >= 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "diagonal entry ({i},{i}) must be zero"
                )));
            }
            for j in (i + 1)..n {
                let (x, y) = (entries[i * n + j], entries[j * n + i]);
                if x != y {
                    return Err(Error::InvalidParameter(format!(
                        "entries ({i},{j}) and ({j},{i}) differ: {x} vs {y}"
                    )));
                }
                if !(x >= 0.0) || !x.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "entry ({i},{j}) = {x} is not a nonnegative finite real"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            storage: Storage::Dense(entries),
            label: label.into(),
        })
    }

    /// Build from strict-upper-triangle triplets `(i, j, value)` with
    /// `i < j`.  Storage is chosen by the order of the matrix.
    pub fn from_upper_triplets(
        n: usize,
        triplets: &[(usize, usize, f64)],
        label: impl Into<String>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("matrix order must be >= 1".into()));
        }
        for &(i, j, v) in triplets {
            if i >= j || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "triplet ({i},{j}) is not strictly upper-triangular for n = {n}"
                )));
            }
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "entry ({i},{j}) = {v} is not a nonnegative finite real"
                )));
            }
        }
        if n <= DENSE_LIMIT {
            let mut entries = vec![0.0; n * n];
            for &(i, j, v) in triplets {
                entries[i * n + j] += v;
                entries[j * n + i] += v;
            }
            Ok(Self {
                n,
                storage: Storage::Dense(entries),
                label: label.into(),
            })
        } else {
            let mut degree = vec![0usize; n];
            for &(i, j, _) in triplets {
                degree[i] += 1;
                degree[j] += 1;
            }
            let mut row_ptr = vec![0usize; n + 1];
            for i in 0..n {
                row_ptr[i + 1] = row_ptr[i] + degree[i];
            }
            let nnz = row_ptr[n];
            let mut cols = vec![0u32; nnz];
            let mut vals = vec![0.0; nnz];
            let mut cursor = row_ptr.clone();
            for &(i, j, v) in triplets {
                cols[cursor[i]] = j as u32;
                vals[cursor[i]] = v;
                cursor[i] += 1;
                cols[cursor[j]] = i as u32;
                vals[cursor[j]] = v;
                cursor[j] += 1;
            }
            // sort each row by column for reproducible iteration order
            let mut perm: Vec<usize> = Vec::new();
            for i in 0..n {
                let lo = row_ptr[i];
                let hi = row_ptr[i + 1];
                perm.clear();
                perm.extend(lo..hi);
                perm.sort_by_key(|&k| cols[k]);
                let sorted_c: Vec<u32> = perm.iter().map(|&k| cols[k]).collect();
                let sorted_v: Vec<f64> = perm.iter().map(|&k| vals[k]).collect();
                cols[lo..hi].copy_from_slice(&sorted_c);
                vals[lo..hi].copy_from_slice(&sorted_v);
            }
            Ok(Self {
                n,
                storage: Storage::Csr {
                    row_ptr,
                    cols,
                    vals,
                },
                label: label.into(),
            })
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(e) => e[i * self.n + j],
            Storage::Csr {
                row_ptr,
                cols,
                vals,
            } => {
                let row = &cols[row_ptr[i]..row_ptr[i + 1]];
                match row.binary_search(&(j as u32)) {
                    Ok(k) => vals[row_ptr[i] + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Visit the nonzero entries `(j, a_ij)` of row `i`.
    pub fn for_row<F: FnMut(usize, f64)>(&self, i: usize, mut f: F) {
        match &self.storage {
            Storage::Dense(e) => {
                for (j, &v) in e[i * self.n..(i + 1) * self.n].iter().enumerate() {
                    if v != 0.0 {
                        f(j, v);
                    }
                }
            }
            Storage::Csr {
                row_ptr,
                cols,
                vals,
            } => {
                for k in row_ptr[i]..row_ptr[i + 1] {
                    f(cols[k] as usize, vals[k]);
                }
            }
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.n];
        match &self.storage {
            Storage::Dense(e) => {
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri = e[i * self.n..(i + 1) * self.n].iter().sum();
                }
            }
            Storage::Csr { row_ptr, vals, .. } => {
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri = vals[row_ptr[i]..row_ptr[i + 1]].iter().sum();
                }
            }
        }
        r
    }

    pub fn frobenius_sq(&self) -> f64 {
        match &self.storage {
            Storage::Dense(e) => e.iter().map(|v| v * v).sum(),
            Storage::Csr { vals, .. } => vals.iter().map(|v| v * v).sum(),
        }
    }

    /// `max_i sum_j A(i,j)^2`.
    pub fn max_row_square_sum(&self) -> f64 {
        let mut best: f64 = 0.0;
        match &self.storage {
            Storage::Dense(e) => {
                for i in 0..self.n {
                    let s: f64 = e[i * self.n..(i + 1) * self.n].iter().map(|v| v * v).sum();
                    best = best.max(s);
                }
            }
            Storage::Csr { row_ptr, vals, .. } => {
                for i in 0..self.n {
                    let s: f64 = vals[row_ptr[i]..row_ptr[i + 1]].iter().map(|v| v * v).sum();
                    best = best.max(s);
                }
            }
        }
        best
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        match &self.storage {
            Storage::Dense(e) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let row = &e[i * self.n..(i + 1) * self.n];
                    *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
            Storage::Csr {
                row_ptr,
                cols,
                vals,
            } => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        s += vals[k] * x[cols[k] as usize];
                    }
                    *yi = s;
                }
            }
        }
    }

    /// Copy of this matrix with every entry multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0 && factor.is_finite());
        let mut out = self.clone();
        match &mut out.storage {
            Storage::Dense(e) => e.iter_mut().for_each(|v| *v *= factor),
            Storage::Csr { vals, .. } => vals.iter_mut().for_each(|v| *v *= factor),
        }
        out.label = format!("{} *{}", self.label, factor);
        out
    }

    /// Sorted strict-upper-triangle triplets (the stored form of the
    /// text file format).
    pub fn upper_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::new();
        match &self.storage {
            Storage::Dense(e) => {
                for i in 0..self.n {
                    for j in (i + 1)..self.n {
                        let v = e[i * self.n + j];
                        if v != 0.0 {
                            t.push((i, j, v));
                        }
                    }
                }
            }
            Storage::Csr {
                row_ptr,
                cols,
                vals,
            } => {
                for i in 0..self.n {
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        let j = cols[k] as usize;
                        if j > i && vals[k] != 0.0 {
                            t.push((i, j, vals[k]));
                        }
                    }
                }
            }
        }
        t
    }
}

/// Row-sum, norm and spectral summary of a coupling matrix.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixDiagnostics {
    /// Row sums `R_i`.
    pub row_sums: Vec<f64>,
    /// `||A||_F^2`.
    pub frobenius_sq: f64,
    /// Largest eigenvalue.
    pub lambda1: f64,
    /// Second largest eigenvalue (equals `lambda1` for n = 1).
    pub lambda2: f64,
    /// `alpha = max_i sum_j A(i,j)^2`.
    pub alpha: f64,
    /// `sum_i (R_i - 1)`.
    pub sum_dev: f64,
    /// `sum_i (R_i - 1)^2`.
    pub sum_dev_sq: f64,
    /// `max_i |R_i - 1|`.
    pub max_dev: f64,
    /// `lambda2 / lambda1` (NaN when `lambda1 = 0`).
    pub well_connected_ratio: f64,
    /// `n^{1/4} max_i |R_i - 1|`.
    pub a4_stat: f64,
}

impl MatrixDiagnostics {
    pub fn n(&self) -> usize {
        self.row_sums.len()
    }
}

/// Populate [`MatrixDiagnostics`], computing the top two eigenvalues
/// with the dense solver for `n <= 4096` and with deflated power
/// iteration above.
pub fn diagnostics(a: &CouplingMatrix) -> Result<MatrixDiagnostics> {
    let n = a.n();
    let row_sums = a.row_sums();
    let frobenius_sq = a.frobenius_sq();
    let alpha = a.max_row_square_sum();
    let sum_dev: f64 = row_sums.iter().map(|r| r - 1.0).sum();
    let sum_dev_sq: f64 = row_sums.iter().map(|r| (r - 1.0) * (r - 1.0)).sum();
    let max_dev = row_sums
        .iter()
        .map(|r| (r - 1.0).abs())
        .fold(0.0, f64::max);
    let (lambda1, lambda2) = if n <= DENSE_LIMIT {
        let eigs = spectral::dense_spectrum(a);
        let l1 = eigs[0];
        let l2 = if n > 1 { eigs[1] } else { eigs[0] };
        (l1, l2)
    } else {
        spectral::top_two_power(a, 1e-10, 100_000)?
    };
    let mean_row_sum = row_sums.iter().sum::<f64>() / n as f64;
    assert!(
        lambda1 >= mean_row_sum - 1e-8 * (1.0 + mean_row_sum.abs()),
        "eigensolver broke the Rayleigh bound: lambda1 = {lambda1}, mean row sum = {mean_row_sum}"
    );
    let well_connected_ratio = if lambda1 != 0.0 {
        lambda2 / lambda1
    } else {
        f64::NAN
    };
    Ok(MatrixDiagnostics {
        row_sums,
        frobenius_sq,
        lambda1,
        lambda2,
        alpha,
        sum_dev,
        sum_dev_sq,
        max_dev,
        well_connected_ratio,
        a4_stat: (n as f64).powf(0.25) * max_dev,
    })
}

/// The rate terms on the right-hand sides of the fluctuation and
/// partition-function bounds, assembled from diagnostics at the fixed
/// point `t`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateTerms {
    /// `||A||_F^2 + t^2 sum (R_i-1)^2`.
    pub eta: f64,
    /// `||A||_F^2 + sum (R_i-1)^2 + |sum (R_i-1)|`.
    pub nonuniq: f64,
    /// `||A||_F^2 + [sum (R_i-1)]^2/n + sum (R_i-1)^2/n + log n`.
    pub epsilon: f64,
    /// `sqrt((log n)^3 alpha) + log n * max_i |R_i-1|`.
    pub r: f64,
    /// `sum (R_i-1)^2 + [sum (R_i-1)]^2 / sqrt(n)`.
    pub delta: f64,
    /// High-temperature zero-field bound
    /// `1/sqrt(n) + ||A||_F^2 sqrt(alpha log n)/sqrt(n)
    ///  + (1 + ||A||_F alpha log n) sqrt(sum (R_i-1)^2 / n)`.
    pub theta11: f64,
}

pub fn rate_terms(diag: &MatrixDiagnostics, t: f64, n: usize) -> RateTerms {
    assert!((0.0..1.0).contains(&t), "rate terms need t in [0, 1)");
    assert_eq!(diag.n(), n, "diagnostics were computed for a different n");
    let nf = n as f64;
    let logn = nf.ln();
    let frob = diag.frobenius_sq;
    let sd = diag.sum_dev;
    let sdsq = diag.sum_dev_sq;
    RateTerms {
        eta: frob + t * t * sdsq,
        nonuniq: frob + sdsq + sd.abs(),
        epsilon: frob + sd * sd / nf + sdsq / nf + logn,
        r: (logn.powi(3) * diag.alpha).sqrt() + logn * diag.max_dev,
        delta: sdsq + sd * sd / nf.sqrt(),
        theta11: 1.0 / nf.sqrt()
            + frob * (diag.alpha * logn).sqrt() / nf.sqrt()
            + (1.0 + frob.sqrt() * diag.alpha * logn) * (sdsq / nf).sqrt(),
    }
}

#[cfg(test)]
mod tests;
