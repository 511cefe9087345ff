//! Builders for the coupling-matrix ensembles.
//!
//! Graph ensembles are scaled so the expected (or exact) row sums are
//! close to one: adjacency divided by the degree for regular graphs,
//! by `(n-1)p` for Erdos-Renyi, by the expected average degree for
//! block models, and by `n * mean` for Wigner matrices.

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Exp, Uniform};

use super::CouplingMatrix;
use crate::error::{Error, Result};

const PAIRING_ATTEMPTS: u32 = 1000;

/// Families of exactly `d`-regular graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularKind {
    RandomRegular,
    Complete,
    Circulant,
    BipartiteRegular,
}

/// Entry laws for Wigner ensembles, parameterized by their mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WignerLaw {
    /// Exponential with the given mean.
    Exponential { mean: f64 },
    /// Uniform on `(0, 2 * mean)`.
    Uniform { mean: f64 },
}

fn builder_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Adjacency of a `d`-regular simple graph divided by `d`; every row
/// sums to exactly one.
pub fn build_regular(n: usize, d: usize, kind: RegularKind, seed: u64) -> Result<CouplingMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::Infeasible(format!(
            "need n >= 1 and d >= 1, got n = {n}, d = {d}"
        )));
    }
    if d >= n {
        return Err(Error::Infeasible(format!(
            "degree d = {d} must be smaller than n = {n}"
        )));
    }
    let edges = match kind {
        RegularKind::Complete => {
            if d != n - 1 {
                return Err(Error::Infeasible(format!(
                    "complete graph on {n} vertices has degree {}, not {d}",
                    n - 1
                )));
            }
            let mut e = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in (i + 1)..n {
                    e.push((i, j));
                }
            }
            e
        }
        RegularKind::Circulant => circulant_edges(n, d)?,
        RegularKind::BipartiteRegular => {
            if n % 2 != 0 {
                return Err(Error::Infeasible(format!(
                    "bipartite regular graph needs even n, got {n}"
                )));
            }
            let h = n / 2;
            if d > h {
                return Err(Error::Infeasible(format!(
                    "bipartite degree d = {d} exceeds half size {h}"
                )));
            }
            let mut e = Vec::with_capacity(h * d);
            for i in 0..h {
                for k in 0..d {
                    e.push((i, h + (i + k) % h));
                }
            }
            e
        }
        RegularKind::RandomRegular => {
            if (n * d) % 2 != 0 {
                return Err(Error::Infeasible(format!(
                    "random regular graph needs n*d even, got n = {n}, d = {d}"
                )));
            }
            random_regular_edges(n, d, seed)?
        }
    };
    let w = 1.0 / d as f64;
    let triplets: Vec<(usize, usize, f64)> = edges
        .into_iter()
        .map(|(i, j)| (i.min(j), i.max(j), w))
        .collect();
    let label = match kind {
        RegularKind::Complete => format!("complete n={n} d={d}"),
        RegularKind::Circulant => format!("circulant n={n} d={d}"),
        RegularKind::BipartiteRegular => format!("bipartite-regular n={n} d={d}"),
        RegularKind::RandomRegular => format!("random-regular n={n} d={d} seed={seed}"),
    };
    CouplingMatrix::from_upper_triplets(n, &triplets, label)
}

fn circulant_edges(n: usize, d: usize) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::with_capacity(n * d / 2);
    if d % 2 == 0 {
        for k in 1..=(d / 2) {
            for i in 0..n {
                edges.push((i, (i + k) % n));
            }
        }
    } else {
        if n % 2 != 0 {
            return Err(Error::Infeasible(format!(
                "odd-degree circulant needs even n, got n = {n}, d = {d}"
            )));
        }
        for k in 1..=((d - 1) / 2) {
            for i in 0..n {
                edges.push((i, (i + k) % n));
            }
        }
        for i in 0..(n / 2) {
            edges.push((i, i + n / 2));
        }
    }
    Ok(edges)
}

/// Pairing model: stubs are shuffled and matched greedily, skipping
/// partners that would create a loop or a multi-edge; an attempt that
/// strands incompatible stubs is discarded and retried.
fn random_regular_edges(n: usize, d: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let mut rng = builder_rng(seed);
    'attempt: for _ in 0..PAIRING_ATTEMPTS {
        let mut stubs: Vec<usize> = (0..n * d).map(|s| s / d).collect();
        // Fisher-Yates
        for i in (1..stubs.len()).rev() {
            let j = rng.gen_range(0..=i);
            stubs.swap(i, j);
        }
        let mut present = vec![false; n * n];
        let mut edges = Vec::with_capacity(n * d / 2);
        let mut hi = stubs.len();
        while hi > 0 {
            let u = stubs[hi - 1];
            let mut found = None;
            for k in (0..hi - 1).rev() {
                let v = stubs[k];
                if v != u && !present[u * n + v] {
                    found = Some(k);
                    break;
                }
            }
            match found {
                Some(k) => {
                    let v = stubs[k];
                    present[u * n + v] = true;
                    present[v * n + u] = true;
                    edges.push((u, v));
                    stubs.swap(k, hi - 2);
                    hi -= 2;
                }
                None => continue 'attempt,
            }
        }
        return Ok(edges);
    }
    Err(Error::PairingExhausted {
        attempts: PAIRING_ATTEMPTS,
    })
}

/// Symmetric Erdos-Renyi graph scaled by `(n-1) p`.
pub fn build_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<CouplingMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "edge probability must lie in (0, 1], got {p}"
        )));
    }
    let label = format!("erdos-renyi n={n} p={p} seed={seed}");
    if n == 1 {
        return CouplingMatrix::from_upper_triplets(1, &[], label);
    }
    let mut rng = builder_rng(seed);
    let w = 1.0 / ((n - 1) as f64 * p);
    let mut triplets = Vec::new();
    sample_bernoulli_pairs(&mut rng, n, p, |i, j| triplets.push((i, j, w)));
    CouplingMatrix::from_upper_triplets(n, &triplets, label)
}

/// Visit each upper-triangle pair kept by an iid Bernoulli(p) coin,
/// using geometric jumps so the cost is proportional to the number of
/// successes.
fn sample_bernoulli_pairs<R: Rng, F: FnMut(usize, usize)>(rng: &mut R, n: usize, p: f64, mut f: F) {
    let total = n * (n - 1) / 2;
    if p >= 1.0 {
        for i in 0..n {
            for j in (i + 1)..n {
                f(i, j);
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut idx: usize = 0;
    loop {
        let u: f64 = rng.gen_range(0.0..1.0);
        let skip = ((1.0 - u).ln() / log_q).floor() as usize;
        idx = match idx.checked_add(skip) {
            Some(v) => v,
            None => break,
        };
        if idx >= total {
            break;
        }
        // invert the linear index over pairs (i < j)
        let (i, j) = pair_from_index(idx, n);
        f(i, j);
        idx += 1;
    }
}

fn pair_from_index(idx: usize, n: usize) -> (usize, usize) {
    // row i starts at offset i*n - i*(i+1)/2 - i ... solved by scan;
    // binary search keeps this O(log n) without float rounding issues.
    let row_start = |i: usize| i * (2 * n - i - 1) / 2;
    let mut lo = 0usize;
    let mut hi = n - 1;
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if row_start(mid) <= idx {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let i = lo;
    let j = i + 1 + (idx - row_start(i));
    (i, j)
}

/// Stochastic block model scaled by the expected average degree
/// `sum_{r,s} m_r m_s p_rs / n` (the two-block balanced convention
/// `N (a+b)/2` is the special case).
pub fn build_sbm(block_sizes: &[usize], prob: &[Vec<f64>], seed: u64) -> Result<CouplingMatrix> {
    let k = block_sizes.len();
    if k == 0 || block_sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidParameter(
            "block sizes must be positive and nonempty".into(),
        ));
    }
    if prob.len() != k || prob.iter().any(|row| row.len() != k) {
        return Err(Error::DimensionMismatch(format!(
            "probability matrix must be {k}x{k} to match {k} blocks"
        )));
    }
    for r in 0..k {
        for s in 0..k {
            let p = prob[r][s];
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "block probability ({r},{s}) = {p} outside [0, 1]"
                )));
            }
            if prob[r][s] != prob[s][r] {
                return Err(Error::InvalidParameter(format!(
                    "probability matrix must be symmetric; ({r},{s}) != ({s},{r})"
                )));
            }
        }
    }
    let n: usize = block_sizes.iter().sum();
    let mut expected_total = 0.0;
    for r in 0..k {
        for s in 0..k {
            expected_total += block_sizes[r] as f64 * block_sizes[s] as f64 * prob[r][s];
        }
    }
    let dbar = expected_total / n as f64;
    if dbar <= 0.0 {
        return Err(Error::Infeasible(
            "expected average degree is zero; all block probabilities vanish".into(),
        ));
    }
    let w = 1.0 / dbar;

    let mut offsets = vec![0usize; k + 1];
    for r in 0..k {
        offsets[r + 1] = offsets[r] + block_sizes[r];
    }
    let mut rng = builder_rng(seed);
    let mut triplets = Vec::new();
    for r in 0..k {
        // within block r: upper triangle
        let m = block_sizes[r];
        let base = offsets[r];
        if prob[r][r] > 0.0 && m > 1 {
            sample_bernoulli_pairs(&mut rng, m, prob[r][r], |i, j| {
                triplets.push((base + i, base + j, w));
            });
        }
        // across blocks r < s: full rectangle
        for s in (r + 1)..k {
            let p = prob[r][s];
            if p == 0.0 {
                continue;
            }
            sample_bernoulli_rect(&mut rng, m, block_sizes[s], p, |i, j| {
                triplets.push((base + i, offsets[s] + j, w));
            });
        }
    }
    let label = format!("sbm sizes={block_sizes:?} seed={seed}");
    CouplingMatrix::from_upper_triplets(n, &triplets, label)
}

fn sample_bernoulli_rect<R: Rng, F: FnMut(usize, usize)>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    p: f64,
    mut f: F,
) {
    let total = rows * cols;
    if p >= 1.0 {
        for i in 0..rows {
            for j in 0..cols {
                f(i, j);
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut idx: usize = 0;
    loop {
        let u: f64 = rng.gen_range(0.0..1.0);
        let skip = ((1.0 - u).ln() / log_q).floor() as usize;
        idx = match idx.checked_add(skip) {
            Some(v) => v,
            None => break,
        };
        if idx >= total {
            break;
        }
        f(idx / cols, idx % cols);
        idx += 1;
    }
}

/// Deterministic two-community matrix: `a` within halves, `b` across,
/// divided by the common row sum `a (n/2 - 1) + b n/2`.
pub fn build_block_spin(n: usize, a: f64, b: f64) -> Result<CouplingMatrix> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "block spin model needs even n >= 2, got {n}"
        )));
    }
    if !(a >= 0.0) || !(b >= 0.0) {
        return Err(Error::InvalidParameter(
            "couplings a and b must be nonnegative".into(),
        ));
    }
    if a == 0.0 && b == 0.0 {
        return Err(Error::InvalidParameter(
            "couplings a and b cannot both be zero".into(),
        ));
    }
    let h = n / 2;
    let row_sum = a * (h as f64 - 1.0) + b * h as f64;
    if row_sum <= 0.0 {
        return Err(Error::Infeasible(format!(
            "row sum a(n/2-1) + b n/2 vanishes for n = {n}, a = {a}, b = {b}"
        )));
    }
    let (wa, wb) = (a / row_sum, b / row_sum);
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let same = (i < h) == (j < h);
            let w = if same { wa } else { wb };
            if w != 0.0 {
                triplets.push((i, j, w));
            }
        }
    }
    CouplingMatrix::from_upper_triplets(n, &triplets, format!("block-spin n={n} a={a} b={b}"))
}

/// Wigner matrix: iid nonnegative upper-triangle entries divided by
/// `n * mean`.
pub fn build_wigner(n: usize, law: WignerLaw, seed: u64) -> Result<CouplingMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mean = match law {
        WignerLaw::Exponential { mean } | WignerLaw::Uniform { mean } => mean,
    };
    if !(mean > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "entry mean must be positive, got {mean}"
        )));
    }
    let mut rng = builder_rng(seed);
    let scale = 1.0 / (n as f64 * mean);
    let mut triplets = Vec::with_capacity(n * (n - 1) / 2);
    match law {
        WignerLaw::Exponential { .. } => {
            let dist = Exp::new(1.0 / mean).expect("positive rate");
            for i in 0..n {
                for j in (i + 1)..n {
                    triplets.push((i, j, dist.sample(&mut rng) * scale));
                }
            }
        }
        WignerLaw::Uniform { .. } => {
            let dist = Uniform::new(0.0, 2.0 * mean);
            for i in 0..n {
                for j in (i + 1)..n {
                    triplets.push((i, j, dist.sample(&mut rng) * scale));
                }
            }
        }
    }
    let label = format!("wigner n={n} law={law:?} seed={seed}");
    CouplingMatrix::from_upper_triplets(n, &triplets, label)
}

/// Line graph of the complete graph `K_m`: one vertex per edge of
/// `K_m`, adjacent when the edges share an endpoint; `2(m-2)`-regular
/// on `m(m-1)/2` vertices, divided by its degree.
pub fn build_line_graph_complete(m: usize) -> Result<CouplingMatrix> {
    if m < 4 {
        return Err(Error::Infeasible(format!(
            "line graph of K_m needs m >= 4, got {m}"
        )));
    }
    let n = m * (m - 1) / 2;
    let index = {
        let mut idx = vec![vec![0usize; m]; m];
        let mut c = 0;
        for i in 0..m {
            for j in (i + 1)..m {
                idx[i][j] = c;
                idx[j][i] = c;
                c += 1;
            }
        }
        idx
    };
    let d = 2 * (m - 2);
    let w = 1.0 / d as f64;
    let mut triplets = Vec::with_capacity(n * d / 2);
    // edges {i,j} and {i,k} share endpoint i
    for i in 0..m {
        for j in 0..m {
            if j == i {
                continue;
            }
            for k in (j + 1)..m {
                if k == i {
                    continue;
                }
                let (u, v) = (index[i][j], index[i][k]);
                triplets.push((u.min(v), u.max(v), w));
            }
        }
    }
    CouplingMatrix::from_upper_triplets(n, &triplets, format!("line-graph-K{m} n={n} d={d}"))
}

/// Block-diagonal concatenation.  With `rescale` the parts are read as
/// unscaled adjacency weights and the whole union is divided by its
/// average row sum (the common average-degree convention); without it
/// the parts are concatenated untouched.
pub fn build_disjoint_union(parts: &[CouplingMatrix], rescale: bool) -> Result<CouplingMatrix> {
    if parts.is_empty() {
        return Err(Error::InvalidParameter(
            "disjoint union needs at least one part".into(),
        ));
    }
    if parts.len() == 1 && !rescale {
        return Ok(parts[0].clone());
    }
    let n: usize = parts.iter().map(|p| p.n()).sum();
    let mut triplets = Vec::new();
    let mut offset = 0usize;
    let mut total_weight = 0.0;
    for part in parts {
        for (i, j, v) in part.upper_triplets() {
            triplets.push((offset + i, offset + j, v));
            total_weight += 2.0 * v;
        }
        offset += part.n();
    }
    let labels: Vec<&str> = parts.iter().map(|p| p.label()).collect();
    let mut label = format!("disjoint-union [{}]", labels.join(" | "));
    if rescale {
        let dbar = total_weight / n as f64;
        if dbar <= 0.0 {
            return Err(Error::Infeasible(
                "cannot rescale a union with zero total weight".into(),
            ));
        }
        for t in &mut triplets {
            t.2 /= dbar;
        }
        label.push_str(&format!(" dbar={dbar}"));
    }
    CouplingMatrix::from_upper_triplets(n, &triplets, label)
}
