//! Text format for coupling matrices.
//!
//! Line 1: `ising-coupling v1 <n> <nnz>`; then one line `i j value`
//! per stored strict-upper-triangle entry (0-based indices).  Symmetry
//! is implied; diagonal or negative entries are rejected on read.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::CouplingMatrix;
use crate::error::{Error, Result};

const MAGIC: &str = "ising-coupling";
const VERSION: &str = "v1";

pub fn write_matrix(a: &CouplingMatrix, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let triplets = a.upper_triplets();
    writeln!(out, "{MAGIC} {VERSION} {} {}", a.n(), triplets.len())?;
    for (i, j, v) in triplets {
        // 17 significant digits round-trip f64 exactly
        writeln!(out, "{i} {j} {v:.16e}")?;
    }
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<CouplingMatrix> {
    let file = std::fs::File::open(path)?;
    let label = format!("file {}", path.display());
    read_matrix_from(file, label)
}

pub fn read_matrix_from<R: Read>(reader: R, label: String) -> Result<CouplingMatrix> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| bad(1, "missing header"))?
        .map_err(Error::Io)?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) || parts.next() != Some(VERSION) {
        return Err(bad(1, "expected header `ising-coupling v1 <n> <nnz>`"));
    }
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(1, "bad n in header"))?;
    let nnz: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad(1, "bad nnz in header"))?;
    if parts.next().is_some() {
        return Err(bad(1, "trailing tokens in header"));
    }

    let mut triplets = Vec::with_capacity(nnz);
    let mut seen = std::collections::HashSet::with_capacity(nnz);
    let mut line_no = 1usize;
    for line in lines {
        let line = line.map_err(Error::Io)?;
        line_no += 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let parse_idx = |tok: Option<&str>, line_no: usize| -> Result<usize> {
            tok.and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(line_no, "expected `i j value`"))
        };
        let i = parse_idx(toks.next(), line_no)?;
        let j = parse_idx(toks.next(), line_no)?;
        let v: f64 = toks
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(line_no, "expected `i j value`"))?;
        if toks.next().is_some() {
            return Err(bad(line_no, "trailing tokens after `i j value`"));
        }
        if i == j {
            return Err(bad(line_no, "diagonal entries are not allowed"));
        }
        if i >= n || j >= n {
            return Err(bad(line_no, "index out of range"));
        }
        if !(v >= 0.0) || !v.is_finite() {
            return Err(bad(line_no, "entries must be nonnegative finite reals"));
        }
        let key = (i.min(j), i.max(j));
        if !seen.insert(key) {
            return Err(bad(line_no, "duplicate entry"));
        }
        triplets.push((key.0, key.1, v));
    }
    if triplets.len() != nnz {
        return Err(bad(
            line_no,
            &format!("header promised {nnz} entries, found {}", triplets.len()),
        ));
    }
    CouplingMatrix::from_upper_triplets(n, &triplets, label)
}

fn bad(line: usize, msg: &str) -> Error {
    Error::MatrixFormat {
        line,
        msg: msg.to_string(),
    }
}
