//! CSV formatting, file checksums and Matrix Market exchange.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{FsiError, Result};
use crate::linalg::CsrMatrix;

/// Shortest-round-trip is not guaranteed to be 17 digits; this always is.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Writes a real sparse matrix in Matrix Market coordinate format.
pub fn matrix_market_string(a: &CsrMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (r, c, v) in a.iter() {
        let _ = writeln!(s, "{} {} {}", r + 1, c + 1, fmt_f64(v));
    }
    s
}

pub fn write_matrix_market(path: &Path, a: &CsrMatrix) -> Result<()> {
    std::fs::write(path, matrix_market_string(a))?;
    Ok(())
}

/// Parses a real coordinate Matrix Market file (general or symmetric).
pub fn parse_matrix_market(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| FsiError::Format("empty Matrix Market file".into()))?;
    let h: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(FsiError::Format(format!("unsupported Matrix Market header: {header}")));
    }
    if h[3] != "real" && h[3] != "integer" {
        return Err(FsiError::Format(format!("unsupported field type {}", h[3])));
    }
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(FsiError::Format(format!("unsupported symmetry {other}"))),
    };
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('%'));
    let (ln, size) = body
        .next()
        .ok_or_else(|| FsiError::Format("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| FsiError::Format(format!("line {}: {e}", ln + 1)))?;
    let [nrows, ncols, nnz] = dims[..] else {
        return Err(FsiError::Format(format!("line {}: expected 'rows cols nnz'", ln + 1)));
    };
    let mut trip = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    for (ln, line) in body {
        let t: Vec<&str> = line.split_whitespace().collect();
        let bad = || FsiError::Format(format!("line {}: malformed entry '{line}'", ln + 1));
        if t.len() != 3 {
            return Err(bad());
        }
        let r: usize = t[0].parse().map_err(|_| bad())?;
        let c: usize = t[1].parse().map_err(|_| bad())?;
        let v: f64 = t[2].parse().map_err(|_| bad())?;
        if r == 0 || c == 0 || r > nrows || c > ncols {
            return Err(FsiError::Format(format!("line {}: index out of range", ln + 1)));
        }
        trip.push((r - 1, c - 1, v));
        if symmetric && r != c {
            trip.push((c - 1, r - 1, v));
        }
    }
    let stored = if symmetric {
        trip.iter().filter(|(r, c, _)| r >= c).count()
    } else {
        trip.len()
    };
    if stored != nnz {
        return Err(FsiError::Format(format!("expected {nnz} entries, found {stored}")));
    }
    Ok(CsrMatrix::from_triplets(nrows, ncols, &trip))
}
