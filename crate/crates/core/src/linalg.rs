//! Sparse storage, complex vector kernels and LU factorizations.
//!
//! All assembled operators are real; linear solves happen in complex
//! arithmetic because shifted systems `(zG - K)` have complex `z`.

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat};
use num_complex::Complex64;

use crate::error::{FsiError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Real sparse matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            let k = next[r];
            cols[k] = c;
            vals[k] = v;
            next[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            row.sort_unstable_by_key(|e| e.0);
            let mut iter = row.iter().copied().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.iter().collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.indptr[r]..self.indptr[r + 1];
        match self.indices[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `a * self + b * other`.
    pub fn lin_comb(a: f64, lhs: &Self, b: f64, rhs: &Self) -> Self {
        assert_eq!((lhs.nrows, lhs.ncols), (rhs.nrows, rhs.ncols));
        let mut t: Vec<_> = lhs.iter().map(|(r, c, v)| (r, c, a * v)).collect();
        t.extend(rhs.iter().map(|(r, c, v)| (r, c, b * v)));
        Self::from_triplets(lhs.nrows, lhs.ncols, &t)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| x[self.indices[k]] * self.values[k])
                    .sum()
            })
            .collect()
    }

    pub fn matvec_real(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| x[self.indices[k]] * self.values[k])
                    .sum()
            })
            .collect()
    }

    /// Real product accumulated in roughly twice working precision
    /// (compensated dot products), for residuals that cancel heavily.
    pub fn matvec_real_compensated(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows)
            .map(|r| {
                let (mut sum, mut err) = (0.0, 0.0);
                for k in self.indptr[r]..self.indptr[r + 1] {
                    let p = x[self.indices[k]] * self.values[k];
                    let pe = x[self.indices[k]].mul_add(self.values[k], -p);
                    let (s, se) = two_sum(sum, p);
                    sum = s;
                    err += se + pe;
                }
                sum + err
            })
            .collect()
    }

    /// `selfᵀ x` without forming the transpose.
    pub fn matvec_transpose(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.nrows, "matvec dimension mismatch");
        let mut y = vec![ZERO; self.ncols];
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += x[r] * self.values[k];
            }
        }
        y
    }

    /// Hermitian form `yᴴ A x`.
    pub fn form(&self, x: &[C64], y: &[C64]) -> C64 {
        dot(&self.matvec(x), y)
    }

    /// Largest absolute deviation from symmetry.
    pub fn asymmetry(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Error-free transformation `a + b = s + e`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `yᴴ x`, conjugate-linear in the second argument.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    assert_eq!(x.len(), y.len(), "dot dimension mismatch");
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: C64, x: &mut [C64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

pub fn sub(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn conj(x: &[C64]) -> Vec<C64> {
    x.iter().map(|v| v.conj()).collect()
}

pub fn real_to_complex(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| C64::new(v, 0.0)).collect()
}

pub fn is_finite(x: &[C64]) -> bool {
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Sparse LU of a complex combination `a·A + b·B` of real matrices.
pub struct Factorization {
    lu: faer::sparse::linalg::solvers::Lu<usize, C64>,
    n: usize,
    pinned: Option<usize>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("n", &self.n)
            .field("pinned", &self.pinned)
            .finish()
    }
}

impl Factorization {
    /// Factors `a·A + b·B`.
    pub fn new(a: C64, lhs: &CsrMatrix, b: C64, rhs: &CsrMatrix) -> Result<Self> {
        Self::build(a, lhs, b, rhs, None)
    }

    /// Factors `a·A + b·B` with row `pin` replaced by the unit row `e_pin`.
    ///
    /// Used for systems whose only singular direction has a nonzero `pin`
    /// component in both its left and right null vectors: the replaced
    /// equation is implied by the others whenever the right-hand side is
    /// consistent, and the solution is fixed by `x[pin] = rhs[pin]`.
    pub fn new_pinned(
        a: C64,
        lhs: &CsrMatrix,
        b: C64,
        rhs: &CsrMatrix,
        pin: usize,
    ) -> Result<Self> {
        Self::build(a, lhs, b, rhs, Some(pin))
    }

    fn build(
        a: C64,
        lhs: &CsrMatrix,
        b: C64,
        rhs: &CsrMatrix,
        pin: Option<usize>,
    ) -> Result<Self> {
        let n = lhs.nrows();
        assert_eq!(lhs.ncols(), n);
        assert_eq!((rhs.nrows(), rhs.ncols()), (n, n));
        let mut trip: Vec<Triplet<usize, usize, C64>> = Vec::with_capacity(lhs.nnz() + rhs.nnz());
        for (r, c, v) in lhs.iter() {
            if Some(r) != pin {
                trip.push(Triplet::new(r, c, a * v));
            }
        }
        for (r, c, v) in rhs.iter() {
            if Some(r) != pin {
                trip.push(Triplet::new(r, c, b * v));
            }
        }
        if let Some(p) = pin {
            trip.push(Triplet::new(p, p, ONE));
        }
        // Guarantee a structurally nonzero diagonal for the symbolic phase.
        for i in 0..n {
            trip.push(Triplet::new(i, i, ZERO));
        }
        let mat = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| FsiError::Solver(format!("sparse matrix construction failed: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| FsiError::Solver(format!("sparse LU failed: {e:?}")))?;
        Ok(Self { lu, n, pinned: pin })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn pinned(&self) -> Option<usize> {
        self.pinned
    }

    /// Solves `M x = rhs`.
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        self.solve_with(rhs, false)
    }

    /// Solves `Mᴴ x = rhs`. Not meaningful for pinned factorizations.
    pub fn solve_adjoint(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        assert!(self.pinned.is_none(), "adjoint solve of a pinned factorization");
        self.solve_with(rhs, true)
    }

    fn solve_with(&self, rhs: &[C64], adjoint: bool) -> Result<Vec<C64>> {
        assert_eq!(rhs.len(), self.n, "solve dimension mismatch");
        let mut b = Mat::<C64>::from_fn(self.n, 1, |i, _| rhs[i]);
        if let Some(p) = self.pinned {
            b[(p, 0)] = ZERO;
        }
        if adjoint {
            self.lu.solve_transpose_in_place_with_conj(Conj::Yes, b.as_mut());
        } else {
            self.lu.solve_in_place_with_conj(Conj::No, b.as_mut());
        }
        let x: Vec<C64> = (0..self.n).map(|i| b[(i, 0)]).collect();
        if !is_finite(&x) {
            return Err(FsiError::Solver("non-finite solution (singular system)".into()));
        }
        Ok(x)
    }
}
