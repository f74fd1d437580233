//! State vectors of the energy space, the Gram matrix and the null vector.
//!
//! A [`StateVector`] always holds the full block layout: pressure at every
//! pressure macro-grid node, both velocity components at every flow node
//! (interleaved), and nodal beam displacement and velocity on the interior
//! edge nodes. The
//! [`DofMap`] relates that layout to the reduced unknowns actually solved
//! for, where constrained velocity components are dropped and the normal
//! velocity on the elastic edge is identified with the beam velocity.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::beam::BeamMesh;
use crate::error::{check_len, FsiError, Result};
use crate::fe;
use crate::grid::{Grid, Side};
use crate::linalg::{dot, CsrMatrix, Factorization, C64, ONE, ZERO};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    #[serde(with = "complex_pairs")]
    pub p: Vec<C64>,
    #[serde(with = "complex_pairs")]
    pub u: Vec<C64>,
    #[serde(with = "complex_pairs")]
    pub w1: Vec<C64>,
    #[serde(with = "complex_pairs")]
    pub w2: Vec<C64>,
}

/// Complex entries as `[re, im]` pairs.
pub(crate) mod complex_pairs {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|z| [z.re, z.im]))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

impl StateVector {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.n_nodes();
        let m = grid.nx() - 1;
        Self {
            p: vec![ZERO; grid.n_pressure()],
            u: vec![ZERO; 2 * n],
            w1: vec![ZERO; m],
            w2: vec![ZERO; m],
        }
    }

    pub fn len(&self) -> usize {
        self.p.len() + self.u.len() + self.w1.len() + self.w2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Concatenation `[p, u, w1, w2]`.
    pub fn to_flat(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.p);
        v.extend_from_slice(&self.u);
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.w2);
        v
    }

    pub fn from_flat(grid: &Grid, flat: &[C64]) -> Result<Self> {
        let mut s = Self::zeros(grid);
        check_len("flat state", s.len(), flat.len())?;
        let (np, nu, nw) = (s.p.len(), s.u.len(), s.w1.len());
        s.p.copy_from_slice(&flat[..np]);
        s.u.copy_from_slice(&flat[np..np + nu]);
        s.w1.copy_from_slice(&flat[np + nu..np + nu + nw]);
        s.w2.copy_from_slice(&flat[np + nu + nw..]);
        Ok(s)
    }

    pub fn check_shape(&self, grid: &Grid) -> Result<()> {
        let n = grid.n_nodes();
        let m = grid.nx() - 1;
        check_len("pressure block", grid.n_pressure(), self.p.len())?;
        check_len("velocity block", 2 * n, self.u.len())?;
        check_len("beam displacement block", m, self.w1.len())?;
        check_len("beam velocity block", m, self.w2.len())
    }

    pub fn is_finite(&self) -> bool {
        crate::linalg::is_finite(&self.to_flat())
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scaled(&self, a: C64) -> Self {
        self.map(|z| z * a)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: C64, other: &Self) -> Self {
        let zip = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(x, y)| x + a * y).collect();
        Self {
            p: zip(&self.p, &other.p),
            u: zip(&self.u, &other.u),
            w1: zip(&self.w1, &other.w1),
            w2: zip(&self.w2, &other.w2),
        }
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let m = |v: &[C64]| v.iter().map(|&z| f(z)).collect();
        Self {
            p: m(&self.p),
            u: m(&self.u),
            w1: m(&self.w1),
            w2: m(&self.w2),
        }
    }
}

/// Relation between the full state layout and the reduced unknowns.
#[derive(Debug, Clone)]
pub struct DofMap {
    n_pressure: usize,
    n_nodes: usize,
    n_beam: usize,
    /// Reduced index of every full index, `None` for constrained entries.
    full_to_red: Vec<Option<usize>>,
    /// Full index that supplies each reduced unknown.
    red_to_full: Vec<usize>,
}

impl DofMap {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n_nodes();
        let np = grid.n_pressure();
        let m = grid.nx() - 1;
        let off_u = np;
        let off_w1 = np + 2 * n;
        let off_w2 = off_w1 + m;
        let full_dim = off_w2 + m;

        let mut full_to_red = vec![None; full_dim];
        let mut red_to_full = Vec::with_capacity(full_dim);
        let mut push = |full: usize, f2r: &mut Vec<Option<usize>>| {
            f2r[full] = Some(red_to_full.len());
            red_to_full.push(full);
        };
        for i in 0..np {
            push(i, &mut full_to_red);
        }
        let omega = grid.omega_nodes();
        for node in 0..n {
            let (fixed_u1, fixed_u2, shared_u2) = match grid.boundary_node(node) {
                None => (false, false, false),
                Some(b) => match b.side {
                    // vertical sides, including all four corners
                    Side::Left | Side::Right => {
                        let (_, j) = grid.node_ij(node);
                        (true, j == 0 || j == grid.ny(), false)
                    }
                    Side::Bottom => (false, true, false),
                    Side::Top => (false, false, true),
                },
            };
            if !fixed_u1 {
                push(off_u + 2 * node, &mut full_to_red);
            }
            if !fixed_u2 && !shared_u2 {
                push(off_u + 2 * node + 1, &mut full_to_red);
            }
        }
        for k in 0..m {
            push(off_w1 + k, &mut full_to_red);
        }
        for (k, &node) in omega.iter().enumerate() {
            push(off_w2 + k, &mut full_to_red);
            full_to_red[off_u + 2 * node + 1] = full_to_red[off_w2 + k];
        }
        Self {
            n_pressure: np,
            n_nodes: n,
            n_beam: m,
            full_to_red,
            red_to_full,
        }
    }

    pub fn full_dim(&self) -> usize {
        self.full_to_red.len()
    }

    pub fn reduced_dim(&self) -> usize {
        self.red_to_full.len()
    }

    pub fn n_pressure(&self) -> usize {
        self.n_pressure
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Offsets of the `u`, `w1` and `w2` blocks in the full layout.
    pub fn offsets(&self) -> (usize, usize, usize) {
        let off_u = self.n_pressure;
        let off_w1 = off_u + 2 * self.n_nodes;
        (off_u, off_w1, off_w1 + self.n_beam)
    }

    pub fn n_beam(&self) -> usize {
        self.n_beam
    }

    pub fn full_to_red(&self) -> &[Option<usize>] {
        &self.full_to_red
    }

    /// Reduced coordinates of a full state; beam velocities are read from
    /// the `w2` block and constrained entries are ignored.
    pub fn restrict(&self, s: &StateVector) -> Vec<C64> {
        let flat = s.to_flat();
        self.red_to_full.iter().map(|&f| flat[f]).collect()
    }

    /// Embeds reduced coordinates as a full state satisfying every constraint.
    pub fn extend(&self, grid: &Grid, red: &[C64]) -> StateVector {
        let flat: Vec<C64> = self
            .full_to_red
            .iter()
            .map(|r| r.map_or(ZERO, |k| red[k]))
            .collect();
        StateVector::from_flat(grid, &flat).expect("layout sizes are consistent")
    }

    /// `Tᵀ A T` for a full-layout operator `A`, where `T` is the embedding.
    pub fn reduce_matrix(&self, a: &CsrMatrix) -> CsrMatrix {
        let trip: Vec<_> = a
            .iter()
            .filter_map(|(r, c, v)| Some((self.full_to_red[r]?, self.full_to_red[c]?, v)))
            .collect();
        let n = self.reduced_dim();
        CsrMatrix::from_triplets(n, n, &trip)
    }

    /// Whether the state satisfies the velocity constraints and the shared
    /// trace condition on the elastic edge.
    pub fn is_admissible(&self, grid: &Grid, s: &StateVector, tol: f64) -> bool {
        let ext = self.extend(grid, &self.restrict(s));
        let a = s.to_flat();
        let b = ext.to_flat();
        a.iter().zip(&b).all(|(x, y)| (x - y).norm() <= tol)
    }
}

/// Block-diagonal Gram matrix of the energy inner product on the full layout.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub matrix: CsrMatrix,
    /// Trapezoidal load vector of the unit function, so `∫ w1 = load · w1`.
    pub beam_load: Vec<f64>,
    /// Pressure mass applied to ones, so `∫ p = ones_p · p`.
    pub pressure_integral: Vec<f64>,
    off_w1: usize,
    n_beam: usize,
}

impl GramMatrix {
    pub fn new(grid: &Grid) -> Self {
        let np = grid.n_pressure();
        let beam = BeamMesh::new(grid.nx(), grid.config.lx);
        let m = beam.n_interior();
        let mp = fe::mass(&grid.pressure_grid());
        let mu = fe::vectorize(&fe::mass(grid));
        let kb = beam.bending_stiffness();
        let mw = beam.hat_mass();
        let off_w1 = np + mu.nrows();
        let off_w2 = off_w1 + m;
        let mut trip = mp.triplets();
        trip.extend(mu.iter().map(|(r, c, v)| (np + r, np + c, v)));
        trip.extend(kb.iter().map(|(r, c, v)| (off_w1 + r, off_w1 + c, v)));
        trip.extend(mw.iter().map(|(r, c, v)| (off_w2 + r, off_w2 + c, v)));
        let dim = off_w2 + m;
        Self {
            matrix: CsrMatrix::from_triplets(dim, dim, &trip),
            beam_load: beam.unit_load(),
            pressure_integral: mp.matvec_real(&vec![1.0; np]),
            off_w1,
            n_beam: m,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Bending stiffness block.
    pub fn bending(&self) -> CsrMatrix {
        let (o, m) = (self.off_w1, self.n_beam);
        let block = o..o + m;
        let t: Vec<_> = self
            .matrix
            .iter()
            .filter(|(r, c, _)| block.contains(r) && block.contains(c))
            .map(|(r, c, v)| (r - o, c - o, v))
            .collect();
        CsrMatrix::from_triplets(m, m, &t)
    }
}

/// `(a, b)_G = bᴴ G a`.
pub fn energy_inner_product(a: &StateVector, b: &StateVector, g: &GramMatrix) -> Result<C64> {
    check_len("state size", g.dim(), a.len())?;
    check_len("state size", g.dim(), b.len())?;
    Ok(g.matrix.form(&a.to_flat(), &b.to_flat()))
}

pub fn energy_norm(a: &StateVector, g: &GramMatrix) -> Result<f64> {
    Ok(energy_inner_product(a, a, g)?.re.max(0.0).sqrt())
}

/// The steady state `(1, 0, Å⁻¹1, 0)`, where `Å` is the clamped bending
/// operator. Its beam part solves `K_b w = F` with `F` the unit load.
pub fn null_vector(grid: &Grid, g: &GramMatrix) -> Result<StateVector> {
    let kb = g.bending();
    let empty = CsrMatrix::from_triplets(kb.nrows(), kb.ncols(), &[]);
    let lu = Factorization::new(ONE, &kb, ZERO, &empty)
        .map_err(|e| FsiError::Assembly(format!("bending operator is singular: {e}")))?;
    let load: Vec<C64> = g.beam_load.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut w1 = lu
        .solve(&load)
        .map_err(|e| FsiError::Assembly(format!("bending operator is singular: {e}")))?;
    // the bending stiffness scales like h⁻³, so refine against a compensated
    // residual to keep the steady state exact on fine grids
    for _ in 0..2 {
        let re: Vec<f64> = w1.iter().map(|z| z.re).collect();
        let kw = kb.matvec_real_compensated(&re);
        let r: Vec<C64> = g.beam_load.iter().zip(&kw).map(|(f, k)| C64::new(f - k, 0.0)).collect();
        let dw = lu.solve(&r)?;
        for (w, d) in w1.iter_mut().zip(&dw) {
            *w += d;
        }
    }
    let mut s = StateVector::zeros(grid);
    s.p.fill(ONE);
    s.w1 = w1;
    Ok(s)
}

/// `∫ p + ∫ w1`; vanishes exactly on the orthogonal complement of the null
/// vector.
pub fn complement_functional(s: &StateVector, g: &GramMatrix) -> C64 {
    let ip: C64 = s.p.iter().zip(&g.pressure_integral).map(|(z, w)| z * w).sum();
    let iw: C64 = s.w1.iter().zip(&g.beam_load).map(|(z, w)| z * w).sum();
    ip + iw
}

/// `Φ − ((Φ, Φ₀)/(Φ₀, Φ₀)) Φ₀`.
pub fn project_complement(s: &StateVector, phi0: &StateVector, g: &GramMatrix) -> Result<StateVector> {
    let num = energy_inner_product(s, phi0, g)?;
    let den = energy_inner_product(phi0, phi0, g)?.re;
    if den <= 0.0 {
        return Err(FsiError::Degenerate("null vector has zero energy".into()));
    }
    Ok(s.axpy(-num / den, phi0))
}

/// Complement projection on reduced coordinates: `x − (x, φ₀)_G / (φ₀, φ₀)_G φ₀`
/// with a precomputed `gφ₀ = G φ₀`.
pub(crate) fn project_reduced(x: &mut [C64], phi0: &[C64], g_phi0: &[C64], phi0_energy: f64) {
    let c = dot(x, g_phi0) / phi0_energy;
    for (xi, p) in x.iter_mut().zip(phi0) {
        *xi -= c * p;
    }
}
