//! Bilinear (Q1) element kernels on the structured grid.
//!
//! Local node order is counterclockwise from the lower-left corner:
//! `(0,0), (1,0), (1,1), (0,1)` in reference coordinates `(s, t) ∈ [0,1]²`.

use crate::grid::{Grid, QuadPoint};
use crate::linalg::{CsrMatrix, C64, ZERO};

pub fn shape(s: f64, t: f64) -> [f64; 4] {
    [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t]
}

/// Physical gradients `[∂x, ∂y]` of the four shape functions.
pub fn shape_grad(s: f64, t: f64, hx: f64, hy: f64) -> [[f64; 2]; 4] {
    [
        [-(1.0 - t) / hx, -(1.0 - s) / hy],
        [(1.0 - t) / hx, -s / hy],
        [t / hx, s / hy],
        [-t / hx, (1.0 - s) / hy],
    ]
}

/// Velocity DOF index in the full interleaved layout.
#[inline]
pub fn vdof(node: usize, comp: usize) -> usize {
    2 * node + comp
}

/// Generic scalar bilinear-form assembly: `kernel(qp, N, ∇N, i, j)` returns
/// the integrand for test function `i` and trial function `j`.
pub fn assemble_scalar<F>(grid: &Grid, mut kernel: F) -> CsrMatrix
where
    F: FnMut(&QuadPoint, &[f64; 4], &[[f64; 2]; 4], usize, usize) -> f64,
{
    let n = grid.n_nodes();
    let mut trip = Vec::with_capacity(16 * grid.n_cells());
    for (c, nodes) in grid.cells().iter().enumerate() {
        let mut ke = [[0.0; 4]; 4];
        for qp in grid.cell_quadrature(c) {
            let phi = shape(qp.s, qp.t);
            let dphi = shape_grad(qp.s, qp.t, grid.hx, grid.hy);
            for (i, row) in ke.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v += qp.weight * kernel(&qp, &phi, &dphi, i, j);
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                trip.push((nodes[i], nodes[j], ke[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &trip)
}

pub fn mass(grid: &Grid) -> CsrMatrix {
    assemble_scalar(grid, |_, phi, _, i, j| phi[i] * phi[j])
}

pub fn laplacian(grid: &Grid) -> CsrMatrix {
    assemble_scalar(grid, |_, _, d, i, j| d[i][0] * d[j][0] + d[i][1] * d[j][1])
}

/// Scalar convection `C_ij = (U·∇φ_j, φ_i)` for a velocity field evaluated
/// at physical points.
pub fn convection<U: Fn([f64; 2]) -> [f64; 2]>(grid: &Grid, field: U) -> CsrMatrix {
    assemble_scalar(grid, |qp, phi, d, i, j| {
        let u = field(qp.x);
        (u[0] * d[j][0] + u[1] * d[j][1]) * phi[i]
    })
}

/// Skew part `½(C − Cᵀ)`; exactly antisymmetric by construction.
pub fn skew_part(c: &CsrMatrix) -> CsrMatrix {
    CsrMatrix::lin_comb(0.5, c, -0.5, &c.transpose())
}

/// Kronecker product `A ⊗ I₂` in the interleaved velocity layout.
pub fn vectorize(a: &CsrMatrix) -> CsrMatrix {
    let mut trip = Vec::with_capacity(2 * a.nnz());
    for (r, c, v) in a.iter() {
        for k in 0..2 {
            trip.push((vdof(r, k), vdof(c, k), v));
        }
    }
    CsrMatrix::from_triplets(2 * a.nrows(), 2 * a.ncols(), &trip)
}

/// Strain-energy form `(σ(u), ε(v))` with `σ = 2ν ε + λ tr(ε) I`.
pub fn elasticity(grid: &Grid, nu: f64, lambda: f64) -> CsrMatrix {
    let n = grid.n_nodes();
    let mut trip = Vec::with_capacity(64 * grid.n_cells());
    for (c, nodes) in grid.cells().iter().enumerate() {
        let mut ke = [[0.0; 8]; 8];
        for qp in grid.cell_quadrature(c) {
            let d = shape_grad(qp.s, qp.t, grid.hx, grid.hy);
            for a in 0..8 {
                let (ia, ka) = (a / 2, a % 2);
                let ea = strain_of(d[ia], ka);
                for b in 0..8 {
                    let (ib, kb) = (b / 2, b % 2);
                    let eb = strain_of(d[ib], kb);
                    let eps_dot = ea[0][0] * eb[0][0]
                        + ea[1][1] * eb[1][1]
                        + 2.0 * ea[0][1] * eb[0][1];
                    let tr = (ea[0][0] + ea[1][1]) * (eb[0][0] + eb[1][1]);
                    ke[a][b] += qp.weight * (2.0 * nu * eps_dot + lambda * tr);
                }
            }
        }
        for a in 0..8 {
            for b in 0..8 {
                trip.push((
                    vdof(nodes[a / 2], a % 2),
                    vdof(nodes[b / 2], b % 2),
                    ke[a][b],
                ));
            }
        }
    }
    CsrMatrix::from_triplets(2 * n, 2 * n, &trip)
}

/// Symmetric strain tensor of the vector field `φ e_k` given `∇φ`.
fn strain_of(grad: [f64; 2], k: usize) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    // (∇(φ e_k))_{k,m} = ∂_m φ
    g[k][0] = grad[0];
    g[k][1] = grad[1];
    [
        [g[0][0], 0.5 * (g[0][1] + g[1][0])],
        [0.5 * (g[0][1] + g[1][0]), g[1][1]],
    ]
}

/// Divergence pairing `D[q_i, (j,k)] = (∂_k φ_j, φ_i)`, so `D u` tests
/// `div u` against scalar functions.
pub fn divergence(grid: &Grid) -> CsrMatrix {
    let n = grid.n_nodes();
    let mut trip = Vec::with_capacity(32 * grid.n_cells());
    for (c, nodes) in grid.cells().iter().enumerate() {
        let mut ke = [[0.0; 8]; 4];
        for qp in grid.cell_quadrature(c) {
            let phi = shape(qp.s, qp.t);
            let d = shape_grad(qp.s, qp.t, grid.hx, grid.hy);
            for i in 0..4 {
                for b in 0..8 {
                    ke[i][b] += qp.weight * phi[i] * d[b / 2][b % 2];
                }
            }
        }
        for i in 0..4 {
            for b in 0..8 {
                trip.push((nodes[i], vdof(nodes[b / 2], b % 2), ke[i][b]));
            }
        }
    }
    CsrMatrix::from_triplets(n, 2 * n, &trip)
}

/// Macro-grid shape functions evaluated at a fine-cell quadrature point.
pub fn macro_shape(offset: [usize; 2], s: f64, t: f64) -> [f64; 4] {
    shape(0.5 * (offset[0] as f64 + s), 0.5 * (offset[1] as f64 + t))
}

/// Divergence pairing between fine-grid velocities and macro-grid
/// pressures: `D[q_i, (j,k)] = (∂_k φ_j, ψ_i)`.
pub fn pressure_divergence(grid: &Grid) -> CsrMatrix {
    let pgrid = grid.pressure_grid();
    let mut trip = Vec::with_capacity(32 * grid.n_cells());
    for (c, nodes) in grid.cells().iter().enumerate() {
        let (mc, off) = grid.macro_cell(c);
        let pnodes = pgrid.cells()[mc];
        let mut ke = [[0.0; 8]; 4];
        for qp in grid.cell_quadrature(c) {
            let psi = macro_shape(off, qp.s, qp.t);
            let d = shape_grad(qp.s, qp.t, grid.hx, grid.hy);
            for i in 0..4 {
                for b in 0..8 {
                    ke[i][b] += qp.weight * psi[i] * d[b / 2][b % 2];
                }
            }
        }
        for i in 0..4 {
            for b in 0..8 {
                trip.push((pnodes[i], vdof(nodes[b / 2], b % 2), ke[i][b]));
            }
        }
    }
    CsrMatrix::from_triplets(pgrid.n_nodes(), 2 * grid.n_nodes(), &trip)
}

/// Mass coupling `(ψ_i, φ_j)` between macro-grid and fine-grid scalars.
pub fn pressure_to_fine_mass(grid: &Grid) -> CsrMatrix {
    let pgrid = grid.pressure_grid();
    let mut trip = Vec::with_capacity(16 * grid.n_cells());
    for (c, nodes) in grid.cells().iter().enumerate() {
        let (mc, off) = grid.macro_cell(c);
        let pnodes = pgrid.cells()[mc];
        let mut ke = [[0.0; 4]; 4];
        for qp in grid.cell_quadrature(c) {
            let psi = macro_shape(off, qp.s, qp.t);
            let phi = shape(qp.s, qp.t);
            for i in 0..4 {
                for j in 0..4 {
                    ke[i][j] += qp.weight * psi[i] * phi[j];
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                trip.push((pnodes[i], nodes[j], ke[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(pgrid.n_nodes(), grid.n_nodes(), &trip)
}

/// Load vector `(f, φ_i)` of a scalar function.
pub fn scalar_load<F: Fn([f64; 2]) -> C64>(grid: &Grid, f: F) -> Vec<C64> {
    let mut out = vec![ZERO; grid.n_nodes()];
    for (c, nodes) in grid.cells().iter().enumerate() {
        for qp in grid.cell_quadrature(c) {
            let phi = shape(qp.s, qp.t);
            let v = f(qp.x) * qp.weight;
            for i in 0..4 {
                out[nodes[i]] += v * phi[i];
            }
        }
    }
    out
}

/// Load vector `(f, φ_i e_k)` of a vector function in the interleaved layout.
pub fn vector_load<F: Fn([f64; 2]) -> [C64; 2]>(grid: &Grid, f: F) -> Vec<C64> {
    let mut out = vec![ZERO; 2 * grid.n_nodes()];
    for (c, nodes) in grid.cells().iter().enumerate() {
        for qp in grid.cell_quadrature(c) {
            let phi = shape(qp.s, qp.t);
            let v = f(qp.x);
            for i in 0..4 {
                for k in 0..2 {
                    out[vdof(nodes[i], k)] += v[k] * (phi[i] * qp.weight);
                }
            }
        }
    }
    out
}

/// Nodal interpolant of a scalar function.
pub fn interpolate<F: Fn([f64; 2]) -> C64>(grid: &Grid, f: F) -> Vec<C64> {
    grid.coords().iter().map(|&x| f(x)).collect()
}

/// Squared L² distance between a Q1 scalar field and a function, with a
/// 4-point rule (exact enough for error studies).
pub fn l2_error_sq<F: Fn([f64; 2]) -> C64>(grid: &Grid, field: &[C64], exact: F) -> f64 {
    let q = crate::grid::Quadrature::gauss(4);
    let mut acc = 0.0;
    for (c, nodes) in grid.cells().iter().enumerate() {
        let [x0, y0] = grid.cell_origin(c);
        for b in 0..q.len() {
            for a in 0..q.len() {
                let (s, t) = (q.points[a], q.points[b]);
                let phi = shape(s, t);
                let uh: C64 = (0..4).map(|i| field[nodes[i]] * phi[i]).sum();
                let x = [x0 + grid.hx * s, y0 + grid.hy * t];
                acc += q.weights[a] * q.weights[b] * grid.hx * grid.hy * (uh - exact(x)).norm_sqr();
            }
        }
    }
    acc
}
