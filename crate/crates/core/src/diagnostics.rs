//! Checks of the estimates used in the decay proof, evaluated on discrete
//! solutions: pressure mean splitting, a nonhomogeneous Stokes solver with
//! manufactured-solution support, boundary Sobolev norms, the trace
//! estimate for resolvent solutions, the large-frequency velocity split,
//! the Neumann potential of a pressure/displacement pair, and the pressure
//! energy identity.
//!
//! All incompressible solves use the same velocity/pressure pair as the
//! generator (bilinear velocities on the grid, bilinear pressures on the
//! `2h` macro-grid) and fix the pressure mean with a Lagrange multiplier.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, FsiError, Result};
use crate::fe;
use crate::fields::StateVector;
use crate::generator::OperatorPair;
use crate::grid::Grid;
use crate::linalg::{dot, norm2, CsrMatrix, Factorization, C64, ONE, ZERO};

/// Relative tolerance of every compatibility test in this module.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// `∫ψ_r` for every macro-grid pressure basis function.
pub fn pressure_weights(grid: &Grid) -> Vec<f64> {
    let m = fe::mass(&grid.pressure_grid());
    m.matvec_real(&vec![1.0; m.ncols()])
}

fn pressure_l2(p: &[C64], grid: &Grid) -> f64 {
    fe::mass(&grid.pressure_grid()).form(p, p).re.max(0.0).sqrt()
}

/// Squared L² norm of an interleaved velocity field.
fn velocity_l2_sq(u: &[C64], mass: &CsrMatrix) -> f64 {
    (0..2)
        .map(|k| {
            let c: Vec<C64> = u.iter().skip(k).step_by(2).copied().collect();
            mass.form(&c, &c).re
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureDecomposition {
    #[serde(with = "crate::fields::complex_pairs")]
    pub q0: Vec<C64>,
    pub c0: C64,
}

/// `p = q₀ + c₀` with `c₀` the mean of `p` and `∫q₀ = 0`.
pub fn pressure_decomposition(p: &[C64], grid: &Grid) -> Result<PressureDecomposition> {
    check_len("pressure coefficients", grid.n_pressure(), p.len())?;
    let w = pressure_weights(grid);
    let c0 = p.iter().zip(&w).map(|(z, w)| z * w).sum::<C64>() / grid.area();
    Ok(PressureDecomposition {
        q0: p.iter().map(|z| z - c0).collect(),
        c0,
    })
}

/// Spectral data of the boundary Laplace–Beltrami operator on the closed
/// polygon ∂𝒪 (piecewise-linear, nodes in the counterclockwise boundary
/// walk order).
#[derive(Debug, Clone)]
pub struct BoundaryModes {
    /// Grid node of every boundary slot.
    pub nodes: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    /// Mass-orthonormal modes are the columns of `M^{-1/2} Q`.
    q: Mat<f64>,
    half_mass: Mat<f64>,
    inv_half_mass: Mat<f64>,
    pub perimeter: f64,
}

impl BoundaryModes {
    pub fn new(grid: &Grid) -> Result<Self> {
        let nodes: Vec<usize> = grid.boundary().iter().map(|b| b.node).collect();
        let n = nodes.len();
        let x = grid.coords();
        let mut mass = Mat::<f64>::zeros(n, n);
        let mut stiff = Mat::<f64>::zeros(n, n);
        let mut perimeter = 0.0;
        for a in 0..n {
            let b = (a + 1) % n;
            let (pa, pb) = (x[nodes[a]], x[nodes[b]]);
            let l = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            perimeter += l;
            mass[(a, a)] += l / 3.0;
            mass[(b, b)] += l / 3.0;
            mass[(a, b)] += l / 6.0;
            mass[(b, a)] += l / 6.0;
            stiff[(a, a)] += 1.0 / l;
            stiff[(b, b)] += 1.0 / l;
            stiff[(a, b)] -= 1.0 / l;
            stiff[(b, a)] -= 1.0 / l;
        }
        let eig_err = |e| FsiError::Eigen(format!("boundary eigenproblem failed: {e:?}"));
        let me = mass.self_adjoint_eigen(Side::Lower).map_err(eig_err)?;
        let (v, d) = (me.U(), me.S());
        let half_mass = Mat::<f64>::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * d[k].sqrt() * v[(j, k)]).sum());
        let inv_half_mass =
            Mat::<f64>::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * v[(j, k)] / d[k].sqrt()).sum());
        let c = &inv_half_mass * &stiff * &inv_half_mass;
        let c = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
        let ce = c.self_adjoint_eigen(Side::Lower).map_err(eig_err)?;
        let eigenvalues = (0..n).map(|k| ce.S()[k].max(0.0)).collect();
        Ok(Self {
            nodes,
            eigenvalues,
            q: ce.U().to_owned(),
            half_mass,
            inv_half_mass,
            perimeter,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn weighted(&self, coeffs: Vec<C64>, s: f64) -> f64 {
        coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| (1.0 + l).powf(s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn project(&self, t: &Mat<f64>, x: &[C64]) -> Vec<C64> {
        let n = self.len();
        let y: Vec<C64> = (0..n).map(|i| (0..n).map(|j| x[j] * t[(i, j)]).sum()).collect();
        (0..n).map(|k| (0..n).map(|i| y[i] * self.q[(i, k)]).sum()).collect()
    }

    /// `(Σ (1+λ_k)^s |ĝ_k|²)^{1/2}` for nodal values `g` in walk order.
    pub fn norm_of_values(&self, g: &[C64], s: f64) -> Result<f64> {
        check_len("boundary values", self.len(), g.len())?;
        Ok(self.weighted(self.project(&self.half_mass, g), s))
    }

    /// Same norm for a functional given by its action `f_k = ⟨f, φ_k⟩` on
    /// the boundary hats.
    pub fn norm_of_functional(&self, f: &[C64], s: f64) -> Result<f64> {
        check_len("boundary functional", self.len(), f.len())?;
        Ok(self.weighted(self.project(&self.inv_half_mass, f), s))
    }
}

/// Spectral `H^{-1/2}(∂𝒪)` norm of boundary values given in walk order.
pub fn hminushalf_norm(g: &[C64], grid: &Grid) -> Result<f64> {
    BoundaryModes::new(grid)?.norm_of_values(g, -0.5)
}

/// `∮ φ·n` for the piecewise-linear interpolant of nodal boundary data
/// (interleaved full velocity layout).
pub fn boundary_flux(grid: &Grid, u: &[C64]) -> C64 {
    let b = grid.boundary();
    let x = grid.coords();
    let n = b.len();
    let mut acc = ZERO;
    for a in 0..n {
        let (na, nb) = (b[a].node, b[(a + 1) % n].node);
        let (pa, pb) = (x[na], x[nb]);
        // counterclockwise walk: outward normal times length is (dy, −dx)
        let nl = [pb[1] - pa[1], -(pb[0] - pa[0])];
        for k in 0..2 {
            acc += 0.5 * nl[k] * (u[fe::vdof(na, k)] + u[fe::vdof(nb, k)]);
        }
    }
    acc
}

/// Incompressible saddle-point solve: `A u − Dᵀ q = load` on free velocity
/// rows, `D u = div_rhs`, `u = bc` on fixed entries, `∫ q = 0`.
struct SaddleSolve {
    u: Vec<C64>,
    q: Vec<C64>,
    multiplier: C64,
    momentum_residual: f64,
    divergence_residual: f64,
}

fn solve_saddle(
    grid: &Grid,
    a: &CsrMatrix,
    fixed: &[bool],
    bc: &[C64],
    load: &[C64],
    div_rhs: &[C64],
) -> Result<SaddleSolve> {
    let d = fe::pressure_divergence(grid);
    let w = pressure_weights(grid);
    let nv = a.nrows();
    let np = d.nrows();
    let mut slot = vec![None; nv];
    let mut free = Vec::new();
    for i in 0..nv {
        if !fixed[i] {
            slot[i] = Some(free.len());
            free.push(i);
        }
    }
    let nf = free.len();
    let dim = nf + np + 1;
    let mut trip = Vec::new();
    let mut rhs = vec![ZERO; dim];
    for (r, c, v) in a.iter() {
        if let Some(i) = slot[r] {
            match slot[c] {
                Some(j) => trip.push((i, j, v)),
                None => rhs[i] -= v * bc[c],
            }
        }
    }
    for i in 0..nf {
        rhs[i] += load[free[i]];
    }
    for (r, c, v) in d.iter() {
        match slot[c] {
            Some(j) => {
                trip.push((j, nf + r, -v));
                trip.push((nf + r, j, -v));
            }
            None => rhs[nf + r] += v * bc[c],
        }
    }
    for r in 0..np {
        rhs[nf + r] -= div_rhs[r];
        trip.push((nf + r, nf + np, w[r]));
        trip.push((nf + np, nf + r, w[r]));
    }
    let sys = CsrMatrix::from_triplets(dim, dim, &trip);
    let empty = CsrMatrix::from_triplets(dim, dim, &[]);
    let lu = Factorization::new(ONE, &sys, ZERO, &empty)?;
    let x = lu.solve(&rhs)?;

    let mut res = sys.matvec(&x);
    res.iter_mut().zip(&rhs).for_each(|(r, b)| *r -= b);
    let rel = |range: std::ops::Range<usize>| {
        let num: f64 = res[range.clone()].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = rhs[range].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    };
    let mut u = bc.to_vec();
    for (i, &f) in free.iter().enumerate() {
        u[f] = x[i];
    }
    Ok(SaddleSolve {
        momentum_residual: rel(0..nf),
        divergence_residual: rel(nf..nf + np),
        u,
        q: x[nf..nf + np].to_vec(),
        multiplier: x[nf + np],
    })
}

/// Boundary mask on the interleaved velocity layout: both components of
/// every boundary node.
fn boundary_mask(grid: &Grid) -> Vec<bool> {
    let mut fixed = vec![false; 2 * grid.n_nodes()];
    for b in grid.boundary() {
        fixed[fe::vdof(b.node, 0)] = true;
        fixed[fe::vdof(b.node, 1)] = true;
    }
    fixed
}

/// Empirical a-priori estimate `‖u‖_{H¹} + ‖p‖ ≤ C (‖f‖ + ‖g‖ + ‖φ‖_{H^{1/2}})`.
/// `‖f‖` is measured in L², which bounds the `H⁻¹` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesEstimate {
    pub solution_norm: f64,
    pub data_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesSolution {
    /// Interleaved nodal velocity.
    #[serde(with = "crate::fields::complex_pairs")]
    pub u: Vec<C64>,
    /// Macro-grid pressure with zero mean.
    #[serde(with = "crate::fields::complex_pairs")]
    pub p: Vec<C64>,
    pub momentum_residual: f64,
    pub divergence_residual: f64,
    /// Size of the mean-constraint multiplier; zero for compatible data.
    pub multiplier: f64,
    pub estimate: StokesEstimate,
}

/// Solves `−ν Δu + ∇p = f`, `div u = g` in 𝒪, `u = φ` on ∂𝒪, with the
/// pressure mean fixed to zero.
pub fn stokes_solve<F, G, B>(grid: &Grid, nu: f64, f: F, g: G, phi: B) -> Result<StokesSolution>
where
    F: Fn([f64; 2]) -> [C64; 2],
    G: Fn([f64; 2]) -> C64,
    B: Fn([f64; 2]) -> [C64; 2],
{
    if !(nu.is_finite() && nu > 0.0) {
        return Err(FsiError::Parameters(format!("viscosity must be positive, got {nu}")));
    }
    let n = grid.n_nodes();
    let mut bc = vec![ZERO; 2 * n];
    for b in grid.boundary() {
        let v = phi(grid.coords()[b.node]);
        bc[fe::vdof(b.node, 0)] = v[0];
        bc[fe::vdof(b.node, 1)] = v[1];
    }
    let pgrid = grid.pressure_grid();
    let div_rhs = fe::scalar_load(&pgrid, &g);
    let g_int: C64 = div_rhs.iter().sum();
    let g_abs: f64 = fe::scalar_load(&pgrid, |x| C64::new(g(x).norm(), 0.0)).iter().map(|z| z.re).sum();
    let abs_bc: Vec<C64> = bc.iter().map(|z| C64::new(z.norm(), 0.0)).collect();
    let flux = boundary_flux(grid, &bc);
    let scale = g_abs + boundary_flux_abs(grid, &abs_bc);
    if (g_int - flux).norm() > COMPATIBILITY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(FsiError::Compatibility(format!(
            "∫g = {:.6e} but the boundary flux is {:.6e}",
            g_int.re, flux.re
        )));
    }
    let load = fe::vector_load(grid, &f);
    let a = fe::vectorize(&fe::laplacian(grid)).scaled(nu);
    let sol = solve_saddle(grid, &a, &boundary_mask(grid), &bc, &load, &div_rhs)?;

    let mass = fe::mass(grid);
    let lap = fe::laplacian(grid);
    let h1 = (velocity_l2_sq(&sol.u, &mass) + velocity_l2_sq(&sol.u, &lap)).sqrt();
    let solution_norm = h1 + pressure_l2(&sol.q, grid);
    let f_l2 = l2_of_vector_fn(grid, &f);
    let g_l2 = l2_of_scalar_fn(grid, &g);
    let modes = BoundaryModes::new(grid)?;
    let mut phi_half = 0.0;
    for k in 0..2 {
        let vals: Vec<C64> = modes.nodes.iter().map(|&nd| bc[fe::vdof(nd, k)]).collect();
        phi_half += modes.norm_of_values(&vals, 0.5)?.powi(2);
    }
    let data_norm = f_l2 + g_l2 + phi_half.sqrt();
    Ok(StokesSolution {
        estimate: StokesEstimate {
            solution_norm,
            data_norm,
            ratio: if data_norm > 0.0 { solution_norm / data_norm } else { 0.0 },
        },
        momentum_residual: sol.momentum_residual,
        divergence_residual: sol.divergence_residual,
        multiplier: sol.multiplier.norm(),
        u: sol.u,
        p: sol.q,
    })
}

pub fn boundary_flux_abs(grid: &Grid, abs_u: &[C64]) -> f64 {
    let b = grid.boundary();
    let x = grid.coords();
    let n = b.len();
    let mut acc = 0.0;
    for a in 0..n {
        let (na, nb) = (b[a].node, b[(a + 1) % n].node);
        let l = ((x[nb][0] - x[na][0]).powi(2) + (x[nb][1] - x[na][1]).powi(2)).sqrt();
        for k in 0..2 {
            acc += 0.5 * l * (abs_u[fe::vdof(na, k)].re + abs_u[fe::vdof(nb, k)].re);
        }
    }
    acc
}

fn l2_of_scalar_fn<G: Fn([f64; 2]) -> C64>(grid: &Grid, g: G) -> f64 {
    let zero = vec![ZERO; grid.n_nodes()];
    fe::l2_error_sq(grid, &zero, g).sqrt()
}

fn l2_of_vector_fn<F: Fn([f64; 2]) -> [C64; 2]>(grid: &Grid, f: F) -> f64 {
    let zero = vec![ZERO; grid.n_nodes()];
    (0..2)
        .map(|k| fe::l2_error_sq(grid, &zero, |x| f(x)[k]))
        .sum::<f64>()
        .sqrt()
}

/// L² error of an interleaved velocity against a vector function.
pub fn velocity_l2_error<F: Fn([f64; 2]) -> [C64; 2]>(grid: &Grid, u: &[C64], exact: F) -> f64 {
    (0..2)
        .map(|k| {
            let c: Vec<C64> = u.iter().skip(k).step_by(2).copied().collect();
            fe::l2_error_sq(grid, &c, |x| exact(x)[k])
        })
        .sum::<f64>()
        .sqrt()
}

/// Divergence-free manufactured solution on `(0,1)×(−1,0)`:
/// `u = curl(sin²πx sin²πy)`, `p = cos πx cos πy`.
pub mod manufactured {
    use super::C64;
    use std::f64::consts::PI;

    fn s(t: f64) -> [f64; 4] {
        // sin²(πt) and its first three derivatives
        let (s2, c2) = ((2.0 * PI * t).sin(), (2.0 * PI * t).cos());
        [(PI * t).sin().powi(2), PI * s2, 2.0 * PI * PI * c2, -4.0 * PI.powi(3) * s2]
    }

    pub fn velocity(x: [f64; 2]) -> [C64; 2] {
        let (a, b) = (s(x[0]), s(x[1]));
        [C64::new(a[0] * b[1], 0.0), C64::new(-a[1] * b[0], 0.0)]
    }

    pub fn pressure(x: [f64; 2]) -> C64 {
        C64::new((PI * x[0]).cos() * (PI * x[1]).cos(), 0.0)
    }

    /// `f = −ν Δu + ∇p`.
    pub fn force(nu: f64) -> impl Fn([f64; 2]) -> [C64; 2] {
        move |x| {
            let (a, b) = (s(x[0]), s(x[1]));
            let lap1 = a[2] * b[1] + a[0] * b[3];
            let lap2 = -(a[3] * b[0] + a[1] * b[2]);
            let gp = [
                -PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
                -PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
            ];
            [C64::new(-nu * lap1 + gp[0], 0.0), C64::new(-nu * lap2 + gp[1], 0.0)]
        }
    }
}

/// Fluid residual `(A + ηM + C + iβM) u − Dᵀ q − M u*` on the full
/// velocity layout. On rows whose test function vanishes on ∂𝒪 it is the
/// discrete momentum equation; on boundary rows it is the traction
/// functional `⟨σ(u)n − q n, v⟩`.
fn fluid_residual(pair: &OperatorPair, beta: f64, u: &[C64], q: &[C64], u_star: &[C64]) -> Vec<C64> {
    let mut r = pair.elastic.matvec(u);
    let zm = C64::new(pair.params.eta, beta);
    let mass = fe::vectorize(&pair.mass);
    let conv = fe::vectorize(&pair.convection);
    let mu = mass.matvec(u);
    let cu = conv.matvec(u);
    let dq = pair.divergence.matvec_transpose(q);
    let ms = mass.matvec(u_star);
    for i in 0..r.len() {
        r[i] += zm * mu[i] + cu[i] - dq[i] - ms[i];
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedReport {
    pub beta: f64,
    pub q0_norm: f64,
    pub traction_norm: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Largest interior row of the fluid residual relative to the boundary
    /// functional; certifies that `Φ` solves the resolvent system.
    pub interior_residual: f64,
}

/// Ratio `(‖q₀‖ + ‖σ(u₀)n − q₀n‖_{-1/2}) / (√(‖Φ‖‖Φ*‖) + ‖Φ*‖ + |β|‖u₀‖)`
/// for a resolvent pair `(iβ − A)Φ = Φ*`.
pub fn med_report(pair: &OperatorPair, beta: f64, phi_star: &StateVector, phi: &StateVector) -> Result<MedReport> {
    pair.check(phi)?;
    pair.check(phi_star)?;
    let x = pair.restrict(phi)?;
    let xs = pair.restrict(phi_star)?;
    let (nx, nxs) = (pair.norm(&x), pair.norm(&xs));
    let u_norm = velocity_l2_sq(&phi.u, &pair.mass).sqrt();
    let rhs = (nx * nxs).sqrt() + nxs + beta.abs() * u_norm;
    if rhs == 0.0 {
        return Err(FsiError::Degenerate("zero data and zero solution: the ratio is 0/0".into()));
    }
    let dec = pressure_decomposition(&phi.p, &pair.grid)?;
    let q0_norm = pressure_l2(&dec.q0, &pair.grid);
    let r = fluid_residual(pair, beta, &phi.u, &dec.q0, &phi_star.u);

    let modes = BoundaryModes::new(&pair.grid)?;
    let mut t2 = 0.0;
    for k in 0..2 {
        let f: Vec<C64> = modes.nodes.iter().map(|&nd| r[fe::vdof(nd, k)]).collect();
        t2 += modes.norm_of_functional(&f, -0.5)?.powi(2);
    }
    let boundary_max = modes
        .nodes
        .iter()
        .flat_map(|&nd| [r[fe::vdof(nd, 0)].norm(), r[fe::vdof(nd, 1)].norm()])
        .fold(0.0, f64::max);
    let interior_max = (0..pair.grid.n_nodes())
        .filter(|&nd| !pair.grid.is_boundary(nd))
        .flat_map(|nd| [r[fe::vdof(nd, 0)].norm(), r[fe::vdof(nd, 1)].norm()])
        .fold(0.0, f64::max);
    let traction_norm = t2.sqrt();
    let lhs = q0_norm + traction_norm;
    Ok(MedReport {
        beta,
        q0_norm,
        traction_norm,
        lhs,
        rhs,
        ratio: lhs / rhs,
        interior_residual: if boundary_max > 0.0 { interior_max / boundary_max } else { interior_max },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOneSplit {
    #[serde(with = "crate::fields::complex_pairs")]
    pub u1: Vec<C64>,
    #[serde(with = "crate::fields::complex_pairs")]
    pub q1: Vec<C64>,
    #[serde(with = "crate::fields::complex_pairs")]
    pub u2: Vec<C64>,
    #[serde(with = "crate::fields::complex_pairs")]
    pub q2: Vec<C64>,
    /// `‖u₀ − (u₁ + u₂)‖ / ‖u₀‖` in L².
    pub velocity_additivity: f64,
    /// `‖q₀ − (q₁ + q₂)‖ / ‖q₀‖` in L², `q₀` the zero-mean part of `p₀`.
    pub pressure_additivity: f64,
    /// Largest boundary entry of `u₁`.
    pub u1_trace_max: f64,
    pub u1_h1: f64,
    pub u2_h1: f64,
}

/// Splits the velocity and zero-mean pressure of a resolvent solution into
/// a part with homogeneous boundary values driven by `−iβu₀` and a part
/// carrying the boundary values, divergence, convection and data of `u₀`.
pub fn case1_decomposition(
    pair: &OperatorPair,
    beta: f64,
    phi: &StateVector,
    phi_star: &StateVector,
) -> Result<CaseOneSplit> {
    pair.check(phi)?;
    pair.check(phi_star)?;
    let grid = &pair.grid;
    let nv = 2 * grid.n_nodes();
    let a = CsrMatrix::lin_comb(1.0, &pair.elastic, pair.params.eta, &fe::vectorize(&pair.mass));
    let mass = fe::vectorize(&pair.mass);
    let fixed = boundary_mask(grid);
    let u0 = &phi.u;

    let mut load1 = mass.matvec(u0);
    load1.iter_mut().for_each(|v| *v *= C64::new(0.0, -beta));
    let zeros_p = vec![ZERO; grid.n_pressure()];
    let s1 = solve_saddle(grid, &a, &fixed, &vec![ZERO; nv], &load1, &zeros_p)?;

    let cu = fe::vectorize(&pair.convection).matvec(u0);
    let ms = mass.matvec(&phi_star.u);
    let load2: Vec<C64> = ms.iter().zip(&cu).map(|(m, c)| m - c).collect();
    let div2 = pair.divergence.matvec(u0);
    let s2 = solve_saddle(grid, &a, &fixed, u0, &load2, &div2)?;

    let worst = s1
        .momentum_residual
        .max(s1.divergence_residual)
        .max(s2.momentum_residual)
        .max(s2.divergence_residual);
    if worst > 1e-8 {
        return Err(FsiError::Solver(format!("split solves left a relative residual of {worst:.3e}")));
    }

    let du: Vec<C64> = (0..nv).map(|i| u0[i] - s1.u[i] - s2.u[i]).collect();
    let u0n = velocity_l2_sq(u0, &pair.mass).sqrt();
    let velocity_additivity = velocity_l2_sq(&du, &pair.mass).sqrt() / u0n.max(f64::MIN_POSITIVE);
    let q0 = pressure_decomposition(&phi.p, grid)?.q0;
    let dq: Vec<C64> = (0..q0.len()).map(|i| q0[i] - s1.q[i] - s2.q[i]).collect();
    let q0n = pressure_l2(&q0, grid);
    let pressure_additivity = pressure_l2(&dq, grid) / q0n.max(f64::MIN_POSITIVE);
    let u1_trace_max = grid
        .boundary()
        .iter()
        .flat_map(|b| [s1.u[fe::vdof(b.node, 0)].norm(), s1.u[fe::vdof(b.node, 1)].norm()])
        .fold(0.0, f64::max);
    let lap = fe::laplacian(grid);
    let h1 = |u: &[C64]| (velocity_l2_sq(u, &pair.mass) + velocity_l2_sq(u, &lap)).sqrt();
    Ok(CaseOneSplit {
        u1_h1: h1(&s1.u),
        u2_h1: h1(&s2.u),
        u1: s1.u,
        q1: s1.q,
        u2: s2.u,
        q2: s2.q,
        velocity_additivity,
        pressure_additivity,
        u1_trace_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChueshovVariable {
    /// Mean-zero potential at the grid nodes.
    #[serde(with = "crate::fields::complex_pairs")]
    pub psi: Vec<C64>,
    /// `N₀ = ∇ψ` at the grid nodes (average over adjacent cells).
    pub gradient: Vec<[[f64; 2]; 2]>,
    /// `∫p + ∫w`.
    pub compatibility: C64,
    /// Relative residual of the discrete Neumann problem, boundary rows
    /// included, so it also measures how well the flux data is reproduced.
    pub neumann_residual: f64,
}

/// `∫p + ∫w` for macro-grid pressures and nodal values of `w` on the
/// interior edge nodes, and the scale `∫|p| + ∫|w|` it is compared with.
pub fn neumann_compatibility(p: &[C64], w: &[C64], grid: &Grid) -> Result<(C64, f64)> {
    check_len("pressure coefficients", grid.n_pressure(), p.len())?;
    check_len("edge values", grid.omega_nodes().len(), w.len())?;
    let pw = pressure_weights(grid);
    let h = grid.hx;
    let total = p.iter().zip(&pw).map(|(z, w)| z * w).sum::<C64>() + w.iter().sum::<C64>() * h;
    let scale = p.iter().zip(&pw).map(|(z, w)| z.norm() * w).sum::<f64>() + w.iter().map(|z| z.norm()).sum::<f64>() * h;
    Ok((total, scale))
}

/// Whether `|∫p + ∫w| ≤ tol·(∫|p| + ∫|w|)`.
pub fn is_compatible(total: C64, scale: f64) -> bool {
    total.norm() <= COMPATIBILITY_TOL * scale
}

/// Solves `Δψ = −p` in 𝒪, `∂ψ/∂n = 0` on the wall and `∂ψ/∂n = w` on the
/// elastic edge, with `∫ψ = 0`.
pub fn chueshov_variable(p: &[C64], w: &[C64], grid: &Grid) -> Result<ChueshovVariable> {
    let (compatibility, scale) = neumann_compatibility(p, w, grid)?;
    if !is_compatible(compatibility, scale) {
        return Err(FsiError::Compatibility(format!(
            "∫p + ∫w = {:.6e} does not vanish; the Neumann problem has no solution",
            compatibility.norm()
        )));
    }
    let n = grid.n_nodes();
    let lap = fe::laplacian(grid);
    let mut b = fe::pressure_to_fine_mass(grid).matvec_transpose(p);
    // hat load of the piecewise-linear edge data (zero at the corners)
    let h = grid.hx;
    let top = grid.top_edge_nodes();
    let mut edge = vec![ZERO; top.len()];
    edge[1..top.len() - 1].copy_from_slice(w);
    for k in 0..top.len() {
        let left = if k > 0 { edge[k - 1] + 2.0 * edge[k] } else { ZERO };
        let right = if k + 1 < top.len() { 2.0 * edge[k] + edge[k + 1] } else { ZERO };
        b[top[k]] += (left + right) * (h / 6.0);
    }
    let ones = fe::mass(grid).matvec_real(&vec![1.0; n]);
    let mut trip: Vec<_> = lap.iter().collect();
    for (i, &m) in ones.iter().enumerate() {
        trip.push((i, n, m));
        trip.push((n, i, m));
    }
    let sys = CsrMatrix::from_triplets(n + 1, n + 1, &trip);
    let empty = CsrMatrix::from_triplets(n + 1, n + 1, &[]);
    let mut rhs = b.clone();
    rhs.push(ZERO);
    let x = Factorization::new(ONE, &sys, ZERO, &empty)?.solve(&rhs)?;
    let psi = x[..n].to_vec();
    let mut res = lap.matvec(&psi);
    res.iter_mut().zip(&b).for_each(|(r, b)| *r -= b);
    let bn = norm2(&b);
    let neumann_residual = if bn > 0.0 { norm2(&res) / bn } else { norm2(&res) };
    Ok(ChueshovVariable {
        gradient: nodal_gradient(grid, &psi),
        psi,
        compatibility,
        neumann_residual,
    })
}

/// Real and imaginary nodal gradients, averaged over the cells at a node.
fn nodal_gradient(grid: &Grid, f: &[C64]) -> Vec<[[f64; 2]; 2]> {
    let n = grid.n_nodes();
    let mut acc = vec![[[0.0; 2]; 2]; n];
    let mut count = vec![0usize; n];
    let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    for nodes in grid.cells() {
        for (a, &(s, t)) in corners.iter().enumerate() {
            let d = fe::shape_grad(s, t, grid.hx, grid.hy);
            let mut g = [[0.0; 2]; 2];
            for b in 0..4 {
                let v = f[nodes[b]];
                for k in 0..2 {
                    g[0][k] += v.re * d[b][k];
                    g[1][k] += v.im * d[b][k];
                }
            }
            let nd = nodes[a];
            for part in 0..2 {
                for k in 0..2 {
                    acc[nd][part][k] += g[part][k];
                }
            }
            count[nd] += 1;
        }
    }
    for (g, &c) in acc.iter_mut().zip(&count) {
        for row in g.iter_mut() {
            for v in row.iter_mut() {
                *v /= c as f64;
            }
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureEquationCheck {
    /// `iβ ‖p₀‖²`.
    pub lhs: C64,
    /// `−(U·∇p₀, p₀)` in skew form.
    pub convection: C64,
    /// `−(div u₀, p₀)`.
    pub divergence: C64,
    /// `(p₀*, p₀)`.
    pub source: C64,
    pub residual: f64,
}

/// Tests the pressure row of a resolvent pair after pairing it with `p₀`:
/// `iβ‖p₀‖² = −(U·∇p₀, p₀) − (div u₀, p₀) + (p₀*, p₀)`.
pub fn pressure_equation_check(
    pair: &OperatorPair,
    beta: f64,
    phi: &StateVector,
    phi_star: &StateVector,
) -> Result<PressureEquationCheck> {
    pair.check(phi)?;
    pair.check(phi_star)?;
    let mp = fe::mass(&pair.grid.pressure_grid());
    let p = &phi.p;
    let lhs = C64::new(0.0, beta) * mp.form(p, p).re;
    let convection = -pair.pressure_convection.form(p, p);
    let divergence = -dot(&pair.divergence.matvec(&phi.u), p);
    let source = dot(&mp.matvec(&phi_star.p), p);
    let scale = [lhs.norm(), convection.norm(), divergence.norm(), source.norm()]
        .into_iter()
        .fold(0.0, f64::max);
    let defect = (lhs - convection - divergence - source).norm();
    Ok(PressureEquationCheck {
        lhs,
        convection,
        divergence,
        source,
        residual: if scale > 0.0 { defect / scale } else { defect },
    })
}
