//! Discrete flow–structure generator.
//!
//! The semidiscrete dynamics read `G dΦ/dt = K Φ` on the reduced unknowns.
//! Blocks of `K` (full layout, before reduction):
//!
//! ```text
//!          p          u                    w1        w2
//! p   [ -C_s        -D                     0         0      ]
//! u   [  Dᵀ    -A - ηM⊗I - C_s⊗I           0         0      ]
//! w1  [  0            0                    0         K_b    ]
//! w2  [  0            0                  -K_b        0      ]
//! ```
//!
//! `C_s` is the skew part of the convection matrix (on the pressure
//! macro-grid in the first row, on the velocity grid below), `D` pairs `div u` with
//! scalar test functions, `A` is the strain-energy form, `K_b` the beam
//! bending stiffness on nodal values (shared by `w1` and `w2`). Pressure and normal stress on the elastic edge never appear as
//! explicit boundary terms: the top normal velocity and the beam velocity
//! are one unknown, so the fluid and beam boundary pairings cancel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beam::BeamMesh;
use crate::error::{check_len, FsiError, Result};
use crate::fe;
use crate::fields::{null_vector, project_reduced, DofMap, GramMatrix, StateVector};
use crate::grid::Grid;
use crate::linalg::{dot, real_to_complex, CsrMatrix, Factorization, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Drag coefficient η.
    pub eta: f64,
    /// Lamé coefficient λ.
    pub lambda: f64,
    /// Shear coefficient ν.
    pub nu: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            lambda: 0.5,
            nu: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.eta) && self.eta > 0.0) {
            return Err(FsiError::Parameters(format!("eta must be positive, got {}", self.eta)));
        }
        if !(ok(self.nu) && self.nu > 0.0) {
            return Err(FsiError::Parameters(format!("nu must be positive, got {}", self.nu)));
        }
        if !(ok(self.lambda) && self.lambda >= 0.0) {
            return Err(FsiError::Parameters(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Solenoidal ambient velocity `U = (∂ψ/∂y, −∂ψ/∂x)` with
/// `ψ = s·b(x)·c(y)`, where `b` and `c` are squared quadratic bumps scaled
/// to unit maximum. Both `ψ` and `∇ψ` vanish on the boundary.
#[derive(Debug, Clone)]
pub struct AmbientField {
    pub amplitude: f64,
    lx: f64,
    ly: f64,
    /// `U` at every cell quadrature point, cell-major.
    pub samples: Vec<[f64; 2]>,
}

pub fn build_ambient_field(s: f64, grid: &Grid) -> Result<AmbientField> {
    if !s.is_finite() {
        return Err(FsiError::Parameters(format!("ambient amplitude must be finite, got {s}")));
    }
    let mut field = AmbientField {
        amplitude: s,
        lx: grid.config.lx,
        ly: grid.config.ly,
        samples: Vec::new(),
    };
    field.samples = (0..grid.n_cells())
        .flat_map(|c| grid.cell_quadrature(c).collect::<Vec<_>>())
        .map(|qp| field.velocity(qp.x))
        .collect();
    Ok(field)
}

impl AmbientField {
    /// Bump `(t(L−t))² / (L/2)⁴` and its first derivative.
    fn bump(t: f64, l: f64) -> (f64, f64) {
        let q = t * (l - t);
        let scale = 16.0 / (l * l * l * l);
        (scale * q * q, scale * 2.0 * q * (l - 2.0 * t))
    }

    pub fn stream_function(&self, x: [f64; 2]) -> f64 {
        let (b, _) = Self::bump(x[0], self.lx);
        let (c, _) = Self::bump(x[1] + self.ly, self.ly);
        self.amplitude * b * c
    }

    pub fn velocity(&self, x: [f64; 2]) -> [f64; 2] {
        let (b, db) = Self::bump(x[0], self.lx);
        let (c, dc) = Self::bump(x[1] + self.ly, self.ly);
        [self.amplitude * b * dc, -self.amplitude * db * c]
    }

    /// `∂U₁/∂x + ∂U₂/∂y` from the analytic derivatives: both terms are the
    /// same product `s·b'(x)·c'(y)`.
    pub fn divergence(&self, x: [f64; 2]) -> f64 {
        let (_, db) = Self::bump(x[0], self.lx);
        let (_, dc) = Self::bump(x[1] + self.ly, self.ly);
        let d1 = self.amplitude * db * dc;
        let d2 = -(self.amplitude * db * dc);
        d1 + d2
    }

    pub fn max_speed(&self) -> f64 {
        self.samples
            .iter()
            .map(|u| (u[0] * u[0] + u[1] * u[1]).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Assembled operator pair on the reduced unknowns, with the full-layout
/// pieces needed for dissipation and diagnostics.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub grid: Grid,
    pub params: PhysicalParams,
    pub dofs: DofMap,
    pub gram: GramMatrix,
    /// Reduced Gram matrix.
    pub g: CsrMatrix,
    /// Reduced generator stiffness.
    pub k: CsrMatrix,
    /// Strain-energy form on the full velocity layout.
    pub elastic: CsrMatrix,
    /// Scalar mass matrix.
    pub mass: CsrMatrix,
    /// Skew convection `½(C − Cᵀ)` on fine-grid scalars.
    pub convection: CsrMatrix,
    /// Skew convection on macro-grid pressures.
    pub pressure_convection: CsrMatrix,
    /// Divergence pairing `(div u, q)` with macro-grid pressures.
    pub divergence: CsrMatrix,
    pub null: StateVector,
    null_red: Vec<C64>,
    g_null_red: Vec<C64>,
    null_energy: f64,
}

pub fn assemble(grid: &Grid, params: PhysicalParams, field: &AmbientField) -> Result<OperatorPair> {
    params.validate()?;
    let beam = BeamMesh::new(grid.nx(), grid.config.lx);
    let m = beam.n_interior();
    if grid.omega_nodes().len() != m {
        return Err(FsiError::Assembly("elastic-edge node count does not match beam mesh".into()));
    }
    let dofs = DofMap::new(grid);
    let gram = GramMatrix::new(grid);

    let pgrid = grid.pressure_grid();
    let mass = fe::mass(grid);
    let cskew = fe::skew_part(&fe::convection(grid, |x| field.velocity(x)));
    let cskew_p = fe::skew_part(&fe::convection(&pgrid, |x| field.velocity(x)));
    let elastic = fe::elasticity(grid, params.nu, params.lambda);
    let div = fe::pressure_divergence(grid);
    let kb = beam.bending_stiffness();

    let (off_u, off_w1, off_w2) = dofs.offsets();
    let mut trip = Vec::new();
    trip.extend(cskew_p.iter().map(|(r, c, v)| (r, c, -v)));
    for (r, c, v) in div.iter() {
        trip.push((r, off_u + c, -v));
        trip.push((off_u + c, r, v));
    }
    trip.extend(elastic.iter().map(|(r, c, v)| (off_u + r, off_u + c, -v)));
    let uu = CsrMatrix::lin_comb(params.eta, &mass, 1.0, &cskew);
    for (r, c, v) in uu.iter() {
        for k in 0..2 {
            trip.push((off_u + fe::vdof(r, k), off_u + fe::vdof(c, k), -v));
        }
    }
    for (r, c, v) in kb.iter() {
        trip.push((off_w1 + r, off_w2 + c, v));
        trip.push((off_w2 + c, off_w1 + r, -v));
    }
    let dim = dofs.full_dim();
    let k_full = CsrMatrix::from_triplets(dim, dim, &trip);

    let g = dofs.reduce_matrix(&gram.matrix);
    let k = dofs.reduce_matrix(&k_full);
    for (k, &node) in grid.omega_nodes().iter().enumerate() {
        let map = dofs.full_to_red();
        if map[off_u + fe::vdof(node, 1)].is_none() || map[off_u + fe::vdof(node, 1)] != map[off_w2 + k] {
            return Err(FsiError::Assembly(format!(
                "normal velocity at edge node {node} is not shared with the beam velocity"
            )));
        }
    }

    let null = null_vector(grid, &gram)?;
    let null_red = dofs.restrict(&null);
    let g_null_red = g.matvec(&null_red);
    let null_energy = dot(&null_red, &g_null_red).re;

    Ok(OperatorPair {
        grid: grid.clone(),
        params,
        dofs,
        gram,
        g,
        k,
        elastic,
        mass,
        convection: cskew,
        pressure_convection: cskew_p,
        divergence: div,
        null,
        null_red,
        g_null_red,
        null_energy,
    })
}

/// `(σ(u), ε(u)) + η ‖u‖²` for the velocity block of a state.
pub fn dissipation(s: &StateVector, grid: &Grid, params: PhysicalParams) -> Result<f64> {
    params.validate()?;
    s.check_shape(grid)?;
    let elastic = fe::elasticity(grid, params.nu, params.lambda);
    let mass = fe::vectorize(&fe::mass(grid));
    Ok(elastic.form(&s.u, &s.u).re + params.eta * mass.form(&s.u, &s.u).re)
}

/// `Kᴴ` (the stiffness is real, so this is the transpose); with `G`
/// it defines the adjoint generator `G⁻¹Kᴴ`.
pub fn assemble_adjoint(pair: &OperatorPair) -> CsrMatrix {
    pair.k.transpose()
}

/// `G⁻¹ K Φ` returned as a full state.
pub fn apply_generator(pair: &OperatorPair, s: &StateVector) -> Result<StateVector> {
    let kx = pair.k.matvec(&pair.restrict(s)?);
    let lu = Factorization::new(ONE, &pair.g, ZERO, &pair.zero())
        .map_err(|e| FsiError::Assembly(format!("Gram matrix is not invertible: {e}")))?;
    let y = lu.solve(&kx)?;
    Ok(pair.extend(&y))
}

impl OperatorPair {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub(crate) fn zero(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.dim(), self.dim(), &[])
    }

    pub fn restrict(&self, s: &StateVector) -> Result<Vec<C64>> {
        s.check_shape(&self.grid)?;
        Ok(self.dofs.restrict(s))
    }

    pub fn extend(&self, red: &[C64]) -> StateVector {
        self.dofs.extend(&self.grid, red)
    }

    pub fn null_reduced(&self) -> &[C64] {
        &self.null_red
    }

    /// Energy inner product on reduced coordinates, `yᴴ G x`.
    pub fn inner(&self, x: &[C64], y: &[C64]) -> C64 {
        self.g.form(x, y)
    }

    pub fn norm(&self, x: &[C64]) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }

    /// G-orthogonal projection of reduced coordinates onto the complement
    /// of the null vector.
    pub fn project(&self, x: &mut [C64]) {
        project_reduced(x, &self.null_red, &self.g_null_red, self.null_energy);
    }

    /// `(x, Φ₀)_G` on reduced coordinates.
    pub fn null_component(&self, x: &[C64]) -> C64 {
        dot(x, &self.g_null_red)
    }

    pub fn null_energy(&self) -> f64 {
        self.null_energy
    }

    /// Dissipation of reduced coordinates.
    pub fn dissipation_reduced(&self, x: &[C64]) -> f64 {
        self.dissipation(&self.extend(x))
    }

    pub fn dissipation(&self, s: &StateVector) -> f64 {
        let a = self.elastic.form(&s.u, &s.u).re;
        let mut m = 0.0;
        for k in 0..2 {
            let comp: Vec<C64> = s.u.iter().skip(k).step_by(2).copied().collect();
            m += self.mass.form(&comp, &comp).re;
        }
        a + self.params.eta * m
    }

    /// Seeded random reduced coordinates with entries uniform in `[−1, 1]`
    /// (real and imaginary parts independently when `complex`).
    pub fn random_reduced(&self, seed: u64, complex: bool) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dim())
            .map(|_| {
                let re = rng.random_range(-1.0..=1.0);
                let im = if complex { rng.random_range(-1.0..=1.0) } else { 0.0 };
                C64::new(re, im)
            })
            .collect()
    }

    /// Seeded random state on the null-vector complement with unit energy.
    pub fn random_complement(&self, seed: u64, complex: bool) -> Vec<C64> {
        let mut x = self.random_reduced(seed, complex);
        self.project(&mut x);
        let n = self.norm(&x);
        x.iter_mut().for_each(|v| *v /= n);
        x
    }

    /// A random admissible state on the complement with unit energy, built
    /// from a few low modes per block so that it means the same thing on
    /// every resolution. Deterministic in `seed`.
    pub fn random_smooth_complement(&self, seed: u64, complex: bool) -> Vec<C64> {
        const MODES: usize = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coef = |n: usize| -> Vec<C64> {
            (0..n)
                .map(|_| {
                    let re = rng.random_range(-1.0..=1.0);
                    let im = if complex { rng.random_range(-1.0..=1.0) } else { 0.0 };
                    C64::new(re, im)
                })
                .collect()
        };
        let (c_p, c_u1, c_u2, c_w1, c_w2) = (
            coef(MODES * MODES),
            coef(MODES * MODES),
            coef(MODES * MODES),
            coef(MODES),
            coef(MODES),
        );
        let (lx, ly) = (self.grid.config.lx, self.grid.config.ly);
        let pi = std::f64::consts::PI;
        let sx = |k: usize, x: f64| ((k + 1) as f64 * pi * x / lx).sin();
        let cx = |k: usize, x: f64| (k as f64 * pi * x / lx).cos();
        let w2_at = |x: f64| (0..MODES).map(|k| c_w2[k] * sx(k, x)).sum::<C64>();

        let mut s = StateVector::zeros(&self.grid);
        for (n, x) in self.grid.pressure_grid().coords().iter().enumerate() {
            let d = (x[1] + ly) / ly;
            s.p[n] = (0..MODES * MODES)
                .map(|i| c_p[i] * cx(i / MODES, x[0]) * (pi * (i % MODES) as f64 * d).cos())
                .sum();
        }
        for (node, x) in self.grid.coords().iter().enumerate() {
            let d = (x[1] + ly) / ly;
            let mut u1 = C64::new(0.0, 0.0);
            let mut u2 = d * w2_at(x[0]);
            for i in 0..MODES * MODES {
                let (k, l) = (i / MODES, i % MODES);
                u1 += c_u1[i] * sx(k, x[0]) * (pi * l as f64 * d).cos();
                u2 += c_u2[i] * cx(k, x[0]) * (pi * (l + 1) as f64 * d).sin();
            }
            s.u[fe::vdof(node, 0)] = u1;
            s.u[fe::vdof(node, 1)] = u2;
        }
        let hx = self.grid.hx;
        for j in 0..s.w1.len() {
            let x = (j + 1) as f64 * hx;
            let bump = (pi * x / lx).sin().powi(2);
            s.w1[j] = (0..MODES).map(|k| c_w1[k] * bump * sx(k, x)).sum();
            s.w2[j] = w2_at(x);
        }
        let mut x = self.dofs.restrict(&s);
        self.project(&mut x);
        let n = self.norm(&x);
        x.iter_mut().for_each(|v| *v /= n);
        x
    }

    /// Relative residual `‖K Φ₀‖_G / ‖Φ₀‖_G` measured in the dual norm
    /// induced by `G`.
    pub fn null_residual(&self, adjoint: bool) -> Result<f64> {
        // the null vector is real; accumulate carefully since the beam rows
        // cancel terms of size h⁻³
        let x: Vec<f64> = self.null_red.iter().map(|z| z.re).collect();
        let r = if adjoint {
            self.k.transpose().matvec_real_compensated(&x)
        } else {
            self.k.matvec_real_compensated(&x)
        };
        let r = real_to_complex(&r);
        let lu = Factorization::new(ONE, &self.g, ZERO, &self.zero())?;
        let y = lu.solve(&r)?;
        Ok(self.norm(&y) / self.null_energy.sqrt())
    }

    /// Checks a full state has the layout of this grid.
    pub fn check(&self, s: &StateVector) -> Result<()> {
        check_len("state size", self.dofs.full_dim(), s.len())
    }
}
