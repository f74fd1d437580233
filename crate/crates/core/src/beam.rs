//! Clamped Euler–Bernoulli beam on the elastic edge.
//!
//! Beam displacements are clamped cubic splines on the uniform edge mesh,
//! parametrized by their values at the interior nodes. That is the same
//! layout as the beam velocity (piecewise-linear hats on interior nodes),
//! which in turn is the normal velocity trace of the fluid; keeping one
//! unknown per node in both beam blocks is what prevents beam shapes that
//! the fluid cannot see.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::linalg::{CsrMatrix, C64, ZERO};

/// Uniform beam mesh with `n_el` elements of length `h`.
#[derive(Debug, Clone)]
pub struct BeamMesh {
    pub n_el: usize,
    pub h: f64,
    /// Nodal values to free spline coefficients, `A⁻¹` (dense, `m × m`).
    values_to_coeffs: Mat<f64>,
}

/// Uniform cubic B-spline pieces on `[0, 1]`, for the four splines active
/// on one element (leftmost first).
fn bspline_pieces(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [
        s * s * s / 6.0,
        (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0,
        (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0,
        t * t * t / 6.0,
    ]
}

/// Second derivatives of [`bspline_pieces`] in `t`.
fn bspline_pieces_dd(t: f64) -> [f64; 4] {
    [1.0 - t, 3.0 * t - 2.0, 1.0 - 3.0 * t, t]
}

impl BeamMesh {
    pub fn new(n_el: usize, length: f64) -> Self {
        assert!(n_el >= 2, "beam needs at least two elements");
        let mut mesh = Self {
            n_el,
            h: length / n_el as f64,
            values_to_coeffs: Mat::zeros(0, 0),
        };
        let m = mesh.n_interior();
        let a = Mat::<f64>::from_fn(m, m, |k, j| mesh.free_basis_at_node(j, k + 1));
        let id = Mat::<f64>::identity(m, m);
        mesh.values_to_coeffs = a.partial_piv_lu().solve(&id);
        mesh
    }

    pub fn n_interior(&self) -> usize {
        self.n_el - 1
    }

    /// Free coefficient index and weight of the B-spline `B_g`,
    /// `g ∈ {-1, …, n_el + 1}`, after imposing `w = w' = 0` at both ends:
    /// `c₋₁ = c₁`, `c₀ = −c₁/2` and symmetrically on the right.
    fn expansion(&self, g: isize) -> (usize, f64) {
        let n = self.n_el as isize;
        let m = self.n_interior();
        match g {
            -1 => (0, 1.0),
            0 => (0, -0.5),
            g if g == n => (m - 1, -0.5),
            g if g == n + 1 => (m - 1, 1.0),
            g => ((g - 1) as usize, 1.0),
        }
    }

    /// Value of free basis function `j` at interior node `node`.
    fn free_basis_at_node(&self, j: usize, node: usize) -> f64 {
        // at t = 0 of element `node` the active splines are B_{node-1..node+2}
        let b = bspline_pieces(0.0);
        (0..4)
            .map(|a| {
                let (k, w) = self.expansion(node as isize - 1 + a as isize);
                if k == j {
                    w * b[a]
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Bending stiffness `(w'', v'')` on free spline coefficients.
    fn coeff_stiffness(&self) -> Mat<f64> {
        let m = self.n_interior();
        let mut k = Mat::<f64>::zeros(m, m);
        let scale = 1.0 / (self.h * self.h * self.h);
        // second derivatives are linear, so two Gauss points are exact
        let g = 0.5 / 3f64.sqrt();
        for e in 0..self.n_el {
            let dofs: Vec<(usize, f64)> = (0..4).map(|a| self.expansion(e as isize - 1 + a)).collect();
            for t in [0.5 - g, 0.5 + g] {
                let dd = bspline_pieces_dd(t);
                for a in 0..4 {
                    for b in 0..4 {
                        let ((i, wi), (j, wj)) = (dofs[a], dofs[b]);
                        k[(i, j)] += 0.5 * scale * wi * wj * dd[a] * dd[b];
                    }
                }
            }
        }
        k
    }

    /// Bending stiffness on nodal values, `A⁻ᵀ K_c A⁻¹` (dense).
    pub fn bending_stiffness(&self) -> CsrMatrix {
        let kc = self.coeff_stiffness();
        let ainv = &self.values_to_coeffs;
        let kn = ainv.transpose() * &kc * ainv;
        let m = self.n_interior();
        let mut trip = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                // symmetrize away round-off of the triple product
                trip.push((i, j, 0.5 * (kn[(i, j)] + kn[(j, i)])));
            }
        }
        CsrMatrix::from_triplets(m, m, &trip)
    }

    /// Nodal load of the unit function, `∫ φ_k = h` for every interior hat;
    /// `load · w` is the trapezoidal integral of `w`.
    pub fn unit_load(&self) -> Vec<f64> {
        vec![self.h; self.n_interior()]
    }

    /// P1 mass matrix on interior hats.
    pub fn hat_mass(&self) -> CsrMatrix {
        let h = self.h;
        let m = self.n_interior();
        let mut trip = Vec::with_capacity(3 * m);
        for k in 0..m {
            trip.push((k, k, 2.0 * h / 3.0));
            if k + 1 < m {
                trip.push((k, k + 1, h / 6.0));
                trip.push((k + 1, k, h / 6.0));
            }
        }
        CsrMatrix::from_triplets(m, m, &trip)
    }

    /// Spline coefficients of a nodal-value vector.
    fn coeffs(&self, w: &[C64]) -> Vec<C64> {
        let m = self.n_interior();
        (0..m)
            .map(|i| (0..m).map(|j| w[j] * self.values_to_coeffs[(i, j)]).sum())
            .collect()
    }

    /// Values of the clamped spline through nodal values `w` at points `xs`.
    pub fn eval_many(&self, w: &[C64], xs: &[f64]) -> Vec<C64> {
        let c = self.coeffs(w);
        xs.iter()
            .map(|&x| {
                let u = (x / self.h).clamp(0.0, self.n_el as f64);
                let e = (u.floor() as usize).min(self.n_el - 1);
                let b = bspline_pieces(u - e as f64);
                (0..4)
                    .map(|a| {
                        let (k, wt) = self.expansion(e as isize - 1 + a as isize);
                        c[k] * (wt * b[a])
                    })
                    .sum()
            })
            .collect()
    }

    pub fn eval(&self, w: &[C64], x: f64) -> C64 {
        self.eval_many(w, &[x])[0]
    }

    /// Exact integral of the spline through nodal values `w`.
    pub fn integral(&self, w: &[C64]) -> C64 {
        let c = self.coeffs(w);
        // a full cubic B-spline integrates to h; those cut by the ends
        // keep 1/24, 1/2 or 23/24 of it
        let n = self.n_el as isize;
        let mut total = ZERO;
        for g in -1..=n + 1 {
            let frac = match g {
                -1 => 1.0 / 24.0,
                0 => 0.5,
                1 => 23.0 / 24.0,
                g if g == n - 1 => 23.0 / 24.0,
                g if g == n => 0.5,
                g if g == n + 1 => 1.0 / 24.0,
                _ => 1.0,
            };
            let (k, wt) = self.expansion(g);
            total += c[k] * (wt * frac * self.h);
        }
        total
    }
}
