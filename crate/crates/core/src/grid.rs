//! Structured discretization of the flow rectangle `(0, Lx) × (-Ly, 0)`.
//!
//! The top edge `x₂ = 0` is the elastic portion Ω; the other three edges
//! form the rigid wall S. Corner nodes are always tagged S and are assigned
//! to the adjacent vertical side, so the clamped beam ends coincide with
//! wall nodes.
//!
//! Velocities live on the grid itself; pressures live on the macro-grid
//! obtained by merging 2×2 blocks of cells. The resulting pair is stable
//! for the divergence coupling, which equal-order bilinears are not.

use serde::{Deserialize, Serialize};

use crate::error::{FsiError, Result};

/// Minimum number of cells per direction.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Length of the elastic edge Ω.
    pub lx: f64,
    /// Depth of the flow domain.
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            lx: 1.0,
            ly: 1.0,
            nx: 64,
            ny: 64,
        }
    }
}

impl GeometryConfig {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        Self { lx, ly, nx, ny }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lx.is_finite() && self.lx > 0.0) || !(self.ly.is_finite() && self.ly > 0.0) {
            return Err(FsiError::Geometry(format!(
                "dimensions must be positive (lx = {}, ly = {})",
                self.lx, self.ly
            )));
        }
        if self.nx < MIN_CELLS || self.ny < MIN_CELLS {
            return Err(FsiError::Geometry(format!(
                "need at least {MIN_CELLS} cells per direction (nx = {}, ny = {})",
                self.nx, self.ny
            )));
        }
        if !self.nx.is_multiple_of(2) || !self.ny.is_multiple_of(2) {
            return Err(FsiError::Geometry(format!(
                "cell counts must be even for the pressure macro-grid (nx = {}, ny = {})",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    /// Same box with both cell counts multiplied by `2^levels`.
    pub fn refined(&self, levels: u32) -> Self {
        let f = 1usize << levels;
        Self {
            nx: self.nx * f,
            ny: self.ny * f,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Elastic top edge (open: corners excluded).
    Omega,
    /// Rigid wall, including all four corners.
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub node: usize,
    pub tag: BoundaryTag,
    pub side: Side,
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
}

/// Gauss–Legendre rule on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn gauss(order: usize) -> Self {
        let (p, w): (Vec<f64>, Vec<f64>) = match order {
            1 => (vec![0.0], vec![2.0]),
            2 => {
                let a = 1.0 / 3f64.sqrt();
                (vec![-a, a], vec![1.0, 1.0])
            }
            3 => {
                let a = (3.0f64 / 5.0).sqrt();
                (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
            }
            4 => {
                let s = (6.0f64 / 5.0).sqrt();
                let a = ((3.0 - 2.0 * s) / 7.0).sqrt();
                let b = ((3.0 + 2.0 * s) / 7.0).sqrt();
                let wa = (18.0 + 30f64.sqrt()) / 36.0;
                let wb = (18.0 - 30f64.sqrt()) / 36.0;
                (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
            }
            _ => panic!("unsupported Gauss order {order}"),
        };
        Self {
            points: p.iter().map(|x| 0.5 * (x + 1.0)).collect(),
            weights: w.iter().map(|x| 0.5 * x).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Immutable structured grid.
#[derive(Debug, Clone)]
pub struct Grid {
    pub config: GeometryConfig,
    pub hx: f64,
    pub hy: f64,
    coords: Vec<[f64; 2]>,
    cells: Vec<[usize; 4]>,
    boundary: Vec<BoundaryNode>,
    boundary_slot: Vec<Option<usize>>,
    pub quadrature: Quadrature,
}

/// Builds the structured grid for a validated configuration.
pub fn build_grid(config: GeometryConfig) -> Result<Grid> {
    config.validate()?;
    Ok(build_unchecked(config))
}

fn build_unchecked(config: GeometryConfig) -> Grid {
    let GeometryConfig { lx, ly, nx, ny } = config;
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Written so that doubling (nx, ny) reproduces coarse nodes bit for bit.
            let x = lx * i as f64 / nx as f64;
            let y = -ly + ly * j as f64 / ny as f64;
            coords.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }

    // Counterclockwise walk starting at the bottom-left corner.
    let mut walk: Vec<(usize, Side)> = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        walk.push((id(i, 0), if i == 0 { Side::Left } else { Side::Bottom }));
    }
    for j in 0..ny {
        walk.push((id(nx, j), Side::Right));
    }
    for i in (1..=nx).rev() {
        walk.push((id(i, ny), if i == nx { Side::Right } else { Side::Top }));
    }
    for j in (1..=ny).rev() {
        walk.push((id(0, j), Side::Left));
    }
    let mut boundary_slot = vec![None; coords.len()];
    let boundary: Vec<BoundaryNode> = walk
        .into_iter()
        .enumerate()
        .map(|(slot, (node, side))| {
            boundary_slot[node] = Some(slot);
            let normal = side.normal();
            BoundaryNode {
                node,
                tag: if side == Side::Top {
                    BoundaryTag::Omega
                } else {
                    BoundaryTag::Wall
                },
                side,
                normal,
                tangent: [normal[1], -normal[0]],
            }
        })
        .collect();

    Grid {
        config,
        hx: lx / nx as f64,
        hy: ly / ny as f64,
        coords,
        cells,
        boundary,
        boundary_slot,
        quadrature: Quadrature::gauss(3),
    }
}

impl Grid {
    pub fn nx(&self) -> usize {
        self.config.nx
    }

    pub fn ny(&self) -> usize {
        self.config.ny
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.config.nx + 1) + i
    }

    /// `(i, j)` lattice position of a node.
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node % (self.config.nx + 1), node / (self.config.nx + 1))
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    /// Lower-left corner of a cell.
    pub fn cell_origin(&self, cell: usize) -> [f64; 2] {
        self.coords[self.cells[cell][0]]
    }

    pub fn area(&self) -> f64 {
        self.config.lx * self.config.ly
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.config.lx + self.config.ly)
    }

    /// Boundary nodes in counterclockwise order around ∂𝒪.
    pub fn boundary(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    pub fn boundary_node(&self, node: usize) -> Option<&BoundaryNode> {
        self.boundary_slot[node].map(|s| &self.boundary[s])
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_slot[node].is_some()
    }

    /// Ω-tagged nodes ordered by increasing x.
    pub fn omega_nodes(&self) -> Vec<usize> {
        let ny = self.config.ny;
        (1..self.config.nx).map(|i| self.node_id(i, ny)).collect()
    }

    /// Top-edge nodes including both corners, ordered by increasing x.
    pub fn top_edge_nodes(&self) -> Vec<usize> {
        let ny = self.config.ny;
        (0..=self.config.nx).map(|i| self.node_id(i, ny)).collect()
    }

    /// Macro-grid with cells of size `2hx × 2hy` carrying the pressure.
    pub fn pressure_grid(&self) -> Grid {
        build_unchecked(GeometryConfig {
            nx: self.config.nx / 2,
            ny: self.config.ny / 2,
            ..self.config
        })
    }

    /// Number of pressure unknowns (macro-grid nodes).
    pub fn n_pressure(&self) -> usize {
        (self.config.nx / 2 + 1) * (self.config.ny / 2 + 1)
    }

    /// Macro cell containing a fine cell, and the fine cell's offset
    /// `(0|1, 0|1)` inside it.
    pub fn macro_cell(&self, cell: usize) -> (usize, [usize; 2]) {
        let nx = self.config.nx;
        let (i, j) = (cell % nx, cell / nx);
        ((j / 2) * (nx / 2) + i / 2, [i % 2, j % 2])
    }

    /// Physical coordinates of the tensor Gauss points of a cell with weights.
    pub fn cell_quadrature(&self, cell: usize) -> impl Iterator<Item = QuadPoint> + '_ {
        let [x0, y0] = self.cell_origin(cell);
        let (hx, hy) = (self.hx, self.hy);
        let q = &self.quadrature;
        (0..q.len()).flat_map(move |b| {
            (0..q.len()).map(move |a| {
                let (s, t) = (q.points[a], q.points[b]);
                QuadPoint {
                    s,
                    t,
                    x: [x0 + hx * s, y0 + hy * t],
                    weight: q.weights[a] * q.weights[b] * hx * hy,
                }
            })
        })
    }
}

/// Quadrature point: reference coordinates `(s, t) ∈ [0,1]²`, physical
/// position and weight including the cell Jacobian.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub s: f64,
    pub t: f64,
    pub x: [f64; 2],
    pub weight: f64,
}

/// Per-node tangent vectors on ∂𝒪, in the boundary walk order.
pub fn boundary_tangential_basis(grid: &Grid) -> Vec<(usize, [f64; 2])> {
    grid.boundary().iter().map(|b| (b.node, b.tangent)).collect()
}
