use fsi_core::fe::*;
use fsi_core::grid::{build_grid, GeometryConfig};
use fsi_core::linalg::{dot, real_to_complex};
use fsi_core::grid::Grid;
use fsi_core::linalg::{C64, ZERO};

fn grid() -> Grid {
    build_grid(GeometryConfig::new(1.0, 1.0, 4, 4)).unwrap()
}

#[test]
fn mass_element_matches_closed_form() {
    // ∫ φ_i φ_j on a single h×h cell: h²/36 [4 2 1 2; ...]
    let g = grid();
    let m = mass(&g);
    let h2 = g.hx * g.hy;
    let corner = g.node_id(0, 0);
    assert!((m.get(corner, corner) - 4.0 * h2 / 36.0).abs() < 1e-16);
    assert!((m.get(corner, g.node_id(1, 0)) - 2.0 * h2 / 36.0).abs() < 1e-16);
    assert!((m.get(corner, g.node_id(1, 1)) - h2 / 36.0).abs() < 1e-16);
    let ones = real_to_complex(&vec![1.0; g.n_nodes()]);
    assert!((m.form(&ones, &ones).re - 1.0).abs() < 1e-14);
}

#[test]
fn laplacian_element_matches_closed_form() {
    // square cell: diag 2/3, edge neighbor -1/6, diagonal neighbor -1/3
    let g = grid();
    let l = laplacian(&g);
    let c = g.node_id(0, 0);
    assert!((l.get(c, c) - 2.0 / 3.0).abs() < 1e-15);
    assert!((l.get(c, g.node_id(1, 0)) + 1.0 / 6.0).abs() < 1e-15);
    assert!((l.get(c, g.node_id(1, 1)) + 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn divergence_of_linear_field() {
    // u = (x, 2y) has div u = 3; D u tested with 1 gives 3·area.
    let g = grid();
    let d = divergence(&g);
    let mut u = vec![ZERO; 2 * g.n_nodes()];
    for (n, x) in g.coords().iter().enumerate() {
        u[vdof(n, 0)] = C64::new(x[0], 0.0);
        u[vdof(n, 1)] = C64::new(2.0 * x[1], 0.0);
    }
    let ones = real_to_complex(&vec![1.0; g.n_nodes()]);
    assert!((dot(&d.matvec(&u), &ones).re - 3.0).abs() < 1e-13);
}

#[test]
fn mixed_divergence_of_linear_field() {
    let g = grid();
    let d = pressure_divergence(&g);
    let mut u = vec![ZERO; 2 * g.n_nodes()];
    for (n, x) in g.coords().iter().enumerate() {
        u[vdof(n, 0)] = C64::new(x[0] * x[1], 0.0);
        u[vdof(n, 1)] = C64::new(2.0 * x[1], 0.0);
    }
    // ∫ div u = ∫ (y + 2) over (0,1)×(-1,0) = 1.5
    let ones = real_to_complex(&vec![1.0; g.n_pressure()]);
    assert!((dot(&d.matvec(&u), &ones).re - 1.5).abs() < 1e-13);
    let m = pressure_to_fine_mass(&g);
    let fine_ones = real_to_complex(&vec![1.0; g.n_nodes()]);
    assert!((m.form(&fine_ones, &ones).re - 1.0).abs() < 1e-14);
}

#[test]
fn elasticity_of_shear_field() {
    // u = (y, 0): ε = [[0, ½], [½, 0]], (σ,ε) = ν·area for any λ.
    let g = grid();
    let a = elasticity(&g, 1.7, 0.4);
    let mut u = vec![ZERO; 2 * g.n_nodes()];
    for (n, x) in g.coords().iter().enumerate() {
        u[vdof(n, 0)] = C64::new(x[1], 0.0);
    }
    assert!((a.form(&u, &u).re - 1.7).abs() < 1e-13);
    assert!(a.asymmetry() < 1e-14);
}

#[test]
fn skew_part_is_antisymmetric() {
    let g = grid();
    let c = convection(&g, |x| [x[1] + 0.3, -x[0] * x[0]]);
    let s = skew_part(&c);
    for (r, cc, v) in s.iter() {
        assert_eq!(v, -s.get(cc, r));
    }
}
