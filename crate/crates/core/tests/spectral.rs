use fsi_core::spectral::*;
use fsi_core::generator::{assemble, build_ambient_field, OperatorPair, PhysicalParams};
use fsi_core::grid::{build_grid, GeometryConfig};
use fsi_core::fields::StateVector;
use fsi_core::linalg::{C64, ZERO};

fn pair(n: usize) -> OperatorPair {
    let grid = build_grid(GeometryConfig::new(1.0, 1.0, n, n)).unwrap();
    let f = build_ambient_field(0.5, &grid).unwrap();
    assemble(&grid, PhysicalParams::default(), &f).unwrap()
}

#[test]
fn sweep_grid_contains_mandatory_points() {
    let b = sweep_betas(50.0, 101);
    for x in [0.0, 0.5, 1.0, 2.0] {
        assert!(b.contains(&x));
    }
    // the uniform spacing already hits every mandatory point
    assert_eq!(b.len(), 101);
    assert_eq!(sweep_betas(10.0, 4).len(), 7);
}

#[test]
fn zero_rhs_gives_zero() {
    let p = pair(6);
    let rhs = StateVector::zeros(&p.grid);
    let x = solve_resolvent(&p, 1.0, &rhs).unwrap();
    assert!(x.to_flat().iter().all(|v| *v == ZERO));
}

#[test]
fn shift_invert_agrees_with_dense() {
    let p = pair(4);
    let dense = dense_spectrum(&p).unwrap();
    let rep = eigs_near(&p, C64::new(0.0, 3.0), 4).unwrap();
    for l in &rep.eigenvalues {
        let d = dense.iter().map(|x| (x - l).norm()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-6 * l.norm().max(1.0), "{l} not in dense spectrum");
    }
}
