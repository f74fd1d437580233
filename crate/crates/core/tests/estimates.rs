//! Pressure splitting, Stokes and Neumann auxiliaries, and the resolvent
//! estimate quantities.

use std::f64::consts::PI;

use fsi_core::diagnostics::*;
use fsi_core::fields::StateVector;
use fsi_core::generator::{assemble, build_ambient_field, OperatorPair, PhysicalParams};
use fsi_core::grid::{build_grid, GeometryConfig, Grid};
use fsi_core::linalg::{C64, ZERO};
use fsi_core::spectral::solve_resolvent;
use fsi_core::FsiError;

fn grid(n: usize) -> Grid {
    build_grid(GeometryConfig::new(1.0, 1.0, n, n)).unwrap()
}

fn pair(n: usize, s: f64) -> OperatorPair {
    let g = grid(n);
    let f = build_ambient_field(s, &g).unwrap();
    assemble(&g, PhysicalParams::default(), &f).unwrap()
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn pressure_decomposition_references() {
    let g = grid(16);
    let d = pressure_decomposition(&vec![c(5.0); g.n_pressure()], &g).unwrap();
    assert!((d.c0 - 5.0).norm() < 1e-13);

    // odd about the vertical midline: no mean
    let pg = g.pressure_grid();
    let odd: Vec<C64> = pg.coords().iter().map(|x| C64::new(x[0] - 0.5, 2.0 * (x[0] - 0.5).powi(3))).collect();
    let d = pressure_decomposition(&odd, &g).unwrap();
    assert!(d.c0.norm() < 1e-14);

    let mixed: Vec<C64> = pg.coords().iter().map(|x| C64::new(x[0] * x[1], x[1].cos())).collect();
    let d = pressure_decomposition(&mixed, &g).unwrap();
    for ((p, q), _) in mixed.iter().zip(&d.q0).zip(0..) {
        assert!((q + d.c0 - p).norm() < 1e-14);
    }
    let again = pressure_decomposition(&d.q0, &g).unwrap();
    assert!(again.c0.norm() < 1e-14);
    assert!(pressure_decomposition(&[ZERO; 2], &g).is_err());
}

#[test]
fn stokes_zero_data_and_incompatible_data() {
    let g = grid(8);
    let z2 = |_: [f64; 2]| [ZERO, ZERO];
    let sol = stokes_solve(&g, 1.0, z2, |_| ZERO, z2).unwrap();
    assert!(sol.u.iter().chain(&sol.p).all(|v| v.norm() < 1e-14));
    assert_eq!(sol.estimate.solution_norm, 0.0);

    let err = stokes_solve(&g, 1.0, z2, |_| c(1.0), z2).unwrap_err();
    assert!(matches!(err, FsiError::Compatibility(_)), "{err}");
    assert!(stokes_solve(&g, 0.0, z2, |_| ZERO, z2).is_err());
}

#[test]
fn stokes_reproduces_a_smooth_solution() {
    let err = |n: usize| {
        let g = grid(n);
        let sol = stokes_solve(&g, 1.0, manufactured::force(1.0), |_| ZERO, |_| [ZERO, ZERO]).unwrap();
        velocity_l2_error(&g, &sol.u, manufactured::velocity)
    };
    let (coarse, fine) = (err(16), err(32));
    assert!(fine < 1e-2, "{fine}");
    assert!(coarse / fine > 3.0, "{coarse} -> {fine}");
}

#[test]
fn hminushalf_references() {
    let g = grid(8);
    let modes = BoundaryModes::new(&g).unwrap();
    let ones = vec![c(1.0); modes.len()];
    let n = hminushalf_norm(&ones, &g).unwrap();
    assert!((n - 4f64.sqrt()).abs() < 1e-12, "{n}");

    let wavy: Vec<C64> = (0..modes.len()).map(|k| C64::new((0.9 * k as f64).sin(), (0.4 * k as f64).cos())).collect();
    let weak = hminushalf_norm(&wavy, &g).unwrap();
    let l2 = modes.norm_of_values(&wavy, 0.0).unwrap();
    assert!(weak > 0.0 && weak <= l2 * (1.0 + 1e-12));
    assert!(hminushalf_norm(&ones[1..], &g).is_err());
}

#[test]
fn neumann_potential_references() {
    let g = grid(16);
    let nw = g.omega_nodes().len();
    let zero = chueshov_variable(&vec![ZERO; g.n_pressure()], &vec![ZERO; nw], &g).unwrap();
    assert!(zero.psi.iter().all(|v| v.norm() < 1e-14));

    // ∫p = 1 balanced by an edge flux with ∫w = −1
    let p1 = vec![c(1.0); g.n_pressure()];
    let w = vec![c(-1.0 / (g.hx * nw as f64)); nw];
    let v = chueshov_variable(&p1, &w, &g).unwrap();
    assert!(v.compatibility.norm() < 1e-12);
    assert!(v.neumann_residual < 1e-10);

    let err = chueshov_variable(&p1, &vec![ZERO; nw], &g).unwrap_err();
    assert!(matches!(err, FsiError::Compatibility(_)));
}

#[test]
fn neumann_potential_matches_a_cosine_mode() {
    // ψ = cos πx cos πy has zero normal derivative on the whole boundary and
    // −Δψ = 2π²ψ
    let g = grid(32);
    let pg = g.pressure_grid();
    let exact = |x: &[f64; 2]| (PI * x[0]).cos() * (PI * x[1]).cos();
    let p: Vec<C64> = pg.coords().iter().map(|x| c(2.0 * PI * PI * exact(x))).collect();
    let v = chueshov_variable(&p, &vec![ZERO; g.omega_nodes().len()], &g).unwrap();
    let err = g
        .coords()
        .iter()
        .zip(&v.psi)
        .map(|(x, s)| (s.re - exact(x)).abs())
        .fold(0.0, f64::max);
    assert!(err < 2e-2, "{err}");
}

#[test]
fn pressure_row_of_resolvent_pairs() {
    let p = pair(16, 0.5);
    let z = StateVector::zeros(&p.grid);
    assert_eq!(pressure_equation_check(&p, 1.0, &z, &z).unwrap().residual, 0.0);

    for seed in 0..3 {
        let star = p.extend(&p.random_complement(seed, true));
        let phi = solve_resolvent(&p, 2.0, &star).unwrap();
        let chk = pressure_equation_check(&p, 2.0, &phi, &star).unwrap();
        assert!(chk.residual <= 1e-8, "seed {seed}: {}", chk.residual);
    }

    let still = pair(16, 0.0);
    let star = still.extend(&still.random_complement(3, true));
    let phi = solve_resolvent(&still, 2.0, &star).unwrap();
    assert_eq!(pressure_equation_check(&still, 2.0, &phi, &star).unwrap().convection, ZERO);
}

#[test]
fn med_requires_nonzero_data() {
    let p = pair(8, 0.5);
    let z = StateVector::zeros(&p.grid);
    assert!(med_report(&p, 1.0, &z, &z).is_err());

    let star = p.extend(&p.random_smooth_complement(0, true));
    let phi = solve_resolvent(&p, 1.0, &star).unwrap();
    let r = med_report(&p, 1.0, &star, &phi).unwrap();
    assert!(r.ratio.is_finite() && r.ratio > 0.0);
    assert!((r.ratio - r.lhs / r.rhs).abs() < 1e-14 * r.ratio);
    assert!(r.interior_residual < 1e-8);
}
