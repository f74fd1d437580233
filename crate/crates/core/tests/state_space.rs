//! Reference values for the energy space: inner product, null vector,
//! complement functional and projection.

use fsi_core::beam::BeamMesh;
use fsi_core::fields::*;
use fsi_core::grid::{build_grid, GeometryConfig, Grid};
use fsi_core::linalg::{C64, ONE, ZERO};

fn grid(n: usize) -> Grid {
    build_grid(GeometryConfig::new(1.0, 1.0, n, n)).unwrap()
}

/// Clamped unit-load deflection of the unit beam.
fn deflection(x: f64) -> f64 {
    x * x * (1.0 - x) * (1.0 - x) / 24.0
}

#[test]
fn zero_pair_has_zero_product() {
    let g = grid(8);
    let gm = GramMatrix::new(&g);
    let z = StateVector::zeros(&g);
    assert_eq!(energy_inner_product(&z, &z, &gm).unwrap(), ZERO);
}

#[test]
fn null_vector_blocks() {
    let g = grid(16);
    let gm = GramMatrix::new(&g);
    let phi0 = null_vector(&g, &gm).unwrap();
    assert!(phi0.p.iter().all(|&p| p == ONE));
    assert!(phi0.u.iter().all(|&u| u == ZERO));
    assert!(phi0.w2.iter().all(|&w| w == ZERO));
}

#[test]
fn null_vector_midpoint_is_one_over_384() {
    // w'''' = 1 with clamped ends has the closed form x²(1−x)²/24
    let g = grid(64);
    let phi0 = null_vector(&g, &GramMatrix::new(&g)).unwrap();
    let mid = BeamMesh::new(64, 1.0).eval(&phi0.w1, 0.5).re;
    assert!((mid - 1.0 / 384.0).abs() < 1e-3 / 384.0, "{mid}");
    // the nodal values are exact for this load
    for (k, w) in phi0.w1.iter().enumerate() {
        let x = (k + 1) as f64 / 64.0;
        assert!((w.re - deflection(x)).abs() < 1e-13);
    }
}

#[test]
fn null_vector_energy_is_one_plus_one_over_720() {
    // (Δw, Δw) = (w, Δ²w) = ∫ x²(1−x)²/24 = 1/720, independently integrated
    // here with a 2000-panel Simpson rule
    let n = 2000;
    let simpson: f64 = (0..=n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let c = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            c * deflection(x)
        })
        .sum::<f64>()
        / (3.0 * n as f64);
    assert!((simpson - 1.0 / 720.0).abs() < 1e-15);

    let g = grid(64);
    let gm = GramMatrix::new(&g);
    let phi0 = null_vector(&g, &gm).unwrap();
    let e = energy_inner_product(&phi0, &phi0, &gm).unwrap();
    assert!(e.im.abs() < 1e-15);
    assert!((e.re - (1.0 + simpson)).abs() < 1e-9, "{}", e.re);
}

#[test]
fn complement_functional_references() {
    let g = grid(64);
    let gm = GramMatrix::new(&g);
    let mut s = StateVector::zeros(&g);
    s.p.fill(ONE);
    assert!((complement_functional(&s, &gm) - ONE).norm() < 1e-14);

    let mut w = StateVector::zeros(&g);
    for (k, v) in w.w1.iter_mut().enumerate() {
        *v = C64::new(deflection((k + 1) as f64 / 64.0), 0.0);
    }
    let i = complement_functional(&w, &gm).re;
    assert!((i - 1.0 / 720.0).abs() < 1e-9, "{i}");

    // any w1 with ∫w1 = −1 cancels the unit pressure
    let bump: Vec<f64> = (1..64).map(|k| deflection(k as f64 / 64.0)).collect();
    let total: f64 = bump.iter().zip(&gm.beam_load).map(|(b, l)| b * l).sum();
    for (v, b) in s.w1.iter_mut().zip(&bump) {
        *v = C64::new(-b / total, 0.0);
    }
    assert!(complement_functional(&s, &gm).norm() < 1e-14);
}

#[test]
fn projection_references() {
    let g = grid(8);
    let gm = GramMatrix::new(&g);
    let phi0 = null_vector(&g, &gm).unwrap();
    let killed = project_complement(&phi0, &phi0, &gm).unwrap();
    assert!(energy_norm(&killed, &gm).unwrap() < 1e-14);

    // a complement member built by hand
    let mut psi = StateVector::zeros(&g);
    for (i, v) in psi.u.iter_mut().enumerate() {
        *v = C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
    }
    psi.p[0] = C64::new(2.0, -1.0);
    let psi = project_complement(&psi, &phi0, &gm).unwrap();
    assert!(energy_inner_product(&psi, &phi0, &gm).unwrap().norm() < 1e-14);

    let same = project_complement(&psi, &phi0, &gm).unwrap();
    let d = same.axpy(-ONE, &psi);
    assert!(energy_norm(&d, &gm).unwrap() < 1e-14);

    let mixed = phi0.scaled(C64::new(2.0, 0.0)).axpy(ONE, &psi);
    let back = project_complement(&mixed, &phi0, &gm).unwrap().axpy(-ONE, &psi);
    assert!(energy_norm(&back, &gm).unwrap() < 1e-13);
}

#[test]
fn size_mismatch_is_an_error() {
    let gm = GramMatrix::new(&grid(8));
    let s = StateVector::zeros(&grid(4));
    assert!(energy_inner_product(&s, &s, &gm).is_err());
}
