//! Resolvent solves, norm estimates, sweeps and eigenvalue searches.

use fsi_core::fields::StateVector;
use fsi_core::generator::{assemble, build_ambient_field, OperatorPair, PhysicalParams};
use fsi_core::grid::{build_grid, GeometryConfig};
use fsi_core::linalg::{C64, ONE, ZERO};
use fsi_core::spectral::*;

fn pair(n: usize, s: f64) -> OperatorPair {
    let g = build_grid(GeometryConfig::new(1.0, 1.0, n, n)).unwrap();
    let f = build_ambient_field(s, &g).unwrap();
    assemble(&g, PhysicalParams::default(), &f).unwrap()
}

#[test]
fn resolvent_residual_on_random_data() {
    let p = pair(16, 0.5);
    for beta in [0.0, 1.0, 10.0] {
        let op = ResolventOperator::new(&p, beta).unwrap();
        for seed in 0..3 {
            let r = p.random_complement(seed, true);
            let x = op.apply(&r).unwrap();
            assert!(op.residual(&x, &r) <= RESOLVENT_TOL, "beta {beta}");
            let sol = solve_resolvent(&p, beta, &p.extend(&r)).unwrap();
            assert!(p.null_component(&p.restrict(&sol).unwrap()).norm() < 1e-12);
        }
    }
}

#[test]
fn conjugation_symmetry_of_solves() {
    let p = pair(8, 1.0);
    let rhs = p.extend(&p.random_complement(4, true));
    let a = solve_resolvent(&p, 3.0, &rhs).unwrap();
    let b = solve_resolvent(&p, -3.0, &rhs.conj()).unwrap();
    let d = p.restrict(&a.conj().axpy(-ONE, &b)).unwrap();
    assert!(p.norm(&d) < 1e-10 * p.norm(&p.restrict(&a).unwrap()));
}

#[test]
fn zero_data_gives_zero_solution() {
    let p = pair(8, 0.5);
    for beta in [0.0, 2.0] {
        let sol = solve_resolvent(&p, beta, &StateVector::zeros(&p.grid)).unwrap();
        assert!(sol.to_flat().iter().all(|v| *v == ZERO));
    }
}

#[test]
fn norm_estimate_dominates_probes_and_is_even() {
    let p = pair(8, 0.5);
    for beta in [0.0, 1.5, 7.0] {
        let s = resolvent_norm(&p, beta, 1e-6).unwrap();
        assert!(s.converged);
        let op = ResolventOperator::new(&p, beta).unwrap();
        for seed in 0..5 {
            let r = p.random_complement(seed, true);
            let gain = p.norm(&op.apply(&r).unwrap()) / p.norm(&r);
            assert!(gain <= s.norm_estimate * (1.0 + 1e-6), "beta {beta}: {gain} > {}", s.norm_estimate);
        }
        if beta > 0.0 {
            let m = resolvent_norm(&p, -beta, 1e-6).unwrap();
            assert!((m.norm_estimate - s.norm_estimate).abs() < 1e-10 * s.norm_estimate);
        }
    }
}

#[test]
fn sweep_counts_and_symmetry() {
    let p = pair(8, 0.5);
    let sw = resolvent_sweep(&p, 50.0, 101).unwrap();
    assert_eq!(sw.samples.len(), 201);
    assert_eq!(sw.to_csv().lines().count(), 202);
    for (a, b) in sw.samples.iter().zip(sw.samples.iter().rev()) {
        assert_eq!(a.beta, -b.beta);
        assert_eq!(a.norm_estimate, b.norm_estimate);
    }
    let at0 = sw.samples.iter().find(|s| s.beta == 0.0).unwrap();
    assert_eq!(at0.norm_estimate, resolvent_norm(&p, 0.0, POWER_TOL).unwrap().norm_estimate);
    assert!(sw.sup_estimate.is_finite() && sw.sup_beta.abs() < 50.0);
    assert!(sw.samples.iter().all(|s| s.norm_estimate <= sw.sup_estimate));
}

#[test]
fn sweep_tail_is_bounded_by_the_sup() {
    let p = pair(16, 0.5);
    let sw = resolvent_sweep(&p, 50.0, 21).unwrap();
    let tail: Vec<f64> = sw.tail(25.0).map(|s| s.norm_estimate).collect();
    assert!(!tail.is_empty());
    assert!(tail.iter().all(|&t| t <= sw.sup_estimate && t > 0.0));
}

#[test]
fn zero_eigenvalue_belongs_to_the_null_vector() {
    let p = pair(8, 0.5);
    let rep = eigs_near(&p, ZERO, 4).unwrap();
    let (i, l) = rep
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    assert!(l.norm() < 1e-8, "{l}");
    let v = &rep.vectors[i];
    let phi0 = p.null_reduced();
    let c = p.inner(v, phi0).norm() / (p.norm(v) * p.norm(phi0));
    let sin = (1.0 - c * c).max(0.0).sqrt();
    assert!(sin <= 1e-6, "angle {sin}");
}

#[test]
fn eigenvalues_lie_in_the_closed_left_half_plane_and_pair_up() {
    let p = pair(8, 1.0);
    let mut all = Vec::new();
    for beta in [2.0, -2.0, 10.0, -10.0] {
        let rep = eigs_near(&p, C64::new(0.0, beta), 6).unwrap();
        for (l, r) in rep.eigenvalues.iter().zip(&rep.residuals) {
            assert!(l.re <= 1e-10, "{l}");
            assert!(*r <= EIGEN_TOL);
        }
        all.extend(rep.eigenvalues);
    }
    for l in all.iter().filter(|l| l.im.abs() < 8.0) {
        assert!(
            all.iter().any(|m| (m - l.conj()).norm() <= 1e-6 * l.norm().max(1.0)),
            "conjugate of {l} missing"
        );
    }
}

#[test]
fn abscissa_matches_the_dense_spectrum() {
    // the dense spectrum minus the origin is an independent reference
    for s in [0.0, 0.5] {
        let p = pair(8, s);
        let mut dense = dense_spectrum(&p).unwrap();
        dense.sort_by(|a, b| b.re.total_cmp(&a.re));
        assert!(dense[0].norm() < 1e-10);
        let a = spectral_abscissa_complement(&p, 6).unwrap();
        assert!(a < 0.0);
        assert!((a - dense[1].re).abs() < 1e-8, "amplitude {s}: {a} vs {}", dense[1].re);
    }
}

#[test]
fn unrestricted_gain_blows_up_at_the_origin() {
    let p = pair(8, 0.5);
    for beta in [1.0, 1e-2, -1e-4] {
        let g = null_direction_gain(&p, beta).unwrap();
        assert!((g * beta.abs() - 1.0).abs() < 1e-8, "beta {beta}: {g}");
    }
    assert!(null_direction_gain(&p, 0.0).is_err());
}

#[test]
fn least_damped_eigenvalue_converges_under_refinement() {
    // Deeper modes sit in a cluster near −0.32 that fills in as h → 0, so
    // only the leading one can be followed from grid to grid.
    let a: Vec<f64> = [8, 16, 32, 64]
        .into_iter()
        .map(|n| spectral_abscissa_complement(&pair(n, 0.5), 3).unwrap())
        .collect();
    for w in a.windows(3) {
        let ratio = (w[2] - w[1]).abs() / (w[1] - w[0]).abs();
        assert!(ratio < 0.5, "{a:?}: ratio {ratio}");
    }
}
