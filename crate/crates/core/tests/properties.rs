//! Randomized invariants of the discrete model.

use fsi_core::config::RunConfig;
use fsi_core::diagnostics::pressure_decomposition;
use fsi_core::evolution::simulate_reduced;
use fsi_core::generator::{assemble, build_ambient_field, OperatorPair, PhysicalParams};
use fsi_core::grid::{build_grid, GeometryConfig};
use fsi_core::linalg::{dot, CsrMatrix, C64};
use fsi_core::output::{fmt_f64, matrix_market_string, parse_matrix_market};
use proptest::prelude::*;

fn pair(n: usize, s: f64, params: PhysicalParams) -> OperatorPair {
    let g = build_grid(GeometryConfig::new(1.0, 1.0, n, n)).unwrap();
    let f = build_ambient_field(s, &g).unwrap();
    assemble(&g, params, &f).unwrap()
}

fn params() -> impl Strategy<Value = PhysicalParams> {
    (0.1f64..3.0, 0.0f64..2.0, 0.1f64..3.0).prop_map(|(eta, lambda, nu)| PhysicalParams { eta, lambda, nu })
}

fn sub(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dissipation_identity(s in -3.0f64..3.0, p in params(), seed in any::<u64>()) {
        let pr = pair(8, s, p);
        let x = pr.random_reduced(seed, true);
        let re = dot(&pr.k.matvec(&x), &x).re;
        let d = pr.dissipation_reduced(&x);
        prop_assert!(d >= 0.0);
        prop_assert!((re + d).abs() <= 1e-11 * d.max(1.0));
    }

    #[test]
    fn complement_states_are_orthogonal_to_the_null_vector(s in 0.0f64..2.0, seed in any::<u64>(), complex in any::<bool>()) {
        let pr = pair(8, s, PhysicalParams::default());
        let x = pr.random_complement(seed, complex);
        prop_assert!(pr.null_component(&x).norm() <= 1e-12 * pr.norm(&x));
    }

    #[test]
    fn projection_is_an_orthogonal_projector(seed in any::<u64>()) {
        let pr = pair(8, 0.5, PhysicalParams::default());
        let x = pr.random_reduced(seed, true);
        let y = pr.random_reduced(seed.wrapping_add(1), true);
        let mut px = x.clone();
        pr.project(&mut px);
        let mut ppx = px.clone();
        pr.project(&mut ppx);
        prop_assert!(pr.norm(&sub(&ppx, &px)) <= 1e-13 * pr.norm(&x));
        let mut py = y.clone();
        pr.project(&mut py);
        let a = pr.inner(&px, &y);
        let b = pr.inner(&x, &py);
        prop_assert!((a - b).norm() <= 1e-12 * pr.norm(&x) * pr.norm(&y));
    }

    #[test]
    fn energy_product_is_positive(seed in any::<u64>(), lambda in 0.0f64..3.0) {
        let pr = pair(8, 0.0, PhysicalParams { lambda, ..Default::default() });
        let x = pr.random_reduced(seed, true);
        let e = pr.inner(&x, &x);
        prop_assert!(e.re > 0.0);
        prop_assert!(e.im.abs() <= 1e-13 * e.re);
    }

    #[test]
    fn crank_nicolson_never_gains_energy(s in 0.0f64..3.0, dt in 0.005f64..0.5, seed in any::<u64>()) {
        let pr = pair(8, s, PhysicalParams::default());
        let x = pr.random_complement(seed, true);
        let rec = simulate_reduced(&pr, &x, 10.0 * dt, dt).unwrap();
        prop_assert!(rec.is_monotone(1e-12));
    }
}

proptest! {
    #[test]
    fn matrix_market_round_trip(
        entries in prop::collection::vec((0usize..6, 0usize..5, -1e6f64..1e6), 0..20)
    ) {
        let a = CsrMatrix::from_triplets(6, 5, &entries);
        let b = parse_matrix_market(&matrix_market_string(&a)).unwrap();
        prop_assert_eq!(a.nrows(), b.nrows());
        prop_assert_eq!(a.iter().collect::<Vec<_>>(), b.iter().collect::<Vec<_>>());
    }

    #[test]
    fn float_text_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn config_round_trip(nx in 2usize..40, amp in -5.0f64..5.0, seed in any::<u64>(), dt in 1e-4f64..1.0) {
        let mut cfg = RunConfig::default();
        cfg.geometry.nx = 2 * nx;
        cfg.ambient.amplitude = amp;
        cfg.evolution.seed = seed;
        cfg.evolution.dt = dt;
        prop_assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn pressure_mean_is_removed(values in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 25)) {
        let g = build_grid(GeometryConfig::new(1.0, 1.0, 8, 8)).unwrap();
        let p: Vec<C64> = values.iter().map(|&(a, b)| C64::new(a, b)).collect();
        let d = pressure_decomposition(&p, &g).unwrap();
        let again = pressure_decomposition(&d.q0, &g).unwrap();
        prop_assert!(again.c0.norm() <= 1e-12 * (1.0 + d.c0.norm()));
        for (z, q) in p.iter().zip(&d.q0) {
            prop_assert!((q + d.c0 - z).norm() <= 1e-12);
        }
    }
}
