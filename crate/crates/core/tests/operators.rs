//! Reference values for the ambient flow, the dissipation form and the
//! discrete generator.

use fsi_core::fe;
use fsi_core::fields::StateVector;
use fsi_core::generator::*;
use fsi_core::grid::{build_grid, GeometryConfig, Grid};
use fsi_core::linalg::{dot, C64, ONE, ZERO};

fn grid(n: usize) -> Grid {
    build_grid(GeometryConfig::new(1.0, 1.0, n, n)).unwrap()
}

fn pair(n: usize, s: f64) -> OperatorPair {
    let g = grid(n);
    let f = build_ambient_field(s, &g).unwrap();
    assemble(&g, PhysicalParams::default(), &f).unwrap()
}

#[test]
fn zero_amplitude_gives_zero_flow() {
    let g = grid(8);
    let f = build_ambient_field(0.0, &g).unwrap();
    assert_eq!(f.max_speed(), 0.0);
    for x in g.coords() {
        assert_eq!(f.velocity(*x), [0.0, 0.0]);
    }
}

#[test]
fn ambient_flow_is_solenoidal_and_vanishes_on_the_boundary() {
    let g = build_grid(GeometryConfig::new(2.0, 1.0, 16, 8)).unwrap();
    for s in [0.3, 1.0, 4.0] {
        let f = build_ambient_field(s, &g).unwrap();
        for c in 0..g.n_cells() {
            for q in g.cell_quadrature(c) {
                assert!(f.divergence(q.x).abs() < 1e-12 * s);
            }
        }
        for b in g.boundary() {
            assert_eq!(f.velocity(g.coords()[b.node]), [0.0, 0.0]);
        }
    }
}

#[test]
fn shear_field_dissipation_is_nu_plus_eta_over_three() {
    // u = (y, 0): ε has off-diagonal ½, so (σ, ε) = ν·|𝒪| and ‖u‖² = 1/3
    let g = grid(8);
    let params = PhysicalParams {
        eta: 1.7,
        lambda: 0.9,
        nu: 0.6,
    };
    let mut s = StateVector::zeros(&g);
    for (n, x) in g.coords().iter().enumerate() {
        s.u[fe::vdof(n, 0)] = C64::new(x[1], 0.0);
    }
    let d = dissipation(&s, &g, params).unwrap();
    let exact = params.nu + params.eta / 3.0;
    assert!((d - exact).abs() < 1e-13 * exact, "{d} vs {exact}");
}

#[test]
fn constant_field_dissipates_only_by_drag() {
    let g = grid(8);
    let params = PhysicalParams::default();
    let c = [0.4, -1.3];
    let mut s = StateVector::zeros(&g);
    for n in 0..g.n_nodes() {
        s.u[fe::vdof(n, 0)] = C64::new(c[0], 0.0);
        s.u[fe::vdof(n, 1)] = C64::new(c[1], 0.0);
    }
    let d = dissipation(&s, &g, params).unwrap();
    let exact = params.eta * g.area() * (c[0] * c[0] + c[1] * c[1]);
    assert!((d - exact).abs() < 1e-13 * exact);
    assert_eq!(dissipation(&StateVector::zeros(&g), &g, params).unwrap(), 0.0);
}

#[test]
fn null_vector_is_annihilated() {
    let p = pair(32, 0.5);
    assert!(p.null_residual(false).unwrap() <= 1e-10);
    assert!(p.null_residual(true).unwrap() <= 1e-10);
    let phi0 = p.extend(p.null_reduced());
    let a = apply_generator(&p, &phi0).unwrap();
    let x = p.restrict(&a).unwrap();
    assert!(p.norm(&x) < 1e-9 * p.norm(p.null_reduced()));
    assert!(p.norm(&p.restrict(&apply_generator(&p, &StateVector::zeros(&p.grid)).unwrap()).unwrap()) == 0.0);
}

#[test]
fn beam_only_states_are_conservative() {
    let p = pair(16, 0.5);
    let mut s = StateVector::zeros(&p.grid);
    for (k, w) in s.w1.iter_mut().enumerate() {
        *w = C64::new((k as f64 * 0.7).sin(), (k as f64 * 0.3).cos());
    }
    let x = p.restrict(&s).unwrap();
    let q = dot(&p.k.matvec(&x), &x);
    assert!(q.re.abs() < 1e-12 * p.inner(&x, &x).re);
}

#[test]
fn real_states_see_the_same_form_through_the_transpose() {
    let p = pair(16, 1.0);
    let kt = assemble_adjoint(&p);
    let x: Vec<C64> = p.random_reduced(5, false);
    let a = dot(&p.k.matvec(&x), &x).re;
    let b = dot(&kt.matvec(&x), &x).re;
    assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
}

#[test]
fn dissipation_identity_on_real_states() {
    let p = pair(16, 2.0);
    for seed in 0..10 {
        let x = p.random_reduced(seed, false);
        let re = dot(&p.k.matvec(&x), &x).re;
        let d = p.dissipation_reduced(&x);
        assert!((re + d).abs() <= 1e-12 * d, "seed {seed}: {re} vs {d}");
    }
}

#[test]
fn adjoint_identity() {
    // (G⁻¹K x, y)_G = (x, G⁻¹Kᵀ y)_G, i.e. yᴴ K x = (Kᵀ y)ᴴ x
    let p = pair(16, 1.0);
    let kt = assemble_adjoint(&p);
    for seed in 0..5 {
        let x = p.random_reduced(2 * seed, true);
        let y = p.random_reduced(2 * seed + 1, true);
        let lhs = dot(&p.k.matvec(&x), &y);
        let rhs = dot(&x, &kt.matvec(&y));
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }
}

#[test]
fn generator_is_linear() {
    let p = pair(8, 0.5);
    let a = C64::new(0.3, -1.1);
    let b = C64::new(-2.0, 0.5);
    let f = p.extend(&p.random_reduced(1, true));
    let g = p.extend(&p.random_reduced(2, true));
    let lhs = apply_generator(&p, &f.scaled(a).axpy(b, &g)).unwrap();
    let rhs = apply_generator(&p, &f).unwrap().scaled(a).axpy(b, &apply_generator(&p, &g).unwrap());
    let d = p.restrict(&lhs.axpy(-ONE, &rhs)).unwrap();
    assert!(p.norm(&d) < 1e-10 * p.norm(&p.restrict(&lhs).unwrap()));
}

#[test]
fn unit_pressure_is_steady_for_every_amplitude() {
    for s in [0.0, 0.5, 2.0] {
        let p = pair(8, s);
        let phi0 = p.null_reduced();
        let kx = p.k.matvec(phi0);
        assert!(kx.iter().all(|v| v.norm() < 1e-9), "amplitude {s}");
        assert_eq!(phi0[0], ONE);
        assert_ne!(phi0.iter().filter(|v| **v != ZERO).count(), 0);
    }
}

#[test]
fn convection_blocks_are_skew() {
    let p = pair(16, 1.5);
    for c in [&p.convection, &p.pressure_convection] {
        let worst = c.iter().map(|(r, col, v)| (v + c.get(col, r)).abs()).fold(0.0, f64::max);
        assert!(worst == 0.0, "{worst}");
        assert!(c.nnz() > 0);
    }
}

#[test]
fn adjoint_dissipation_on_complex_states() {
    let p = pair(16, 1.0);
    let kt = assemble_adjoint(&p);
    for seed in 0..5 {
        let x = p.random_reduced(seed, true);
        let re = dot(&kt.matvec(&x), &x).re;
        let d = p.dissipation_reduced(&x);
        assert!((re + d).abs() <= 1e-12 * d, "seed {seed}");
    }
}
