use fsi_core::grid::*;

fn unit(nx: usize, ny: usize) -> Grid {
    build_grid(GeometryConfig::new(1.0, 1.0, nx, ny)).unwrap()
}

#[test]
fn counts_on_unit_square() {
    let g = unit(4, 4);
    assert_eq!(g.n_nodes(), 25);
    assert_eq!(g.n_cells(), 16);
    assert_eq!(g.top_edge_nodes().len(), 5);
    // Corners of the top edge are wall nodes.
    assert_eq!(g.omega_nodes().len(), 3);
}

#[test]
fn omega_normal_is_vertical() {
    let g = unit(4, 4);
    for n in g.omega_nodes() {
        let b = g.boundary_node(n).unwrap();
        assert_eq!(b.tag, BoundaryTag::Omega);
        assert_eq!(b.normal, [0.0, 1.0]);
        assert_eq!(b.tangent, [1.0, 0.0]);
    }
}

#[test]
fn perimeter_node_count() {
    let g = build_grid(GeometryConfig::new(2.0, 1.0, 8, 4)).unwrap();
    assert_eq!(g.boundary().len(), 24);
    assert_eq!(g.n_nodes(), 45);
}

#[test]
fn corners_belong_to_wall() {
    let g = unit(4, 4);
    for (i, j) in [(0, 0), (4, 0), (4, 4), (0, 4)] {
        let b = g.boundary_node(g.node_id(i, j)).unwrap();
        assert_eq!(b.tag, BoundaryTag::Wall);
        assert!(matches!(b.side, Side::Left | Side::Right));
    }
    let tl = g.boundary_node(g.node_id(0, 4)).unwrap();
    assert_eq!(tl.tangent, [0.0, 1.0]);
}

#[test]
fn tangents_unit_and_orthogonal() {
    let g = build_grid(GeometryConfig::new(2.0, 0.5, 6, 4)).unwrap();
    for (node, t) in boundary_tangential_basis(&g) {
        let n = g.boundary_node(node).unwrap().normal;
        assert!(((t[0] * t[0] + t[1] * t[1]).sqrt() - 1.0).abs() < 1e-15);
        assert_eq!(t[0] * n[0] + t[1] * n[1], 0.0);
    }
    let left = g.boundary_node(g.node_id(0, 2)).unwrap();
    assert_eq!(left.tangent, [0.0, 1.0]);
}

#[test]
fn rejects_bad_configs() {
    assert!(build_grid(GeometryConfig::new(0.0, 1.0, 4, 4)).is_err());
    assert!(build_grid(GeometryConfig::new(1.0, -1.0, 4, 4)).is_err());
    assert!(build_grid(GeometryConfig::new(1.0, 1.0, 3, 4)).is_err());
    assert!(build_grid(GeometryConfig::new(1.0, 1.0, 4, 2)).is_err());
    assert!(build_grid(GeometryConfig::new(1.0, 1.0, 6, 5)).is_err());
}

#[test]
fn refinement_nests_nodes_exactly() {
    let coarse = build_grid(GeometryConfig::new(1.3, 0.7, 10, 6)).unwrap();
    let fine = build_grid(coarse.config.refined(1)).unwrap();
    for j in 0..=6 {
        for i in 0..=10 {
            assert_eq!(
                coarse.coords()[coarse.node_id(i, j)],
                fine.coords()[fine.node_id(2 * i, 2 * j)]
            );
        }
    }
}

#[test]
fn macro_cells_tile_the_grid() {
    let g = build_grid(GeometryConfig::new(1.0, 2.0, 6, 4)).unwrap();
    let pg = g.pressure_grid();
    assert_eq!(pg.n_nodes(), g.n_pressure());
    assert_eq!(pg.n_cells() * 4, g.n_cells());
    for c in 0..g.n_cells() {
        let (mc, [ox, oy]) = g.macro_cell(c);
        let [x0, y0] = pg.cell_origin(mc);
        let [fx, fy] = g.cell_origin(c);
        assert!((x0 + ox as f64 * g.hx - fx).abs() < 1e-14);
        assert!((y0 + oy as f64 * g.hy - fy).abs() < 1e-14);
    }
}

#[test]
fn gauss_rule_integrates_quintics() {
    let q = Quadrature::gauss(3);
    for k in 0..=5 {
        let approx: f64 = q.points.iter().zip(&q.weights).map(|(x, w)| w * x.powi(k)).sum();
        assert!((approx - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "degree {k}");
    }
}
