use fsi_core::linalg::*;

fn sample() -> CsrMatrix {
    CsrMatrix::from_triplets(
        3,
        3,
        &[
            (0, 0, 4.0),
            (0, 1, -1.0),
            (1, 0, -1.0),
            (1, 1, 4.0),
            (1, 2, -1.0),
            (2, 1, -2.0),
            (2, 2, 4.0),
            (2, 2, 1.0),
        ],
    )
}

#[test]
fn duplicates_are_summed() {
    let a = sample();
    assert_eq!(a.get(2, 2), 5.0);
    assert_eq!(a.nnz(), 7);
    assert_eq!(a.get(0, 2), 0.0);
}

#[test]
fn transpose_matvec_agrees() {
    let a = sample();
    let x = vec![C64::new(1.0, 2.0), C64::new(-1.0, 0.5), C64::new(0.3, 0.0)];
    let y1 = a.transpose().matvec(&x);
    let y2 = a.matvec_transpose(&x);
    assert!(norm2(&sub(&y1, &y2)) < 1e-14);
}

#[test]
fn lu_and_adjoint_solves() {
    let a = sample();
    let id = CsrMatrix::identity(3);
    let z = C64::new(0.0, 2.0);
    let f = Factorization::new(ONE, &a, z, &id).unwrap();
    let b = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(2.0, -1.0)];
    let x = f.solve(&b).unwrap();
    let ax: Vec<C64> = add(&a.matvec(&x), &x.iter().map(|v| v * z).collect::<Vec<_>>());
    assert!(norm2(&sub(&ax, &b)) < 1e-13);

    let y = f.solve_adjoint(&b).unwrap();
    let aty: Vec<C64> = add(
        &a.matvec_transpose(&y),
        &y.iter().map(|v| v * z.conj()).collect::<Vec<_>>(),
    );
    assert!(norm2(&sub(&aty, &b)) < 1e-13);
}

#[test]
fn pinned_solve_handles_singular_laplacian() {
    // 1D Neumann Laplacian: null vector (1,1,1) on both sides.
    let l = CsrMatrix::from_triplets(
        3,
        3,
        &[
            (0, 0, 1.0),
            (0, 1, -1.0),
            (1, 0, -1.0),
            (1, 1, 2.0),
            (1, 2, -1.0),
            (2, 1, -1.0),
            (2, 2, 1.0),
        ],
    );
    let zero = CsrMatrix::from_triplets(3, 3, &[]);
    let f = Factorization::new_pinned(ONE, &l, ZERO, &zero, 0).unwrap();
    let b = real_to_complex(&[1.0, 0.0, -1.0]);
    let x = f.solve(&b).unwrap();
    assert!(norm2(&sub(&l.matvec(&x), &b)) < 1e-13);
    assert_eq!(x[0], ZERO);
}
