use fsi_core::output::*;
use fsi_core::linalg::CsrMatrix;

#[test]
fn seventeen_digits_round_trip() {
    for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
        let s = fmt_f64(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }
}

#[test]
fn matrix_market_round_trip() {
    let a = CsrMatrix::from_triplets(3, 2, &[(0, 1, 0.1), (2, 0, -7.0), (1, 1, 1e-17)]);
    let back = parse_matrix_market(&matrix_market_string(&a)).unwrap();
    assert_eq!(a, back);
}

#[test]
fn matrix_market_symmetric_expands() {
    let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 2.0\n2 1 -1.0\n";
    let a = parse_matrix_market(text).unwrap();
    assert_eq!(a.get(0, 1), -1.0);
    assert_eq!(a.get(1, 0), -1.0);
}

#[test]
fn rejects_garbage() {
    assert!(parse_matrix_market("").is_err());
    assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n").is_err());
    assert!(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n").is_err());
}

#[test]
fn sha_of_empty() {
    assert_eq!(
        sha256_hex(b""),
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
}
