mod common;

use common::exact_jordan::*;
use common::jordan_cases::{cases, check_case};

#[test]
fn float_decomposition_matches_exact_oracle() {
    let all = cases();
    assert_eq!(all.len(), 10);
    for case in &all {
        check_case(case).unwrap();
    }
}

#[test]
fn oracle_char_poly_of_rotation() {
    let a = QMat::from_ints(2, &[0, 1, -1, 0]);
    assert_eq!(char_poly(&a), Poly(vec![q(1, 1), q(0, 1), q(1, 1)]));
    assert_eq!(semisimple_part(&a), a);
}
