use ossfield::exponents::{
    admissibility_check, exponent_family, haar_commuting_exponent, opposite_sign_check,
    set_difference_check, GroupSpec, HaarConfig, Side,
};
use ossfield::matlin::commutator;
use ossfield::SquareMatrix;

#[test]
fn haar_over_so3_commutes() {
    let h =
        SquareMatrix::from_row_slice(3, &[1.0, 0.4, 0.0, -0.2, 0.8, 0.3, 0.1, 0.0, 1.5]).unwrap();
    let g: GroupSpec = "SO(3)".parse().unwrap();
    let avg = haar_commuting_exponent(&h, &g, &HaarConfig::default()).unwrap();
    // the symmetric part averages to (tr H / 3) I
    let sym = &(&avg.exponent + &avg.exponent.transpose()) * 0.5;
    assert!(
        sym.dist(&SquareMatrix::scalar(3, h.trace() / 3.0)) < 1e-3,
        "{sym}"
    );
    for a in g.samples(16, 3) {
        assert!(commutator(&avg.exponent, &a).unwrap().norm() < 1e-2);
    }
}

#[test]
fn finite_group_average_is_exact() {
    let swap = SquareMatrix::from_row_slice(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
    let g = GroupSpec::finite(vec![swap.clone()]).unwrap();
    let h = SquareMatrix::from_row_slice(2, &[1.0, 2.0, 0.0, 3.0]).unwrap();
    let avg = haar_commuting_exponent(&h, &g, &HaarConfig::default()).unwrap();
    let want = SquareMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
    assert!(avg.exponent.dist(&want) < 1e-14);
}

#[test]
fn families_from_o2_and_so2_coincide() {
    let base = SquareMatrix::scalar(2, 0.5);
    let a = exponent_family(&base, &GroupSpec::orthogonal(2).unwrap(), Side::Range).unwrap();
    let b = exponent_family(
        &base,
        &GroupSpec::special_orthogonal(2).unwrap(),
        Side::Range,
    )
    .unwrap();
    let t = exponent_family(&base, &GroupSpec::trivial(2).unwrap(), Side::Range).unwrap();
    assert!(set_difference_check(&a, &b, 1e-10).unwrap());
    assert!(!set_difference_check(&a, &t, 1e-10).unwrap());
}

#[test]
fn admissibility_and_opposite_signs() {
    let rot = SquareMatrix::rotation_generator();
    assert!(admissibility_check(&rot, 1e-7).unwrap().admissible);
    let jordan_zero = SquareMatrix::from_row_slice(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
    assert!(!admissibility_check(&jordan_zero, 1e-7).unwrap().admissible);
    let e = SquareMatrix::identity(2);
    assert!(!opposite_sign_check(&e, &SquareMatrix::scalar(2, -0.5), 1e-9).unwrap());
    assert!(opposite_sign_check(&e, &SquareMatrix::scalar(2, 0.5), 1e-9).unwrap());
}
