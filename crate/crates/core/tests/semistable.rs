use ossfield::semistable::{
    lattice_index, lattice_scaling_check, linspace, oss_failure_witness, scaling_deviation,
    SemistableSpec,
};

#[test]
fn every_lattice_power_scales() {
    let s = SemistableSpec::default();
    let grid = linspace(-5.0, 5.0, 41);
    for k in -3i32..=3 {
        let c = s.c0.powi(k);
        assert_eq!(lattice_index(&s, c), Some(k));
        let r = scaling_deviation(&s, c, &grid).unwrap();
        assert!(
            r.rows
                .iter()
                .all(|x| x.residual <= x.truncation_bound + x.rounding_bound),
            "k = {k}"
        );
    }
}

#[test]
fn witnesses_off_lattice_scales() {
    let s = SemistableSpec::new(3.0, 1.7, 60).unwrap();
    assert!(lattice_scaling_check(&s, &linspace(-8.0, 8.0, 81), 0.0).passed);
    for c in [1.2, 1.5, 2.5] {
        let w = oss_failure_witness(&s, c, &linspace(0.1, 10.0, 101)).unwrap();
        assert!(w.certified_ratio > 10.0, "c = {c}: {}", w.certified_ratio);
    }
}
