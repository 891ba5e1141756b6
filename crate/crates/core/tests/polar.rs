use ossfield::matlin::mat_power;
use ossfield::polar::{e_norm, polar_compose, polar_decompose, BaseNorm, PolarConfig};
use ossfield::SquareMatrix;

fn configs() -> Vec<PolarConfig> {
    let jordan = SquareMatrix::from_row_slice(2, &[1.0, 0.5, 0.0, 1.0]).unwrap();
    let mut out = Vec::new();
    for norm in [BaseNorm::Euclidean, BaseNorm::Max, BaseNorm::One] {
        out.push(
            PolarConfig::new(jordan.clone())
                .unwrap()
                .with_base_norm(norm),
        );
        out.push(
            PolarConfig::new(SquareMatrix::diag(&[0.5, 1.5]))
                .unwrap()
                .with_base_norm(norm),
        );
    }
    out
}

#[test]
fn homogeneity_for_every_base_norm() {
    let x = [0.8, -2.1];
    for cfg in configs() {
        let tau = polar_decompose(&x, &cfg).unwrap().radial;
        for c in [0.02, 0.7, 5.0, 80.0] {
            let y = mat_power(&cfg.exponent, c).unwrap().apply(&x).unwrap();
            let t = polar_decompose(&y, &cfg).unwrap().radial;
            assert!(
                (t - c * tau).abs() <= 1e-8 * c * tau,
                "{:?}: {t} vs {}",
                cfg.base_norm,
                c * tau
            );
        }
    }
}

#[test]
fn direction_lies_on_the_unit_sphere() {
    for cfg in configs() {
        for x in [[3.0, 0.1], [-0.01, 0.02], [400.0, -250.0]] {
            let p = polar_decompose(&x, &cfg).unwrap();
            assert!((e_norm(&p.directional, &cfg).unwrap() - 1.0).abs() < 1e-9);
            let back = polar_compose(p.radial, &p.directional, &cfg).unwrap();
            let err = ((back[0] - x[0]).powi(2) + (back[1] - x[1]).powi(2)).sqrt();
            assert!(err <= 1e-9 * (x[0].hypot(x[1])));
        }
    }
}
