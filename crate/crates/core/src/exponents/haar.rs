use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::group::{haar_orthogonal, GroupKind, GroupSpec};
use crate::error::{check_dim, Result};
use crate::matlin::SquareMatrix;

/// Node counts for Haar integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaarConfig {
    /// Trapezoid nodes on the circle for `SO(2)`.
    pub circle_nodes: usize,
    /// Quasi-random (`n = 3`) or Monte Carlo (`n >= 4`) sample count.
    pub samples: usize,
    pub seed: u64,
}

impl Default for HaarConfig {
    fn default() -> Self {
        HaarConfig {
            circle_nodes: 512,
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaarAverage {
    pub exponent: SquareMatrix,
    /// Estimated Frobenius error of the average; `0` for exact rules.
    pub error_estimate: f64,
    pub nodes: usize,
    pub method: &'static str,
}

const CHUNK: usize = 4096;

/// Mean of `f(0..count)` and its standard error, summed in fixed chunks so
/// the result does not depend on the thread count.
fn chunked_mean<F>(n: usize, count: usize, f: F) -> (DMatrix<f64>, f64)
where
    F: Fn(usize) -> DMatrix<f64> + Sync,
{
    let chunks: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut s = DMatrix::zeros(n, n);
            let mut s2 = DMatrix::zeros(n, n);
            for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                let v = f(i);
                s2 += v.component_mul(&v);
                s += v;
            }
            (s, s2)
        })
        .collect();
    let mut sum = DMatrix::zeros(n, n);
    let mut sum2 = DMatrix::zeros(n, n);
    for (s, s2) in chunks {
        sum += s;
        sum2 += s2;
    }
    let k = count as f64;
    let mean = sum / k;
    let var = (sum2 / k - mean.component_mul(&mean))
        .map(|v| v.max(0.0))
        .sum();
    (mean, (var / k).sqrt())
}

fn conj_orth(a: &DMatrix<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    a * h * a.transpose()
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Rotation from three uniforms via a uniformly distributed unit quaternion.
fn shoemake(u1: f64, u2: f64, u3: f64) -> DMatrix<f64> {
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (x, y, z, w) = (
        a * (2.0 * PI * u2).sin(),
        a * (2.0 * PI * u2).cos(),
        b * (2.0 * PI * u3).sin(),
        b * (2.0 * PI * u3).cos(),
    );
    DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    )
}

/// `H0 = int A H A^{-1} dA` over the normalized Haar measure of `g`.
///
/// `SO(2)` uses the periodic trapezoid rule, exact for the degree-2
/// trigonometric integrand; `O(2)` adds the reflection coset with weight 1/2.
/// Dimension 3 uses Halton points mapped to rotations, dimension >= 4 seeded
/// Monte Carlo; both report a standard-error estimate. Finite groups are
/// averaged over all elements.
pub fn haar_commuting_exponent(
    h: &SquareMatrix,
    g: &GroupSpec,
    cfg: &HaarConfig,
) -> Result<HaarAverage> {
    let n = g.dim();
    check_dim(n, h.dim())?;
    let hm = h.as_matrix();
    let with_reflections = |avg: DMatrix<f64>| -> DMatrix<f64> {
        let mut f = DMatrix::identity(n, n);
        f[(n - 1, n - 1)] = -1.0;
        (&avg + conj_orth(&f, &avg)) * 0.5
    };
    let (m, err, nodes, method) = match g.kind() {
        GroupKind::Trivial(_) => (hm.clone(), 0.0, 1, "identity"),
        GroupKind::Finite(el) => {
            let mut acc = DMatrix::zeros(n, n);
            for a in el {
                acc += a.conjugate(h)?.as_matrix();
            }
            (acc / el.len() as f64, 0.0, el.len(), "finite group average")
        }
        GroupKind::SpecialOrthogonal(1) => (hm.clone(), 0.0, 1, "identity"),
        GroupKind::Orthogonal(1) => (hm.clone(), 0.0, 2, "finite group average"),
        GroupKind::SpecialOrthogonal(2) | GroupKind::Orthogonal(2) => {
            let k = cfg.circle_nodes.max(4);
            let rot = |i: usize| {
                let r = SquareMatrix::rotation(2.0 * PI * i as f64 / k as f64);
                conj_orth(r.as_matrix(), hm)
            };
            let mut avg = DMatrix::zeros(2, 2);
            for i in 0..k {
                avg += rot(i);
            }
            avg /= k as f64;
            // halving the node count must not change an exact rule
            let mut coarse = DMatrix::zeros(2, 2);
            for i in (0..k).step_by(2) {
                coarse += rot(i);
            }
            coarse /= k.div_ceil(2) as f64;
            let err = (&avg - coarse).norm();
            if matches!(g.kind(), GroupKind::Orthogonal(_)) {
                (
                    with_reflections(avg),
                    err,
                    2 * k,
                    "trapezoid on SO(2) plus reflection coset",
                )
            } else {
                (avg, err, k, "trapezoid on SO(2)")
            }
        }
        GroupKind::SpecialOrthogonal(3) | GroupKind::Orthogonal(3) => {
            let count = cfg.samples.max(1);
            let (avg, se) = chunked_mean(3, count, |i| {
                let i = i as u64 + 1;
                conj_orth(&shoemake(halton(i, 2), halton(i, 3), halton(i, 5)), hm)
            });
            if matches!(g.kind(), GroupKind::Orthogonal(_)) {
                (
                    with_reflections(avg),
                    se,
                    2 * count,
                    "Halton rotations plus reflection coset",
                )
            } else {
                (avg, se, count, "Halton rotations")
            }
        }
        GroupKind::SpecialOrthogonal(_) | GroupKind::Orthogonal(_) => {
            let special = matches!(g.kind(), GroupKind::SpecialOrthogonal(_));
            let count = cfg.samples.max(2);
            let (avg, se) = chunked_mean(n, count, |i| {
                let a = haar_orthogonal(n, cfg.seed, i as u64, special || i % 2 == 0);
                conj_orth(a.as_matrix(), hm)
            });
            (avg, se, count, "Monte Carlo")
        }
    };
    Ok(HaarAverage {
        exponent: SquareMatrix::new(m)?,
        error_estimate: err,
        nodes,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::commutator;

    fn h() -> SquareMatrix {
        SquareMatrix::from_row_slice(2, &[1.0, 5.0, 0.0, 2.0]).unwrap()
    }

    #[test]
    fn o2_average_is_scalar() {
        let g = GroupSpec::orthogonal(2).unwrap();
        let r = haar_commuting_exponent(&h(), &g, &HaarConfig::default()).unwrap();
        assert!(r.exponent.dist(&SquareMatrix::scalar(2, 1.5)) < 1e-13);
        assert!(r.error_estimate < 1e-13);
    }

    #[test]
    fn so2_keeps_the_skew_part() {
        let g = GroupSpec::special_orthogonal(2).unwrap();
        let r = haar_commuting_exponent(&h(), &g, &HaarConfig::default()).unwrap();
        let hm = h();
        let skew = &(&hm - &hm.transpose()) * 0.5;
        let expected = &SquareMatrix::scalar(2, 1.5) + &skew;
        assert!(r.exponent.dist(&expected) < 1e-13);
    }

    #[test]
    fn scalar_input_is_fixed() {
        let cfg = HaarConfig {
            samples: 2000,
            ..HaarConfig::default()
        };
        for g in ["O2", "SO3", "O4", "trivial3"] {
            let g: GroupSpec = g.parse().unwrap();
            let s = SquareMatrix::scalar(g.dim(), 0.7);
            let r = haar_commuting_exponent(&s, &g, &cfg).unwrap();
            assert!(r.exponent.dist(&s) < 1e-12, "{g}");
        }
    }

    #[test]
    fn so3_quasi_random_average() {
        let h = SquareMatrix::from_row_slice(3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.2, 0.0, 1.5])
            .unwrap();
        let g = GroupSpec::special_orthogonal(3).unwrap();
        let r = haar_commuting_exponent(&h, &g, &HaarConfig::default()).unwrap();
        // SO(3) acts irreducibly on both skew and traceless symmetric matrices
        let expected = SquareMatrix::scalar(3, h.trace() / 3.0);
        assert!(
            r.exponent.dist(&expected) < 1e-3,
            "{}",
            r.exponent.dist(&expected)
        );
        assert!((r.exponent.trace() - h.trace()).abs() < 1e-10);
        assert!(r.error_estimate > 0.0 && r.error_estimate < 0.05);
    }

    #[test]
    fn finite_average_commutes() {
        let g = GroupSpec::finite(vec![SquareMatrix::rotation(PI / 2.0)]).unwrap();
        let r = haar_commuting_exponent(&h(), &g, &HaarConfig::default()).unwrap();
        for a in g.samples(0, 0) {
            assert!(commutator(&r.exponent, &a).unwrap().norm() < 1e-13);
        }
    }

    #[test]
    fn deterministic_monte_carlo() {
        let g = GroupSpec::orthogonal(4).unwrap();
        let h = SquareMatrix::from_row_slice(4, &(0..16).map(|i| i as f64).collect::<Vec<_>>())
            .unwrap();
        let cfg = HaarConfig {
            samples: 5000,
            seed: 11,
            ..HaarConfig::default()
        };
        let a = haar_commuting_exponent(&h, &g, &cfg).unwrap();
        let b = haar_commuting_exponent(&h, &g, &cfg).unwrap();
        assert_eq!(a, b);
        assert!((a.exponent.trace() - h.trace()).abs() < 1e-9);
    }
}
