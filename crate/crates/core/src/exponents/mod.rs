//! Exponent sets of operator self-similar fields.
//!
//! If `H` is a range exponent and `G` the range symmetry group, the full set
//! of range exponents is `H + T(G)`; domain exponents behave the same way
//! with the domain symmetry group. Members share the real spectrum and the
//! nilpotent part. Averaging `A H A^{-1}` over the Haar measure of `G` gives
//! an exponent that commutes with every symmetry.

mod group;
mod haar;

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::matlin::{
    cluster_eigenvalues, commutator, eigenvalues, expm, sn_decompose, spectral_split, spectrum,
    SpectralSplit, SquareMatrix, DEFAULT_CLUSTER_RTOL, DEFAULT_ZERO_BAND,
};

pub use group::{tangent_basis, GroupKind, GroupSpec};
pub use haar::{haar_commuting_exponent, HaarAverage, HaarConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Range,
    Domain,
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "range" | "ran" => Ok(Side::Range),
            "domain" | "dom" => Ok(Side::Domain),
            _ => Err(Error::Parse(format!(
                "side must be 'range' or 'domain', got {s:?}"
            ))),
        }
    }
}

/// `base + span(tangent_basis)`, together with symmetries the nilpotent part
/// is expected to commute with.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFamily {
    pub base: SquareMatrix,
    pub tangent_basis: Vec<SquareMatrix>,
    pub side: Side,
    pub symmetries: Vec<SquareMatrix>,
}

impl ExponentFamily {
    /// Family with an explicit tangent basis. Domain bases must be
    /// positive-stable, range bases admissible.
    pub fn with_basis(
        base: SquareMatrix,
        tangent_basis: Vec<SquareMatrix>,
        side: Side,
        symmetries: Vec<SquareMatrix>,
    ) -> Result<Self> {
        let n = base.dim();
        for m in tangent_basis.iter().chain(&symmetries) {
            check_dim(n, m.dim())?;
        }
        match side {
            Side::Domain => {
                let sp = spectrum(&base)?;
                if !sp.all_positive {
                    return Err(Error::Domain(format!(
                        "domain exponent must be positive-stable (min real part {:.6e})",
                        sp.min_real_part
                    )));
                }
            }
            Side::Range => {
                let adm = admissibility_check(&base, DEFAULT_ZERO_BAND)?;
                if !adm.admissible {
                    return Err(Error::Domain(format!(
                        "inadmissible range exponent: {}",
                        adm.reasons.join("; ")
                    )));
                }
            }
        }
        Ok(ExponentFamily {
            base,
            tangent_basis,
            side,
            symmetries,
        })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `base + sum_i coeffs[i] T_i`.
    pub fn member(&self, coeffs: &[f64]) -> Result<SquareMatrix> {
        check_dim(self.tangent_basis.len(), coeffs.len())?;
        let mut m = self.base.clone();
        for (c, t) in coeffs.iter().zip(&self.tangent_basis) {
            m = &m + &(t * *c);
        }
        Ok(m)
    }

    /// The family in the frame `x -> Q x`: every matrix `M` becomes `Q M Q^{-1}`.
    pub fn conjugated(&self, q: &SquareMatrix) -> Result<Self> {
        check_dim(self.dim(), q.dim())?;
        let conj =
            |v: &[SquareMatrix]| v.iter().map(|m| q.conjugate(m)).collect::<Result<Vec<_>>>();
        ExponentFamily::with_basis(
            q.conjugate(&self.base)?,
            conj(&self.tangent_basis)?,
            self.side,
            conj(&self.symmetries)?,
        )
    }
}

/// `base + T(g)`; the group's sample elements serve as symmetries.
pub fn exponent_family(base: &SquareMatrix, g: &GroupSpec, side: Side) -> Result<ExponentFamily> {
    check_dim(g.dim(), base.dim())?;
    ExponentFamily::with_basis(base.clone(), tangent_basis(g), side, g.samples(16, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub members_checked: usize,
    pub max_spectrum_deviation: f64,
    pub max_nilpotent_deviation: f64,
    pub max_commutator: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Real parts of the eigenvalues of the semisimple part, ascending. These are
/// the real spectrum of `m` without the `eps^{1/k}` spread of defective
/// eigenvalues.
fn stable_real_spectrum(semisimple: &SquareMatrix) -> Result<Vec<f64>> {
    let mut re: Vec<f64> = eigenvalues(semisimple)?.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    Ok(re)
}

/// Samples `samples` members with coefficients uniform in `[-2, 2]` and
/// compares real spectrum and nilpotent part with the base; the nilpotent
/// part must also commute with the family's symmetries and with
/// `exp(t T_i)`.
pub fn family_invariants_check(
    fam: &ExponentFamily,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<FamilyReport> {
    let base_sn = sn_decompose(&fam.base, 0.0)?;
    let base_re = stable_real_spectrum(&base_sn.semisimple)?;
    let mut symmetries = fam.symmetries.clone();
    for t in &fam.tangent_basis {
        for s in [0.3, 1.1, 2.5] {
            symmetries.push(expm(&(t * s)));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = FamilyReport {
        members_checked: 0,
        max_spectrum_deviation: 0.0,
        max_nilpotent_deviation: 0.0,
        max_commutator: 0.0,
        tolerance: tol,
        passed: true,
        failures: Vec::new(),
    };
    let count = if fam.tangent_basis.is_empty() {
        1
    } else {
        samples
    };
    for k in 0..count {
        let coeffs: Vec<f64> = (0..fam.tangent_basis.len())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let member = fam.member(&coeffs)?;
        report.members_checked += 1;
        let sn = match sn_decompose(&member, 0.0) {
            Ok(sn) => sn,
            Err(e) => {
                report.failures.push(format!("member {k}: {e}"));
                continue;
            }
        };
        let re = stable_real_spectrum(&sn.semisimple)?;
        let dev = re
            .iter()
            .zip(&base_re)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.max_spectrum_deviation = report.max_spectrum_deviation.max(dev);
        if dev > tol {
            report.failures.push(format!(
                "member {k}: real spectrum {re:?} differs from {base_re:?}"
            ));
        }
        let ndev = sn.nilpotent.dist(&base_sn.nilpotent);
        report.max_nilpotent_deviation = report.max_nilpotent_deviation.max(ndev);
        if ndev > tol {
            report
                .failures
                .push(format!("member {k}: nilpotent part differs by {ndev:.3e}"));
        }
        for a in &symmetries {
            let c = commutator(&sn.nilpotent, a)?.norm();
            report.max_commutator = report.max_commutator.max(c);
        }
    }
    if report.max_commutator > tol {
        report.failures.push(format!(
            "nilpotent part fails to commute with a symmetry ({:.3e})",
            report.max_commutator
        ));
    }
    report.passed = report.failures.is_empty();
    Ok(report)
}

/// Orthonormal basis (columns) of the span of matrices viewed in `R^{n^2}`.
fn orthonormal_span(basis: &[SquareMatrix], n: usize) -> DMatrix<f64> {
    if basis.is_empty() {
        return DMatrix::zeros(n * n, 0);
    }
    let a = DMatrix::from_columns(
        &basis
            .iter()
            .map(|m| DVector::from_vec(m.to_row_major()))
            .collect::<Vec<_>>(),
    );
    let svd = a.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * smax)
        .collect();
    DMatrix::from_columns(
        &keep
            .iter()
            .map(|&i| u.column(i).into_owned())
            .collect::<Vec<_>>(),
    )
}

/// Largest relative residual of projecting each element of `basis` onto the
/// orthonormal columns `q`.
fn projection_residual(basis: &[SquareMatrix], q: &DMatrix<f64>) -> f64 {
    basis
        .iter()
        .map(|m| {
            let v = DVector::from_vec(m.to_row_major());
            let norm = v.norm();
            if norm == 0.0 {
                return 0.0;
            }
            let proj = q * (q.transpose() * &v);
            (v - proj).norm() / norm
        })
        .fold(0.0, f64::max)
}

/// Whether two families have the same tangent span, so that their exponent
/// sets differ from their bases by the same set.
pub fn set_difference_check(f1: &ExponentFamily, f2: &ExponentFamily, tol: f64) -> Result<bool> {
    check_dim(f1.dim(), f2.dim())?;
    if f1.side != f2.side {
        return Err(Error::Validation(
            "families must be on the same side to compare".into(),
        ));
    }
    let n = f1.dim();
    let q1 = orthonormal_span(&f1.tangent_basis, n);
    let q2 = orthonormal_span(&f2.tangent_basis, n);
    if q1.ncols() != q2.ncols() {
        return Ok(false);
    }
    let r = projection_residual(&f1.tangent_basis, &q2)
        .max(projection_residual(&f2.tangent_basis, &q1));
    Ok(r <= tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub min_real_part: f64,
    pub reasons: Vec<String>,
}

/// Numerical rank of a complex matrix at threshold `thresh`.
fn complex_rank(m: &DMatrix<Complex64>, thresh: f64) -> usize {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > thresh)
        .count()
}

/// Nonnegative real parts, and every eigenvalue with `|Re| <= tol` semisimple:
/// `rank(H - l I) = n - multiplicity(l)`.
pub fn admissibility_check(h: &SquareMatrix, tol: f64) -> Result<AdmissibilityReport> {
    let n = h.dim();
    let scale = h.norm().max(1.0);
    let ev = eigenvalues(h)?;
    let min_real_part = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let mut reasons = Vec::new();
    if min_real_part < -tol {
        reasons.push(format!(
            "eigenvalue with negative real part {min_real_part:.6e}"
        ));
    }
    let hc = h.to_complex();
    for cl in cluster_eigenvalues(&ev, DEFAULT_CLUSTER_RTOL * scale) {
        if cl.center.re.abs() > tol {
            continue;
        }
        let shifted = &hc - DMatrix::from_diagonal_element(n, n, cl.center);
        let rank = complex_rank(&shifted, 1e-6 * scale);
        if rank + cl.multiplicity != n {
            reasons.push(format!(
                "eigenvalue {:.6e}{:+.6e}i of multiplicity {} is not a simple root of the minimal polynomial (rank {rank})",
                cl.center.re, cl.center.im, cl.multiplicity
            ));
        }
    }
    Ok(AdmissibilityReport {
        admissible: reasons.is_empty(),
        min_real_part,
        reasons,
    })
}

/// False iff some eigenvalue real part of `e` and some of `h` have strictly
/// opposite signs beyond `tol`.
pub fn opposite_sign_check(e: &SquareMatrix, h: &SquareMatrix, tol: f64) -> Result<bool> {
    let re = spectrum(e)?.eigen_real_parts;
    let rh = spectrum(h)?.eigen_real_parts;
    let sign = |v: &[f64]| (v.iter().any(|&x| x > tol), v.iter().any(|&x| x < -tol));
    let (ep, en) = sign(&re);
    let (hp, hn) = sign(&rh);
    Ok(!((ep && hn) || (en && hp)))
}

/// Orthonormal right singular vectors of the `k` smallest singular values.
fn real_kernel(m: &DMatrix<f64>, k: usize) -> Vec<DVector<f64>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    idx.into_iter()
        .take(k)
        .map(|i| v_t.row(i).transpose())
        .collect()
}

/// Complex counterpart of [`real_kernel`].
fn complex_kernel(m: &DMatrix<Complex64>, k: usize) -> Vec<DVector<Complex64>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    idx.into_iter()
        .take(k)
        .map(|i| v_t.row(i).transpose().map(|z| z.conj()))
        .collect()
}

/// Covariance `Sigma = P P^T` of a Gaussian law invariant under `r^{H1}` for
/// all `r > 0`, where `H1 = P D P^{-1}` with `D` block diagonal of zeros and
/// `theta_j J` blocks.
pub fn invariant_gaussian(h1: &SquareMatrix) -> Result<SquareMatrix> {
    let n = h1.dim();
    let scale = h1.norm().max(1.0);
    let band = DEFAULT_ZERO_BAND * scale;
    let ev = eigenvalues(h1)?;
    if let Some(z) = ev.iter().find(|z| z.re.abs() > band) {
        return Err(Error::Domain(format!(
            "invariant law needs purely imaginary spectrum; found real part {:.6e}",
            z.re
        )));
    }
    let adm = admissibility_check(h1, band)?;
    if !adm.admissible {
        return Err(Error::Domain(format!(
            "exponent is not semisimple: {}",
            adm.reasons.join("; ")
        )));
    }
    let hc = h1.to_complex();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    for cl in cluster_eigenvalues(&ev, DEFAULT_CLUSTER_RTOL * scale) {
        let theta = cl.center.im;
        if theta < -band {
            continue; // taken care of by its conjugate
        }
        if theta.abs() <= band {
            cols.extend(real_kernel(h1.as_matrix(), cl.multiplicity));
            continue;
        }
        // H (b, a) = (b, a) theta J for a kernel vector v = a + i b, |v|^2 = 2
        let shifted = &hc - DMatrix::from_diagonal_element(n, n, Complex64::new(0.0, theta));
        for v in complex_kernel(&shifted, cl.multiplicity) {
            let v = v * Complex64::new(std::f64::consts::SQRT_2, 0.0);
            cols.push(v.map(|z| z.im));
            cols.push(v.map(|z| z.re));
        }
    }
    if cols.len() != n {
        return Err(Error::Conditioning(format!(
            "real canonical basis has {} columns, expected {n}",
            cols.len()
        )));
    }
    let p = SquareMatrix::new(DMatrix::from_columns(&cols))?;
    if p.inverse_condition() < 1e-10 {
        return Err(Error::Conditioning(
            "real canonical basis is numerically singular".into(),
        ));
    }
    let sigma = &p * &p.transpose();
    Ok(&(&sigma + &sigma.transpose()) * 0.5)
}

/// `H = P (H1 + H2) P^{-1}` with `H1` semisimple on the zero-real-part class
/// and `H2` positive-stable.
pub fn decompose_field_exponent(h: &SquareMatrix, tol: f64) -> Result<SpectralSplit> {
    let adm = admissibility_check(h, tol)?;
    if !adm.admissible {
        return Err(Error::Domain(format!(
            "inadmissible exponent: {}",
            adm.reasons.join("; ")
        )));
    }
    let split = spectral_split(h, tol)?;
    if let Some(h1) = &split.block_zero {
        let adm = admissibility_check(h1, tol)?;
        if !adm.admissible {
            return Err(Error::Conditioning(format!(
                "zero-class block is not semisimple: {}",
                adm.reasons.join("; ")
            )));
        }
    }
    if let Some(h2) = &split.block_positive {
        let sp = spectrum(h2)?;
        if !sp.all_positive {
            return Err(Error::Conditioning(format!(
                "positive-class block has min real part {:.6e}",
                sp.min_real_part
            )));
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::mat_power;

    fn j() -> SquareMatrix {
        SquareMatrix::rotation_generator()
    }

    fn q3() -> SquareMatrix {
        SquareMatrix::from_row_slice(3, &[1.0, 0.3, -0.2, 0.1, 1.2, 0.4, -0.5, 0.2, 0.9]).unwrap()
    }

    #[test]
    fn families_of_the_isotropic_example() {
        let o2 = GroupSpec::orthogonal(2).unwrap();
        let fam = exponent_family(&SquareMatrix::scalar(2, 0.5), &o2, Side::Range).unwrap();
        let m = fam.member(&[0.3]).unwrap();
        assert_eq!(m, &SquareMatrix::scalar(2, 0.5) + &(&j() * 0.3));
        let dom = exponent_family(&SquareMatrix::identity(2), &o2, Side::Domain).unwrap();
        assert_eq!(dom.tangent_basis, vec![j()]);
        let triv = exponent_family(&j(), &GroupSpec::trivial(2).unwrap(), Side::Range).unwrap();
        assert_eq!(triv.member(&[]).unwrap(), j());
        assert!(exponent_family(&j(), &o2, Side::Domain).is_err());
    }

    #[test]
    fn invariants_hold_on_rotation_family() {
        let o2 = GroupSpec::orthogonal(2).unwrap();
        let fam = exponent_family(&SquareMatrix::scalar(2, 0.5), &o2, Side::Range).unwrap();
        let r = family_invariants_check(&fam, 50, 1e-8, 1).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.members_checked, 50);
    }

    #[test]
    fn invariants_with_nilpotent_part() {
        // SO(2) acting diagonally on R^4 commutes with the shift N
        let jj = SquareMatrix::block_diag(&[&j(), &j()]);
        let mut n = SquareMatrix::zeros(4).into_matrix();
        n[(0, 2)] = 1.0;
        n[(1, 3)] = 1.0;
        let n = SquareMatrix::new(n).unwrap();
        let base = &SquareMatrix::scalar(4, 0.8) + &n;
        let fam = ExponentFamily::with_basis(base, vec![jj], Side::Domain, vec![]).unwrap();
        let r = family_invariants_check(&fam, 20, 1e-8, 3).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn corrupted_base_is_detected() {
        let o2 = GroupSpec::orthogonal(2).unwrap();
        let base = &SquareMatrix::scalar(2, 0.5) + &SquareMatrix::diag(&[0.1, 0.0]);
        let fam = exponent_family(&base, &o2, Side::Range).unwrap();
        let r = family_invariants_check(&fam, 20, 1e-8, 1).unwrap();
        assert!(!r.passed);
        assert!(r.max_spectrum_deviation > 1e-3);
        let empty = exponent_family(&base, &GroupSpec::trivial(2).unwrap(), Side::Range).unwrap();
        assert!(family_invariants_check(&empty, 20, 1e-8, 1).unwrap().passed);
    }

    #[test]
    fn tangent_span_comparison() {
        let o2 = GroupSpec::orthogonal(2).unwrap();
        let o3 = GroupSpec::orthogonal(3).unwrap();
        let a = exponent_family(&SquareMatrix::scalar(2, 0.5), &o2, Side::Range).unwrap();
        let b = exponent_family(&SquareMatrix::scalar(2, 0.9), &o2, Side::Range).unwrap();
        let t = exponent_family(
            &SquareMatrix::scalar(2, 0.5),
            &GroupSpec::trivial(2).unwrap(),
            Side::Range,
        )
        .unwrap();
        assert!(set_difference_check(&a, &b, 1e-10).unwrap());
        assert!(!set_difference_check(&a, &t, 1e-10).unwrap());

        let q = crate::exponents::group::haar_orthogonal(3, 5, 0, true);
        let f3 = exponent_family(&SquareMatrix::identity(3), &o3, Side::Domain).unwrap();
        let rotated = f3.conjugated(&q).unwrap();
        assert!(set_difference_check(&f3, &rotated, 1e-10).unwrap());
        let sheared = f3.conjugated(&q3()).unwrap();
        assert!(!set_difference_check(&f3, &sheared, 1e-6).unwrap());
    }

    #[test]
    fn admissibility_examples() {
        assert!(admissibility_check(&j(), 1e-9).unwrap().admissible);
        let nil = SquareMatrix::from_row_slice(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let r = admissibility_check(&nil, 1e-9).unwrap();
        assert!(!r.admissible);
        assert_eq!(r.reasons.len(), 1);
        assert!(
            admissibility_check(&SquareMatrix::scalar(2, 0.3), 1e-9)
                .unwrap()
                .admissible
        );
        assert!(
            !admissibility_check(&SquareMatrix::scalar(2, -0.3), 1e-9)
                .unwrap()
                .admissible
        );
        // conjugated double rotation: +-i each twice, semisimple
        let jj = SquareMatrix::block_diag(&[&j(), &j()]);
        let q = crate::exponents::group::haar_orthogonal(4, 2, 0, true);
        let m = &(&q * &jj) * &q.transpose();
        assert!(admissibility_check(&m, 1e-9).unwrap().admissible);
    }

    #[test]
    fn opposite_signs() {
        let i2 = SquareMatrix::identity(2);
        assert!(opposite_sign_check(&i2, &SquareMatrix::scalar(2, 0.5), 1e-9).unwrap());
        assert!(!opposite_sign_check(&i2, &SquareMatrix::scalar(2, -0.5), 1e-9).unwrap());
        let h = &SquareMatrix::scalar(2, 0.5) + &(&j() * 0.3);
        assert!(opposite_sign_check(&SquareMatrix::diag(&[1.0, 2.0]), &h, 1e-9).unwrap());
    }

    fn assert_invariant(h1: &SquareMatrix, sigma: &SquareMatrix) {
        for r in [0.01, 0.3, 2.0, 9.0, 100.0] {
            let a = mat_power(h1, r).unwrap();
            let moved = &(&a * sigma) * &a.transpose();
            assert!(moved.dist(sigma) <= 1e-8 * sigma.norm(), "r={r}");
        }
    }

    #[test]
    fn invariant_gaussian_examples() {
        let s = invariant_gaussian(&(&j() * 0.7)).unwrap();
        assert!(s.dist(&SquareMatrix::identity(2)) < 1e-12, "{s}");
        assert_eq!(
            invariant_gaussian(&SquareMatrix::zeros(1)).unwrap(),
            SquareMatrix::identity(1)
        );

        let q = SquareMatrix::from_row_slice(2, &[2.0, 1.0, 0.5, 1.5]).unwrap();
        let h1 = q.conjugate(&(&j() * 2.0)).unwrap();
        let sigma = invariant_gaussian(&h1).unwrap();
        assert_invariant(&h1, &sigma);
        // proportional to Q Q^T
        let qq = &q * &q.transpose();
        let ratio = sigma.get(0, 0) / qq.get(0, 0);
        assert!(sigma.dist(&(&qq * ratio)) < 1e-10 * sigma.norm());

        let mixed = q3()
            .conjugate(&SquareMatrix::block_diag(&[
                &(&j() * 1.3),
                &SquareMatrix::zeros(1),
            ]))
            .unwrap();
        assert_invariant(&mixed, &invariant_gaussian(&mixed).unwrap());

        assert!(matches!(
            invariant_gaussian(&SquareMatrix::identity(2)),
            Err(Error::Domain(_))
        ));
        let nil = SquareMatrix::from_row_slice(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(invariant_gaussian(&nil), Err(Error::Domain(_))));
    }

    #[test]
    fn field_exponent_decomposition() {
        let h = SquareMatrix::block_diag(&[&j(), &SquareMatrix::scalar(1, 0.7)]);
        let s = decompose_field_exponent(&h, DEFAULT_ZERO_BAND).unwrap();
        assert_eq!(s.dims, (2, 1));
        let h2 = s.block_positive.as_ref().unwrap();
        assert!((h2.get(0, 0) - 0.7).abs() < 1e-12);

        let pos = SquareMatrix::from_row_slice(2, &[1.0, 3.0, 0.0, 2.0]).unwrap();
        let s = decompose_field_exponent(&pos, DEFAULT_ZERO_BAND).unwrap();
        assert_eq!(s.dims, (0, 2));

        let inner = SquareMatrix::block_diag(&[&(&j() * 2.0), &SquareMatrix::diag(&[1.0, 3.0])]);
        let q = SquareMatrix::from_row_slice(
            4,
            &[
                1.0, 0.2, 0.0, -0.3, 0.1, 1.1, 0.4, 0.0, 0.0, -0.2, 0.9, 0.3, 0.5, 0.0, 0.1, 1.2,
            ],
        )
        .unwrap();
        let h = q.conjugate(&inner).unwrap();
        let s = decompose_field_exponent(&h, DEFAULT_ZERO_BAND).unwrap();
        assert_eq!(s.dims, (2, 2));
        assert!(s.reconstruct().unwrap().dist(&h) <= 1e-8 * h.norm());
        let z = spectrum(s.block_zero.as_ref().unwrap()).unwrap();
        assert!(z
            .eigen_values
            .iter()
            .all(|e| e.re.abs() < 1e-8 && (e.im.abs() - 2.0).abs() < 1e-8));
        let p = spectrum(s.block_positive.as_ref().unwrap()).unwrap();
        assert!(
            (p.eigen_real_parts[0] - 1.0).abs() < 1e-8
                && (p.eigen_real_parts[1] - 3.0).abs() < 1e-8
        );

        let nil = SquareMatrix::from_row_slice(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            decompose_field_exponent(&nil, DEFAULT_ZERO_BAND),
            Err(Error::Domain(_))
        ));
    }
}
