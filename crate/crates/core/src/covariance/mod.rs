//! Covariance models of zero-mean Gaussian fields and covariance-level
//! checks of operator self-similarity and symmetry.
//!
//! For a zero-mean Gaussian field, equality of finite-dimensional
//! distributions is equality of covariances, so `X(c^E t) ~ c^H X(t)` holds
//! iff `Gamma(c^E s, c^E t) = c^H Gamma(s, t) (c^H)^T` for all `s, t`.
//! The checks below evaluate that identity (and the analogous domain/range
//! symmetry identities) on every pair of a finite grid.

mod ofbf;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::matlin::{mat_power, spectrum, SquareMatrix};

pub use ofbf::{c_gamma, check_gamma, fbf_closed_form_scalar, ofbf_scalar, QuadConfig};

/// Hurst index `h = (gamma - 2) / 2` of the isotropic field.
pub fn hurst(gamma: f64) -> f64 {
    (gamma - 2.0) / 2.0
}

/// Covariance of the isotropic OFBF on `R^2` by 2-D quadrature.
pub fn ofbf_cov(s: &[f64], t: &[f64], gamma: f64, quad: &QuadConfig) -> Result<SquareMatrix> {
    let (s, t) = (point2(s)?, point2(t)?);
    Ok(SquareMatrix::scalar(2, ofbf_scalar(s, t, gamma, quad)?))
}

/// Closed-form fractional covariance `c (||s||^{2h} + ||t||^{2h} - ||s-t||^{2h}) I`.
pub fn fbf_closed_form(s: &[f64], t: &[f64], gamma: f64, c_gamma: f64) -> Result<SquareMatrix> {
    check_dim(2, s.len())?;
    check_dim(2, t.len())?;
    Ok(SquareMatrix::scalar(
        2,
        fbf_closed_form_scalar(s, t, gamma, c_gamma)?,
    ))
}

fn point2(p: &[f64]) -> Result<[f64; 2]> {
    check_dim(2, p.len())?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("point has non-finite coordinates".into()));
    }
    Ok([p[0], p[1]])
}

/// Exact-lookup covariance table; no interpolation between entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTable {
    entries: Vec<(Vec<f64>, Vec<f64>, SquareMatrix)>,
}

impl CovarianceTable {
    const MATCH_TOL: f64 = 1e-12;

    fn same(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, y)| (x - y).abs() <= Self::MATCH_TOL * x.abs().max(y.abs()).max(1.0))
    }

    fn lookup(&self, s: &[f64], t: &[f64]) -> Option<SquareMatrix> {
        self.entries.iter().find_map(|(a, b, m)| {
            if Self::same(a, s) && Self::same(b, t) {
                Some(m.clone())
            } else if Self::same(a, t) && Self::same(b, s) {
                Some(m.transpose())
            } else {
                None
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceKind {
    /// Spectral density `||x||^{-gamma} I`, evaluated by quadrature.
    OfbfIsotropic {
        gamma: f64,
    },
    /// The same field through its closed form with computed `c(gamma)`.
    ClosedFormFbf {
        gamma: f64,
    },
    UserTable(CovarianceTable),
}

/// A covariance function `(s, t) -> Gamma(s, t)` from `R^m x R^m` to `n x n` matrices.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    pub domain_dim: usize,
    pub range_dim: usize,
    pub kind: CovarianceKind,
    pub quad: QuadConfig,
}

impl CovarianceModel {
    pub fn ofbf(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(CovarianceModel {
            domain_dim: 2,
            range_dim: 2,
            kind: CovarianceKind::OfbfIsotropic { gamma },
            quad: QuadConfig::default(),
        })
    }

    pub fn closed_form_fbf(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        c_gamma(gamma)?;
        Ok(CovarianceModel {
            domain_dim: 2,
            range_dim: 2,
            kind: CovarianceKind::ClosedFormFbf { gamma },
            quad: QuadConfig::default(),
        })
    }

    /// Table entries `(s, t, Gamma(s, t))`; the transpose serves `(t, s)`.
    pub fn user_table(
        domain_dim: usize,
        range_dim: usize,
        entries: Vec<(Vec<f64>, Vec<f64>, SquareMatrix)>,
    ) -> Result<Self> {
        for (s, t, m) in &entries {
            check_dim(domain_dim, s.len())?;
            check_dim(domain_dim, t.len())?;
            check_dim(range_dim, m.dim())?;
        }
        Ok(CovarianceModel {
            domain_dim,
            range_dim,
            kind: CovarianceKind::UserTable(CovarianceTable { entries }),
            quad: QuadConfig::default(),
        })
    }

    pub fn with_quad(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn gamma(&self) -> Option<f64> {
        match self.kind {
            CovarianceKind::OfbfIsotropic { gamma } | CovarianceKind::ClosedFormFbf { gamma } => {
                Some(gamma)
            }
            CovarianceKind::UserTable(_) => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            CovarianceKind::OfbfIsotropic { gamma } => format!("ofbf_isotropic(gamma={gamma})"),
            CovarianceKind::ClosedFormFbf { gamma } => format!("closed_form_fbf(gamma={gamma})"),
            CovarianceKind::UserTable(t) => format!("user_table({} entries)", t.entries.len()),
        }
    }

    pub fn eval(&self, s: &[f64], t: &[f64]) -> Result<SquareMatrix> {
        check_dim(self.domain_dim, s.len())?;
        check_dim(self.domain_dim, t.len())?;
        match &self.kind {
            CovarianceKind::OfbfIsotropic { gamma } => ofbf_cov(s, t, *gamma, &self.quad),
            CovarianceKind::ClosedFormFbf { gamma } => {
                fbf_closed_form(s, t, *gamma, c_gamma(*gamma)?)
            }
            CovarianceKind::UserTable(table) => table
                .lookup(s, t)
                .ok_or_else(|| Error::Domain(format!("no table entry for the pair {s:?}, {t:?}"))),
        }
    }

    /// `Gamma(p_i, p_j)` for all pairs, evaluated in parallel over the upper
    /// triangle; the lower triangle is filled by transposition.
    pub fn eval_pairs(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<SquareMatrix>>> {
        let p = points.len();
        let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| self.eval(&points[i], &points[j]))
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![vec![SquareMatrix::zeros(self.range_dim); p]; p];
        for (&(i, j), v) in pairs.iter().zip(values) {
            if i != j {
                out[j][i] = v.transpose();
            }
            out[i][j] = v;
        }
        Ok(out)
    }
}

/// Outcome of a pairwise covariance identity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OssCheckReport {
    pub max_abs_deviation: f64,
    /// Deviation relative to `sqrt(||G(s,s)|| ||G(t,t)||)` of the reference side.
    pub max_rel_deviation: f64,
    pub worst_pair: (Vec<f64>, Vec<f64>),
    pub passed: bool,
    pub tolerance: f64,
}

/// Compares `lhs[i][j]` with `rhs[i][j]`; `reference` supplies the diagonal
/// used for the relative scale of each pair.
fn compare_pairs(
    points: &[Vec<f64>],
    lhs: &[Vec<SquareMatrix>],
    rhs: &[Vec<SquareMatrix>],
    reference: &[Vec<SquareMatrix>],
    tol: f64,
) -> OssCheckReport {
    let p = points.len();
    let mut max_abs = 0.0_f64;
    let mut max_rel = 0.0_f64;
    let mut worst = (0, 0);
    for i in 0..p {
        for j in 0..p {
            let dev = lhs[i][j].dist(&rhs[i][j]);
            let scale = (reference[i][i].norm() * reference[j][j].norm()).sqrt();
            let rel = if dev == 0.0 {
                0.0
            } else if scale > 0.0 {
                dev / scale
            } else {
                f64::INFINITY
            };
            max_abs = max_abs.max(dev);
            if rel > max_rel || (i, j) == (0, 0) {
                max_rel = max_rel.max(rel);
                if rel >= max_rel {
                    worst = (i, j);
                }
            }
        }
    }
    let worst_pair = if p > 0 {
        (points[worst.0].clone(), points[worst.1].clone())
    } else {
        (Vec::new(), Vec::new())
    };
    OssCheckReport {
        max_abs_deviation: max_abs,
        max_rel_deviation: max_rel,
        worst_pair,
        passed: max_rel <= tol,
        tolerance: tol,
    }
}

fn check_grid(model: &CovarianceModel, grid: &[Vec<f64>]) -> Result<()> {
    for p in grid {
        check_dim(model.domain_dim, p.len())?;
    }
    Ok(())
}

fn transform(points: &[Vec<f64>], m: &SquareMatrix) -> Result<Vec<Vec<f64>>> {
    points.iter().map(|p| m.apply(p)).collect()
}

/// Checks `Gamma(c^E s, c^E t) = c^H Gamma(s, t) (c^H)^T` on all grid pairs.
pub fn cov_oss_check(
    model: &CovarianceModel,
    e: &SquareMatrix,
    h: &SquareMatrix,
    c: f64,
    grid: &[Vec<f64>],
    tol: f64,
) -> Result<OssCheckReport> {
    check_dim(model.domain_dim, e.dim())?;
    check_dim(model.range_dim, h.dim())?;
    check_grid(model, grid)?;
    for (name, m) in [("domain", e), ("range", h)] {
        let sp = spectrum(m)?;
        if !sp.all_positive {
            return Err(Error::Domain(format!(
                "{name} exponent must have positive spectrum (min real part {:.6e})",
                sp.min_real_part
            )));
        }
    }
    let ce = mat_power(e, c)?;
    let ch = mat_power(h, c)?;
    let scaled = transform(grid, &ce)?;
    let lhs = model.eval_pairs(&scaled)?;
    let base = model.eval_pairs(grid)?;
    let rhs: Vec<Vec<SquareMatrix>> = base
        .iter()
        .map(|row| row.iter().map(|g| &(&ch * g) * &ch.transpose()).collect())
        .collect();
    Ok(compare_pairs(grid, &lhs, &rhs, &lhs, tol))
}

fn require_invertible(m: &SquareMatrix) -> Result<()> {
    if m.inverse_condition() < 1e-14 {
        return Err(Error::Domain("symmetry candidate is singular".into()));
    }
    Ok(())
}

/// Checks `Gamma(A s, A t) = Gamma(s, t)` on all grid pairs.
pub fn dom_symmetry_check(
    model: &CovarianceModel,
    a: &SquareMatrix,
    grid: &[Vec<f64>],
    tol: f64,
) -> Result<OssCheckReport> {
    check_dim(model.domain_dim, a.dim())?;
    check_grid(model, grid)?;
    require_invertible(a)?;
    let lhs = model.eval_pairs(&transform(grid, a)?)?;
    let rhs = model.eval_pairs(grid)?;
    Ok(compare_pairs(grid, &lhs, &rhs, &rhs, tol))
}

/// Checks `B Gamma(s, t) B^T = Gamma(s, t)` on all grid pairs.
pub fn ran_symmetry_check(
    model: &CovarianceModel,
    b: &SquareMatrix,
    grid: &[Vec<f64>],
    tol: f64,
) -> Result<OssCheckReport> {
    check_dim(model.range_dim, b.dim())?;
    check_grid(model, grid)?;
    require_invertible(b)?;
    let rhs = model.eval_pairs(grid)?;
    let lhs: Vec<Vec<SquareMatrix>> = rhs
        .iter()
        .map(|row| row.iter().map(|g| &(b * g) * &b.transpose()).collect())
        .collect();
    Ok(compare_pairs(grid, &lhs, &rhs, &rhs, tol))
}

/// Square grid of `k x k` points spanning `[lo, hi]^2`.
pub fn square_grid(k: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let step = if k > 1 {
        (hi - lo) / (k - 1) as f64
    } else {
        0.0
    };
    (0..k)
        .flat_map(|i| (0..k).map(move |j| vec![lo + step * i as f64, lo + step * j as f64]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_gives_zero_covariance() {
        let q = QuadConfig::default();
        let z = ofbf_cov(&[0.0, 0.0], &[0.0, 0.0], 3.0, &q).unwrap();
        assert_eq!(z, SquareMatrix::zeros(2));
        let z = ofbf_cov(&[0.0, 0.0], &[0.4, -0.3], 3.0, &q).unwrap();
        assert_eq!(z, SquareMatrix::zeros(2));
    }

    #[test]
    fn diagonal_matches_radial_reduction() {
        // g(s, s) = 2 int (1 - cos<s,x>) ||x||^{-gamma} dx = 2 c(gamma) ||s||^{2h}
        let q = QuadConfig::default();
        for gamma in [2.5, 3.0, 3.5] {
            let c = c_gamma(gamma).unwrap();
            let s = [0.6, -0.8];
            let g = ofbf_cov(&s, &s, gamma, &q).unwrap();
            let expected = 2.0 * c;
            assert!(
                (g.get(0, 0) - expected).abs() < 1e-7 * expected,
                "gamma {gamma}"
            );
            assert_eq!(g.get(0, 1), 0.0);
        }
    }

    #[test]
    fn closed_form_examples() {
        let c = 1.7;
        let s = [0.3, 0.4];
        let g = fbf_closed_form(&s, &s, 3.0, c).unwrap();
        assert!((g.get(0, 0) - 2.0 * c * 0.5).abs() < 1e-15);
        // antipodal points cancel at h = 1/2
        let g = fbf_closed_form(&s, &[-0.3, -0.4], 3.0, c).unwrap();
        assert!(g.get(0, 0).abs() < 1e-15);
        assert!(fbf_closed_form(&s, &s, 4.0, c).is_err());
    }

    #[test]
    fn scaling_of_the_quadrature() {
        let q = QuadConfig::default();
        let (s, t) = ([0.3, -0.7], [0.9, 0.2]);
        let h = hurst(2.8);
        let base = ofbf_cov(&s, &t, 2.8, &q).unwrap().get(0, 0);
        let c = 3.0;
        let scaled = ofbf_cov(&[c * s[0], c * s[1]], &[c * t[0], c * t[1]], 2.8, &q)
            .unwrap()
            .get(0, 0);
        assert!((scaled - c.powf(2.0 * h) * base).abs() < 1e-9 * scaled.abs());
    }

    #[test]
    fn user_table_exact_lookup() {
        let m = SquareMatrix::from_row_slice(2, &[1.0, 0.5, 0.2, 2.0]).unwrap();
        let model =
            CovarianceModel::user_table(1, 2, vec![(vec![0.0], vec![1.0], m.clone())]).unwrap();
        assert_eq!(model.eval(&[0.0], &[1.0]).unwrap(), m);
        assert_eq!(model.eval(&[1.0], &[0.0]).unwrap(), m.transpose());
        assert!(matches!(model.eval(&[0.5], &[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn reports_pass_iff_within_tolerance() {
        let model = CovarianceModel::closed_form_fbf(3.0).unwrap();
        let grid = square_grid(3, -1.0, 1.0);
        let r = dom_symmetry_check(&model, &SquareMatrix::identity(2), &grid, 1e-12).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_abs_deviation, 0.0);
        let r = dom_symmetry_check(&model, &SquareMatrix::diag(&[2.0, 1.0]), &grid, 1e-6).unwrap();
        assert!(!r.passed);
        assert_eq!(r.passed, r.max_rel_deviation <= r.tolerance);
        assert!(matches!(
            ran_symmetry_check(&model, &SquareMatrix::diag(&[1.0, 0.0]), &grid, 1e-6),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn oss_check_rejects_non_positive_exponent() {
        let model = CovarianceModel::closed_form_fbf(3.0).unwrap();
        let grid = square_grid(2, 0.1, 1.0);
        let r = cov_oss_check(
            &model,
            &SquareMatrix::identity(2),
            &SquareMatrix::rotation_generator(),
            2.0,
            &grid,
            1e-6,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
