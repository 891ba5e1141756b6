//! A semistable Lévy exponent with discrete Lévy measure.
//!
//! With `b > c0 > 1` and `alpha = ln c0 / ln b`, the measure putting mass
//! `c0^{-k}` at `b^k` (`k` in `Z`) gives
//!
//! ```text
//! psi(theta) = sum_k (e^{i theta b^k} - 1) c0^{-k},
//! ```
//!
//! which satisfies `psi(b theta) = c0 psi(theta)` exactly. The corresponding
//! process is self-similar only along the lattice `c = c0^k`: for other `c`,
//! `c psi(theta) != psi(c^{1/alpha} theta)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance for deciding that `c` is a power of `c0`.
const LATTICE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemistableSpec {
    pub b: f64,
    pub c0: f64,
    pub alpha: f64,
    /// Terms `|k| <= truncation` are summed.
    pub truncation: u32,
}

impl Default for SemistableSpec {
    fn default() -> Self {
        SemistableSpec::new(4.0, 2.0, 50).expect("valid default")
    }
}

impl SemistableSpec {
    pub fn new(b: f64, c0: f64, truncation: u32) -> Result<Self> {
        if !(b.is_finite() && c0.is_finite() && b > 1.0 && c0 > 1.0) {
            return Err(Error::Validation(format!(
                "need b > 1 and c0 > 1, got b={b}, c0={c0}"
            )));
        }
        if c0 >= b {
            return Err(Error::Validation(format!(
                "need c0 < b so that alpha = ln c0 / ln b lies in (0, 1); got b={b}, c0={c0}"
            )));
        }
        if truncation == 0 {
            return Err(Error::Validation("truncation must be positive".into()));
        }
        Ok(SemistableSpec {
            b,
            c0,
            alpha: c0.ln() / b.ln(),
            truncation,
        })
    }

    pub fn with_truncation(self, truncation: u32) -> Result<Self> {
        SemistableSpec::new(self.b, self.c0, truncation)
    }

    /// Bound on the discarded terms `|k| > K` of `psi(theta)`.
    pub fn tail_bound(&self, theta: f64) -> f64 {
        let k = self.truncation as f64;
        let q = self.b.powf(-(1.0 - self.alpha));
        2.0 * self.c0.powf(-k) / (1.0 - 1.0 / self.c0) + theta.abs() * q.powf(k) / (1.0 - q)
    }
}

/// Truncated exponent value with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    pub value: Complex64,
    pub tail_bound: f64,
    /// Floating-point allowance: `8 eps sum |term|` plus the effect of
    /// rounding in each phase `theta b^k`, which dominates for large `k`.
    pub rounding_bound: f64,
}

/// `e^{ix} - 1` without cancellation for small `x`.
fn expm1_i(x: f64) -> Complex64 {
    let s = (0.5 * x).sin();
    Complex64::new(-2.0 * s * s, x.sin())
}

/// `psi` at `theta * mult * b^k`, where `mult` is a caller-supplied factor;
/// `b^k` comes from integer powers, so lattice shifts of the
/// argument are exact when `b` is a power of two.
fn psi_scaled(theta: f64, mult: f64, spec: &SemistableSpec) -> PsiValue {
    let k_max = spec.truncation as i32;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    let mut phase_err = 0.0;
    let x0 = theta * mult;
    for k in -k_max..=k_max {
        let bk = spec.b.powi(k);
        let weight = spec.c0.powi(-k);
        let x = x0 * bk;
        let term = expm1_i(x) * weight;
        abs_sum += term.norm();
        // relative error of the computed phase, from powi and two products
        let rel = (4.0 + 2.0 * f64::from(k.unsigned_abs() + 1).log2()) * f64::EPSILON;
        phase_err += weight * (rel * x.abs()).min(2.0);
        // Neumaier summation, componentwise
        let t = sum + term;
        for (c, (s, v, tt)) in [
            (&mut comp.re, (sum.re, term.re, t.re)),
            (&mut comp.im, (sum.im, term.im, t.im)),
        ] {
            *c += if s.abs() >= v.abs() {
                (s - tt) + v
            } else {
                (v - tt) + s
            };
        }
        sum = t;
    }
    PsiValue {
        value: sum + comp,
        tail_bound: spec.tail_bound(x0),
        rounding_bound: 8.0 * f64::EPSILON * abs_sum + phase_err,
    }
}

/// Truncated characteristic exponent `psi_K(theta)`.
pub fn psi(theta: f64, spec: &SemistableSpec) -> PsiValue {
    psi_scaled(theta, 1.0, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub theta: f64,
    pub residual: f64,
    pub truncation_bound: f64,
    pub rounding_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeReport {
    pub spec: SemistableSpec,
    pub max_residual: f64,
    /// Largest `residual - truncation_bound - rounding_bound` over the grid.
    pub max_excess: f64,
    pub worst_theta: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub rows: Vec<ResidualRow>,
}

/// `|psi(b theta) - c0 psi(theta)|` over the grid, passing where it is below
/// the combined truncation and rounding bounds plus `tol`.
pub fn lattice_scaling_check(spec: &SemistableSpec, theta_grid: &[f64], tol: f64) -> LatticeReport {
    lattice_check_with_factor(spec, spec.c0, theta_grid, tol)
}

/// As [`lattice_scaling_check`], testing `psi(b theta) = factor psi(theta)`.
pub fn lattice_check_with_factor(
    spec: &SemistableSpec,
    factor: f64,
    theta_grid: &[f64],
    tol: f64,
) -> LatticeReport {
    let mut rows = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        let lhs = psi_scaled(theta, spec.b, spec);
        let rhs = psi(theta, spec);
        rows.push(ResidualRow {
            theta,
            residual: (lhs.value - rhs.value * factor).norm(),
            truncation_bound: lhs.tail_bound + factor * rhs.tail_bound,
            rounding_bound: lhs.rounding_bound + factor * rhs.rounding_bound,
        });
    }
    summarize(spec, rows, tol)
}

fn summarize(spec: &SemistableSpec, rows: Vec<ResidualRow>, tol: f64) -> LatticeReport {
    let mut max_residual = 0.0_f64;
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst_theta = f64::NAN;
    for r in &rows {
        max_residual = max_residual.max(r.residual);
        let excess = r.residual - r.truncation_bound - r.rounding_bound;
        if excess > max_excess {
            max_excess = excess;
            worst_theta = r.theta;
        }
    }
    LatticeReport {
        spec: *spec,
        max_residual,
        max_excess,
        worst_theta,
        tolerance: tol,
        passed: max_excess <= tol,
        rows,
    }
}

/// Integer `k` with `c = c0^k`, if any.
pub fn lattice_index(spec: &SemistableSpec, c: f64) -> Option<i32> {
    let k = (c.ln() / spec.c0.ln()).round();
    let on = (c.ln() - k * spec.c0.ln()).abs() <= LATTICE_RTOL * c.ln().abs().max(1.0);
    on.then_some(k as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub spec: SemistableSpec,
    pub c: f64,
    pub max_deviation: f64,
    pub theta_at_max: f64,
    /// Truncation plus rounding bound at `theta_at_max`.
    pub bound_at_max: f64,
    /// `max_deviation / bound_at_max`; infinite when the bound is 0.
    pub certified_ratio: f64,
    pub rows: Vec<ResidualRow>,
}

/// `|c psi(theta) - psi(c^{1/alpha} theta)|` over the grid, with no lattice
/// guard. On the lattice `c = c0^k` the factor `c^{1/alpha}` is taken as
/// `b^k` exactly.
pub fn scaling_deviation(
    spec: &SemistableSpec,
    c: f64,
    theta_grid: &[f64],
) -> Result<WitnessReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("scale c must be positive, got {c}")));
    }
    let mult = match lattice_index(spec, c) {
        Some(k) => spec.b.powi(k),
        None => c.powf(1.0 / spec.alpha),
    };
    let rows: Vec<ResidualRow> = theta_grid
        .iter()
        .map(|&theta| {
            let lhs = psi(theta, spec);
            let rhs = psi_scaled(theta, mult, spec);
            ResidualRow {
                theta,
                residual: (lhs.value * c - rhs.value).norm(),
                truncation_bound: c * lhs.tail_bound + rhs.tail_bound,
                rounding_bound: c * lhs.rounding_bound + rhs.rounding_bound,
            }
        })
        .collect();
    let (mut max_deviation, mut theta_at_max, mut bound_at_max) = (0.0, f64::NAN, 0.0);
    for r in &rows {
        if r.residual > max_deviation || theta_at_max.is_nan() {
            max_deviation = r.residual;
            theta_at_max = r.theta;
            bound_at_max = r.truncation_bound + r.rounding_bound;
        }
    }
    let certified_ratio = if bound_at_max > 0.0 {
        max_deviation / bound_at_max
    } else if max_deviation > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(WitnessReport {
        spec: *spec,
        c,
        max_deviation,
        theta_at_max,
        bound_at_max,
        certified_ratio,
        rows,
    })
}

/// [`scaling_deviation`] for an off-lattice `c`, where the deviation
/// certifies that the process is not operator self-similar.
pub fn oss_failure_witness(
    spec: &SemistableSpec,
    c: f64,
    theta_grid: &[f64],
) -> Result<WitnessReport> {
    if c > 0.0 {
        if let Some(k) = lattice_index(spec, c) {
            return Err(Error::Domain(format!(
                "c = {c} equals c0^{k}, where scaling holds; pick off-lattice c"
            )));
        }
    }
    scaling_deviation(spec, c, theta_grid)
}

/// Tab-separated `theta, residual, truncation_bound, rounding_bound`.
pub fn residual_tsv(rows: &[ResidualRow]) -> String {
    let mut out = String::from("theta\tresidual\ttruncation_bound\trounding_bound\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\n",
            r.theta, r.residual, r.truncation_bound, r.rounding_bound
        ));
    }
    out
}

/// `count` equally spaced values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(SemistableSpec::new(2.0, 4.0, 10).is_err());
        assert!(SemistableSpec::new(1.0, 0.5, 10).is_err());
        assert!(SemistableSpec::new(4.0, 2.0, 0).is_err());
        let s = SemistableSpec::default();
        assert_eq!((s.b, s.c0, s.truncation), (4.0, 2.0, 50));
        assert!((s.alpha - 0.5).abs() < 1e-15);
    }

    #[test]
    fn psi_basic_values() {
        let s = SemistableSpec::default();
        assert_eq!(psi(0.0, &s).value, Complex64::new(0.0, 0.0));
        for theta in [0.3, 1.0, 7.5] {
            let p = psi(theta, &s).value;
            let m = psi(-theta, &s).value;
            assert!((m - p.conj()).norm() < 1e-15 * p.norm().max(1.0));
            assert!(p.re < 0.0);
        }
    }

    #[test]
    fn truncation_is_self_consistent() {
        let s40 = SemistableSpec::new(4.0, 2.0, 40).unwrap();
        let s60 = s40.with_truncation(60).unwrap();
        let a = psi(1.0, &s40);
        let b = psi(1.0, &s60);
        assert!((a.value - b.value).norm() <= a.tail_bound + a.rounding_bound);
        assert!(s60.tail_bound(1.0) < s40.tail_bound(1.0));
    }

    #[test]
    fn lattice_identity() {
        let s = SemistableSpec::default();
        let r = lattice_scaling_check(&s, &linspace(-10.0, 10.0, 101), 0.0);
        assert!(r.passed, "{:e}", r.max_excess);
        let zero = lattice_scaling_check(&s, &[0.0], 0.0);
        assert_eq!(zero.max_residual, 0.0);
    }

    #[test]
    fn corrupted_c0_fails() {
        let s = SemistableSpec::default();
        let grid = linspace(-10.0, 10.0, 101);
        let r = lattice_check_with_factor(&s, s.c0 * 1.01, &grid, 1e-10);
        assert!(!r.passed);
        // residual is 0.01 c0 |psi(theta)| up to the bounds
        for row in &r.rows {
            let expected = 0.01 * s.c0 * psi(row.theta, &s).value.norm();
            assert!(
                (row.residual - expected).abs()
                    <= row.truncation_bound + row.rounding_bound + 1e-12
            );
        }
    }

    #[test]
    fn lattice_guard_and_sanity_inversion() {
        let s = SemistableSpec::default();
        assert!(matches!(
            oss_failure_witness(&s, 2.0, &[1.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            oss_failure_witness(&s, 4.0, &[1.0]),
            Err(Error::Domain(_))
        ));
        let r = scaling_deviation(&s, 2.0, &linspace(0.1, 10.0, 50)).unwrap();
        assert!(r
            .rows
            .iter()
            .all(|x| x.residual <= x.truncation_bound + x.rounding_bound));
        let z = oss_failure_witness(&s, 1.5, &[0.0]).unwrap();
        assert_eq!(z.max_deviation, 0.0);
    }

    #[test]
    fn off_lattice_witness() {
        let s = SemistableSpec::default();
        let r = oss_failure_witness(&s, 1.5, &linspace(0.1, 10.0, 100)).unwrap();
        assert!(r.certified_ratio > 10.0, "{r:?}");
        assert!(r.max_deviation > 1e-3);
    }

    #[test]
    fn tsv_has_header_and_rows() {
        let s = SemistableSpec::default();
        let r = lattice_scaling_check(&s, &[0.5, 1.0], 0.0);
        let t = residual_tsv(&r.rows);
        assert_eq!(t.lines().count(), 3);
        assert!(t.starts_with("theta\t"));
    }
}
