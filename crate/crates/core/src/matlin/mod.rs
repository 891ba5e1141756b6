//! Dense real matrix analysis for small exponent matrices.
//!
//! Everything here works on [`SquareMatrix`], a validated wrapper around a
//! dynamically sized `nalgebra` matrix. Dimensions are tiny (at most ~8), so
//! the routines favour robustness over speed.

mod jordan;
mod split;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{check_dim, Error, Result};

pub use jordan::{sn_decompose, SNDecomposition, DEFAULT_CLUSTER_RTOL};
pub use split::{spectral_split, SpectralSplit, DEFAULT_ZERO_BAND};

/// A finite, square, real matrix of dimension at least one.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::Validation(
                "matrix dimension must be at least 1".into(),
            ));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        Ok(SquareMatrix(m))
    }

    /// Row-major construction.
    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Validation(format!(
                "{} entries cannot fill a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("rows do not form a square matrix".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(n, &flat)
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        SquareMatrix(m)
    }

    pub fn identity(dim: usize) -> Self {
        SquareMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        SquareMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        SquareMatrix(DMatrix::identity(dim, dim) * value)
    }

    pub fn diag(values: &[f64]) -> Self {
        SquareMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    /// The 2x2 rotation generator `[[0,-1],[1,0]]`.
    pub fn rotation_generator() -> Self {
        SquareMatrix(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]))
    }

    /// Rotation of the plane by `angle` radians.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        SquareMatrix(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    /// Block-diagonal assembly of square blocks.
    pub fn block_diag(blocks: &[&SquareMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut m = DMatrix::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            let d = b.dim();
            m.view_mut((off, off), (d, d)).copy_from(&b.0);
            off += d;
        }
        SquareMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        SquareMatrix(self.0.transpose())
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    /// Frobenius distance to `other`.
    pub fn dist(&self, other: &SquareMatrix) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok((&self.0 * DVector::from_column_slice(x))
            .as_slice()
            .to_vec())
    }

    pub fn try_inverse(&self) -> Result<SquareMatrix> {
        let inv = self
            .0
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("matrix is singular".into()))?;
        if inv.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("matrix is numerically singular".into()));
        }
        Ok(SquareMatrix(inv))
    }

    /// Smallest singular value relative to the largest; 0 for singular input.
    pub fn inverse_condition(&self) -> f64 {
        let sv = self.0.singular_values();
        let max = sv.max();
        if max == 0.0 {
            0.0
        } else {
            sv.min() / max
        }
    }

    /// `self * other * self^{-1}` without forming the inverse explicitly.
    pub fn conjugate(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        check_dim(self.dim(), other.dim())?;
        let prod = &self.0 * &other.0;
        // (P A) P^{-1} = ((P^{-T}) (P A)^T)^T
        let solved = self
            .0
            .transpose()
            .lu()
            .solve(&prod.transpose())
            .ok_or_else(|| Error::Domain("conjugating matrix is singular".into()))?;
        Ok(SquareMatrix(solved.transpose()))
    }

    pub fn powi(&self, k: u32) -> SquareMatrix {
        let mut acc = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..k {
            acc = &acc * &self.0;
        }
        SquareMatrix(acc)
    }

    /// Flattened entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.0.transpose().as_slice().to_vec()
    }

    pub(crate) fn to_complex(&self) -> DMatrix<Complex64> {
        self.0.map(|x| Complex64::new(x, 0.0))
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SquareMatrix{:?}", self.rows())
    }
}

/// Serialized as a list of rows.
impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&SquareMatrix> for &SquareMatrix {
            type Output = SquareMatrix;
            fn $method(self, rhs: &SquareMatrix) -> SquareMatrix {
                assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
                SquareMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $tr<SquareMatrix> for SquareMatrix {
            type Output = SquareMatrix;
            fn $method(self, rhs: SquareMatrix) -> SquareMatrix {
                &self $op &rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Mul<f64> for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: f64) -> SquareMatrix {
        SquareMatrix(&self.0 * rhs)
    }
}

impl Mul<f64> for SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: f64) -> SquareMatrix {
        SquareMatrix(self.0 * rhs)
    }
}

impl Neg for &SquareMatrix {
    type Output = SquareMatrix;
    fn neg(self) -> SquareMatrix {
        SquareMatrix(-&self.0)
    }
}

/// Matrix exponential.
pub fn expm(m: &SquareMatrix) -> SquareMatrix {
    // nalgebra implements scaling-and-squaring with a degree-13 Padé
    // approximant, which is the algorithm we want at these sizes.
    SquareMatrix(m.0.clone().exp())
}

/// `c^M = exp(M log c)` for `c > 0`.
pub fn mat_power(m: &SquareMatrix, c: f64) -> Result<SquareMatrix> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!(
            "matrix power base must be positive, got {c}"
        )));
    }
    if c == 1.0 {
        return Ok(SquareMatrix::identity(m.dim()));
    }
    Ok(expm(&(m * c.ln())))
}

/// `AB - BA`.
pub fn commutator(a: &SquareMatrix, b: &SquareMatrix) -> Result<SquareMatrix> {
    check_dim(a.dim(), b.dim())?;
    Ok(SquareMatrix(&a.0 * &b.0 - &b.0 * &a.0))
}

/// The standard basis `{e_j e_i^T - e_i e_j^T : i < j}` of skew-symmetric
/// `n x n` matrices; for `n = 2` this is the rotation generator.
pub fn skew_basis(n: usize) -> Vec<SquareMatrix> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = DMatrix::zeros(n, n);
            m[(i, j)] = -1.0;
            m[(j, i)] = 1.0;
            out.push(SquareMatrix(m));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSummary {
    /// Real parts, ascending, with multiplicity.
    pub eigen_real_parts: Vec<f64>,
    /// Eigenvalues sorted by (real, imaginary) part.
    pub eigen_values: Vec<Complex64>,
    pub min_real_part: f64,
    pub all_positive: bool,
}

pub(crate) fn eigenvalues(m: &SquareMatrix) -> Result<Vec<Complex64>> {
    let n = m.dim();
    let schur =
        m.0.clone()
            .try_schur(f64::EPSILON, 1000 * n.max(10))
            .ok_or_else(|| {
                Error::Numeric(format!(
                    "Schur iteration did not converge (dim {n}, max |entry| {:.3e})",
                    m.max_abs()
                ))
            })?;
    let ev = schur.complex_eigenvalues();
    let mut ev: Vec<Complex64> = ev.iter().copied().collect();
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric(
            "eigen-solver produced non-finite eigenvalues".into(),
        ));
    }
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

pub fn spectrum(m: &SquareMatrix) -> Result<SpectrumSummary> {
    let eigen_values = eigenvalues(m)?;
    let mut eigen_real_parts: Vec<f64> = eigen_values.iter().map(|z| z.re).collect();
    eigen_real_parts.sort_by(f64::total_cmp);
    let min_real_part = eigen_real_parts[0];
    Ok(SpectrumSummary {
        eigen_real_parts,
        eigen_values,
        min_real_part,
        all_positive: min_real_part > 0.0,
    })
}

/// A group of numerically coincident eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Cluster {
    pub center: Complex64,
    pub multiplicity: usize,
}

/// Single-linkage clustering of eigenvalues at distance `tol`.
pub(crate) fn cluster_eigenvalues(ev: &[Complex64], tol: f64) -> Vec<Cluster> {
    let n = ev.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (ev[i] - ev[j]).norm() <= tol {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|(k, _)| *k == r) {
            Some((_, g)) => g.push(ev[i]),
            None => groups.push((r, vec![ev[i]])),
        }
    }
    groups
        .into_iter()
        .map(|(_, g)| {
            let sum: Complex64 = g.iter().sum();
            Cluster {
                center: sum / g.len() as f64,
                multiplicity: g.len(),
            }
        })
        .collect()
}

/// Smallest distance between two distinct cluster centres, or `inf`.
pub(crate) fn min_cluster_gap(clusters: &[Cluster]) -> f64 {
    let mut gap = f64::INFINITY;
    for (i, a) in clusters.iter().enumerate() {
        for b in &clusters[i + 1..] {
            gap = gap.min((a.center - b.center).norm());
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn j() -> SquareMatrix {
        SquareMatrix::rotation_generator()
    }

    /// Truncated power series of exp(M); test oracle only.
    fn series_exp(m: &SquareMatrix, terms: usize) -> SquareMatrix {
        let n = m.dim();
        let mut acc = SquareMatrix::identity(n);
        let mut term = SquareMatrix::identity(n);
        for k in 1..terms {
            term = &(&term * m) * (1.0 / k as f64);
            acc = &acc + &term;
        }
        acc
    }

    #[test]
    fn validation_rejects_bad_input() {
        assert!(SquareMatrix::from_row_slice(2, &[1.0, f64::NAN, 0.0, 1.0]).is_err());
        assert!(SquareMatrix::from_row_slice(2, &[1.0, 2.0, 3.0]).is_err());
        assert!(SquareMatrix::new(DMatrix::zeros(0, 0)).is_err());
        assert!(SquareMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn mat_power_examples() {
        let p = mat_power(&SquareMatrix::identity(2), 3.0).unwrap();
        assert!(p.dist(&SquareMatrix::scalar(2, 3.0)) < 1e-14);
        let p = mat_power(&SquareMatrix::diag(&[1.0, 2.0]), 2.0).unwrap();
        assert!(p.dist(&SquareMatrix::diag(&[2.0, 4.0])) < 1e-13);
        let quarter = series_exp(&(&j() * (PI / 2.0)), 30);
        assert!(quarter.dist(&j()) < 1e-14);
        let p = mat_power(&j(), (PI / 2.0).exp()).unwrap();
        assert!(p.dist(&quarter) < 1e-13);
        assert!(mat_power(&j(), 1.0).unwrap() == SquareMatrix::identity(2));
    }

    #[test]
    fn mat_power_rejects_nonpositive_base() {
        assert!(matches!(mat_power(&j(), 0.0), Err(Error::Domain(_))));
        assert!(matches!(mat_power(&j(), -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn expm_examples() {
        assert!(expm(&SquareMatrix::zeros(3)).dist(&SquareMatrix::identity(3)) < 1e-15);
        assert!(
            expm(&SquareMatrix::diag(&[1.0, 0.0])).dist(&SquareMatrix::diag(&[E, 1.0])) < 1e-14
        );
        let half_turn = series_exp(&(&j() * PI), 40);
        assert!(half_turn.dist(&SquareMatrix::scalar(2, -1.0)) < 1e-13);
        assert!(expm(&(&j() * PI)).dist(&half_turn) < 1e-13);
    }

    #[test]
    fn spectrum_examples() {
        let m = &SquareMatrix::scalar(2, 0.5) + &(&j() * 0.3);
        let s = spectrum(&m).unwrap();
        // roots of l^2 - 2hl + (h^2 + th^2): 0.5 +- 0.3i
        assert_eq!(s.eigen_real_parts.len(), 2);
        for r in &s.eigen_real_parts {
            assert!((r - 0.5).abs() < 1e-14);
        }
        assert!((s.eigen_values[0].im + 0.3).abs() < 1e-14);
        assert!(s.all_positive);

        let s = spectrum(&SquareMatrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(s.eigen_real_parts, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.min_real_part, 1.0);

        let nil = SquareMatrix::from_row_slice(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let s = spectrum(&nil).unwrap();
        assert_eq!(s.eigen_real_parts, vec![0.0, 0.0]);
        assert!(!s.all_positive);
    }

    #[test]
    fn skew_basis_examples() {
        let b = skew_basis(2);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0], j());
        assert!(skew_basis(1).is_empty());
        assert_eq!(skew_basis(3).len(), 3);
        for m in skew_basis(4) {
            assert_eq!(&m + &m.transpose(), SquareMatrix::zeros(4));
        }
    }

    #[test]
    fn commutator_examples() {
        let a = SquareMatrix::from_row_slice(2, &[0.3, -1.0, 2.0, 5.0]).unwrap();
        assert_eq!(
            commutator(&SquareMatrix::identity(2), &a).unwrap(),
            SquareMatrix::zeros(2)
        );
        assert_eq!(commutator(&j(), &j()).unwrap(), SquareMatrix::zeros(2));
        let c = commutator(&SquareMatrix::diag(&[1.0, 2.0]), &j()).unwrap();
        assert_eq!(
            c,
            SquareMatrix::from_row_slice(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
        );
        assert!(commutator(&j(), &SquareMatrix::identity(3)).is_err());
    }

    #[test]
    fn conjugate_matches_explicit_inverse() {
        let q = SquareMatrix::from_row_slice(2, &[2.0, 1.0, 0.5, 3.0]).unwrap();
        let m = SquareMatrix::from_row_slice(2, &[1.0, 4.0, -2.0, 0.5]).unwrap();
        let expected = &(&q * &m) * &q.try_inverse().unwrap();
        assert!(q.conjugate(&m).unwrap().dist(&expected) < 1e-13);
    }

    #[test]
    fn clustering_merges_chains() {
        let ev = [
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0 + 0.6e-7, 0.0),
            Complex64::new(1.0 + 1.2e-7, 0.0),
            Complex64::new(3.0, 1.0),
            Complex64::new(3.0, -1.0),
        ];
        let c = cluster_eigenvalues(&ev, 1e-7);
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].multiplicity, 3);
        assert!((min_cluster_gap(&c) - 2.0).abs() < 1e-12);
    }
}
