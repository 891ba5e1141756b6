use nalgebra::DMatrix;
use num_complex::Complex64;

use super::SquareMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_ZERO_BAND: f64 = 1e-7;

/// `M = P blockdiag(H1, H2) P^{-1}` with `H1` collecting the eigenvalues of
/// (numerically) zero real part and `H2` those of positive real part.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub conjugacy: SquareMatrix,
    /// `None` when no eigenvalue lies in the zero band.
    pub block_zero: Option<SquareMatrix>,
    /// `None` when every eigenvalue lies in the zero band.
    pub block_positive: Option<SquareMatrix>,
    pub dims: (usize, usize),
}

impl SpectralSplit {
    pub fn block_diagonal(&self) -> SquareMatrix {
        let blocks: Vec<&SquareMatrix> = [&self.block_zero, &self.block_positive]
            .into_iter()
            .flatten()
            .collect();
        SquareMatrix::block_diag(&blocks)
    }

    /// `P blockdiag(H1, H2) P^{-1}`.
    pub fn reconstruct(&self) -> Result<SquareMatrix> {
        self.conjugacy.conjugate(&self.block_diagonal())
    }

    /// Real basis (columns of `P`) of the zero-class invariant subspace.
    pub fn zero_basis(&self) -> DMatrix<f64> {
        self.conjugacy
            .as_matrix()
            .columns(0, self.dims.0)
            .into_owned()
    }

    pub fn positive_basis(&self) -> DMatrix<f64> {
        self.conjugacy
            .as_matrix()
            .columns(self.dims.0, self.dims.1)
            .into_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Zero,
    Positive,
}

fn classify(z: Complex64, band: f64) -> Result<Class> {
    let re = z.re;
    if re <= -band {
        return Err(Error::Domain(format!(
            "inadmissible exponent: eigenvalue {re:+.6e}{:+.6e}i has negative real part",
            z.im
        )));
    }
    if re.abs() < 0.5 * band {
        Ok(Class::Zero)
    } else if re >= 2.0 * band {
        Ok(Class::Positive)
    } else {
        Err(Error::Conditioning(format!(
            "eigenvalue real part {re:.3e} is too close to the zero band edge {band:.3e}"
        )))
    }
}

/// Splits `m` into its zero-real-part and positive-real-part invariant
/// subspaces.
///
/// The complex Schur form is reordered so that one class leads, and the
/// leading Schur vectors give that invariant subspace; a real basis is then
/// extracted from their real and imaginary parts. Real parts in
/// `[band/2, 2 band)` are ambiguous and rejected, as are real parts
/// `<= -band`.
pub fn spectral_split(m: &SquareMatrix, zero_band: f64) -> Result<SpectralSplit> {
    if !(zero_band > 0.0) {
        return Err(Error::Validation("zero band must be positive".into()));
    }
    let n = m.dim();
    let (z, t) = complex_schur(m)?;
    let classes = (0..n)
        .map(|i| classify(t[(i, i)], zero_band))
        .collect::<Result<Vec<_>>>()?;
    let d1 = classes.iter().filter(|c| **c == Class::Zero).count();
    let d2 = n - d1;

    if d1 == 0 || d2 == 0 {
        let whole = Some(m.clone());
        return Ok(SpectralSplit {
            conjugacy: SquareMatrix::identity(n),
            block_zero: if d1 > 0 { whole.clone() } else { None },
            block_positive: if d2 > 0 { whole } else { None },
            dims: (d1, d2),
        });
    }

    let v1 = leading_real_basis(&z, &t, zero_band, Class::Zero, d1)?;
    let v2 = leading_real_basis(&z, &t, zero_band, Class::Positive, d2)?;
    let mut p = DMatrix::zeros(n, n);
    p.columns_mut(0, d1).copy_from(&v1);
    p.columns_mut(d1, d2).copy_from(&v2);
    let conjugacy = SquareMatrix::from_matrix_unchecked(p);
    if conjugacy.inverse_condition() < 1e-12 {
        return Err(Error::Conditioning(
            "zero and positive invariant subspaces are numerically dependent".into(),
        ));
    }
    let inv = conjugacy.try_inverse()?;
    let b = &(&inv * m) * &conjugacy;
    let bm = b.as_matrix();
    let off = bm.view((0, d1), (d1, d2)).norm() + bm.view((d1, 0), (d2, d1)).norm();
    if off > 1e-6 * m.norm().max(1.0) {
        return Err(Error::Conditioning(format!(
            "block-diagonalization residual {off:.3e} too large"
        )));
    }
    Ok(SpectralSplit {
        conjugacy,
        block_zero: Some(SquareMatrix::from_matrix_unchecked(
            bm.view((0, 0), (d1, d1)).into_owned(),
        )),
        block_positive: Some(SquareMatrix::from_matrix_unchecked(
            bm.view((d1, d1), (d2, d2)).into_owned(),
        )),
        dims: (d1, d2),
    })
}

pub(crate) fn complex_schur(m: &SquareMatrix) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = m.dim();
    let schur = m
        .to_complex()
        .try_schur(f64::EPSILON, 1000 * n.max(10))
        .ok_or_else(|| Error::Numeric("complex Schur iteration did not converge".into()))?;
    let (z, mut t) = schur.unpack();
    // clear round-off below the diagonal
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok((z, t))
}

/// Givens rotation `[c s; -conj(s) c]` with `c` real mapping `(f, g)` to `(r, 0)`.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    if g.norm() == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if f.norm() == 0.0 {
        return (0.0, g.conj() / g.norm());
    }
    let d = f.norm().hypot(g.norm());
    let phase = f / f.norm();
    (f.norm() / d, phase * g.conj() / d)
}

/// Swaps the adjacent diagonal entries `k` and `k+1` of the triangular `t`,
/// updating the unitary `z` so that `Z T Z^H` is unchanged.
fn swap_adjacent(z: &mut DMatrix<Complex64>, t: &mut DMatrix<Complex64>, k: usize) {
    let n = t.nrows();
    let (t11, t22) = (t[(k, k)], t[(k + 1, k + 1)]);
    let (cs, sn) = givens(t[(k, k + 1)], t22 - t11);
    for j in (k + 2)..n {
        let (x, y) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = x * cs + sn * y;
        t[(k + 1, j)] = y * cs - sn.conj() * x;
    }
    let snc = sn.conj();
    for i in 0..k {
        let (x, y) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = x * cs + snc * y;
        t[(i, k + 1)] = y * cs - snc.conj() * x;
    }
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    for i in 0..n {
        let (x, y) = (z[(i, k)], z[(i, k + 1)]);
        z[(i, k)] = x * cs + snc * y;
        z[(i, k + 1)] = y * cs - snc.conj() * x;
    }
}

/// Reorders a copy of the Schur form so `lead` eigenvalues come first and
/// returns an orthonormal real basis of their invariant subspace.
fn leading_real_basis(
    z: &DMatrix<Complex64>,
    t: &DMatrix<Complex64>,
    band: f64,
    lead: Class,
    d: usize,
) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let (mut z, mut t) = (z.clone(), t.clone());
    // bubble the lead class to the front
    for _ in 0..n {
        let mut swapped = false;
        for k in 0..n - 1 {
            let a = classify(t[(k, k)], band)?;
            let b = classify(t[(k + 1, k + 1)], band)?;
            if a != lead && b == lead {
                swap_adjacent(&mut z, &mut t, k);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    let lead_cols = z.columns(0, d);
    let mut w = DMatrix::zeros(n, 2 * d);
    for j in 0..d {
        for i in 0..n {
            w[(i, j)] = lead_cols[(i, j)].re;
            w[(i, d + j)] = lead_cols[(i, j)].im;
        }
    }
    let svd = w.svd(true, false);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    if sv.len() > d && sv[d] > 1e-6 * sv[0] {
        return Err(Error::Numeric(format!(
            "invariant subspace is not conjugation-closed (singular value {:.3e})",
            sv[d]
        )));
    }
    let u = svd.u.expect("requested U");
    let mut basis = DMatrix::zeros(n, d);
    for (c, &i) in order.iter().take(d).enumerate() {
        basis.set_column(c, &u.column(i));
    }
    Ok(basis)
}
