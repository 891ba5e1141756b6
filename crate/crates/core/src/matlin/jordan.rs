use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{cluster_eigenvalues, eigenvalues, min_cluster_gap, Cluster, SquareMatrix};
use crate::error::{Error, Result};

/// Default clustering tolerance relative to `max(1, ||M||_F)`.
pub const DEFAULT_CLUSTER_RTOL: f64 = 1e-7;

/// Jordan–Chevalley splitting `M = S + N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SNDecomposition {
    pub semisimple: SquareMatrix,
    pub nilpotent: SquareMatrix,
}

/// Computes the semisimple/nilpotent splitting of `m`.
///
/// Eigenvalues closer than `tol` are treated as one eigenvalue `l_k` of
/// algebraic multiplicity `m_k`. The semisimple part is `p(M)` where `p` is
/// the Hermite interpolant with `p = l_k` and `p^(j) = 0` (`j < m_k`) at every
/// cluster, i.e. `p = l_k mod (x - l_k)^{m_k}`. A non-positive `tol` selects
/// `DEFAULT_CLUSTER_RTOL * max(1, ||M||)`.
pub fn sn_decompose(m: &SquareMatrix, tol: f64) -> Result<SNDecomposition> {
    let n = m.dim();
    let scale = m.norm().max(1.0);
    let tol = if tol > 0.0 {
        tol
    } else {
        DEFAULT_CLUSTER_RTOL * scale
    };
    let ev = eigenvalues(m)?;
    let clusters = cluster_eigenvalues(&ev, tol);
    let gap = min_cluster_gap(&clusters);
    if gap < 10.0 * tol {
        return Err(Error::Conditioning(format!(
            "eigenvalue clusters separated by {gap:.3e}, below 10 x clustering tolerance {tol:.3e}"
        )));
    }

    let s = hermite_semisimple(m, &clusters);
    let imag = s.map(|z| z.im).norm();
    if imag > 1e-8 * scale {
        return Err(Error::Conditioning(format!(
            "semisimple part has imaginary residue {imag:.3e}; clusters are not conjugate-closed"
        )));
    }
    let semisimple = SquareMatrix::from_matrix_unchecked(s.map(|z| z.re));
    let nilpotent = m - &semisimple;

    let power = nilpotent.powi(n as u32).norm();
    let comm = (&(&semisimple * &nilpotent) - &(&nilpotent * &semisimple)).norm();
    let bound = 1e-6 * scale.powi(n as i32);
    if power > bound || comm > 1e-6 * scale * scale {
        return Err(Error::Conditioning(format!(
            "splitting failed verification (||N^n|| = {power:.3e}, ||[S,N]|| = {comm:.3e}); \
             clustering tolerance {tol:.3e} does not resolve the eigenvalue structure"
        )));
    }
    Ok(SNDecomposition {
        semisimple,
        nilpotent,
    })
}

/// Evaluates the Hermite interpolant `p` at `m` in Newton form.
fn hermite_semisimple(m: &SquareMatrix, clusters: &[Cluster]) -> DMatrix<Complex64> {
    let n = m.dim();
    // nodes grouped by cluster so repeated nodes are contiguous
    let mut nodes: Vec<(usize, Complex64)> = Vec::with_capacity(n);
    for (k, c) in clusters.iter().enumerate() {
        nodes.extend(std::iter::repeat_n((k, c.center), c.multiplicity));
    }

    // divided-difference table, column by column
    let mut table: Vec<Complex64> = nodes.iter().map(|&(_, z)| z).collect();
    let mut coeffs = vec![table[0]];
    for order in 1..n {
        let mut next = Vec::with_capacity(n - order);
        for i in 0..(n - order) {
            let (ci, zi) = nodes[i];
            let (cj, zj) = nodes[i + order];
            let v = if ci == cj {
                // p^(order)/order! at a repeated node; p is locally constant
                Complex64::new(0.0, 0.0)
            } else {
                (table[i + 1] - table[i]) / (zj - zi)
            };
            next.push(v);
        }
        coeffs.push(next[0]);
        table = next;
    }

    let mc = m.to_complex();
    let eye = DMatrix::<Complex64>::identity(n, n);
    let mut basis = eye.clone();
    let mut acc = &eye * coeffs[0];
    for (j, c) in coeffs.iter().enumerate().skip(1) {
        let shift = &mc - &eye * nodes[j - 1].1;
        basis = &basis * shift;
        acc += &basis * *c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conj(q: &SquareMatrix, m: &SquareMatrix) -> SquareMatrix {
        q.conjugate(m).unwrap()
    }

    fn check_invariants(m: &SquareMatrix, d: &SNDecomposition, tol: f64) {
        let n = m.dim();
        assert!((&d.semisimple + &d.nilpotent).dist(m) < tol);
        let c = &(&d.semisimple * &d.nilpotent) - &(&d.nilpotent * &d.semisimple);
        assert!(c.norm() < tol, "commutator {}", c.norm());
        assert!(d.nilpotent.powi(n as u32).norm() < tol);
    }

    #[test]
    fn diagonalizable_has_zero_nilpotent() {
        let m = SquareMatrix::diag(&[1.0, 2.0]);
        let d = sn_decompose(&m, 0.0).unwrap();
        assert!(d.semisimple.dist(&m) < 1e-14);
        assert!(d.nilpotent.norm() < 1e-14);
    }

    #[test]
    fn jordan_block_splits_canonically() {
        let m = SquareMatrix::from_row_slice(2, &[2.0, 1.0, 0.0, 2.0]).unwrap();
        let d = sn_decompose(&m, 0.0).unwrap();
        assert!(d.semisimple.dist(&SquareMatrix::scalar(2, 2.0)) < 1e-12);
        let n = SquareMatrix::from_row_slice(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(d.nilpotent.dist(&n) < 1e-12);
    }

    #[test]
    fn conjugated_jordan_block() {
        let q = SquareMatrix::from_row_slice(2, &[1.3, -0.4, 0.7, 2.1]).unwrap();
        let j = SquareMatrix::from_row_slice(2, &[2.0, 1.0, 0.0, 2.0]).unwrap();
        let n0 = SquareMatrix::from_row_slice(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let m = conj(&q, &j);
        let d = sn_decompose(&m, 1e-6).unwrap();
        assert!(d.semisimple.dist(&SquareMatrix::scalar(2, 2.0)) < 1e-9);
        assert!(d.nilpotent.dist(&conj(&q, &n0)) < 1e-9);
        check_invariants(&m, &d, 1e-9);
    }

    #[test]
    fn rotation_plus_nilpotent_block() {
        // (hI + tJ) on two planes coupled by a nilpotent that commutes with J+J
        let j = SquareMatrix::rotation_generator();
        let i2 = SquareMatrix::identity(2);
        let s = SquareMatrix::block_diag(&[
            &(&(&i2 * 0.5) + &(&j * 0.8)),
            &(&(&i2 * 0.5) + &(&j * 0.8)),
        ]);
        let mut nm = nalgebra::DMatrix::zeros(4, 4);
        nm.view_mut((0, 2), (2, 2)).copy_from(i2.as_matrix());
        let n = SquareMatrix::new(nm).unwrap();
        let m = &s + &n;
        let d = sn_decompose(&m, 1e-5).unwrap();
        assert!(d.semisimple.dist(&s) < 1e-9);
        assert!(d.nilpotent.dist(&n) < 1e-9);
    }

    #[test]
    fn mixed_blocks_random_conjugation() {
        let j3 = SquareMatrix::from_row_slice(3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -0.5])
            .unwrap();
        let q = SquareMatrix::from_row_slice(3, &[1.0, 0.2, -0.3, 0.4, 1.5, 0.1, -0.2, 0.3, 0.9])
            .unwrap();
        let m = conj(&q, &j3);
        let d = sn_decompose(&m, 1e-6).unwrap();
        check_invariants(&m, &d, 1e-8);
        let n0 = SquareMatrix::from_row_slice(3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
            .unwrap();
        assert!(d.nilpotent.dist(&conj(&q, &n0)) < 1e-8);
    }

    #[test]
    fn close_but_distinct_clusters_are_rejected() {
        let m = SquareMatrix::diag(&[1.0, 1.0 + 5e-7]);
        assert!(matches!(
            sn_decompose(&m, 1e-7),
            Err(Error::Conditioning(_))
        ));
    }
}
