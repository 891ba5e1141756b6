use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::matlin::{skew_basis, SquareMatrix};

/// Largest finite group that closure will enumerate.
const MAX_FINITE_ORDER: usize = 10_000;
const MEMBER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum GroupKind {
    Orthogonal(usize),
    SpecialOrthogonal(usize),
    /// All elements of a finite group.
    Finite(Vec<SquareMatrix>),
    Trivial(usize),
}

/// A closed matrix group acting on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    kind: GroupKind,
}

impl GroupSpec {
    pub fn orthogonal(n: usize) -> Result<Self> {
        Self::positive_dim(n)?;
        Ok(GroupSpec {
            kind: GroupKind::Orthogonal(n),
        })
    }

    pub fn special_orthogonal(n: usize) -> Result<Self> {
        Self::positive_dim(n)?;
        Ok(GroupSpec {
            kind: GroupKind::SpecialOrthogonal(n),
        })
    }

    pub fn trivial(n: usize) -> Result<Self> {
        Self::positive_dim(n)?;
        Ok(GroupSpec {
            kind: GroupKind::Trivial(n),
        })
    }

    /// The group generated by `generators`; the list is closed under products
    /// and inverses and rejected if that does not terminate.
    pub fn finite(generators: Vec<SquareMatrix>) -> Result<Self> {
        let n = generators
            .first()
            .ok_or_else(|| Error::Validation("finite group needs at least one element".into()))?
            .dim();
        for g in &generators {
            check_dim(n, g.dim())?;
            if g.inverse_condition() < 1e-12 {
                return Err(Error::Validation("finite group element is singular".into()));
            }
        }
        let elements = closure(&generators)?;
        Ok(GroupSpec {
            kind: GroupKind::Finite(elements),
        })
    }

    fn positive_dim(n: usize) -> Result<()> {
        if n == 0 {
            Err(Error::Validation("group dimension must be positive".into()))
        } else {
            Ok(())
        }
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            GroupKind::Orthogonal(n) | GroupKind::SpecialOrthogonal(n) | GroupKind::Trivial(n) => {
                *n
            }
            GroupKind::Finite(el) => el[0].dim(),
        }
    }

    /// Deterministic elements for commutation checks: `count` rotations at
    /// uniform angles in dimension 2 (half of them reflections for `O(2)`),
    /// seeded Haar-random elements otherwise, and every element of a finite
    /// group.
    pub fn samples(&self, count: usize, seed: u64) -> Vec<SquareMatrix> {
        match &self.kind {
            GroupKind::Trivial(n) => vec![SquareMatrix::identity(*n)],
            GroupKind::Finite(el) => el.clone(),
            GroupKind::SpecialOrthogonal(1) => vec![SquareMatrix::identity(1)],
            GroupKind::Orthogonal(1) => {
                vec![SquareMatrix::identity(1), SquareMatrix::scalar(1, -1.0)]
            }
            GroupKind::SpecialOrthogonal(2) => (0..count)
                .map(|k| SquareMatrix::rotation(2.0 * PI * k as f64 / count as f64))
                .collect(),
            GroupKind::Orthogonal(2) => {
                let half = count.div_ceil(2);
                let flip = SquareMatrix::diag(&[1.0, -1.0]);
                (0..count)
                    .map(|k| {
                        let r = SquareMatrix::rotation(2.0 * PI * (k % half) as f64 / half as f64);
                        if k < half {
                            r
                        } else {
                            &r * &flip
                        }
                    })
                    .collect()
            }
            GroupKind::Orthogonal(n) | GroupKind::SpecialOrthogonal(n) => {
                let special = matches!(self.kind, GroupKind::SpecialOrthogonal(_));
                (0..count)
                    .map(|k| haar_orthogonal(*n, seed, k as u64, special || k % 2 == 0))
                    .collect()
            }
        }
    }

    pub fn contains(&self, a: &SquareMatrix) -> bool {
        if a.dim() != self.dim() {
            return false;
        }
        let n = a.dim();
        let orthogonal = (&(a * &a.transpose()) - &SquareMatrix::identity(n)).norm() <= MEMBER_TOL;
        match &self.kind {
            GroupKind::Orthogonal(_) => orthogonal,
            GroupKind::SpecialOrthogonal(_) => orthogonal && a.as_matrix().determinant() > 0.0,
            GroupKind::Trivial(_) => a.dist(&SquareMatrix::identity(n)) <= MEMBER_TOL,
            GroupKind::Finite(el) => el.iter().any(|g| g.dist(a) <= MEMBER_TOL),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GroupKind::Orthogonal(n) => write!(f, "O({n})"),
            GroupKind::SpecialOrthogonal(n) => write!(f, "SO({n})"),
            GroupKind::Trivial(n) => write!(f, "trivial({n})"),
            GroupKind::Finite(el) => write!(f, "finite(order {}, dim {})", el.len(), el[0].dim()),
        }
    }
}

/// Parses `O2`, `O(2)`, `SO3`, `SO(3)`, `trivial2`, `trivial(2)`.
impl FromStr for GroupSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s
            .chars()
            .filter(|c| !matches!(c, '(' | ')' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        let split = t.find(|c: char| c.is_ascii_digit()).unwrap_or(t.len());
        let (name, digits) = t.split_at(split);
        let n: usize = digits
            .parse()
            .map_err(|_| Error::Parse(format!("group {s:?} lacks a dimension")))?;
        match name {
            "o" => GroupSpec::orthogonal(n),
            "so" => GroupSpec::special_orthogonal(n),
            "trivial" | "e" => GroupSpec::trivial(n),
            _ => Err(Error::Parse(format!(
                "unknown group {s:?}; expected O(n), SO(n) or trivial(n)"
            ))),
        }
    }
}

/// Basis of the tangent space `T(G)` at the identity.
pub fn tangent_basis(g: &GroupSpec) -> Vec<SquareMatrix> {
    match &g.kind {
        GroupKind::Orthogonal(n) | GroupKind::SpecialOrthogonal(n) => skew_basis(*n),
        GroupKind::Finite(_) | GroupKind::Trivial(_) => Vec::new(),
    }
}

fn closure(generators: &[SquareMatrix]) -> Result<Vec<SquareMatrix>> {
    let n = generators[0].dim();
    let mut elements = vec![SquareMatrix::identity(n)];
    let push = |els: &mut Vec<SquareMatrix>, m: SquareMatrix| -> bool {
        if els
            .iter()
            .any(|e| e.dist(&m) <= MEMBER_TOL * m.norm().max(1.0))
        {
            false
        } else {
            els.push(m);
            true
        }
    };
    for g in generators {
        push(&mut elements, g.clone());
    }
    let mut frontier = 0;
    while frontier < elements.len() {
        let x = elements[frontier].clone();
        for g in generators {
            push(&mut elements, &x * g);
            if elements.len() > MAX_FINITE_ORDER {
                return Err(Error::Validation(format!(
                    "generators do not close to a finite group within {MAX_FINITE_ORDER} elements"
                )));
            }
        }
        frontier += 1;
    }
    Ok(elements)
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix; stream `index` of `seed`.
pub(crate) fn haar_orthogonal(n: usize, seed: u64, index: u64, special: bool) -> SquareMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if special && q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    SquareMatrix::from_matrix_unchecked(q)
}
