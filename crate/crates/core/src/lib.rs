//! Numerics for operator self-similar (o.s.s.) random fields.
//!
//! A random field `X` indexed by `R^m` with values in `R^n` is o.s.s. with
//! domain exponent `E` and range exponent `H` when `X(c^E t)` and
//! `c^H X(t)` have the same finite-dimensional distributions for every
//! `c > 0`. This crate makes that definition computable:
//!
//! * [`matlin`]: matrix powers `c^M`, spectra, Jordan–Chevalley splitting and
//!   invariant-subspace splitting by real part.
//! * [`polar`]: anisotropic polar coordinates `x = tau^E l` for a
//!   positive-stable `E`.
//! * [`covariance`]: Gaussian covariance models (the isotropic operator
//!   fractional Brownian field) and covariance-level scaling/symmetry checks.
//! * [`exponents`]: tangent spaces of symmetry groups, exponent families,
//!   Haar-averaged commuting exponents, admissibility and field splitting.
//! * [`fieldsim`]: exact Gaussian simulation on finite grids and Monte Carlo
//!   verification of the scaling law.
//! * [`semistable`]: a semistable Lévy exponent that scales on a lattice
//!   only, and a certified witness that it is not o.s.s.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod covariance;
pub mod error;
pub mod exponents;
pub mod fieldsim;
pub mod io;
pub mod matlin;
pub mod polar;
pub mod quad;
pub mod semistable;

pub use error::{Error, Result};
pub use matlin::SquareMatrix;
