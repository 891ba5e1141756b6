//! Exact Gaussian simulation on finite grids.
//!
//! The covariance of the stacked vector `(X(t_1), ..., X(t_p))` is factored
//! once by pivoted Cholesky; sample `i` is `F z_i` with `z_i` drawn from the
//! ChaCha stream `i` of the seed, so any sample can be regenerated alone and
//! batches are identical for every thread count.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::covariance::CovarianceModel;
use crate::error::{check_dim, Error, Result};
use crate::matlin::{mat_power, spectrum, SquareMatrix};

/// Jitter levels, relative to `trace / p`, tried in order.
const JITTER_LEVELS: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];
/// Accepted factorization residual relative to `||cov||_F`.
const RESIDUAL_RTOL: f64 = 1e-8;

/// Two-sided level corresponding to a band of 4 standard errors.
pub const DEFAULT_ALPHA: f64 = 6.334_248_366_623_996e-5;

/// Ordered, pairwise distinct points of common dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl Grid {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .ok_or_else(|| Error::Validation("grid needs at least one point".into()))?
            .len();
        if dim == 0 {
            return Err(Error::Validation(
                "grid points need a positive dimension".into(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            check_dim(dim, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("grid point {i} is not finite")));
            }
            if points[..i].iter().any(|q| q == p) {
                return Err(Error::Validation(format!(
                    "grid point {i} is repeated: {p:?}"
                )));
            }
        }
        Ok(Grid { points, dim })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The grid `{A t_i}`.
    pub fn transformed(&self, a: &SquareMatrix) -> Result<Grid> {
        check_dim(self.dim, a.dim())?;
        Grid::new(
            self.points
                .iter()
                .map(|p| a.apply(p))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

/// Simulated values: one row per sample, columns `(point, component)` in
/// point-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub grid: Option<Grid>,
    pub range_dim: usize,
    pub values: DMatrix<f64>,
    pub seed: u64,
}

impl GridSample {
    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    /// Attaches the grid the columns refer to.
    pub fn with_grid(mut self, grid: Grid, range_dim: usize) -> Result<Self> {
        check_dim(grid.len() * range_dim, self.values.ncols())?;
        self.grid = Some(grid);
        self.range_dim = range_dim;
        Ok(self)
    }
}

/// Block matrix `[Gamma(t_i, t_j)]`, symmetrized, after checking that it
/// factors within the jitter budget.
pub fn assemble_cov_matrix(model: &CovarianceModel, grid: &Grid) -> Result<SquareMatrix> {
    check_dim(model.domain_dim, grid.dim())?;
    let n = model.range_dim;
    let p = grid.len();
    let blocks = model.eval_pairs(grid.points())?;
    let mut m = DMatrix::zeros(p * n, p * n);
    for i in 0..p {
        for j in 0..p {
            m.view_mut((i * n, j * n), (n, n))
                .copy_from(blocks[i][j].as_matrix());
        }
    }
    let m = (&m + m.transpose()) * 0.5;
    let cov = SquareMatrix::new(m)?;
    GaussianSampler::new(&cov).map_err(|e| {
        Error::Model(format!(
            "assembled covariance of {} is not positive semidefinite: {e}",
            model.name()
        ))
    })?;
    Ok(cov)
}

/// Rank-revealing Cholesky with full diagonal pivoting: returns `F` (p x r)
/// with `A ~= F F^T`, stopping once the largest remaining pivot is below
/// `stop`. Fails on a clearly negative pivot.
fn pivoted_cholesky(a: &DMatrix<f64>, stop: f64) -> Option<DMatrix<f64>> {
    let p = a.nrows();
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..p).collect();
    let mut l = DMatrix::<f64>::zeros(p, p);
    let mut rank = 0;
    for k in 0..p {
        let (j, &d) = (k..p)
            .map(|j| (j, &w[(j, j)]))
            .max_by(|x, y| x.1.total_cmp(y.1))
            .expect("non-empty range");
        if d <= stop {
            break;
        }
        w.swap_rows(k, j);
        w.swap_columns(k, j);
        l.swap_rows(k, j);
        perm.swap(k, j);
        let piv = w[(k, k)].sqrt();
        l[(k, k)] = piv;
        for i in k + 1..p {
            l[(i, k)] = w[(i, k)] / piv;
        }
        for c in k + 1..p {
            for r in c..p {
                let v = w[(r, c)] - l[(r, k)] * l[(c, k)];
                w[(r, c)] = v;
                w[(c, r)] = v;
            }
        }
        rank = k + 1;
    }
    if (rank..p).any(|i| w[(i, i)] < -stop.max(f64::MIN_POSITIVE) * 1e3) {
        return None;
    }
    let mut f = DMatrix::zeros(p, rank);
    for (k, &orig) in perm.iter().enumerate() {
        for c in 0..rank {
            f[(orig, c)] = l[(k, c)];
        }
    }
    Some(f)
}

/// Factored covariance, ready to draw samples.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
    pub jitter: f64,
    pub residual: f64,
}

impl GaussianSampler {
    /// Factors `cov`, adding `eps * trace / p * I` with `eps` escalating
    /// from 0 to 1e-8 until `||F F^T - cov|| <= 1e-8 ||cov||`.
    pub fn new(cov: &SquareMatrix) -> Result<Self> {
        let a = cov.as_matrix();
        let p = a.nrows();
        let asym = (a - a.transpose()).norm();
        let norm = a.norm();
        if asym > 1e-10 * norm.max(f64::MIN_POSITIVE) {
            return Err(Error::Validation(format!(
                "covariance is not symmetric (||A - A^T|| = {asym:.3e})"
            )));
        }
        if norm == 0.0 {
            return Ok(GaussianSampler {
                factor: DMatrix::zeros(p, 0),
                jitter: 0.0,
                residual: 0.0,
            });
        }
        let unit = a.trace().max(0.0) / p as f64;
        let maxdiag = a.diagonal().max();
        let stop = 10.0 * p as f64 * f64::EPSILON * maxdiag;
        let mut last = f64::INFINITY;
        for eps in JITTER_LEVELS {
            let jitter = eps * unit;
            let shifted = a + DMatrix::identity(p, p) * jitter;
            if let Some(f) = pivoted_cholesky(&shifted, stop) {
                let residual = (&f * f.transpose() - a).norm();
                last = residual;
                if residual <= RESIDUAL_RTOL * norm {
                    return Ok(GaussianSampler {
                        factor: f,
                        jitter,
                        residual,
                    });
                }
            }
        }
        Err(Error::Numeric(format!(
            "covariance could not be factored within the jitter budget (last residual {last:.3e}, ||cov|| {norm:.3e})"
        )))
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    /// Sample number `index` of `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let z = DVector::from_fn(self.rank(), |_, _| StandardNormal.sample(&mut rng));
        &self.factor * z
    }

    /// Samples `first .. first + count` as rows.
    pub fn batch(&self, seed: u64, first: u64, count: usize) -> DMatrix<f64> {
        let rows: Vec<DVector<f64>> = (0..count as u64)
            .into_par_iter()
            .map(|i| self.sample(seed, first + i))
            .collect();
        let mut out = DMatrix::zeros(count, self.dim());
        for (i, r) in rows.iter().enumerate() {
            out.row_mut(i).tr_copy_from(r);
        }
        out
    }
}

/// `n_samples` i.i.d. draws of `N(0, cov)`.
pub fn sample_field(cov: &SquareMatrix, n_samples: usize, seed: u64) -> Result<GridSample> {
    if n_samples == 0 {
        return Err(Error::Validation("need at least one sample".into()));
    }
    let sampler = GaussianSampler::new(cov)?;
    Ok(GridSample {
        grid: None,
        range_dim: cov.dim(),
        values: sampler.batch(seed, 0, n_samples),
        seed,
    })
}

/// Assembles the covariance of `model` on `grid` and samples it.
pub fn simulate(
    model: &CovarianceModel,
    grid: &Grid,
    n_samples: usize,
    seed: u64,
) -> Result<GridSample> {
    let cov = assemble_cov_matrix(model, grid)?;
    sample_field(&cov, n_samples, seed)?.with_grid(grid.clone(), model.range_dim)
}

/// Unbiased sample covariance of the rows.
pub fn empirical_cov(s: &GridSample) -> Result<SquareMatrix> {
    let n = s.values.nrows();
    if n < 2 {
        return Err(Error::Validation(
            "empirical covariance needs at least 2 samples".into(),
        ));
    }
    let mean = s.values.row_mean();
    let mut centered = s.values.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let c = centered.transpose() * &centered / (n as f64 - 1.0);
    SquareMatrix::new((&c + c.transpose()) * 0.5)
}

/// Band multiplier `k` for a two-sided level `alpha`.
pub fn band_multiplier(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Validation(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(std.inverse_cdf(1.0 - alpha / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalOssReport {
    pub n_samples: usize,
    pub seed: u64,
    pub alpha: f64,
    pub band_multiplier: f64,
    pub max_abs_deviation: f64,
    /// Deviation relative to `sqrt(S_ii S_jj)` of the rescaled sample.
    pub max_rel_deviation: f64,
    /// Largest deviation in units of the Monte Carlo band.
    pub max_band_ratio: f64,
    /// `(point, component)` of the two coordinates at the largest band ratio.
    pub worst_entry: ((usize, usize), (usize, usize)),
    pub passed: bool,
}

/// Simulates `X` on the grid and, independently, on `{c^E t_i}`; compares the
/// empirical covariance of `c^{-H} X(c^E t)` with that of `X(t)`.
///
/// Entry `(a, b)` passes when its deviation is within
/// `k sqrt(2) sqrt(2 / N) sqrt(S_aa S_bb)`: the standard error of a sample
/// covariance entry is at most `sqrt(2 / N) sqrt(S_aa S_bb)`, and two
/// independent estimates are differenced.
#[allow(clippy::too_many_arguments)]
pub fn empirical_oss_test(
    model: &CovarianceModel,
    e: &SquareMatrix,
    h: &SquareMatrix,
    c: f64,
    grid: &Grid,
    n_samples: usize,
    seed: u64,
    alpha: f64,
) -> Result<EmpiricalOssReport> {
    check_dim(model.domain_dim, e.dim())?;
    check_dim(model.range_dim, h.dim())?;
    for (name, m) in [("domain", e), ("range", h)] {
        let sp = spectrum(m)?;
        if !sp.all_positive {
            return Err(Error::Domain(format!(
                "{name} exponent must have positive spectrum (min real part {:.6e})",
                sp.min_real_part
            )));
        }
    }
    if n_samples < 2 {
        return Err(Error::Validation("need at least 2 samples".into()));
    }
    let k = band_multiplier(alpha)?;
    let n = model.range_dim;
    let p = grid.len();

    let base = simulate(model, grid, n_samples, seed)?;
    let scaled_grid = grid.transformed(&mat_power(e, c)?)?;
    let scaled_seed = seed ^ 0x9E37_79B9_7F4A_7C15;
    let mut scaled = simulate(model, &scaled_grid, n_samples, scaled_seed)?;
    let back = mat_power(h, 1.0 / c)?;
    let bt = back.as_matrix().transpose();
    for i in 0..p {
        let cols = scaled.values.columns(i * n, n) * &bt;
        scaled.values.columns_mut(i * n, n).copy_from(&cols);
    }

    let sx = empirical_cov(&base)?;
    let sy = empirical_cov(&scaled)?;
    let dim = p * n;
    let mut report = EmpiricalOssReport {
        n_samples,
        seed,
        alpha,
        band_multiplier: k,
        max_abs_deviation: 0.0,
        max_rel_deviation: 0.0,
        max_band_ratio: 0.0,
        worst_entry: ((0, 0), (0, 0)),
        passed: true,
    };
    let se_unit = (2.0 / n_samples as f64).sqrt() * std::f64::consts::SQRT_2;
    for a in 0..dim {
        for b in 0..dim {
            let dev = (sy.get(a, b) - sx.get(a, b)).abs();
            if dev == 0.0 {
                continue;
            }
            let scale_y = (sy.get(a, a) * sy.get(b, b)).max(0.0).sqrt();
            let scale = (sx.get(a, a).max(sy.get(a, a)) * sx.get(b, b).max(sy.get(b, b))).sqrt();
            report.max_abs_deviation = report.max_abs_deviation.max(dev);
            if scale_y > 0.0 {
                report.max_rel_deviation = report.max_rel_deviation.max(dev / scale_y);
            }
            let ratio = dev / (k * se_unit * scale);
            if ratio > report.max_band_ratio {
                report.max_band_ratio = ratio;
                report.worst_entry = ((a / n, a % n), (b / n, b % n));
            }
        }
    }
    report.passed = report.max_band_ratio <= 1.0;
    Ok(report)
}
