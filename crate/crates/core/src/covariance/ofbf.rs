//! Quadrature for the isotropic operator fractional Brownian field.
//!
//! With spectral density `||x||^{-gamma} I` on `R^2`, the covariance is
//! `Gamma(s, t) = g(s, t) I` where, after discarding the odd imaginary part,
//!
//! ```text
//! g(s, t) = int_{R^2} [1 + cos<s-t,x> - cos<s,x> - cos<t,x>] ||x||^{-gamma} dx.
//! ```
//!
//! In polar coordinates `x = rho (cos phi, sin phi)` the bracket is
//! `(1 - cos b rho) + (1 - cos d rho) - (1 - cos a rho)` with frequencies
//! `b = <s,w>`, `d = <t,w>`, `a = <s-t,w>`. The radial integral is done
//! numerically on `[0, R]`, `R = X0 / max(|a|,|b|,|d|)`, and the oscillatory
//! tails beyond `R` through the asymptotic expansion of
//! `int_X^inf e^{iu} u^{-mu} du`. The angular integrand is pi-periodic with
//! kinks where a frequency vanishes, so the angle range is split at those
//! directions and each piece integrated with tanh-sinh.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{adaptive, tanh_sinh};

/// Frequency-scaled radius where the radial integral switches to the tail
/// expansion; the expansion's smallest term there is below 1e-20.
const X0: f64 = 50.0;

/// Accuracy settings for the covariance quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub radial_rel_tol: f64,
    pub angular_rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            radial_rel_tol: 1e-11,
            angular_rel_tol: 1e-10,
            max_panels: 4000,
        }
    }
}

pub fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 2.0 && gamma < 4.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "spectral exponent gamma must lie in (2, 4), got {gamma}"
        )))
    }
}

/// `int_X^inf cos(u) u^{-mu} du` for large `X` by the asymptotic series
/// `i e^{iX} sum_k (-i)^k (mu)_k X^{-mu-k}`.
fn cos_tail_asymptotic(x: f64, mu: f64) -> f64 {
    let mut term = x.powf(-mu);
    let mut sum = Complex64::new(term, 0.0);
    let mut phase = Complex64::new(1.0, 0.0);
    let minus_i = Complex64::new(0.0, -1.0);
    for k in 0..200 {
        let next = term * (mu + k as f64) / x;
        if next >= term || next < 1e-22 * sum.norm() {
            break;
        }
        term = next;
        phase *= minus_i;
        sum += phase * term;
    }
    let lead = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, x);
    (lead * sum).re
}

/// `tau(x) = int_x^inf (1 - cos u) u^{-mu} du` for `0 <= x <= X0`.
fn one_minus_cos_tail(x: f64, mu: f64, cfg: &QuadConfig) -> Result<f64> {
    let far = X0.powf(1.0 - mu) / (mu - 1.0) - cos_tail_asymptotic(X0, mu);
    if x >= X0 {
        return Ok(far);
    }
    let f = |u: f64| 2.0 * (0.5 * u).sin().powi(2) * u.powf(-mu);
    let mut breaks = vec![x];
    if x < 1.0 {
        breaks.push(1.0);
    }
    let mut b = breaks[breaks.len() - 1];
    while b + 2.0 * PI < X0 {
        b += 2.0 * PI;
        breaks.push(b);
    }
    breaks.push(X0);
    let near = adaptive(f, &breaks, 1e-16, cfg.radial_rel_tol, cfg.max_panels)?;
    Ok(near.value + far)
}

/// `int_0^inf (1 - cos r) r^{1-gamma} dr`.
pub(crate) fn radial_constant(gamma: f64, cfg: &QuadConfig) -> Result<f64> {
    check_gamma(gamma)?;
    one_minus_cos_tail(0.0, gamma - 1.0, cfg)
}

/// `c(gamma) = int_{R^2} (1 - cos x_1) ||x||^{-gamma} dx`, as the product of
/// the radial constant and `int_0^{2 pi} |cos phi|^{gamma - 2} d phi`.
fn compute_c_gamma(gamma: f64) -> Result<f64> {
    let cfg = QuadConfig::default();
    let radial = radial_constant(gamma, &cfg)?;
    let p = gamma - 2.0;
    let quarter = tanh_sinh(|phi: f64| phi.cos().powf(p), 0.0, FRAC_PI_2, 0.0, 1e-14)?;
    Ok(radial * 4.0 * quarter.value)
}

/// Normalization `c(gamma)`, computed once per `gamma` and cached.
pub fn c_gamma(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = gamma.to_bits();
    if let Some(v) = cache.lock().expect("cache poisoned").get(&key) {
        return Ok(*v);
    }
    let v = compute_c_gamma(gamma)?;
    // a racing thread computes the identical value; first insert wins
    Ok(*cache
        .lock()
        .expect("cache poisoned")
        .entry(key)
        .or_insert(v))
}

/// Radial integral of the bracket along the unit direction `(cos phi, sin phi)`.
fn radial_integral(
    s: [f64; 2],
    t: [f64; 2],
    phi: f64,
    gamma: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    let (sn, cs) = phi.sin_cos();
    let b = s[0] * cs + s[1] * sn;
    let d = t[0] * cs + t[1] * sn;
    let a = (s[0] - t[0]) * cs + (s[1] - t[1]) * sn;
    let fmax = a.abs().max(b.abs()).max(d.abs());
    if fmax == 0.0 {
        return Ok(0.0);
    }
    let mu = gamma - 1.0;
    let r_cut = X0 / fmax;
    let hav = |w: f64, rho: f64| 2.0 * (0.5 * w * rho).sin().powi(2);
    let f = |rho: f64| (hav(b, rho) + hav(d, rho) - hav(a, rho)) * rho.powf(-mu);
    let periods = 8;
    let breaks: Vec<f64> = (0..=periods)
        .map(|k| r_cut * k as f64 / periods as f64)
        .collect();
    let scale = fmax.powf(mu - 1.0);
    let near = adaptive(
        f,
        &breaks,
        1e-15 * scale,
        cfg.radial_rel_tol,
        cfg.max_panels,
    )?;

    let mut tail = 0.0;
    for (w, sign) in [(b, 1.0), (d, 1.0), (a, -1.0)] {
        let w = w.abs();
        if w > 0.0 {
            tail += sign * w.powf(mu - 1.0) * one_minus_cos_tail(w * r_cut, mu, cfg)?;
        }
    }
    Ok(near.value + tail)
}

/// Directions (mod pi) where one of the three frequencies vanishes.
fn kink_angles(s: [f64; 2], t: [f64; 2]) -> Vec<f64> {
    let mut out: Vec<f64> = [s, t, [s[0] - t[0], s[1] - t[1]]]
        .iter()
        .filter(|u| u[0] != 0.0 || u[1] != 0.0)
        .map(|u| (u[1].atan2(u[0]) + FRAC_PI_2).rem_euclid(PI))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    out
}

/// The scalar `g(s, t)` with `Gamma(s, t) = g(s, t) I`.
pub fn ofbf_scalar(s: [f64; 2], t: [f64; 2], gamma: f64, cfg: &QuadConfig) -> Result<f64> {
    check_gamma(gamma)?;
    let kinks = kink_angles(s, t);
    if kinks.is_empty() {
        return Ok(0.0);
    }
    // pieces may cancel to ~0; measure accuracy against the diagonal scale
    let two_h = gamma - 2.0;
    let size = s[0].hypot(s[1]).powf(two_h) + t[0].hypot(t[1]).powf(two_h);
    let abs_tol = cfg.angular_rel_tol * size;
    let mut total = 0.0;
    for (i, &lo) in kinks.iter().enumerate() {
        let hi = if i + 1 < kinks.len() {
            kinks[i + 1]
        } else {
            kinks[0] + PI
        };
        let mut err = None;
        let piece = tanh_sinh(
            |phi| match radial_integral(s, t, phi, gamma, cfg) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            lo,
            hi,
            abs_tol,
            cfg.angular_rel_tol,
        );
        if let Some(e) = err {
            return Err(e);
        }
        total += piece?.value;
    }
    // the angular integrand is pi-periodic
    Ok(2.0 * total)
}

/// `c(gamma) (||s||^{2h} + ||t||^{2h} - ||s - t||^{2h})`, `h = (gamma - 2) / 2`.
pub fn fbf_closed_form_scalar(s: &[f64], t: &[f64], gamma: f64, c_gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(c_gamma > 0.0) {
        return Err(Error::Validation("c_gamma must be positive".into()));
    }
    let two_h = gamma - 2.0;
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let ns = norm(&mut s.iter().copied());
    let nt = norm(&mut t.iter().copied());
    let nd = norm(&mut s.iter().zip(t).map(|(a, b)| a - b));
    Ok(c_gamma * (ns.powf(two_h) + nt.powf(two_h) - nd.powf(two_h)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptotic_tail_matches_quadrature() {
        // int_X^Y cos(u) u^{-mu} du + tail(Y) = tail(X)
        let mu = 1.7;
        let direct = adaptive(
            |u: f64| u.cos() * u.powf(-mu),
            &[60.0, 200.0],
            1e-18,
            1e-14,
            4000,
        )
        .unwrap()
        .value;
        let lhs = cos_tail_asymptotic(60.0, mu);
        let rhs = direct + cos_tail_asymptotic(200.0, mu);
        assert!((lhs - rhs).abs() < 1e-15, "{lhs} {rhs}");
    }

    #[test]
    fn radial_constant_at_gamma_three() {
        // int_0^inf (1 - cos r) / r^2 dr = pi / 2
        let k = radial_constant(3.0, &QuadConfig::default()).unwrap();
        assert!((k - FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn c_gamma_against_gamma_function_values() {
        // pi Gamma(1-h) / (2^{2h} h Gamma(1+h)), evaluated in 30-digit arithmetic
        for (gamma, expected) in [
            (2.5, 12.013168757445037),
            (3.0, std::f64::consts::TAU),
            (3.5, 5.842243202931943),
        ] {
            let c = c_gamma(gamma).unwrap();
            assert!((c - expected).abs() < 1e-9 * expected, "gamma={gamma}: {c}");
        }
    }

    #[test]
    fn kinks_are_sorted_and_reduced_mod_pi() {
        let k = kink_angles([1.0, 0.0], [0.0, 2.0]);
        assert_eq!(k.len(), 3);
        assert!(k.windows(2).all(|w| w[0] < w[1]));
        assert!(k.iter().all(|&x| (0.0..PI).contains(&x)));
        assert!(kink_angles([0.0, 0.0], [0.0, 0.0]).is_empty());
    }

    #[test]
    fn gamma_out_of_range() {
        let cfg = QuadConfig::default();
        assert!(matches!(
            ofbf_scalar([1.0, 0.0], [0.0, 1.0], 2.0, &cfg),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            ofbf_scalar([1.0, 0.0], [0.0, 1.0], 4.5, &cfg),
            Err(Error::Domain(_))
        ));
        assert!(matches!(c_gamma(1.0), Err(Error::Domain(_))));
    }
}
