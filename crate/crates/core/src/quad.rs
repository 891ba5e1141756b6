//! One-dimensional quadrature rules used by the polar and covariance code.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Single 15-point Kronrod panel with embedded 7-point Gauss error estimate.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration over `[a, b]`, starting from
/// the given breakpoints (which may be empty).
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol |I|)`.
/// Fails with a numeric error when `max_panels` is exhausted.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    if breaks.len() < 2 {
        return Err(Error::Validation("need at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        total += v;
        err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_panels {
            return Err(Error::Numeric(format!(
                "adaptive quadrature did not converge: estimate {total:.6e}, error {err:.3e} after {evaluations} evaluations"
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval cannot be split further in floating point
            return Err(Error::Numeric(format!(
                "adaptive quadrature exhausted floating-point resolution near {mid:.6e}"
            )));
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed accumulated update round-off
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

/// Double-exponential (tanh-sinh) quadrature over `[a, b]`.
///
/// Tolerates integrable algebraic endpoint singularities and kinks. The
/// integrand is never evaluated exactly at an endpoint; points near an
/// endpoint are formed from the endpoint distance to keep them accurate.
/// Stops when successive levels differ by at most `max(abs_tol, rel_tol |I|)`.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    const T_MAX: f64 = 3.6;
    const MAX_LEVEL: u32 = 10;
    let half = 0.5 * (b - a);
    let mut evaluations = 0;
    let mut sample = |t: f64, f: &mut F| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        // distance from the nearer endpoint: (b - a) / (1 + e^{2|u|})
        let d = (b - a) / (1.0 + (2.0 * u.abs()).exp());
        if d == 0.0 || w == 0.0 {
            return 0.0;
        }
        let x = if u >= 0.0 { b - d } else { a + d };
        evaluations += 1;
        w * half * f(x)
    };

    let mut h = 1.0;
    let mut sum = sample(0.0, &mut f);
    let mut k = 1.0;
    while k * h <= T_MAX {
        sum += sample(k * h, &mut f) + sample(-k * h, &mut f);
        k += 1.0;
    }
    let mut estimate = h * sum;
    for _ in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut t = h;
        while t <= T_MAX {
            sum += sample(t, &mut f) + sample(-t, &mut f);
            t += 2.0 * h;
        }
        let next = h * sum;
        let diff = (next - estimate).abs();
        estimate = next;
        if diff <= abs_tol.max(rel_tol * estimate.abs()) || diff < 1e-300 {
            return Ok(QuadResult {
                value: estimate,
                error: diff,
                evaluations,
            });
        }
    }
    Err(Error::Numeric(format!(
        "tanh-sinh quadrature did not reach relative tolerance {rel_tol:.1e} (estimate {estimate:.6e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 10, 16, 31] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // degree 2n - 1 monomial x^{2n-2}: integral 2/(2n-1)
            let deg = 2 * n - 2;
            let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((v - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn gk15_smooth() {
        let (v, e) = gk15(&mut |x: f64| x.exp(), 0.0, 1.0);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-15);
        assert!(e < 1e-10);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let r = adaptive(|x: f64| x.powf(-0.5), &[0.0, 1.0], 1e-12, 1e-12, 500).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_reports_failure() {
        let r = adaptive(|x: f64| 1.0 / x, &[0.0, 1.0], 1e-12, 1e-12, 20);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }

    #[test]
    fn tanh_sinh_kinks_and_singularities() {
        // int_0^1 sqrt(1 - x^2) dx = pi / 4
        let r = tanh_sinh(|x: f64| (1.0 - x * x).sqrt(), 0.0, 1.0, 0.0, 1e-13).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_4).abs() < 1e-13);
        // int_0^1 ln(x) dx = -1
        let r = tanh_sinh(|x: f64| x.ln(), 0.0, 1.0, 0.0, 1e-13).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
        // int_{-1}^{1} |x|^{0.3} over a kink handled by splitting at 0
        let a = tanh_sinh(|x: f64| x.abs().powf(0.3), -1.0, 0.0, 0.0, 1e-13).unwrap();
        let b = tanh_sinh(|x: f64| x.abs().powf(0.3), 0.0, 1.0, 0.0, 1e-13).unwrap();
        assert!((a.value + b.value - 2.0 / 1.3).abs() < 1e-12);
    }
}
