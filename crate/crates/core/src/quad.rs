//! Quadrature primitives shared by the contour, engine and residue modules.

use std::f64::consts::PI;

use crate::expr::{c, ComplexScalar, EvalError};

const SIMPSON_MAX_DEPTH: u32 = 40;

/// Adaptive Simpson quadrature of a complex-valued function on `[a, b]`.
///
/// Subdivides until the Richardson-corrected panel error is below
/// `max(abs_tol, rel_tol * |I|)` apportioned by panel width. The relative
/// target uses a coarse first estimate of the integral.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<ComplexScalar, EvalError>
where
    F: Fn(f64) -> Result<ComplexScalar, EvalError>,
{
    if a == b {
        return Ok(c(0.0, 0.0));
    }
    // seed with a 16-panel composite rule to fix the scale and avoid early
    // termination on symmetric integrands
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut seeds = Vec::with_capacity(panels);
    let mut rough = c(0.0, 0.0);
    for k in 0..panels {
        let lo = a + h * k as f64;
        let hi = if k + 1 == panels { b } else { lo + h };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo)?, f(mid)?, f(hi)?);
        let whole = (flo + 4.0 * fmid + fhi) * ((hi - lo) / 6.0);
        rough += whole;
        seeds.push((lo, hi, flo, fmid, fhi, whole));
    }
    let target = abs_tol.max(rel_tol * rough.norm());
    let mut total = c(0.0, 0.0);
    for (lo, hi, flo, fmid, fhi, whole) in seeds {
        let eps = target * (hi - lo).abs() / (b - a).abs();
        total += simpson_step(&f, lo, hi, flo, fmid, fhi, whole, eps, SIMPSON_MAX_DEPTH)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: ComplexScalar,
    fm: ComplexScalar,
    fb: ComplexScalar,
    whole: ComplexScalar,
    eps: f64,
    depth: u32,
) -> Result<ComplexScalar, EvalError>
where
    F: Fn(f64) -> Result<ComplexScalar, EvalError>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (fa + 4.0 * flm + fm) * ((m - a) / 6.0);
    let right = (fm + 4.0 * frm + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)?)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_and_oscillatory() {
        let v = adaptive_simpson(|x| Ok(c(x * x, 0.0)), 0.0, 1.0, 1e-12, 1e-15).unwrap();
        assert!((v - c(1.0 / 3.0, 0.0)).norm() < 1e-14);
        let v = adaptive_simpson(|x| Ok(c(0.0, x).exp()), 0.0, 2.0 * PI, 1e-12, 1e-13).unwrap();
        assert!(v.norm() < 1e-11);
        let v = adaptive_simpson(|x| Ok(c(x.sqrt(), 0.0)), 0.0, 1.0, 1e-10, 1e-14).unwrap();
        assert!((v.re - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n={n}");
            // exact through degree 2n-1
            let deg = 2 * n - 1;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((q - exact).abs() < 1e-12, "n={n} q={q} exact={exact}");
        }
    }
}
