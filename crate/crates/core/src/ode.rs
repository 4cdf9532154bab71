//! Embedded Dormand–Prince 5(4) integrator for small complex systems.
//!
//! Step control is error-per-unit-step: a step of length `h` is accepted when
//! its embedded error estimate is below `(h / L) · min(budget, atol + rtol·|y|)`
//! with `L` the interval length, so the accepted local errors sum to at most
//! `budget` over the whole interval. The per-step target is floored at a few
//! ulps of `|y|`, so a solution growing towards a pole keeps advancing until
//! it crosses the divergence cap; the summed error then exceeds the budget
//! and callers can tell.

use crate::expr::{c, ComplexScalar, EvalError};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Bound on the summed local error estimates over the interval.
    pub error_budget: f64,
    /// Smallest step (in units of the interval length) before giving up.
    pub min_step: f64,
    pub max_steps: usize,
    /// Any state component exceeding this magnitude stops with `Diverged`.
    pub divergence_cap: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            error_budget: 1e-10,
            min_step: 1e-14,
            max_steps: 2_000_000,
            divergence_cap: 1e8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeStop {
    Completed,
    Diverged,
    StepUnderflow,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOutcome<const N: usize> {
    pub y: [ComplexScalar; N],
    /// Parameter reached; equals the end point when `stop == Completed`.
    pub t: f64,
    pub error_sum: f64,
    /// Part of `error_sum` from steps held at the rounding floor, where a
    /// smaller step would not help.
    pub rounding_sum: f64,
    pub steps: usize,
    pub stop: OdeStop,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin<const N: usize>(y: &[ComplexScalar; N], h: f64, terms: &[(f64, &[ComplexScalar; N])]) -> [ComplexScalar; N] {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..N {
            out[i] += k[i] * (h * coef);
        }
    }
    out
}

fn max_norm<const N: usize>(v: &[ComplexScalar; N]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
///
/// A stage evaluation that returns [`EvalError::Diverged`] rejects the step
/// and shrinks it; if the step then underflows the outcome is `Diverged`.
/// Other evaluation errors are returned as `Err`.
pub fn integrate<const N: usize, F>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: [ComplexScalar; N],
    opts: &OdeOptions,
) -> Result<OdeOutcome<N>, EvalError>
where
    F: FnMut(f64, &[ComplexScalar; N]) -> Result<[ComplexScalar; N], EvalError>,
{
    let span = t1 - t0;
    assert!(span > 0.0, "integrate requires t1 > t0");
    let mut t = t0;
    let mut y = y0;
    let mut h = span / 64.0;
    let h_min = opts.min_step * span;
    let mut error_sum = 0.0;
    let mut rounding_sum = 0.0;
    let mut steps = 0;
    let mut pole_hit = false;
    let mut k1 = match f(t, &y) {
        Ok(k) => k,
        Err(EvalError::Diverged) => {
            return Ok(OdeOutcome { y, t, error_sum, rounding_sum, steps, stop: OdeStop::Diverged });
        }
        Err(e) => return Err(e),
    };

    while t < t1 {
        if steps >= opts.max_steps {
            return Ok(OdeOutcome { y, t, error_sum, rounding_sum, steps, stop: OdeStop::StepUnderflow });
        }
        if h < h_min {
            let stop = if pole_hit { OdeStop::Diverged } else { OdeStop::StepUnderflow };
            return Ok(OdeOutcome { y, t, error_sum, rounding_sum, steps, stop });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let stages = (|| -> Result<_, EvalError> {
            let k2 = f(t + C2 * h, &lin(&y, h, &[(A21, &k1)]))?;
            let k3 = f(t + C3 * h, &lin(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(t + C4 * h, &lin(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = f(t + C5 * h, &lin(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let k6 = f(
                t + h,
                &lin(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )?;
            let y_new = lin(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            for v in &y_new {
                crate::expr::finite(*v)?;
            }
            let k7 = f(t + h, &y_new)?;
            Ok((k3, k4, k5, k6, k7, y_new))
        })();
        let (k3, k4, k5, k6, k7, y_new) = match stages {
            Ok(s) => s,
            Err(EvalError::Diverged) => {
                pole_hit = true;
                h *= 0.25;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut err_vec = [c(0.0, 0.0); N];
        for i in 0..N {
            err_vec[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let err = max_norm(&err_vec);
        let size = max_norm(&y).max(max_norm(&y_new));
        let scale = (opts.abs_tol + opts.rel_tol * size).min(opts.error_budget);
        // never ask a step for less than a few ulps of the solution itself
        let floor = 8.0 * f64::EPSILON * size;
        let tol = ((h / span) * scale).max(floor);
        if err <= tol {
            if (h / span) * scale < floor {
                rounding_sum += err;
            }
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k7;
            error_sum += err;
            steps += 1;
            pole_hit = false;
            if max_norm(&y) > opts.divergence_cap {
                return Ok(OdeOutcome { y, t, error_sum, rounding_sum, steps, stop: OdeStop::Diverged });
            }
        }
        let factor = if err == 0.0 { 4.0 } else { 0.9 * (tol / err).powf(0.25) };
        h *= factor.clamp(0.2, 4.0);
    }
    Ok(OdeOutcome { y, t: t1, error_sum, rounding_sum, steps, stop: OdeStop::Completed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let out = integrate(|_, y: &[ComplexScalar; 1]| Ok([y[0]]), 0.0, 1.0, [c(1.0, 0.0)], &OdeOptions::default())
            .unwrap();
        assert_eq!(out.stop, OdeStop::Completed);
        assert!((out.y[0] - c(std::f64::consts::E, 0.0)).norm() < 1e-11);
        assert!(out.error_sum <= 1e-10);
    }

    #[test]
    fn rotation_in_complex_plane() {
        // y' = i y over [0, 2π] returns to the start
        let out = integrate(
            |_, y: &[ComplexScalar; 1]| Ok([y[0] * c(0.0, 1.0)]),
            0.0,
            std::f64::consts::TAU,
            [c(1.0, 0.0)],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((out.y[0] - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn blow_up_reports_divergence() {
        // y' = y², y(0) = 1 blows up at t = 1
        let out = integrate(|_, y: &[ComplexScalar; 1]| Ok([y[0] * y[0]]), 0.0, 2.0, [c(1.0, 0.0)], &OdeOptions::default())
            .unwrap();
        assert_eq!(out.stop, OdeStop::Diverged);
        assert!(out.t < 1.0 + 1e-6);
    }

    #[test]
    fn sentinel_rejects_step_then_diverges() {
        // f is undefined past t = 0.5
        let out = integrate(
            |t, _y: &[ComplexScalar; 1]| if t > 0.5 { Err(EvalError::Diverged) } else { Ok([c(1.0, 0.0)]) },
            0.0,
            1.0,
            [c(0.0, 0.0)],
            &OdeOptions::default(),
        )
        .unwrap();
        assert_eq!(out.stop, OdeStop::Diverged);
        assert!((out.t - 0.5).abs() < 1e-9);
    }
}
