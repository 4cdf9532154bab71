//! Evaluators for the compositional integral `∫_γ φ(s,z) ds∙z`.
//!
//! Two routes are provided and cross-checked against each other:
//!
//! * [`comp_integral`] realises the definition directly: the partial
//!   composition `z ← z + φ(γ(x*), z)·Δγ` over a uniform partition with
//!   midpoint samples, refined by doubling. The partial compositions have an
//!   asymptotic expansion in the mesh width, so the refinement sequence is
//!   accelerated with a Richardson table and stopped once successive
//!   extrapolants agree to `tol`.
//! * [`comp_integral_ode`] integrates the equivalent initial value problem
//!   `y' = φ(γ(t), y)·γ'(t)`, `y(0) = z` with an embedded Runge–Kutta pair.
//!
//! A composite whose magnitude exceeds the divergence cap, or an integrand
//! evaluation that hits a pole, marks the point as outside the domain of
//! normality (`Status::Diverged`).

use std::f64::consts::TAU;

use rayon::prelude::*;
use thiserror::Error;

use crate::contour::Contour;
use crate::expr::{c, eval_dual, ComplexScalar, Dual, EvalError, Expr};
use crate::ode::{integrate, OdeOptions, OdeStop};
use crate::residue::additive_contour_integral;

/// Something that can be integrated compositionally: `φ(s, z)`.
pub trait Integrand {
    fn eval(&self, s: ComplexScalar, z: ComplexScalar) -> Result<ComplexScalar, EvalError>;
}

/// An integrand whose `z`-derivative is available exactly.
pub trait DiffIntegrand: Integrand {
    fn eval_dual(&self, s: ComplexScalar, z: ComplexScalar) -> Result<Dual, EvalError>;
}

impl Integrand for Expr {
    fn eval(&self, s: ComplexScalar, z: ComplexScalar) -> Result<ComplexScalar, EvalError> {
        self.eval_sz(s, z)
    }
}

impl DiffIntegrand for Expr {
    fn eval_dual(&self, s: ComplexScalar, z: ComplexScalar) -> Result<Dual, EvalError> {
        eval_dual(self, s, z, None)
    }
}

/// An expression with its `w` variable held fixed.
#[derive(Debug, Clone, Copy)]
pub struct WithW<'a> {
    pub expr: &'a Expr,
    pub w: ComplexScalar,
}

impl Integrand for WithW<'_> {
    fn eval(&self, s: ComplexScalar, z: ComplexScalar) -> Result<ComplexScalar, EvalError> {
        self.expr.eval(&crate::expr::Bindings::new().s(s).z(z).w(self.w))
    }
}

impl DiffIntegrand for WithW<'_> {
    fn eval_dual(&self, s: ComplexScalar, z: ComplexScalar) -> Result<Dual, EvalError> {
        eval_dual(self.expr, s, z, Some(self.w))
    }
}

/// Adapts a closure `(s, z) -> φ(s, z)`.
pub struct FnIntegrand<F>(pub F);

impl<F> Integrand for FnIntegrand<F>
where
    F: Fn(ComplexScalar, ComplexScalar) -> Result<ComplexScalar, EvalError>,
{
    fn eval(&self, s: ComplexScalar, z: ComplexScalar) -> Result<ComplexScalar, EvalError> {
        (self.0)(s, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub tol: f64,
    pub max_doublings: u32,
    pub initial_n: usize,
    pub divergence_cap: f64,
    pub ode_abs_tol: f64,
    pub ode_rel_tol: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            tol: 1e-10,
            max_doublings: 24,
            initial_n: 16,
            divergence_cap: 1e8,
            ode_abs_tol: 1e-12,
            ode_rel_tol: 1e-10,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.tol > 0.0) {
            return Err(EngineError::InvalidConfig("tol must be positive".into()));
        }
        if self.initial_n < 2 {
            return Err(EngineError::InvalidConfig("initial_n must be at least 2".into()));
        }
        if !(self.divergence_cap > 1.0) {
            return Err(EngineError::InvalidConfig("divergence_cap must exceed 1".into()));
        }
        if !(self.ode_abs_tol >= 0.0 && self.ode_rel_tol >= 0.0) {
            return Err(EngineError::InvalidConfig("ODE tolerances must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn ode_options(&self, pieces: usize) -> OdeOptions {
        OdeOptions {
            abs_tol: self.ode_abs_tol,
            rel_tol: self.ode_rel_tol,
            error_budget: self.tol / pieces as f64,
            divergence_cap: self.divergence_cap,
            ..OdeOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    Diverged,
    MaxRefinement,
}

impl Status {
    pub fn code(self) -> char {
        match self {
            Status::Converged => 'C',
            Status::Diverged => 'D',
            Status::MaxRefinement => 'M',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Diverged => "diverged",
            Status::MaxRefinement => "max_refinement",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Riemann,
    Ode,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Riemann => "riemann",
            Method::Ode => "ode",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompResult {
    /// Converged value, or the last finite composite otherwise.
    pub value: ComplexScalar,
    pub status: Status,
    /// Partition size per piece (Riemann) or accepted steps (ODE).
    pub n_final: usize,
    pub error_estimate: f64,
    pub method: Method,
}

impl CompResult {
    pub fn is_converged(&self) -> bool {
        self.status == Status::Converged
    }

    /// The value, or an error naming the status.
    pub fn converged(&self) -> Result<ComplexScalar, EngineError> {
        match self.status {
            Status::Converged => Ok(self.value),
            Status::Diverged => Err(EngineError::Diverged { value: self.value }),
            Status::MaxRefinement => Err(EngineError::NoConvergence { estimate: self.error_estimate }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("integrand evaluation failed: {0}")]
    Eval(EvalError),
    #[error("composition diverged (last value {value})")]
    Diverged { value: ComplexScalar },
    #[error("no convergence (error estimate {estimate:e})")]
    NoConvergence { estimate: f64 },
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl From<EvalError> for EngineError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Diverged => EngineError::Diverged { value: c(f64::INFINITY, 0.0) },
            other => EngineError::Eval(other),
        }
    }
}

// ---------------------------------------------------------------------------
// Ω and ℧

/// `Ω_j φ_j ∙ z = φ_0(φ_1(…φ_m(z)))`: the last map is applied first.
pub fn inner_compose<F>(maps: &[F], z: ComplexScalar) -> Result<ComplexScalar, EvalError>
where
    F: Fn(ComplexScalar) -> Result<ComplexScalar, EvalError>,
{
    maps.iter().rev().try_fold(z, |acc, m| m(acc))
}

/// `℧_j φ_j ∙ z = φ_m(…φ_1(φ_0(z)))`: the first map is applied first.
pub fn outer_compose<F>(maps: &[F], z: ComplexScalar) -> Result<ComplexScalar, EvalError>
where
    F: Fn(ComplexScalar) -> Result<ComplexScalar, EvalError>,
{
    maps.iter().try_fold(z, |acc, m| m(acc))
}

// ---------------------------------------------------------------------------
// Riemann compositions

fn riemann_capped<I: Integrand + ?Sized>(
    phi: &I,
    contour: &Contour,
    z: ComplexScalar,
    n: usize,
    cap: f64,
) -> Result<ComplexScalar, EvalError> {
    let mut y = z;
    for piece in contour.pieces() {
        let inv = 1.0 / n as f64;
        let mut left = piece.point(0.0);
        for j in 0..n {
            let right = piece.point((j + 1) as f64 * inv);
            let mid = piece.point((j as f64 + 0.5) * inv);
            y += phi.eval(mid, y)? * (right - left);
            if !(y.norm() <= cap) {
                return Err(EvalError::Diverged);
            }
            left = right;
        }
    }
    Ok(y)
}

/// One partial composition with `n` uniform sub-intervals per piece,
/// applied in traversal order.
pub fn riemann_partial<I: Integrand + ?Sized>(
    phi: &I,
    contour: &Contour,
    z: ComplexScalar,
    n: usize,
    cfg: &EngineConfig,
) -> Result<ComplexScalar, EngineError> {
    if n == 0 {
        return Err(EngineError::InvalidConfig("partition size must be at least 1".into()));
    }
    riemann_capped(phi, contour, z, n, cfg.divergence_cap).map_err(|e| match e {
        EvalError::Diverged => EngineError::Diverged { value: c(f64::INFINITY, 0.0) },
        other => EngineError::Eval(other),
    })
}

/// The same partial composition written as an Ω over a descending
/// partition. Kept as the literal transcription of the definition.
pub fn riemann_partial_descending<I: Integrand + ?Sized>(
    phi: &I,
    contour: &Contour,
    z: ComplexScalar,
    n: usize,
) -> Result<ComplexScalar, EvalError> {
    let mut maps: Vec<Box<dyn Fn(ComplexScalar) -> Result<ComplexScalar, EvalError> + '_>> = Vec::new();
    // descending: index 0 is the last sub-interval walked
    for piece in contour.pieces().iter().rev() {
        for j in (0..n).rev() {
            let inv = 1.0 / n as f64;
            let hi = piece.point((j + 1) as f64 * inv);
            let lo = piece.point(j as f64 * inv);
            let mid = piece.point((j as f64 + 0.5) * inv);
            maps.push(Box::new(move |y| Ok(y + phi.eval(mid, y)? * (hi - lo))));
        }
    }
    inner_compose(&maps, z)
}

/// Depth of the Richardson table; deeper levels only amplify rounding.
const RICHARDSON_DEPTH: usize = 6;
/// Consecutive diverged refinements before declaring the point divergent.
const DIVERGED_LEVELS: u32 = 3;
/// Coarser partitions can overshoot past the cap near a singular point and
/// recover on refinement, so their divergence does not count.
const RESOLVED_N: usize = 1024;

/// Riemann-composition evaluator with doubling refinement.
pub fn comp_integral<I: Integrand + ?Sized>(
    phi: &I,
    contour: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<CompResult, EngineError> {
    cfg.validate()?;
    let mut n = cfg.initial_n;
    let mut prev: Vec<ComplexScalar> = Vec::new();
    let mut diverged_run = 0;
    let mut last_value = z;
    let mut last_err = f64::INFINITY;
    for level in 0..=cfg.max_doublings {
        match riemann_capped(phi, contour, z, n, cfg.divergence_cap) {
            Ok(y) => {
                diverged_run = 0;
                let mut row = Vec::with_capacity(prev.len() + 1);
                row.push(y);
                for k in 1..=prev.len().min(RICHARDSON_DEPTH) {
                    let factor = f64::from(1u32 << k) - 1.0;
                    let r = row[k - 1] + (row[k - 1] - prev[k - 1]) / factor;
                    row.push(r);
                }
                let best = *row.last().expect("non-empty row");
                if let Some(prev_best) = prev.last() {
                    last_err = (best - prev_best).norm();
                    last_value = best;
                    if prev.len() >= 2 && last_err <= cfg.tol {
                        return Ok(CompResult {
                            value: best,
                            status: Status::Converged,
                            n_final: n,
                            error_estimate: last_err,
                            method: Method::Riemann,
                        });
                    }
                } else {
                    last_value = best;
                }
                prev = row;
            }
            Err(EvalError::Diverged) => {
                if n >= RESOLVED_N {
                    diverged_run += 1;
                }
                prev.clear();
                if diverged_run >= DIVERGED_LEVELS || level == cfg.max_doublings {
                    return Ok(CompResult {
                        value: last_value,
                        status: Status::Diverged,
                        n_final: n,
                        error_estimate: f64::INFINITY,
                        method: Method::Riemann,
                    });
                }
            }
            Err(e) => return Err(EngineError::Eval(e)),
        }
        n *= 2;
    }
    Ok(CompResult {
        value: last_value,
        status: Status::MaxRefinement,
        n_final: n / 2,
        error_estimate: last_err,
        method: Method::Riemann,
    })
}

// ---------------------------------------------------------------------------
// ODE route

fn ode_status(stop: OdeStop) -> Status {
    match stop {
        OdeStop::Completed => Status::Converged,
        OdeStop::Diverged => Status::Diverged,
        OdeStop::StepUnderflow => Status::MaxRefinement,
    }
}

/// Integrates `y' = φ(γ(t), y)·γ'(t)` piece by piece.
pub fn comp_integral_ode<I: Integrand + ?Sized>(
    phi: &I,
    contour: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<CompResult, EngineError> {
    cfg.validate()?;
    let opts = cfg.ode_options(contour.pieces().len());
    let mut y = z;
    let mut err = 0.0;
    let mut rounding = 0.0;
    let mut steps = 0;
    for piece in contour.pieces() {
        let out = integrate(
            |u, state: &[ComplexScalar; 1]| Ok([phi.eval(piece.point(u), state[0])? * piece.derivative(u)]),
            0.0,
            1.0,
            [y],
            &opts,
        )
        .map_err(EngineError::Eval)?;
        y = out.y[0];
        err += out.error_sum;
        rounding += out.rounding_sum;
        steps += out.steps;
        if out.stop != OdeStop::Completed {
            return Ok(CompResult {
                value: y,
                status: ode_status(out.stop),
                n_final: steps,
                error_estimate: f64::INFINITY,
                method: Method::Ode,
            });
        }
    }
    // steps at the rounding floor count in the estimate but not against the budget
    let status = if err - rounding <= cfg.tol { Status::Converged } else { Status::MaxRefinement };
    Ok(CompResult { value: y, status, n_final: steps, error_estimate: err, method: Method::Ode })
}

/// Runs the evaluator selected by `method`.
pub fn comp_integral_with<I: Integrand + ?Sized>(
    method: Method,
    phi: &I,
    contour: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<CompResult, EngineError> {
    match method {
        Method::Riemann => comp_integral(phi, contour, z, cfg),
        Method::Ode => comp_integral_ode(phi, contour, z, cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeResult {
    pub value: ComplexScalar,
    /// `dY/dz`, equal to `exp(∫ φ_z(w, Y_{γ_w}(z)) dw)`.
    pub derivative: ComplexScalar,
    pub status: Status,
    pub n_final: usize,
    pub error_estimate: f64,
}

/// Evaluates `Y_γ(z)` and `dY_γ/dz` by integrating the variational
/// log-derivative `u' = φ_z(γ, y)·γ'` alongside `y`.
pub fn comp_integral_with_derivative<I: DiffIntegrand + ?Sized>(
    phi: &I,
    contour: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<DerivativeResult, EngineError> {
    cfg.validate()?;
    let mut opts = cfg.ode_options(contour.pieces().len());
    // the log-derivative must not trip the cap used for y
    opts.divergence_cap = f64::INFINITY;
    let mut state = [z, c(0.0, 0.0)];
    let mut err = 0.0;
    let mut rounding = 0.0;
    let mut steps = 0;
    for piece in contour.pieces() {
        let out = integrate(
            |u, st: &[ComplexScalar; 2]| {
                let d = phi.eval_dual(piece.point(u), st[0])?;
                let g = piece.derivative(u);
                if st[0].norm() > cfg.divergence_cap {
                    return Err(EvalError::Diverged);
                }
                Ok([d.value * g, d.deriv * g])
            },
            0.0,
            1.0,
            state,
            &opts,
        )
        .map_err(EngineError::Eval)?;
        state = out.y;
        err += out.error_sum;
        rounding += out.rounding_sum;
        steps += out.steps;
        if out.stop != OdeStop::Completed || state[0].norm() > cfg.divergence_cap {
            let status = if out.stop == OdeStop::StepUnderflow { Status::MaxRefinement } else { Status::Diverged };
            return Ok(DerivativeResult {
                value: state[0],
                derivative: state[1].exp(),
                status,
                n_final: steps,
                error_estimate: f64::INFINITY,
            });
        }
    }
    Ok(DerivativeResult {
        value: state[0],
        derivative: state[1].exp(),
        status: if err - rounding <= cfg.tol { Status::Converged } else { Status::MaxRefinement },
        n_final: steps,
        error_estimate: err,
    })
}

const NEWTON_MAX_ITER: usize = 50;

/// Solves `Y_γ(z) = target` for `z` by Newton iteration from `guess`.
pub fn local_inverse<I: DiffIntegrand + ?Sized>(
    phi: &I,
    contour: &Contour,
    target: ComplexScalar,
    guess: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<ComplexScalar, EngineError> {
    let mut z = guess;
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let r = comp_integral_with_derivative(phi, contour, z, cfg)?;
        if r.status != Status::Converged {
            return Err(EngineError::Diverged { value: r.value });
        }
        let miss = r.value - target;
        residual = miss.norm();
        if residual <= 10.0 * cfg.tol {
            return Ok(z);
        }
        z -= miss / r.derivative;
    }
    Err(EngineError::NoConvergence { estimate: residual })
}

// ---------------------------------------------------------------------------
// Domain-of-normality map

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub z: ComplexScalar,
    pub result: CompResult,
}

/// Pixels in row order: imaginary part outer (ascending), real part inner.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<GridCell>,
}

impl Grid {
    pub fn count(&self, status: Status) -> usize {
        self.cells.iter().filter(|c| c.result.status == status).count()
    }
}

/// Classifies every pixel of `window` by the status of [`comp_integral`].
pub fn classify_grid<I: Integrand + Sync + ?Sized>(
    phi: &I,
    contour: &Contour,
    window: Window,
    nx: usize,
    ny: usize,
    cfg: &EngineConfig,
) -> Result<Grid, EngineError> {
    if nx < 2 || ny < 2 {
        return Err(EngineError::InvalidConfig("grid needs nx, ny >= 2".into()));
    }
    if !(window.re_min < window.re_max && window.im_min < window.im_max) {
        return Err(EngineError::InvalidConfig("window needs re_min < re_max and im_min < im_max".into()));
    }
    cfg.validate()?;
    let dx = (window.re_max - window.re_min) / (nx - 1) as f64;
    let dy = (window.im_max - window.im_min) / (ny - 1) as f64;
    let cells = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / nx, idx % nx);
            let z = c(window.re_min + col as f64 * dx, window.im_min + row as f64 * dy);
            comp_integral(phi, contour, z, cfg).map(|result| GridCell { z, result })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Grid { nx, ny, cells })
}

// ---------------------------------------------------------------------------
// Bounds and local expansions

const DISK_SAMPLES: usize = 64;
const PADDING_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalBound {
    /// `∫_γ max_{|z−z0|≤L} |φ(s,z)| |ds|`.
    pub bound: f64,
    /// The padded radius `L = K + κ` the maximum was taken over.
    pub radius: f64,
}

fn sup_integral<I: Integrand + ?Sized>(phi: &I, contour: &Contour, z0: ComplexScalar, radius: f64) -> f64 {
    let disk: Vec<ComplexScalar> = (0..DISK_SAMPLES)
        .map(|k| z0 + c(0.0, TAU * k as f64 / DISK_SAMPLES as f64).exp() * radius)
        .collect();
    let mut total = 0.0;
    for piece in contour.pieces() {
        let integral = crate::quad::adaptive_simpson(
            |u| {
                let s = piece.point(u);
                let mut m: f64 = 0.0;
                for &z in &disk {
                    m = m.max(phi.eval(s, z).map(|v| v.norm()).unwrap_or(f64::INFINITY));
                }
                Ok(c(m * piece.derivative(u).norm(), 0.0))
            },
            0.0,
            1.0,
            1e-8,
            1e-14,
        );
        total += integral.map(|v| v.re).unwrap_or(f64::INFINITY);
    }
    total
}

/// Triangle-inequality bound `sup_{|z−z0|≤K} |Y_γ(z) − z| ≤ bound`.
///
/// The maximum of `|φ|` is taken on a disk padded by `κ` so that the
/// trajectories stay inside it; `κ` is the smallest self-consistent padding
/// `κ = B(K + κ)`, found by fixed-point iteration from `κ = 0`. When no
/// such padding exists the bound is infinite.
pub fn normal_sum_bound<I: Integrand + ?Sized>(
    phi: &I,
    contour: &Contour,
    k_radius: f64,
    z0: ComplexScalar,
) -> NormalBound {
    let mut kappa = 0.0;
    for _ in 0..PADDING_ITERATIONS {
        let next = sup_integral(phi, contour, z0, k_radius + kappa);
        if !next.is_finite() || next > 1e12 {
            break;
        }
        if next <= kappa * (1.0 + 1e-12) {
            return NormalBound { bound: next, radius: k_radius + kappa };
        }
        kappa = next;
    }
    NormalBound { bound: f64::INFINITY, radius: f64::INFINITY }
}

const FIXED_POINT_SAMPLES: usize = 64;
const FIXED_POINT_TOL: f64 = 1e-12;

/// First-order coefficient of `Y_γ` at a uniform zero `z0` of `φ`:
/// `Y_γ(z) = z0 + e^{∫_γ φ_z(s,z0) ds}(z − z0) + O((z−z0)²)`.
pub fn fixed_point_coefficient<I: DiffIntegrand + ?Sized>(
    phi: &I,
    contour: &Contour,
    z0: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<ComplexScalar, EngineError> {
    for k in 0..=FIXED_POINT_SAMPLES {
        let s = contour.point_at(k as f64 / FIXED_POINT_SAMPLES as f64).expect("t in range");
        let v = phi.eval(s, z0)?;
        if v.norm() > FIXED_POINT_TOL {
            return Err(EngineError::Precondition(format!(
                "z0 = {z0} is not a fixed point: |phi({s}, z0)| = {:e}",
                v.norm()
            )));
        }
    }
    let exponent = additive_contour_integral(|s| Ok(phi.eval_dual(s, z0)?.deriv), contour, 256)?;
    let image = comp_integral_ode(phi, contour, z0, cfg)?.converged()?;
    if (image - z0).norm() > cfg.tol {
        return Err(EngineError::Precondition(format!("Y(z0) = {image} moved away from z0 = {z0}")));
    }
    Ok(exponent.exp())
}
