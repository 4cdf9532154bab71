//! Classical contour quadrature, Cauchy coefficients and compositional
//! residuals around declared poles.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::contour::{ArcPiece, Contour, ContourError};
use crate::engine::{comp_integral_ode, inner_compose, EngineConfig, EngineError, Integrand};
use crate::expr::{c, Bindings, ComplexScalar, EvalError, Expr};
use crate::quad::{adaptive_simpson, gauss_legendre};

pub const DEFAULT_NODES: usize = 256;
const TRAPEZOID_MAX_NODES: usize = 1 << 16;
const ADDITIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidueError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error("pole order must be at least 1")]
    InvalidOrder,
    #[error("no pole detected at {0}: the integrand does not blow up there")]
    NotAPole(ComplexScalar),
    #[error("residual depends on the circle radius: |Y(δ) − Y(δ/2)| = {gap:e} at δ = {delta}")]
    DeltaDependence { delta: f64, gap: f64 },
    #[error("circles around {a} and {b} overlap")]
    OverlappingCircles { a: ComplexScalar, b: ComplexScalar },
    #[error("family {family} requires {expected}, got n = {n}")]
    FamilyMismatch { family: &'static str, expected: &'static str, n: u32 },
    #[error("turns must be at least 1")]
    InvalidTurns,
    #[error("{what}: deviation {deviation:e} exceeds {tol:e}")]
    Disagreement { what: &'static str, deviation: f64, tol: f64 },
}

impl From<EvalError> for ResidueError {
    fn from(e: EvalError) -> Self {
        ResidueError::Engine(e.into())
    }
}

// ---------------------------------------------------------------------------
// Additive quadrature

fn trapezoid_piece<F>(f: &F, piece: &ArcPiece, n: usize) -> Result<ComplexScalar, EvalError>
where
    F: Fn(ComplexScalar) -> Result<ComplexScalar, EvalError>,
{
    let mut sum = c(0.0, 0.0);
    for j in 0..n {
        let u = j as f64 / n as f64;
        sum += f(piece.point(u))? * piece.derivative(u);
    }
    Ok(sum / n as f64)
}

/// `∫_c f(s) ds` for a function of `s` alone.
///
/// Whole-turn circular pieces use the trapezoid rule, starting from `n`
/// nodes and doubling until two successive values agree to `1e-12`; other
/// pieces use adaptive Simpson at the same tolerance.
pub fn additive_contour_integral<F>(f: F, contour: &Contour, n: usize) -> Result<ComplexScalar, EvalError>
where
    F: Fn(ComplexScalar) -> Result<ComplexScalar, EvalError>,
{
    let mut total = c(0.0, 0.0);
    for piece in contour.pieces() {
        if piece.is_full_turns() {
            let mut nodes = n.max(4);
            let mut prev = trapezoid_piece(&f, piece, nodes)?;
            while nodes < TRAPEZOID_MAX_NODES {
                nodes *= 2;
                let next = trapezoid_piece(&f, piece, nodes)?;
                let settled = (next - prev).norm() <= ADDITIVE_TOL * next.norm().max(1.0);
                prev = next;
                if settled {
                    break;
                }
            }
            total += prev;
        } else {
            total += adaptive_simpson(|u| Ok(f(piece.point(u))? * piece.derivative(u)), 0.0, 1.0, ADDITIVE_TOL, 1e-14)?;
        }
    }
    crate::expr::finite(total)
}

/// `∫_c f(s) ds` for an expression in `s`, with `z` and `w` fixed.
pub fn additive_integral_expr(
    f: &Expr,
    contour: &Contour,
    z: Option<ComplexScalar>,
    w: Option<ComplexScalar>,
    n: usize,
) -> Result<ComplexScalar, EvalError> {
    additive_contour_integral(
        |s| {
            let b = Bindings { s: Some(s), z, w };
            f.eval(&b)
        },
        contour,
        n,
    )
}

/// A fixed quadrature rule on a contour: `∫_c f(s) ds ≈ Σ weight_j f(s_j)`.
///
/// Whole-turn circles get an `n`-node trapezoid rule and every other piece
/// an `n`-node Gauss–Legendre rule. Useful when the same contour integral
/// is needed for many values of a parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourRule {
    pub nodes: Vec<ComplexScalar>,
    pub weights: Vec<ComplexScalar>,
}

impl ContourRule {
    pub fn new(contour: &Contour, n: usize) -> ContourRule {
        let (gl_x, gl_w) = gauss_legendre(n);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for piece in contour.pieces() {
            if piece.is_full_turns() {
                for j in 0..n {
                    let u = j as f64 / n as f64;
                    nodes.push(piece.point(u));
                    weights.push(piece.derivative(u) / n as f64);
                }
            } else {
                for (x, w) in gl_x.iter().zip(&gl_w) {
                    let u = 0.5 * (x + 1.0);
                    nodes.push(piece.point(u));
                    weights.push(piece.derivative(u) * (0.5 * w));
                }
            }
        }
        ContourRule { nodes, weights }
    }

    pub fn apply<F>(&self, f: F) -> Result<ComplexScalar, EvalError>
    where
        F: Fn(ComplexScalar) -> Result<ComplexScalar, EvalError>,
    {
        let mut sum = c(0.0, 0.0);
        for (s, w) in self.nodes.iter().zip(&self.weights) {
            sum += f(*s)? * w;
        }
        crate::expr::finite(sum)
    }
}

/// `p^{(k)}(ζ)/k!` as `(1/2πi)∮ p(s)/(s−ζ)^{k+1} ds` on the circle of the
/// given radius, by the `n`-node trapezoid rule.
pub fn cauchy_taylor_coeff_fn<F>(p: F, zeta: ComplexScalar, k: u32, radius: f64, n: usize) -> Result<ComplexScalar, EvalError>
where
    F: Fn(ComplexScalar) -> Result<ComplexScalar, EvalError>,
{
    let mut sum = c(0.0, 0.0);
    for j in 0..n {
        let theta = TAU * j as f64 / n as f64;
        let u = c(0.0, theta).exp() * radius;
        sum += p(zeta + u)? / u.powi(k as i32);
    }
    crate::expr::finite(sum / n as f64)
}

pub fn cauchy_taylor_coeff(p: &Expr, zeta: ComplexScalar, k: u32, radius: f64, n: usize) -> Result<ComplexScalar, EvalError> {
    cauchy_taylor_coeff_fn(|s| p.eval(&Bindings::new().s(s)), zeta, k, radius, n)
}

// ---------------------------------------------------------------------------
// Poles and residuals

/// A declared pole of an integrand in `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSpec {
    pub location: ComplexScalar,
    pub order: u32,
    pub label: String,
}

const POLE_PROBES: [ComplexScalar; 2] = [ComplexScalar { re: 0.5, im: 0.25 }, ComplexScalar { re: -0.3, im: 0.4 }];
const POLE_GROWTH: f64 = 1e2;

impl PoleSpec {
    pub fn new(location: ComplexScalar, order: u32, label: impl Into<String>) -> Result<PoleSpec, ResidueError> {
        if order == 0 {
            return Err(ResidueError::InvalidOrder);
        }
        Ok(PoleSpec { location, order, label: label.into() })
    }

    /// Declares a pole and checks that `f` actually blows up there: the
    /// magnitude at distance `1e-6` must exceed the magnitude at distance
    /// `1e-3` by at least a factor 100, in every sampled direction, for some
    /// probe value of `z`.
    pub fn for_integrand<I: Integrand + ?Sized>(
        f: &I,
        location: ComplexScalar,
        order: u32,
        label: impl Into<String>,
    ) -> Result<PoleSpec, ResidueError> {
        let pole = PoleSpec::new(location, order, label)?;
        let grows = |z: ComplexScalar| {
            (0..4).all(|k| {
                let dir = c(0.0, 0.3 + k as f64 * PI / 2.0).exp();
                let near = f.eval(location + dir * 1e-6, z).map(|v| v.norm());
                let far = f.eval(location + dir * 1e-3, z).map(|v| v.norm());
                match (near, far) {
                    (Ok(n), Ok(f)) => n >= POLE_GROWTH * f,
                    (Err(EvalError::Diverged), _) => true,
                    _ => false,
                }
            })
        };
        if POLE_PROBES.iter().any(|&z| grows(z)) {
            Ok(pole)
        } else {
            Err(ResidueError::NotAPole(location))
        }
    }
}

/// Default circle radius: half the distance to the nearest other pole,
/// capped at `0.5`.
pub fn default_delta(pole: &PoleSpec, others: &[PoleSpec]) -> f64 {
    others
        .iter()
        .filter(|o| o.location != pole.location)
        .map(|o| 0.5 * (o.location - pole.location).norm())
        .fold(0.5, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualValue {
    pub value: ComplexScalar,
    pub pole: ComplexScalar,
    pub delta: f64,
    /// `|Y_δ(z) − Y_{δ/2}(z)|`.
    pub error_estimate: f64,
}

/// `Rsd(f, ζ; z)`: the compositional integral of `f` once around the circle
/// of radius `δ` about the pole, re-evaluated at `δ/2` as a consistency check.
pub fn compositional_residual<I: Integrand + ?Sized>(
    f: &I,
    pole: &PoleSpec,
    z: ComplexScalar,
    delta: f64,
    cfg: &EngineConfig,
) -> Result<ResidualValue, ResidueError> {
    let around = |r: f64| -> Result<ComplexScalar, ResidueError> {
        let circle = Contour::circle(pole.location, r, 1)?;
        Ok(comp_integral_ode(f, &circle, z, cfg)?.converged()?)
    };
    let value = around(delta)?;
    let half = around(0.5 * delta)?;
    let gap = (value - half).norm();
    if gap > 100.0 * cfg.tol * value.norm().max(1.0) {
        return Err(ResidueError::DeltaDependence { delta, gap });
    }
    Ok(ResidualValue { value, pole: pole.location, delta, error_estimate: gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `p(s)/(s−ζ)^{k+1}`
    Constant,
    /// `p(s)·z/(s−ζ)^{k+1}`
    Linear,
    /// `p(s)·z²/(s−ζ)^{k+1}`
    Square,
    /// `p(s)·zⁿ/(s−ζ)^{k+1}`, `n ≥ 3`
    PowerN,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::Linear => "linear",
            Family::Square => "square",
            Family::PowerN => "power_n",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        match name {
            "constant" | "additive" => Some(Family::Constant),
            "linear" => Some(Family::Linear),
            "square" => Some(Family::Square),
            "power_n" => Some(Family::PowerN),
            _ => None,
        }
    }

    /// The family a power of `z` belongs to.
    pub fn for_power(n: u32) -> Family {
        match n {
            0 => Family::Constant,
            1 => Family::Linear,
            2 => Family::Square,
            _ => Family::PowerN,
        }
    }

    fn check(self, n: u32) -> Result<(), ResidueError> {
        let (ok, expected) = match self {
            Family::Constant => (n == 0, "n = 0"),
            Family::Linear => (n == 1, "n = 1"),
            Family::Square => (n == 2, "n = 2"),
            Family::PowerN => (n >= 3, "n >= 3"),
        };
        if ok {
            Ok(())
        } else {
            Err(ResidueError::FamilyMismatch { family: self.name(), expected, n })
        }
    }

    /// Closed-form residual map given the Taylor coefficient `a = p^{(k)}(ζ)/k!`.
    pub fn apply(self, a: ComplexScalar, n: u32, z: ComplexScalar) -> Result<ClosedForm, EvalError> {
        let two_pi_i_a = c(0.0, TAU) * a;
        let value = match self {
            Family::Constant => z + two_pi_i_a,
            Family::Linear => z * two_pi_i_a.exp(),
            Family::Square => crate::expr::checked_div(c(1.0, 0.0), crate::expr::checked_div(c(1.0, 0.0), z)? - two_pi_i_a)?,
            Family::PowerN => return power_n_form(a, n, z),
        };
        Ok(ClosedForm { value: crate::expr::finite(value)?, branch_ambiguous: false })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub value: ComplexScalar,
    /// The principal `(n−1)`-th root may not be the continuation of the
    /// flow: either it does not return `z` at the start, or the straight
    /// path of the root's argument crosses the negative real axis.
    pub branch_ambiguous: bool,
}

fn power_n_form(a: ComplexScalar, n: u32, z: ComplexScalar) -> Result<ClosedForm, EvalError> {
    let m = n as i32 - 1;
    let start = crate::expr::powi(z, -m)?;
    let end = start - c(0.0, TAU) * a * f64::from(m);
    let root = |v: ComplexScalar| (-v.ln() / f64::from(m)).exp();
    let value = crate::expr::finite(root(end))?;
    if end.norm() == 0.0 {
        return Err(EvalError::Diverged);
    }
    let start_ok = (root(start) - z).norm() <= 1e-9 * z.norm().max(1e-300);
    let crosses_cut = {
        let d = end - start;
        if d.im == 0.0 {
            start.re < 0.0 || end.re < 0.0
        } else {
            let t = -start.im / d.im;
            (0.0..=1.0).contains(&t) && start.re + t * d.re <= 0.0
        }
    };
    Ok(ClosedForm { value, branch_ambiguous: !start_ok || crosses_cut })
}

pub const TAYLOR_RADIUS: f64 = 0.5;

/// The closed-form residual of `p(s)·zⁿ/(s−ζ)^{k+1}` at `ζ`, using the
/// Cauchy coefficient of `p` on a circle of radius [`TAYLOR_RADIUS`].
pub fn closed_form_residual(
    family: Family,
    p: &Expr,
    zeta: ComplexScalar,
    k: u32,
    n: u32,
    z: ComplexScalar,
) -> Result<ClosedForm, ResidueError> {
    family.check(n)?;
    let a = cauchy_taylor_coeff(p, zeta, k, TAYLOR_RADIUS, DEFAULT_NODES)?;
    Ok(family.apply(a, n, z)?)
}

// ---------------------------------------------------------------------------
// Conjugacy, residual classes, winding

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub probes: Vec<ComplexScalar>,
    pub lhs: Vec<ComplexScalar>,
    pub rhs: Vec<ComplexScalar>,
    pub deviations: Vec<f64>,
}

impl ProbeReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.deviations.iter().all(|d| *d <= tol)
    }
}

/// Checks `Y_τ(Y_γ(z)) = Y_φ(Y_τ(z))` for two loops `γ`, `φ` about the same
/// pole joined by the arc `τ` from the base of `γ` to the base of `φ`.
pub fn conjugacy_check<I: Integrand + ?Sized>(
    f: &I,
    gamma: &Contour,
    phi_c: &Contour,
    tau: &Contour,
    probes: &[ComplexScalar],
    cfg: &EngineConfig,
) -> Result<ProbeReport, ResidueError> {
    let y = |path: &Contour, z: ComplexScalar| -> Result<ComplexScalar, ResidueError> {
        Ok(comp_integral_ode(f, path, z, cfg)?.converged()?)
    };
    let mut report = ProbeReport { probes: probes.to_vec(), lhs: vec![], rhs: vec![], deviations: vec![] };
    for &z in probes {
        let lhs = y(tau, y(gamma, z)?)?;
        let rhs = y(phi_c, y(tau, z)?)?;
        report.lhs.push(lhs);
        report.rhs.push(rhs);
        report.deviations.push((lhs - rhs).norm());
    }
    Ok(report)
}

/// `Ω_j Rsd(f, ζ_j; z)`: per-pole residuals composed in the given order,
/// the last pole's residual being applied first.
pub fn residual_class_compose<I: Integrand + ?Sized>(
    f: &I,
    poles: &[PoleSpec],
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<ComplexScalar, ResidueError> {
    let deltas: Vec<f64> = poles.iter().map(|p| default_delta(p, poles)).collect();
    for i in 0..poles.len() {
        for j in i + 1..poles.len() {
            if deltas[i] + deltas[j] >= (poles[i].location - poles[j].location).norm() {
                return Err(ResidueError::OverlappingCircles { a: poles[i].location, b: poles[j].location });
            }
        }
    }
    let failure = std::cell::RefCell::new(None);
    let maps: Vec<_> = poles
        .iter()
        .zip(&deltas)
        .map(|(pole, &delta)| {
            let failure = &failure;
            move |z| match compositional_residual(f, pole, z, delta, cfg) {
                Ok(r) => Ok(r.value),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    Err(EvalError::Diverged)
                }
            }
        })
        .collect();
    match inner_compose(&maps, z) {
        Ok(v) => Ok(v),
        Err(e) => Err(failure.into_inner().unwrap_or_else(|| e.into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindingReport {
    /// Integral over the multi-turn circle.
    pub direct: ComplexScalar,
    /// `turns`-fold self-composition of the single-turn residual.
    pub composed: ComplexScalar,
    pub deviation: f64,
}

pub const WINDING_TOL: f64 = 1e-6;

/// Compares the integral over a `turns`-fold circle with the `turns`-fold
/// composition of the single-turn residual.
pub fn winding_compose<I: Integrand + ?Sized>(
    f: &I,
    pole: &PoleSpec,
    turns: u32,
    z: ComplexScalar,
    delta: f64,
    cfg: &EngineConfig,
) -> Result<WindingReport, ResidueError> {
    if turns == 0 {
        return Err(ResidueError::InvalidTurns);
    }
    let circle = Contour::circle(pole.location, delta, turns as i32)?;
    let direct = comp_integral_ode(f, &circle, z, cfg)?.converged()?;
    let mut composed = z;
    for _ in 0..turns {
        composed = compositional_residual(f, pole, composed, delta, cfg)?.value;
    }
    let deviation = (direct - composed).norm();
    if deviation > WINDING_TOL {
        return Err(ResidueError::Disagreement { what: "winding composition", deviation, tol: WINDING_TOL });
    }
    Ok(WindingReport { direct, composed, deviation })
}
