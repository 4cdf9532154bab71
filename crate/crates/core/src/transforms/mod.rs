//! Identities built on the engine and residue modules, and the
//! compositional Fourier and Laplace transforms.
//!
//! The checks here compute both sides of an identity numerically and
//! report the deviation; they do not decide pass or fail except where a
//! tolerance is part of the operation.

mod fourier;

use thiserror::Error;

use crate::contour::{Contour, ContourError};
use crate::engine::{comp_integral_ode, inner_compose, outer_compose, EngineConfig, EngineError, FnIntegrand};
use crate::expr::{Bindings, ComplexScalar, EvalError, Expr};
use crate::ode::{integrate, OdeStop};
use crate::residue::{additive_contour_integral, ResidueError, DEFAULT_NODES};

pub use fourier::{
    fourier_inverse, fourier_linearity_check, fourier_transform, inversion_check, laplace_transform,
    log_derived_residual, poisson_composition, DerivedResidual, InverseTable, PoissonReport, TransformConfig,
    TransformValue, RULE_NODES,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Residue(#[from] ResidueError),
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error("{0}")]
    Precondition(String),
    #[error("integrand is not of moderate decay: |h|(1+w²) = {weighted:e} at w = {w} exceeds {bound:e}")]
    DecayCheck { w: f64, weighted: f64, bound: f64 },
    #[error("tail bound {bound:e} still above target at truncation {truncation}")]
    SlowDecay { truncation: f64, bound: f64 },
}

impl From<EvalError> for TransformError {
    fn from(e: EvalError) -> Self {
        TransformError::Engine(e.into())
    }
}

/// Two sides of an identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub lhs: ComplexScalar,
    pub rhs: ComplexScalar,
    pub deviation: f64,
}

impl Comparison {
    pub fn new(lhs: ComplexScalar, rhs: ComplexScalar) -> Comparison {
        Comparison { lhs, rhs, deviation: (lhs - rhs).norm() }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.deviation <= tol
    }
}

fn y(phi: &Expr, path: &Contour, z: ComplexScalar, cfg: &EngineConfig) -> Result<ComplexScalar, TransformError> {
    Ok(comp_integral_ode(phi, path, z, cfg)?.converged()?)
}

/// `∫ (p+q)·g ds∙z` against `∫ p·g ds ∙ ∫ q·g ds ∙ z`.
pub fn homomorphism_check(
    p: &Expr,
    q: &Expr,
    g: &Expr,
    path: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<Comparison, TransformError> {
    let sum = (p.clone() + q.clone()) * g.clone();
    let lhs = y(&sum, path, z, cfg)?;
    let inner = y(&(q.clone() * g.clone()), path, z, cfg)?;
    let rhs = y(&(p.clone() * g.clone()), path, inner, cfg)?;
    Ok(Comparison::new(lhs, rhs))
}

/// `∮ (f+g)·φ` against both orders of `∮ f·φ ∙ ∮ g·φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedComparison {
    pub combined: ComplexScalar,
    pub inner: ComplexScalar,
    pub outer: ComplexScalar,
    pub deviation: f64,
}

impl OrderedComparison {
    fn new(combined: ComplexScalar, inner: ComplexScalar, outer: ComplexScalar) -> Self {
        let deviation = (combined - inner).norm().max((combined - outer).norm());
        OrderedComparison { combined, inner, outer, deviation }
    }
}

pub fn additivity_check(
    f: &Expr,
    g: &Expr,
    phi: &Expr,
    gamma: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<OrderedComparison, TransformError> {
    let combined = y(&((f.clone() + g.clone()) * phi.clone()), gamma, z, cfg)?;
    let f_phi = f.clone() * phi.clone();
    let g_phi = g.clone() * phi.clone();
    let fg = y(&f_phi, gamma, y(&g_phi, gamma, z, cfg)?, cfg)?;
    let gf = y(&g_phi, gamma, y(&f_phi, gamma, z, cfg)?, cfg)?;
    Ok(OrderedComparison::new(combined, fg, gf))
}

/// `Ω_n ∮ c_n/(s−ζ)·φ ds∙z` and the `℧` order against `∮ Σ c_n/(s−ζ)·φ ds∙z`.
pub fn summation_check(
    coeffs: &[ComplexScalar],
    zeta: ComplexScalar,
    phi: &Expr,
    gamma: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<OrderedComparison, TransformError> {
    if coeffs.is_empty() {
        return Err(TransformError::Precondition("summation needs at least one term".into()));
    }
    let kernel = Expr::real(1.0) / (Expr::s() - Expr::constant(zeta));
    let term = |cn: ComplexScalar| Expr::constant(cn) * kernel.clone() * phi.clone();
    let total: ComplexScalar = coeffs.iter().sum();
    let combined = y(&term(total), gamma, z, cfg)?;
    let terms: Vec<Expr> = coeffs.iter().map(|&cn| term(cn)).collect();
    let maps: Vec<_> = terms
        .iter()
        .map(|t| move |v| comp_integral_ode(t, gamma, v, cfg).ok().filter(|r| r.is_converged()).map(|r| r.value).ok_or(EvalError::Diverged))
        .collect();
    let inner = inner_compose(&maps, z)?;
    let outer = outer_compose(&maps, z)?;
    Ok(OrderedComparison::new(combined, inner, outer))
}

/// Truncated compositional Taylor series of `∮_γ φ(s,z)/(s−w) ds∙z` about `ζ`:
/// `Ω_{k=0}^{K} ∮_γ φ(s,z)(w−ζ)^k/(s−ζ)^{k+1} ds ∙ z`.
pub fn taylor_composition(
    phi: &Expr,
    zeta: ComplexScalar,
    w: ComplexScalar,
    k_max: u32,
    gamma: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<ComplexScalar, TransformError> {
    let clearance = (0..=256)
        .map(|j| (gamma.point_at(j as f64 / 256.0).expect("t in range") - zeta).norm())
        .fold(f64::INFINITY, f64::min);
    if (w - zeta).norm() >= clearance {
        return Err(TransformError::Precondition(format!(
            "|w − ζ| = {} must be below the distance {clearance} from ζ to the contour",
            (w - zeta).norm()
        )));
    }
    let terms: Vec<Expr> = (0..=k_max)
        .map(|k| {
            let scale = Expr::constant((w - zeta).powi(k as i32));
            phi.clone() * scale / (Expr::s() - Expr::constant(zeta)).powi(k as i32 + 1)
        })
        .collect();
    let mut v = z;
    for t in terms.iter().rev() {
        v = y(t, gamma, v, cfg)?;
    }
    Ok(v)
}

/// The quantity the Taylor composition converges to.
pub fn taylor_target(
    phi: &Expr,
    w: ComplexScalar,
    gamma: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<ComplexScalar, TransformError> {
    y(&(phi.clone() / (Expr::s() - Expr::constant(w))), gamma, z, cfg)
}

/// `F(w, z) = ∫_γ w·f(s)·φ(s,z) ds∙z`.
pub fn semigroup_eval(
    fs: &Expr,
    phi: &Expr,
    gamma: &Contour,
    w: ComplexScalar,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<ComplexScalar, TransformError> {
    y(&(Expr::constant(w) * fs.clone() * phi.clone()), gamma, z, cfg)
}

/// `F(w, F(α, z))` against `F(w+α, z)`.
pub fn semigroup_check(
    fs: &Expr,
    phi: &Expr,
    gamma: &Contour,
    w: ComplexScalar,
    alpha: ComplexScalar,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<Comparison, TransformError> {
    let lhs = semigroup_eval(fs, phi, gamma, w, semigroup_eval(fs, phi, gamma, alpha, z, cfg)?, cfg)?;
    let rhs = semigroup_eval(fs, phi, gamma, w + alpha, z, cfg)?;
    Ok(Comparison::new(lhs, rhs))
}

pub const INFINITESIMAL_STEP: f64 = 1e-5;

/// Central difference in `w` at `0` of `∫_σ w·f(s)·φ(s,z) ds∙z` (lhs)
/// against the additive integral `∫_σ f(s)·φ(s,z) ds` (rhs).
///
/// Both signs of the step are integrated as one system so they share the
/// step sequence and their truncation errors cancel in the difference.
pub fn infinitesimal_derivative(
    f: &Expr,
    phi: &Expr,
    sigma: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<Comparison, TransformError> {
    let eps = INFINITESIMAL_STEP;
    let integrand = f.clone() * phi.clone();
    let mut state = [z, z];
    let mut opts = crate::ode::OdeOptions {
        abs_tol: cfg.ode_abs_tol,
        rel_tol: cfg.ode_rel_tol,
        error_budget: cfg.tol * eps / sigma.pieces().len() as f64,
        divergence_cap: cfg.divergence_cap,
        ..Default::default()
    };
    opts.abs_tol = opts.abs_tol.min(opts.error_budget);
    for piece in sigma.pieces() {
        let out = integrate(
            |u, st: &[ComplexScalar; 2]| {
                let s = piece.point(u);
                let g = piece.derivative(u) * eps;
                Ok([integrand.eval_sz(s, st[0])? * g, -integrand.eval_sz(s, st[1])? * g])
            },
            0.0,
            1.0,
            state,
            &opts,
        )?;
        if out.stop != OdeStop::Completed {
            return Err(EngineError::Diverged { value: out.y[0] }.into());
        }
        state = out.y;
    }
    let lhs = (state[0] - state[1]) / (2.0 * eps);
    let rhs = additive_contour_integral(|s| integrand.eval_sz(s, z), sigma, DEFAULT_NODES)?;
    Ok(Comparison::new(lhs, rhs))
}

/// Separable Fubini interchange: `∫_γ (∫_τ p dw)·f(s)·φ ds∙z` against
/// `∫_τ p(w)·(∫_γ f(s)·φ(s,z) ds) dw ∙ z`.
pub fn fubini_check(
    p: &Expr,
    fs: &Expr,
    phi: &Expr,
    gamma: &Contour,
    tau: &Contour,
    z: ComplexScalar,
    cfg: &EngineConfig,
) -> Result<Comparison, TransformError> {
    let p_at = |w: ComplexScalar| p.eval(&Bindings::new().w(w));
    let total_p = additive_contour_integral(p_at, tau, DEFAULT_NODES)?;
    let lhs = y(&(Expr::constant(total_p) * fs.clone() * phi.clone()), gamma, z, cfg)?;
    let inner = fs.clone() * phi.clone();
    let log = |v: ComplexScalar| additive_contour_integral(|s| inner.eval_sz(s, v), gamma, DEFAULT_NODES);
    let rhs = comp_integral_ode(&FnIntegrand(|w, v| Ok(p_at(w)? * log(v)?)), tau, z, cfg)?.converged()?;
    Ok(Comparison::new(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{E, PI, TAU};

    use super::*;
    use crate::contour::unit_circle;
    use crate::expr::c;
    use crate::expr::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn seg01() -> Contour {
        Contour::segment(c(0.0, 0.0), c(1.0, 0.0))
    }

    #[test]
    fn homomorphism_examples() {
        let cfg = EngineConfig::default();
        let r = homomorphism_check(&p("1"), &p("1"), &p("z"), &seg01(), c(1.0, 0.0), &cfg).unwrap();
        assert!((r.lhs - c(E * E, 0.0)).norm() < 1e-8);
        assert!(r.passes(1e-8));
        let r = homomorphism_check(&p("s"), &p("-s"), &p("z^2"), &seg01(), c(0.3, 0.1), &cfg).unwrap();
        assert!((r.lhs - c(0.3, 0.1)).norm() < 1e-12);
        assert!(r.passes(1e-8));
        let r = homomorphism_check(&p("s"), &p("s^2"), &p("z^2"), &seg01(), c(0.25, 0.0), &cfg).unwrap();
        assert!(r.passes(1e-8), "{r:?}");
    }

    #[test]
    fn additivity_and_summation() {
        let cfg = EngineConfig::default();
        let r = additivity_check(&p("0.3/s"), &p("0.2/(s-0.5)"), &p("z^2"), &unit_circle(), c(0.1, 0.05), &cfg).unwrap();
        assert!(r.deviation < 1e-6, "{r:?}");
        let coeffs: Vec<_> = (0..12).map(|n| c(0.5f64.powi(n), 0.0)).collect();
        for phi in ["1", "z", "z^2"] {
            let r = summation_check(&coeffs, c(0.0, 0.0), &p(phi), &unit_circle(), c(0.1, 0.0), &cfg).unwrap();
            assert!(r.deviation < 1e-6, "{phi}: {r:?}");
        }
    }

    #[test]
    fn taylor_examples() {
        let cfg = EngineConfig::default();
        let circle = unit_circle();
        let w = c(0.3, 0.0);
        let v = taylor_composition(&p("s*z"), c(0.0, 0.0), w, 1, &circle, c(1.0, 0.0), &cfg).unwrap();
        assert!((v - c(0.0, 0.6 * PI).exp()).norm() < 1e-8);
        let v = taylor_composition(&p("z"), c(0.0, 0.0), w, 0, &circle, c(0.4, 0.0), &cfg).unwrap();
        assert!((v - c(0.4, 0.0)).norm() < 1e-8);
        let target = 1.0 / (1.0 / c(0.2, 0.0) - c(0.0, TAU * 0.3));
        let v = taylor_composition(&p("s*z^2"), c(0.0, 0.0), w, 6, &circle, c(0.2, 0.0), &cfg).unwrap();
        assert!((v - target).norm() < 1e-8);
        let t = taylor_target(&p("s*z^2"), w, &circle, c(0.2, 0.0), &cfg).unwrap();
        assert!((t - target).norm() < 1e-8);
        assert!(taylor_composition(&p("z"), c(0.0, 0.0), c(1.5, 0.0), 2, &circle, c(0.4, 0.0), &cfg).is_err());
    }

    #[test]
    fn semigroup_examples() {
        let cfg = EngineConfig::default();
        let circle = unit_circle();
        let half = semigroup_eval(&p("1/s"), &p("z"), &circle, c(0.5, 0.0), c(1.0, 0.0), &cfg).unwrap();
        assert!((half - c(-1.0, 0.0)).norm() < 1e-8);
        let r = semigroup_check(&p("1/s"), &p("z"), &circle, c(0.25, 0.0), c(0.25, 0.0), c(1.0, 0.0), &cfg).unwrap();
        assert!(r.passes(1e-8));
        let id = semigroup_eval(&p("1/s"), &p("z"), &circle, c(0.0, 0.0), c(0.7, 0.2), &cfg).unwrap();
        assert_eq!(id, c(0.7, 0.2));
        let r = semigroup_check(&p("1/s"), &p("z^2"), &circle, c(0.3, 0.0), c(0.3, 0.0), c(0.1, 0.0), &cfg).unwrap();
        assert!(r.passes(1e-7));
        let closed = 1.0 / (1.0 / c(0.1, 0.0) - c(0.0, TAU * 0.6));
        assert!((r.rhs - closed).norm() < 1e-8);
    }

    #[test]
    fn infinitesimal_examples() {
        let cfg = EngineConfig::default();
        let r = infinitesimal_derivative(&p("1"), &p("z"), &seg01(), c(1.0, 0.0), &cfg).unwrap();
        assert!((r.rhs - c(1.0, 0.0)).norm() < 1e-12);
        assert!(r.passes(1e-6), "{r:?}");
        let r = infinitesimal_derivative(&p("s"), &p("z^2"), &seg01(), c(0.5, 0.0), &cfg).unwrap();
        assert!((r.rhs - c(0.125, 0.0)).norm() < 1e-12);
        assert!(r.passes(1e-6), "{r:?}");
        let r = infinitesimal_derivative(&p("1/s"), &p("exp(z)"), &unit_circle(), c(0.2, 0.0), &cfg).unwrap();
        assert!((r.rhs - c(0.0, TAU) * 0.2f64.exp()).norm() < 1e-10);
        assert!(r.passes(1e-6), "{r:?}");
    }

    #[test]
    fn fubini_examples() {
        let cfg = EngineConfig::default();
        let circle = unit_circle();
        let r = fubini_check(&p("1"), &p("1/s"), &p("z"), &circle, &seg01(), c(1.0, 0.0), &cfg).unwrap();
        assert!((r.lhs - c(1.0, 0.0)).norm() < 1e-8);
        assert!(r.passes(1e-6), "{r:?}");
        let r = fubini_check(&p("w"), &p("1/s"), &p("z"), &circle, &seg01(), c(1.0, 0.0), &cfg).unwrap();
        assert!((r.lhs - c(-1.0, 0.0)).norm() < 1e-8);
        assert!(r.passes(1e-6), "{r:?}");
        let r = fubini_check(&p("1"), &p("1/s"), &p("z^2"), &circle, &seg01(), c(0.1, 0.0), &cfg).unwrap();
        assert!((r.rhs - 1.0 / (1.0 / c(0.1, 0.0) - c(0.0, TAU))).norm() < 1e-8);
        assert!(r.passes(1e-6), "{r:?}");
    }
}
