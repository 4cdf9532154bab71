//! Derived residuals and their compositional Fourier and Laplace transforms.
//!
//! A derived residual `f[h](w,z) = ∮_γ h(w,s)φ(s,z) ds∙z` has logarithm
//! `log(f;w,z) = ∫_γ h(w,s)φ(s,z) ds`, an ordinary contour integral. The
//! transforms integrate that logarithm compositionally along the real line,
//! e.g. `f̂(ξ,z) = ∫ e^{−2πiξw} log(f;w,z) dw ∙ z`, truncated to `[−T, T]`.

use std::f64::consts::TAU;

use crate::contour::Contour;
use crate::engine::{comp_integral_ode, EngineConfig, FnIntegrand, WithW};
use crate::expr::{c, Bindings, ComplexScalar, EvalError, Expr};
use crate::quad::gauss_legendre;
use crate::residue::{ContourRule, PoleSpec};

use super::{Comparison, TransformError};

/// Nodes of the fixed contour rule used for `log(f;w,z)`.
pub const RULE_NODES: usize = 128;
const MAX_TRUNCATION: f64 = 512.0;
const EDGE_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformConfig {
    /// Initial truncation `T` of the real line; doubled while the tail
    /// bound exceeds the target.
    pub truncation: f64,
    /// Gauss–Legendre points per unit length for the classical `w`-integral
    /// behind the inverse transform.
    pub quad_points_per_unit: usize,
    pub tail_bound_target: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig { truncation: 8.0, quad_points_per_unit: 64, tail_bound_target: 1e-10 }
    }
}

impl TransformConfig {
    pub fn validate(&self) -> Result<(), TransformError> {
        if !(self.truncation > 0.0 && self.truncation.is_finite()) {
            return Err(TransformError::Precondition("truncation must be positive".into()));
        }
        if self.quad_points_per_unit < 2 {
            return Err(TransformError::Precondition("need at least 2 quadrature points per unit".into()));
        }
        if !(self.tail_bound_target > 0.0) {
            return Err(TransformError::Precondition("tail bound target must be positive".into()));
        }
        Ok(())
    }
}

/// `f[h](w,z) = ∮_γ h(w,s)φ(s,z) ds∙z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedResidual {
    pub h: Expr,
    pub phi: Expr,
    pub gamma: Contour,
    pub poles: Vec<PoleSpec>,
    integrand: Expr,
    rule: ContourRule,
}

impl DerivedResidual {
    /// `gamma` must be closed and wind around every declared pole.
    pub fn new(h: Expr, phi: Expr, gamma: Contour, poles: Vec<PoleSpec>) -> Result<DerivedResidual, TransformError> {
        DerivedResidual::with_nodes(h, phi, gamma, poles, RULE_NODES)
    }

    /// As [`DerivedResidual::new`] with `nodes` quadrature points per piece for the log.
    pub fn with_nodes(
        h: Expr,
        phi: Expr,
        gamma: Contour,
        poles: Vec<PoleSpec>,
        nodes: usize,
    ) -> Result<DerivedResidual, TransformError> {
        if nodes < 2 {
            return Err(TransformError::Precondition("quadrature needs at least 2 nodes".into()));
        }
        if !gamma.is_closed() {
            return Err(TransformError::Precondition("derived residual needs a closed contour".into()));
        }
        for pole in &poles {
            if gamma.winding_number(pole.location).abs() < 0.5 {
                return Err(TransformError::Precondition(format!("pole {} is not enclosed", pole.location)));
            }
        }
        let rule = ContourRule::new(&gamma, nodes);
        let integrand = h.clone() * phi.clone();
        Ok(DerivedResidual { h, phi, gamma, poles, integrand, rule })
    }

    pub fn rule(&self) -> &ContourRule {
        &self.rule
    }

    pub fn h_at(&self, w: ComplexScalar, s: ComplexScalar) -> Result<ComplexScalar, EvalError> {
        self.h.eval(&Bindings::new().s(s).w(w))
    }

    /// `log(f;w,z) = ∫_γ h(w,s)φ(s,z) ds`.
    pub fn log(&self, w: ComplexScalar, z: ComplexScalar) -> Result<ComplexScalar, EvalError> {
        self.rule.apply(|s| Ok(self.h_at(w, s)? * self.phi.eval_sz(s, z)?))
    }

    /// `f[h](w,z)` itself, by the ODE evaluator.
    pub fn eval(&self, w: ComplexScalar, z: ComplexScalar, cfg: &EngineConfig) -> Result<ComplexScalar, TransformError> {
        let f = WithW { expr: &self.integrand, w };
        Ok(comp_integral_ode(&f, &self.gamma, z, cfg)?.converged()?)
    }

    /// Checks `|h(w,s)| ≤ 4A/(1+w²)` for real `w` in `[−4T, 4T]` and `s` on
    /// the contour, with `A` the largest `|h|(1+w²)` over `|w| ≤ 1`.
    /// Returns `A`.
    pub fn check_decay(&self, truncation: f64) -> Result<f64, TransformError> {
        let weighted = |w: f64| -> Result<f64, TransformError> {
            let mut m: f64 = 0.0;
            for &s in &self.rule.nodes {
                m = m.max(self.h_at(c(w, 0.0), s)?.norm());
            }
            Ok(m * (1.0 + w * w))
        };
        let mut a: f64 = 0.0;
        for j in 0..=16 {
            a = a.max(weighted(-1.0 + j as f64 / 8.0)?);
        }
        let bound = 4.0 * a + 1e-300;
        for j in 0..=256 {
            let w = -4.0 * truncation + 8.0 * truncation * j as f64 / 256.0;
            let v = weighted(w)?;
            if v > bound {
                return Err(TransformError::DecayCheck { w, weighted: v, bound });
            }
        }
        Ok(a)
    }
}

/// `log(f;w,z)` of a derived residual.
pub fn log_derived_residual(d: &DerivedResidual, w: ComplexScalar, z: ComplexScalar) -> Result<ComplexScalar, TransformError> {
    Ok(d.log(w, z)?)
}

/// A transform value with the truncation actually used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformValue {
    pub value: ComplexScalar,
    pub truncation: f64,
    pub steps: usize,
    pub error_estimate: f64,
}

/// Smallest `T = T0·2^k` whose tail bound `sides·A_edge/T` meets the
/// target, where `A_edge = max |g(w)|(1+w²)` over `T ≤ |w| ≤ min(4T, limit)`.
/// `g` is only trusted up to `limit`.
fn choose_truncation<G>(g: G, two_sided: bool, tcfg: &TransformConfig, limit: f64) -> Result<f64, TransformError>
where
    G: Fn(f64) -> Result<f64, EvalError>,
{
    tcfg.validate()?;
    let sides = if two_sided { 2.0 } else { 1.0 };
    let limit = limit.min(4.0 * MAX_TRUNCATION);
    let mut t = tcfg.truncation;
    loop {
        let top = (4.0 * t).min(limit).max(t);
        let mut a: f64 = 0.0;
        for j in 0..=EDGE_SAMPLES {
            let w = t + (top - t) * j as f64 / EDGE_SAMPLES as f64;
            a = a.max(g(w)? * (1.0 + w * w));
            if two_sided {
                a = a.max(g(-w)? * (1.0 + w * w));
            }
        }
        let bound = sides * a / t;
        if bound <= tcfg.tail_bound_target {
            return Ok(t);
        }
        if t >= MAX_TRUNCATION || 2.0 * t > limit {
            return Err(TransformError::SlowDecay { truncation: t, bound });
        }
        t *= 2.0;
    }
}

fn compose_along<F>(f: F, a: f64, b: f64, z: ComplexScalar, cfg: &EngineConfig) -> Result<(ComplexScalar, usize, f64), TransformError>
where
    F: Fn(ComplexScalar, ComplexScalar) -> Result<ComplexScalar, EvalError>,
{
    let path = Contour::segment(c(a, 0.0), c(b, 0.0));
    let r = comp_integral_ode(&FnIntegrand(f), &path, z, cfg)?;
    let value = r.converged()?;
    Ok((value, r.n_final, r.error_estimate))
}

/// `f̂(ξ,z) = ∫_{−T}^{T} e^{−2πiξw} log(f;w,z) dw ∙ z`.
pub fn fourier_transform(
    d: &DerivedResidual,
    xi: ComplexScalar,
    z: ComplexScalar,
    tcfg: &TransformConfig,
    cfg: &EngineConfig,
) -> Result<TransformValue, TransformError> {
    d.check_decay(tcfg.truncation)?;
    let kernel = move |w: f64| (c(0.0, -TAU) * xi * w).exp();
    let t = choose_truncation(|w| Ok((kernel(w) * d.log(c(w, 0.0), z)?).norm()), true, tcfg, f64::INFINITY)?;
    let (value, steps, err) = compose_along(|w, y| Ok(kernel(w.re) * d.log(w, y)?), -t, t, z, cfg)?;
    Ok(TransformValue { value, truncation: t, steps, error_estimate: err })
}

/// Tabulated `h(w_m, s_j)` on a composite Gauss–Legendre grid in `w` and the
/// contour rule in `s`, giving `ĥ(ξ, s_j) = Σ_m q_m e^{−2πi w_m ξ} h(w_m, s_j)`.
#[derive(Debug, Clone)]
pub struct InverseTable {
    w_nodes: Vec<f64>,
    w_weights: Vec<f64>,
    /// Row-major, one row per `w` node.
    h: Vec<ComplexScalar>,
    s_nodes: Vec<ComplexScalar>,
    s_weights: Vec<ComplexScalar>,
    phi: Expr,
    points_per_unit: usize,
    pub truncation: f64,
}

impl InverseTable {
    pub fn new(d: &DerivedResidual, tcfg: &TransformConfig) -> Result<InverseTable, TransformError> {
        d.check_decay(tcfg.truncation)?;
        let rule = d.rule();
        let h_max = |w: f64| -> Result<f64, EvalError> {
            let mut m: f64 = 0.0;
            for (s, q) in rule.nodes.iter().zip(&rule.weights) {
                m += (d.h_at(c(w, 0.0), *s)? * q).norm();
            }
            Ok(m)
        };
        let t = choose_truncation(h_max, true, tcfg, f64::INFINITY)?;
        let panels = (2.0 * t).ceil() as usize;
        let width = 2.0 * t / panels as f64;
        let (gx, gw) = gauss_legendre(tcfg.quad_points_per_unit);
        let mut w_nodes = Vec::with_capacity(panels * gx.len());
        let mut w_weights = Vec::with_capacity(panels * gx.len());
        for p in 0..panels {
            let lo = -t + p as f64 * width;
            for (x, q) in gx.iter().zip(&gw) {
                w_nodes.push(lo + 0.5 * width * (x + 1.0));
                w_weights.push(0.5 * width * q);
            }
        }
        let mut h = Vec::with_capacity(w_nodes.len() * rule.nodes.len());
        for &w in &w_nodes {
            for &s in &rule.nodes {
                h.push(d.h_at(c(w, 0.0), s)?);
            }
        }
        Ok(InverseTable {
            w_nodes,
            w_weights,
            h,
            s_nodes: rule.nodes.clone(),
            s_weights: rule.weights.clone(),
            phi: d.phi.clone(),
            points_per_unit: tcfg.quad_points_per_unit,
            truncation: t,
        })
    }

    /// Largest `|ξ|` the `w` grid resolves: a quarter of the nodes per unit.
    pub fn resolved_frequency(&self) -> f64 {
        self.points_per_unit as f64 / 4.0
    }

    /// `ĥ(ξ, s_j)` for every contour node.
    pub fn h_hat(&self, xi: ComplexScalar) -> Vec<ComplexScalar> {
        let cols = self.s_nodes.len();
        let mut out = vec![c(0.0, 0.0); cols];
        for (m, (&w, &q)) in self.w_nodes.iter().zip(&self.w_weights).enumerate() {
            let e = (c(0.0, -TAU) * xi * w).exp() * q;
            let row = &self.h[m * cols..(m + 1) * cols];
            for (o, hv) in out.iter_mut().zip(row) {
                *o += e * hv;
            }
        }
        out
    }

    /// `log(f̂;ξ,z) = ∫_γ ĥ(ξ,s)φ(s,z) ds`.
    pub fn log_hat(&self, xi: ComplexScalar, z: ComplexScalar) -> Result<ComplexScalar, EvalError> {
        let hat = self.h_hat(xi);
        let mut sum = c(0.0, 0.0);
        for ((hv, s), q) in hat.iter().zip(&self.s_nodes).zip(&self.s_weights) {
            sum += hv * self.phi.eval_sz(*s, z)? * q;
        }
        crate::expr::finite(sum)
    }
}

/// `∫_{−T}^{T} e^{2πiξw} log(f̂;ξ,z) dξ ∙ z`.
pub fn fourier_inverse(
    table: &InverseTable,
    w: ComplexScalar,
    z: ComplexScalar,
    tcfg: &TransformConfig,
    cfg: &EngineConfig,
) -> Result<TransformValue, TransformError> {
    let kernel = move |xi: f64| (c(0.0, TAU) * xi * w).exp();
    let t = choose_truncation(|xi| Ok((kernel(xi) * table.log_hat(c(xi, 0.0), z)?).norm()), true, tcfg, table.resolved_frequency())?;
    let (value, steps, err) = compose_along(|xi, y| Ok(kernel(xi.re) * table.log_hat(xi, y)?), -t, t, z, cfg)?;
    Ok(TransformValue { value, truncation: t, steps, error_estimate: err })
}

/// Round trip `f ↦ f̂ ↦ f` at `(w, z)`: lhs is the inverse transform,
/// rhs the derived residual evaluated directly.
pub fn inversion_check(
    d: &DerivedResidual,
    w: ComplexScalar,
    z: ComplexScalar,
    tcfg: &TransformConfig,
    cfg: &EngineConfig,
) -> Result<Comparison, TransformError> {
    let table = InverseTable::new(d, tcfg)?;
    let lhs = fourier_inverse(&table, w, z, tcfg, cfg)?.value;
    let rhs = d.eval(w, z, cfg)?;
    Ok(Comparison::new(lhs, rhs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonReport {
    pub n_max: u32,
    /// `Ω_{n=−N}^{N} f(n, ·) ∙ z`.
    pub lhs: ComplexScalar,
    /// `Ω_{n=−N}^{N} f̂(n, ·) ∙ z`.
    pub rhs: ComplexScalar,
    pub deviation: f64,
}

/// Both sides of the truncated Poisson composition formula. Factors are
/// applied from `n = N` down to `n = −N`.
pub fn poisson_composition(
    d: &DerivedResidual,
    n_max: u32,
    z: ComplexScalar,
    tcfg: &TransformConfig,
    cfg: &EngineConfig,
) -> Result<PoissonReport, TransformError> {
    let n = i64::from(n_max);
    let mut lhs = z;
    let mut rhs = z;
    for k in (-n..=n).rev() {
        let at = c(k as f64, 0.0);
        lhs = d.eval(at, lhs, cfg)?;
        rhs = fourier_transform(d, at, rhs, tcfg, cfg)?.value;
    }
    Ok(PoissonReport { n_max, lhs, rhs, deviation: (lhs - rhs).norm() })
}

/// `Ω_j f̂_j(ξ,z)` (lhs) against the transform of the residual whose `h` is
/// `Σ_j h_j` (rhs). All residuals must share `φ` and `γ`.
pub fn fourier_linearity_check(
    ds: &[DerivedResidual],
    xi: ComplexScalar,
    z: ComplexScalar,
    tcfg: &TransformConfig,
    cfg: &EngineConfig,
) -> Result<Comparison, TransformError> {
    let first = ds.first().ok_or_else(|| TransformError::Precondition("empty list".into()))?;
    if ds.iter().any(|d| d.phi != first.phi || d.gamma != first.gamma) {
        return Err(TransformError::Precondition("all residuals must share phi and the contour".into()));
    }
    let mut lhs = z;
    for d in ds.iter().rev() {
        lhs = fourier_transform(d, xi, lhs, tcfg, cfg)?.value;
    }
    let h = ds[1..].iter().fold(first.h.clone(), |acc, d| acc + d.h.clone());
    let poles = ds.iter().flat_map(|d| d.poles.iter().cloned()).collect();
    let combined = DerivedResidual::new(h, first.phi.clone(), first.gamma.clone(), poles)?;
    let rhs = fourier_transform(&combined, xi, z, tcfg, cfg)?.value;
    Ok(Comparison::new(lhs, rhs))
}

/// `F(y,z) = ∫_0^T e^{−yx} log(f;x,z) dx ∙ z` for `Re y > 0`.
pub fn laplace_transform(
    d: &DerivedResidual,
    y: ComplexScalar,
    z: ComplexScalar,
    tcfg: &TransformConfig,
    cfg: &EngineConfig,
) -> Result<TransformValue, TransformError> {
    if !(y.re > 0.0) {
        return Err(TransformError::Precondition(format!("Laplace transform needs Re y > 0, got {y}")));
    }
    let kernel = move |x: f64| (-y * x).exp();
    let t = choose_truncation(|x| Ok((kernel(x) * d.log(c(x, 0.0), z)?).norm()), false, tcfg, f64::INFINITY)?;
    let (value, steps, err) = compose_along(|x, v| Ok(kernel(x.re) * d.log(x, v)?), 0.0, t, z, cfg)?;
    Ok(TransformValue { value, truncation: t, steps, error_estimate: err })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::contour::unit_circle;
    use crate::expr::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn origin() -> Vec<PoleSpec> {
        vec![PoleSpec::new(c(0.0, 0.0), 1, "0").unwrap()]
    }

    fn gaussian(phi: &str) -> DerivedResidual {
        DerivedResidual::new(p("exp(-pi*w^2)/s"), p(phi), unit_circle(), origin()).unwrap()
    }

    #[test]
    fn log_examples() {
        let d = DerivedResidual::new(p("1/s"), p("z"), unit_circle(), origin()).unwrap();
        let v = log_derived_residual(&d, c(3.0, 0.0), c(0.4, 0.1)).unwrap();
        assert!((v - c(0.0, TAU) * c(0.4, 0.1)).norm() < 1e-12);
        let d = DerivedResidual::new(p("w/s"), p("z"), unit_circle(), origin()).unwrap();
        assert_eq!(d.log(c(0.0, 0.0), c(0.4, 0.0)).unwrap(), c(0.0, 0.0));
        let d = gaussian("z");
        let v = d.log(c(1.0, 0.0), c(0.3, 0.0)).unwrap();
        assert!((v - c(0.0, TAU) * (-PI).exp() * 0.3).norm() < 1e-12);
    }

    #[test]
    fn construction_preconditions() {
        let open = Contour::segment(c(0.0, 0.0), c(1.0, 0.0));
        assert!(DerivedResidual::new(p("1/s"), p("z"), open, vec![]).is_err());
        let far = vec![PoleSpec::new(c(3.0, 0.0), 1, "3").unwrap()];
        assert!(DerivedResidual::new(p("1/(s-3)"), p("z"), unit_circle(), far).is_err());
    }

    #[test]
    fn decay_check() {
        assert!(gaussian("1").check_decay(8.0).is_ok());
        let slow = DerivedResidual::new(p("1/s"), p("1"), unit_circle(), origin()).unwrap();
        assert!(matches!(slow.check_decay(8.0), Err(TransformError::DecayCheck { .. })));
        let cfg = EngineConfig::default();
        assert!(fourier_transform(&slow, c(0.0, 0.0), c(0.0, 0.0), &TransformConfig::default(), &cfg).is_err());
    }

    #[test]
    fn gaussian_transform_is_self_dual() {
        let cfg = EngineConfig::default();
        let tcfg = TransformConfig::default();
        let d = gaussian("1");
        for xi in [0.0, 0.5, 1.0] {
            let v = fourier_transform(&d, c(xi, 0.0), c(0.1, 0.0), &tcfg, &cfg).unwrap();
            let expected = c(0.1, 0.0) + c(0.0, TAU) * (-PI * xi * xi).exp();
            assert!((v.value - expected).norm() < 1e-8, "xi={xi}: {:?}", v);
        }
        let d = gaussian("z");
        let v = fourier_transform(&d, c(0.0, 0.0), c(0.2, 0.0), &tcfg, &cfg).unwrap();
        assert!((v.value - c(0.2, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let cfg = EngineConfig::default();
        let tcfg = TransformConfig::default();
        for phi in ["1", "z", "z^2"] {
            let d = DerivedResidual::new(p("0*w/s"), p(phi), unit_circle(), origin()).unwrap();
            let v = fourier_transform(&d, c(0.3, 0.0), c(0.1, -0.1), &tcfg, &cfg).unwrap();
            assert_eq!(v.value, c(0.1, -0.1));
        }
    }

    #[test]
    fn inverse_table_reproduces_gaussian() {
        let table = InverseTable::new(&gaussian("1"), &TransformConfig::default()).unwrap();
        for xi in [0.0, 0.7] {
            let hat = table.h_hat(c(xi, 0.0));
            // ĥ(ξ, s) = e^{−πξ²}/s at the first node s = 1
            assert!((hat[0] - c((-PI * xi * xi).exp(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_at_half() {
        let cfg = EngineConfig::default();
        let tcfg = TransformConfig::default();
        let r = inversion_check(&gaussian("1"), c(0.5, 0.0), c(0.0, 0.0), &tcfg, &cfg).unwrap();
        assert!((r.rhs - c(0.0, TAU * (-PI / 4.0).exp())).norm() < 1e-9);
        assert!(r.passes(1e-5), "{r:?}");
    }

    #[test]
    fn poisson_single_term() {
        let cfg = EngineConfig::default();
        let r = poisson_composition(&gaussian("1"), 0, c(0.0, 0.0), &TransformConfig::default(), &cfg).unwrap();
        assert!((r.lhs - c(0.0, TAU)).norm() < 1e-9);
        assert!(r.deviation < 1e-8);
    }

    #[test]
    fn linearity_single_element() {
        let cfg = EngineConfig::default();
        let r = fourier_linearity_check(&[gaussian("1")], c(0.2, 0.0), c(0.1, 0.0), &TransformConfig::default(), &cfg)
            .unwrap();
        assert!(r.deviation < 1e-12);
    }

    #[test]
    fn laplace_examples() {
        let cfg = EngineConfig::default();
        let tcfg = TransformConfig::default();
        let d = DerivedResidual::new(p("exp(-w)/s"), p("1"), unit_circle(), origin()).unwrap();
        let v = laplace_transform(&d, c(1.0, 0.0), c(0.2, 0.0), &tcfg, &cfg).unwrap();
        assert!((v.value - c(0.2, PI)).norm() < 1e-6, "{v:?}");
        let v = laplace_transform(&d, c(1e4, 0.0), c(0.2, 0.0), &tcfg, &cfg).unwrap();
        assert!((v.value - c(0.2, 0.0)).norm() < 1e-3);
        let d = DerivedResidual::new(p("exp(-w)/s"), p("z"), unit_circle(), origin()).unwrap();
        let v = laplace_transform(&d, c(1.0, 0.0), c(0.3, 0.0), &tcfg, &cfg).unwrap();
        assert!((v.value - c(-0.3, 0.0)).norm() < 1e-6, "{v:?}");
        assert!(laplace_transform(&d, c(-1.0, 0.0), c(0.3, 0.0), &tcfg, &cfg).is_err());
    }
}
