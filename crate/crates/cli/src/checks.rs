//! Named identity checks with their default fixtures.

use std::f64::consts::{PI, TAU};

use clap::Args;
use serde_json::{json, Value};

use compint::contour::parse_contour;
use compint::engine::{
    comp_integral, comp_integral_ode, comp_integral_with_derivative, normal_sum_bound, EngineConfig,
};
use compint::residue::{
    compositional_residual, conjugacy_check, residual_class_compose, winding_compose, PoleSpec,
};
use compint::transforms::{
    additivity_check, fourier_linearity_check, fubini_check, homomorphism_check, infinitesimal_derivative,
    inversion_check, laplace_transform, poisson_composition, semigroup_check, summation_check, taylor_composition,
    taylor_target, DerivedResidual, TransformConfig,
};
use compint::{c, parse_expr, ComplexScalar, Contour, Expr};

use crate::report::{config_echo, Failure};
use crate::{complex_arg, contour_arg, expr_arg, Common};

pub const NAMES: [&str; 20] = [
    "closed-contour",
    "path-independence",
    "orientation",
    "homomorphism",
    "derivative",
    "normality",
    "residual-delta",
    "conjugacy",
    "residual-class",
    "winding",
    "additivity",
    "summation",
    "taylor",
    "semigroup",
    "infinitesimal",
    "fubini",
    "fourier-inversion",
    "poisson",
    "linearity",
    "laplace",
];

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub contour: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Residual family for transform checks: additive or linear.
    #[arg(long)]
    pub family: Option<String>,
    /// Gaussian width for transform checks.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Truncation of the bilateral composition.
    #[arg(long = "N")]
    pub n: Option<u32>,
}

struct Case {
    name: String,
    deviation: f64,
    tol: f64,
    error: Option<String>,
}

impl Case {
    fn pass(&self) -> bool {
        self.error.is_none() && self.deviation <= self.tol
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "deviation": self.deviation,
            "tol": self.tol,
            "pass": self.pass(),
            "error": self.error,
        })
    }
}

fn case<E: std::fmt::Display>(name: impl Into<String>, result: Result<f64, E>, tol: f64) -> Case {
    match result {
        Ok(deviation) => Case { name: name.into(), deviation, tol, error: None },
        Err(e) => Case { name: name.into(), deviation: f64::INFINITY, tol, error: Some(e.to_string()) },
    }
}

const PROBES: [ComplexScalar; 5] = [
    ComplexScalar { re: 0.1, im: 0.0 },
    ComplexScalar { re: -0.2, im: 0.1 },
    ComplexScalar { re: 0.0, im: 0.3 },
    ComplexScalar { re: 0.25, im: -0.25 },
    ComplexScalar { re: -0.4, im: 0.0 },
];

const PHIS: [&str; 5] = ["z", "z^2", "0.2*exp(-z)", "s*z+1", "exp(z)*s^2"];

fn p(text: &str) -> Expr {
    parse_expr(text).expect("fixture expression")
}

fn k(text: &str) -> Contour {
    parse_contour(text).expect("fixture contour")
}

fn pole(at: ComplexScalar) -> PoleSpec {
    PoleSpec::new(at, 1, format!("{at}")).expect("order 1")
}

fn y(phi: &Expr, path: &Contour, z: ComplexScalar, cfg: &EngineConfig) -> Result<ComplexScalar, String> {
    comp_integral_ode(phi, path, z, cfg).and_then(|r| r.converged()).map_err(|e| e.to_string())
}

struct Inputs {
    phis: Vec<(String, Expr)>,
    contour: Option<(String, Contour)>,
    probes: Vec<ComplexScalar>,
}

fn inputs(o: &Overrides) -> Result<Inputs, Failure> {
    let phis = match &o.phi {
        Some(text) => vec![(text.clone(), expr_arg("phi", text)?)],
        None => PHIS.iter().map(|t| (t.to_string(), p(t))).collect(),
    };
    let contour = match &o.contour {
        Some(text) => Some((text.clone(), contour_arg("contour", text)?)),
        None => None,
    };
    let probes = match &o.z {
        Some(text) => vec![complex_arg("z", text)?],
        None => PROBES.to_vec(),
    };
    Ok(Inputs { phis, contour, probes })
}

fn reject(name: &str, o: &Overrides, allowed: &[&str]) -> Result<(), Failure> {
    let given = [
        ("phi", o.phi.is_some()),
        ("contour", o.contour.is_some()),
        ("z", o.z.is_some()),
        ("family", o.family.is_some()),
        ("scale", o.scale.is_some()),
        ("N", o.n.is_some()),
    ];
    for (flag, present) in given {
        if present && !allowed.contains(&flag) {
            return Err(Failure::usage(format!("check {name} does not take --{flag}")));
        }
    }
    Ok(())
}

pub fn run(name: &str, o: &Overrides, common: &Common) -> Result<(Value, u8), Failure> {
    let cfg = common.engine();
    let tcfg = common.transform();
    let cases = match name {
        "closed-contour" => {
            reject(name, o, &["phi", "contour", "z"])?;
            closed_contour(&inputs(o)?, &cfg)
        }
        "path-independence" => {
            reject(name, o, &["phi", "z"])?;
            path_independence(&inputs(o)?, &cfg)
        }
        "orientation" => {
            reject(name, o, &["phi", "contour", "z"])?;
            orientation(&inputs(o)?, &cfg)
        }
        "homomorphism" => {
            reject(name, o, &[])?;
            homomorphism(&cfg)
        }
        "derivative" => {
            reject(name, o, &["phi", "contour", "z"])?;
            derivative(o, &cfg)?
        }
        "normality" => {
            reject(name, o, &[])?;
            normality(&cfg)
        }
        "residual-delta" => {
            reject(name, o, &["phi", "z"])?;
            residual_delta(o, common, &cfg)?
        }
        "conjugacy" => {
            reject(name, o, &[])?;
            conjugacy(&cfg)
        }
        "residual-class" => {
            reject(name, o, &[])?;
            residual_class(&cfg)
        }
        "winding" => {
            reject(name, o, &[])?;
            winding(&cfg)
        }
        "additivity" => {
            reject(name, o, &[])?;
            additivity(&cfg)
        }
        "summation" => {
            reject(name, o, &[])?;
            summation(&cfg)
        }
        "taylor" => {
            reject(name, o, &[])?;
            taylor(&cfg)
        }
        "semigroup" => {
            reject(name, o, &[])?;
            semigroup(&cfg)
        }
        "infinitesimal" => {
            reject(name, o, &[])?;
            infinitesimal(&cfg)
        }
        "fubini" => {
            reject(name, o, &[])?;
            fubini(&cfg)
        }
        "fourier-inversion" => {
            reject(name, o, &[])?;
            fourier_inversion(&tcfg, &cfg)
        }
        "poisson" => {
            reject(name, o, &["family", "scale", "N", "z"])?;
            poisson(o, &tcfg, &cfg)?
        }
        "linearity" => {
            reject(name, o, &[])?;
            linearity(&tcfg, &cfg)
        }
        "laplace" => {
            reject(name, o, &[])?;
            laplace(&tcfg, &cfg)
        }
        other => return Err(Failure::usage(format!("unknown check `{other}`"))),
    };
    for c in &cases {
        let mark = if c.pass() { "ok  " } else { "FAIL" };
        match &c.error {
            Some(e) => eprintln!("{mark} {}: {e}", c.name),
            None => eprintln!("{mark} {}: deviation {:.3e} (tol {:.0e})", c.name, c.deviation, c.tol),
        }
    }
    let pass = cases.iter().all(Case::pass);
    let report = json!({
        "command": "check",
        "check": name,
        "config": config_echo(common, &json!({
            "phi": o.phi, "contour": o.contour, "z": o.z, "family": o.family, "scale": o.scale, "N": o.n,
        })),
        "cases": cases.iter().map(Case::to_json).collect::<Vec<_>>(),
        "pass": pass,
    });
    Ok((report, if pass { 0 } else { 4 }))
}

fn closed_contour(inp: &Inputs, cfg: &EngineConfig) -> Vec<Case> {
    let contours = match &inp.contour {
        Some(given) => vec![given.clone()],
        None => [
            "circle(0,1)",
            "seg(-0.5-0.5i,0.5-0.5i) > seg(0.5-0.5i,0.5+0.5i) > seg(0.5+0.5i,-0.5+0.5i) > seg(-0.5+0.5i,-0.5-0.5i)",
            "arc(0,1,0,pi) > rev(arc(0,1,0,pi))",
        ]
        .iter()
        .map(|t| (t.to_string(), k(t)))
        .collect(),
    };
    let mut cases = Vec::new();
    for (pn, phi) in &inp.phis {
        for (cn, path) in &contours {
            for &z in &inp.probes {
                let r = y(phi, path, z, cfg).map(|v| (v - z).norm());
                cases.push(case(format!("{pn} on {cn} at {z}"), r, 1e-6));
            }
        }
    }
    cases
}

fn path_independence(inp: &Inputs, cfg: &EngineConfig) -> Vec<Case> {
    let straight = k("seg(0,1)");
    let bent = k("arc(0.5,0.5,pi,0)");
    let mut cases = Vec::new();
    for (pn, phi) in &inp.phis {
        for &z in &inp.probes {
            let r = y(phi, &straight, z, cfg).and_then(|a| y(phi, &bent, z, cfg).map(|b| (a - b).norm()));
            cases.push(case(format!("{pn} at {z}"), r, 1e-6));
        }
    }
    cases
}

fn orientation(inp: &Inputs, cfg: &EngineConfig) -> Vec<Case> {
    let arcs = match &inp.contour {
        Some(given) => vec![given.clone()],
        None => ["seg(0,0.5)", "arc(0,1,0,0.5)", "seg(0.2i,0.3+0.1i)"].iter().map(|t| (t.to_string(), k(t))).collect(),
    };
    let mut cases = Vec::new();
    for (pn, phi) in &inp.phis {
        for (cn, path) in &arcs {
            for &z in &inp.probes {
                let r = y(phi, path, z, cfg).and_then(|v| y(phi, &path.rev(), v, cfg)).map(|back| (back - z).norm());
                cases.push(case(format!("{pn} on {cn} at {z}"), r, 1e-6));
            }
        }
    }
    cases
}

fn homomorphism(cfg: &EngineConfig) -> Vec<Case> {
    let seg = k("seg(0,1)");
    let fixtures = [("1", "1", "z", c(1.0, 0.0)), ("s", "-s", "z^2", c(0.3, 0.1)), ("s", "s^2", "z^2", c(0.25, 0.0))];
    fixtures
        .iter()
        .map(|(a, b, g, z)| {
            let r = homomorphism_check(&p(a), &p(b), &p(g), &seg, *z, cfg).map(|r| r.deviation);
            case(format!("p={a} q={b} g={g} at {z}"), r, 1e-8)
        })
        .collect()
}

fn derivative(o: &Overrides, cfg: &EngineConfig) -> Result<Vec<Case>, Failure> {
    let fixtures: Vec<(String, String, ComplexScalar)> = match (&o.phi, &o.contour, &o.z) {
        (None, None, None) => vec![
            ("z".into(), "seg(0,0.5)".into(), c(1.0, 0.0)),
            ("z^2".into(), "seg(0,1)".into(), c(0.5, 0.0)),
            ("exp(-z)".into(), "seg(0,1)".into(), c(0.0, 0.1)),
            ("s*z".into(), "arc(0,1,0,1)".into(), c(0.3, 0.0)),
        ],
        _ => vec![(
            o.phi.clone().unwrap_or_else(|| "z^2".into()),
            o.contour.clone().unwrap_or_else(|| "seg(0,1)".into()),
            match &o.z {
                Some(t) => complex_arg("z", t)?,
                None => c(0.5, 0.0),
            },
        )],
    };
    let tight = cfg.with_tol(1e-13);
    let h = 1e-5;
    let mut cases = Vec::new();
    for (pt, ct, z) in fixtures {
        let phi = expr_arg("phi", &pt)?;
        let path = contour_arg("contour", &ct)?;
        let r = (|| -> Result<f64, String> {
            let d = comp_integral_with_derivative(&phi, &path, z, cfg).map_err(|e| e.to_string())?;
            if d.derivative.norm() == 0.0 {
                return Err("derivative vanished".into());
            }
            let at = |v: ComplexScalar| {
                comp_integral(&phi, &path, v, &tight).and_then(|r| r.converged()).map_err(|e| e.to_string())
            };
            let fd = (at(z + h)? - at(z - h)?) / (2.0 * h);
            Ok((d.derivative - fd).norm() / fd.norm())
        })();
        cases.push(case(format!("{pt} on {ct} at {z}"), r, 1e-5));
    }
    Ok(cases)
}

fn normality(cfg: &EngineConfig) -> Vec<Case> {
    let fixtures = [("1", "seg(0,1)", 0.7, c(0.3, 0.0)), ("z", "seg(0,0.5)", 1.0, c(0.0, 0.0)), ("z^2", "seg(0,0.5)", 0.3, c(0.0, 0.0))];
    let mut cases = Vec::new();
    for (pt, ct, radius, z0) in fixtures {
        let phi = p(pt);
        let path = k(ct);
        let b = normal_sum_bound(&phi, &path, radius, z0);
        let wider = normal_sum_bound(&phi, &path, 1.5 * radius, z0);
        let r = (0..=16)
            .map(|j| {
                let z = if j == 16 { z0 } else { z0 + c(0.0, TAU * j as f64 / 16.0).exp() * radius };
                y(&phi, &path, z, cfg).map(|v| (v - z).norm())
            })
            .try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))
            .map(|moved| (moved - b.bound).max(0.0));
        cases.push(case(format!("{pt} on {ct}, K={radius}: bound {:.4} covers displacement", b.bound), r, 1e-12));
        cases.push(case(
            format!("{pt} on {ct}: bound monotone in K"),
            Ok::<f64, String>((b.bound - wider.bound).max(0.0)),
            0.0,
        ));
    }
    cases
}

fn residual_delta(o: &Overrides, common: &Common, cfg: &EngineConfig) -> Result<Vec<Case>, Failure> {
    let fixtures: Vec<(String, ComplexScalar)> = match (&o.phi, &o.z) {
        (None, None) => vec![
            ("z/s".into(), c(1.0, 0.0)),
            ("0.5*z/s".into(), c(1.0, 0.0)),
            ("z^2/s".into(), c(1.0, 0.0)),
            ("exp(s)*z^3/s^2".into(), c(0.1, 0.0)),
        ],
        _ => vec![(
            o.phi.clone().unwrap_or_else(|| "z^2/s".into()),
            match &o.z {
                Some(t) => complex_arg("z", t)?,
                None => c(1.0, 0.0),
            },
        )],
    };
    let delta = common.delta.unwrap_or(0.5);
    let mut cases = Vec::new();
    for (ft, z) in fixtures {
        let f = expr_arg("phi", &ft)?;
        let r = compositional_residual(&f, &pole(c(0.0, 0.0)), z, delta, cfg).map(|r| r.error_estimate);
        cases.push(case(format!("{ft} at {z}, delta {delta}"), r, 100.0 * cfg.tol));
    }
    Ok(cases)
}

fn conjugacy(cfg: &EngineConfig) -> Vec<Case> {
    let nested = (k("circle(0,0.5)"), k("circle(0,0.7)"), k("seg(0.5,0.7)"));
    let rotated = (k("circle(0,0.5)"), k("arc(0,0.5,pi/2,5*pi/2)"), k("arc(0,0.5,0,pi/2)"));
    let fixtures = [("z/s", &nested), ("z^2/s", &nested), ("(s+1)*z/s", &rotated)];
    let probes = [c(0.1, 0.0), c(0.2, -0.1), c(-0.1, 0.15)];
    fixtures
        .iter()
        .map(|(ft, (g, phi_c, tau))| {
            let r = conjugacy_check(&p(ft), g, phi_c, tau, &probes, cfg).map(|r| r.max_deviation());
            case(*ft, r, 1e-6)
        })
        .collect()
}

fn residual_class(cfg: &EngineConfig) -> Vec<Case> {
    let enclosing = k("circle(1.5,3)");
    let forward = [pole(c(0.0, 0.0)), pole(c(3.0, 0.0))];
    let backward = [pole(c(3.0, 0.0)), pole(c(0.0, 0.0))];
    let mut cases = Vec::new();
    for ft in ["z*(1/s + 1/(s-3))", "z*(0.25/s + 0.25/(s-3))", "z^2*(0.1/s + 0.2/(s-3))"] {
        let f = p(ft);
        let z = c(0.2, 0.1);
        for (label, order) in [("[0,3]", &forward), ("[3,0]", &backward)] {
            let r = residual_class_compose(&f, order, z, cfg)
                .map_err(|e| e.to_string())
                .and_then(|v| y(&f, &enclosing, z, cfg).map(|w| (v - w).norm()));
            cases.push(case(format!("{ft} poles {label}"), r, 1e-6));
        }
    }
    cases
}

fn winding(cfg: &EngineConfig) -> Vec<Case> {
    let fixtures = [
        ("0.25*z/s", 2, c(1.0, 0.0), Some(c(-1.0, 0.0))),
        ("z/s", 3, c(0.3, 0.2), Some(c(0.3, 0.2))),
        ("z^2/s", 2, c(1.0, 0.0), Some(1.0 / c(1.0, -2.0 * TAU))),
    ];
    fixtures
        .iter()
        .map(|(ft, turns, z, expected)| {
            let r = winding_compose(&p(ft), &pole(c(0.0, 0.0)), *turns, *z, 0.5, cfg).map(|w| match expected {
                Some(e) => w.deviation.max((w.composed - e).norm()),
                None => w.deviation,
            });
            case(format!("{ft}, {turns} turns at {z}"), r, 1e-6)
        })
        .collect()
}

fn taylor(cfg: &EngineConfig) -> Vec<Case> {
    let circle = k("circle(0,1)");
    let w = c(0.3, 0.0);
    let mut cases = Vec::new();
    for (pt, z) in [("s*z", c(1.0, 0.0)), ("s*z^2", c(0.2, 0.0)), ("z/(2-s)", c(0.5, 0.0))] {
        let phi = p(pt);
        let errors: Result<Vec<f64>, String> = taylor_target(&phi, w, &circle, z, cfg).map_err(|e| e.to_string()).and_then(|t| {
            (0..=12)
                .map(|kk| {
                    taylor_composition(&phi, c(0.0, 0.0), w, kk, &circle, z, cfg)
                        .map(|v| (v - t).norm())
                        .map_err(|e| e.to_string())
                })
                .collect()
        });
        match errors {
            Ok(errs) => {
                cases.push(case(format!("{pt}: error at K=12"), Ok::<f64, String>(errs[12]), 1e-6));
                let worst_rise = errs[2..].windows(2).map(|p| p[1] - p[0]).fold(f64::NEG_INFINITY, f64::max);
                cases.push(case(format!("{pt}: monotone for K>=2"), Ok::<f64, String>(worst_rise.max(0.0)), 1e-10));
            }
            Err(e) => cases.push(case(pt, Err(e), 1e-6)),
        }
    }
    cases
}

fn semigroup(cfg: &EngineConfig) -> Vec<Case> {
    let circle = k("circle(0,1)");
    let fixtures = [
        ("z", 0.25, 0.25, c(1.0, 0.0)),
        ("z", 0.0, 0.4, c(0.5, 0.2)),
        ("z^2", 0.3, 0.3, c(0.1, 0.0)),
        ("1", 0.2, -0.7, c(0.1, 0.1)),
    ];
    fixtures
        .iter()
        .map(|(pt, w, a, z)| {
            let r = semigroup_check(&p("1/s"), &p(pt), &circle, c(*w, 0.0), c(*a, 0.0), *z, cfg).map(|r| r.deviation);
            case(format!("phi={pt} w={w} alpha={a} at {z}"), r, 1e-7)
        })
        .collect()
}

fn infinitesimal(cfg: &EngineConfig) -> Vec<Case> {
    let fixtures = [
        ("1", "z", "seg(0,1)", c(1.0, 0.0)),
        ("s", "z^2", "seg(0,1)", c(0.5, 0.0)),
        ("1/s", "exp(z)", "circle(0,1)", c(0.2, 0.0)),
        ("s^2", "z+s", "arc(0,1,0,2)", c(0.1, -0.1)),
    ];
    fixtures
        .iter()
        .map(|(f, phi, ct, z)| {
            let r = infinitesimal_derivative(&p(f), &p(phi), &k(ct), *z, cfg).map(|r| r.deviation);
            case(format!("f={f} phi={phi} on {ct} at {z}"), r, 1e-6)
        })
        .collect()
}

fn fubini(cfg: &EngineConfig) -> Vec<Case> {
    let circle = k("circle(0,1)");
    let fixtures = [
        ("1", "z", "seg(0,1)", c(1.0, 0.0)),
        ("w", "z", "seg(0,1)", c(1.0, 0.0)),
        ("1", "z^2", "seg(0,1)", c(0.1, 0.0)),
        ("exp(w)", "z", "arc(0,1,0,1)", c(0.3, 0.1)),
    ];
    fixtures
        .iter()
        .map(|(pw, phi, tau, z)| {
            let r = fubini_check(&p(pw), &p("1/s"), &p(phi), &circle, &k(tau), *z, cfg).map(|r| r.deviation);
            case(format!("p={pw} phi={phi} tau={tau} at {z}"), r, 1e-6)
        })
        .collect()
}

fn gaussian(scale: f64, phi: &str) -> Result<DerivedResidual, String> {
    let h = if scale == 1.0 { "exp(-pi*w^2)/s".to_string() } else { format!("exp(-pi*(w/{scale})^2)/s") };
    let h = parse_expr(&h).map_err(|e| e.to_string())?;
    DerivedResidual::new(h, p(phi), k("circle(0,1)"), vec![pole(c(0.0, 0.0))]).map_err(|e| e.to_string())
}

fn fourier_inversion(tcfg: &TransformConfig, cfg: &EngineConfig) -> Vec<Case> {
    let fixtures = [("1", 0.5, c(0.0, 0.0)), ("1", 0.0, c(0.1, 0.0)), ("z", 0.25, c(0.3, 0.0))];
    fixtures
        .iter()
        .map(|(phi, w, z)| {
            let r = gaussian(1.0, phi).and_then(|d| {
                inversion_check(&d, c(*w, 0.0), *z, tcfg, cfg).map(|r| r.deviation).map_err(|e| e.to_string())
            });
            case(format!("phi={phi} w={w} at {z}"), r, 1e-5)
        })
        .collect()
}

/// `Σ_{|n|≤N} e^{−π(n/a)²}` by direct summation.
pub fn theta(scale: f64, n_max: i64) -> f64 {
    (-n_max..=n_max).map(|n| (-PI * (n as f64 / scale).powi(2)).exp()).sum()
}

fn poisson(o: &Overrides, tcfg: &TransformConfig, cfg: &EngineConfig) -> Result<Vec<Case>, Failure> {
    let family = o.family.as_deref().unwrap_or("additive");
    let phi = match family {
        "additive" | "constant" => "1",
        "linear" => "z",
        other => return Err(Failure::usage(format!("--family must be additive or linear, got `{other}`"))),
    };
    let scale = o.scale.unwrap_or(1.0);
    if !(scale > 0.0) {
        return Err(Failure::usage("--scale must be positive".into()));
    }
    let n_max = o.n.unwrap_or(4);
    let z = match &o.z {
        Some(t) => complex_arg("z", t)?,
        None => c(0.1, 0.0),
    };
    let mut cases = Vec::new();
    let report = gaussian(scale, phi)
        .and_then(|d| poisson_composition(&d, n_max, z, tcfg, cfg).map_err(|e| e.to_string()));
    match report {
        Ok(r) => {
            cases.push(case(format!("{family} scale {scale} N={n_max}: lhs vs rhs"), Ok::<f64, String>(r.deviation), 1e-5));
            let sum = theta(scale, i64::from(n_max));
            let oracle = if phi == "1" { z + c(0.0, TAU * sum) } else { z * c(0.0, TAU * sum).exp() };
            cases.push(case(
                format!("{family}: lhs vs direct summation"),
                Ok::<f64, String>((r.lhs - oracle).norm()),
                1e-6,
            ));
        }
        Err(e) => cases.push(case(format!("{family} scale {scale} N={n_max}"), Err(e), 1e-5)),
    }
    if scale == 1.0 {
        cases.push(case(
            "theta sum over the integers",
            Ok::<f64, String>((theta(1.0, 50) - 1.0864348).abs()),
            1e-7,
        ));
    }
    Ok(cases)
}

fn linearity(tcfg: &TransformConfig, cfg: &EngineConfig) -> Vec<Case> {
    let mut cases = Vec::new();
    for (phi, z) in [("1", c(0.1, 0.0)), ("z", c(0.2, 0.1))] {
        let r = gaussian(1.0, phi).and_then(|a| {
            let b = gaussian(2.0, phi)?;
            fourier_linearity_check(&[a, b], c(0.3, 0.0), z, tcfg, cfg).map(|r| r.deviation).map_err(|e| e.to_string())
        });
        cases.push(case(format!("phi={phi}, scales 1 and 2 at {z}"), r, 1e-5));
    }
    cases
}

fn laplace(tcfg: &TransformConfig, cfg: &EngineConfig) -> Vec<Case> {
    let fixtures = [("1", c(0.2, 0.0), c(0.2, PI)), ("z", c(0.3, 0.0), c(-0.3, 0.0))];
    fixtures
        .iter()
        .map(|(phi, z, expected)| {
            let r = DerivedResidual::new(p("exp(-w)/s"), p(phi), k("circle(0,1)"), vec![pole(c(0.0, 0.0))])
                .and_then(|d| laplace_transform(&d, c(1.0, 0.0), *z, tcfg, cfg))
                .map(|v| (v.value - expected).norm());
            case(format!("phi={phi} y=1 at {z}"), r, 1e-6)
        })
        .collect()
}

fn additivity(cfg: &EngineConfig) -> Vec<Case> {
    let circle = k("circle(0,1)");
    let fixtures = [("0.3/s", "0.2/(s-0.5)", "z^2", c(0.1, 0.05)), ("0.1/s", "0.1/s", "z", c(0.5, 0.0)), ("1/s", "s", "1", c(0.2, 0.0))];
    fixtures
        .iter()
        .map(|(f, g, phi, z)| {
            let r = additivity_check(&p(f), &p(g), &p(phi), &circle, *z, cfg).map(|r| r.deviation);
            case(format!("f={f} g={g} phi={phi} at {z}"), r, 1e-6)
        })
        .collect()
}

fn summation(cfg: &EngineConfig) -> Vec<Case> {
    let circle = k("circle(0,1)");
    let geometric: Vec<_> = (0..12).map(|n| c(0.5f64.powi(n) / 8.0, 0.0)).collect();
    let alternating: Vec<_> = (1..10).map(|n| c((-1.0f64).powi(n) / n as f64 / 4.0, 0.0)).collect();
    let fixtures = [("geometric, phi=z", &geometric, "z", c(0.1, 0.0)), ("alternating, phi=1", &alternating, "1", c(0.2, 0.1))];
    fixtures
        .iter()
        .map(|(label, coeffs, phi, z)| {
            let r = summation_check(coeffs, c(0.0, 0.0), &p(phi), &circle, *z, cfg).map(|r| r.deviation);
            case(format!("{label} at {z}"), r, 1e-6)
        })
        .collect()
}
