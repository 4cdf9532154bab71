//! `compint`: evaluate compositional contour integrals from the command line.
//!
//! Reports are single JSON objects on stdout; diagnostics go to stderr.
//! Exit codes: 0 converged (or all checks passed), 1 usage error,
//! 2 diverged, 3 no convergence within budget, 4 a check failed.

mod checks;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use compint::engine::{classify_grid, comp_integral_with, EngineConfig, EngineError, Method, Status, Window};
use compint::residue::{compositional_residual, default_delta, PoleSpec, ResidueError};
use compint::transforms::{
    fourier_transform, laplace_transform, poisson_composition, DerivedResidual, TransformConfig, TransformError,
    RULE_NODES,
};
use compint::{parse_complex, parse_contour, parse_expr, ComplexScalar, Contour, Expr};

use report::{complex, config_echo, status_exit, Failure};

#[derive(Parser, Debug)]
#[command(name = "compint", version, about = "Compositional contour integrals ∫_γ φ(s,z) ds∙z")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Convergence tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Radius of the circle around a pole.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Initial truncation of the real line for transforms.
    #[arg(long)]
    pub truncation: Option<f64>,
    /// Quadrature nodes per contour piece for transform logs.
    #[arg(long = "quad-n")]
    pub quad_n: Option<usize>,
    /// Refinement budget of the Riemann evaluator.
    #[arg(long = "max-doublings")]
    pub max_doublings: Option<u32>,
}

impl Common {
    pub fn engine(&self) -> EngineConfig {
        let mut cfg = EngineConfig::default();
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(d) = self.max_doublings {
            cfg.max_doublings = d;
        }
        cfg
    }

    pub fn transform(&self) -> TransformConfig {
        let mut t = TransformConfig::default();
        if let Some(v) = self.truncation {
            t.truncation = v;
        }
        t
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Riemann,
    Ode,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate ∫_γ φ ds∙z at one point.
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        phi: String,
        #[arg(long, allow_hyphen_values = true)]
        contour: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, value_enum, default_value = "ode")]
        method: MethodArg,
        #[command(flatten)]
        common: Common,
    },
    /// Run a named identity check over its fixtures.
    Check {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(checks::NAMES))]
        name: String,
        #[command(flatten)]
        overrides: checks::Overrides,
        #[command(flatten)]
        common: Common,
    },
    /// Compositional residual of f around a declared pole.
    Residual {
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        pole: String,
        #[arg(long, default_value_t = 1)]
        order: u32,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[command(flatten)]
        common: Common,
    },
    /// Classify a grid of starting points by convergence status (CSV).
    Map {
        #[arg(long, allow_hyphen_values = true)]
        phi: String,
        #[arg(long, allow_hyphen_values = true)]
        contour: String,
        #[arg(long = "re-min", allow_hyphen_values = true)]
        re_min: f64,
        #[arg(long = "re-max", allow_hyphen_values = true)]
        re_max: f64,
        #[arg(long = "im-min", allow_hyphen_values = true)]
        im_min: f64,
        #[arg(long = "im-max", allow_hyphen_values = true)]
        im_max: f64,
        #[arg(long, default_value_t = 64)]
        nx: usize,
        #[arg(long, default_value_t = 64)]
        ny: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Compositional Fourier, Laplace or Poisson transforms of a derived residual.
    Transform {
        #[arg(value_enum)]
        kind: TransformKind,
        #[arg(long, allow_hyphen_values = true)]
        h: String,
        #[arg(long, allow_hyphen_values = true)]
        phi: String,
        #[arg(long, allow_hyphen_values = true, default_value = "circle(0,1)")]
        contour: String,
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long = "N", default_value_t = 4)]
        n: u32,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum TransformKind {
    Fourier,
    Laplace,
    Poisson,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let outcome = match cli.command {
        Command::Eval { phi, contour, z, method, common } => run_eval(&phi, &contour, &z, method, &common),
        Command::Check { name, overrides, common } => checks::run(&name, &overrides, &common),
        Command::Residual { f, pole, order, z, common } => run_residual(&f, &pole, order, &z, &common),
        Command::Map { phi, contour, re_min, re_max, im_min, im_max, nx, ny, out, common } => {
            let window = Window { re_min, re_max, im_min, im_max };
            run_map(&phi, &contour, window, nx, ny, out, &common)
        }
        Command::Transform { kind, h, phi, contour, xi, y, z, n, common } => {
            run_transform(kind, &h, &phi, &contour, xi.as_deref(), y.as_deref(), &z, n, &common)
        }
    };
    match outcome {
        Ok((mut report, code)) => {
            // a null report means the payload already went to stdout
            if let Value::Object(map) = &mut report {
                map.insert("wall_ms".into(), json!(start.elapsed().as_secs_f64() * 1e3));
                emit(&format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable report")));
            }
            ExitCode::from(code)
        }
        Err(failure) => {
            eprintln!("compint: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

pub fn expr_arg(flag: &str, text: &str) -> Result<Expr, Failure> {
    parse_expr(text).map_err(|e| Failure::usage(format!("--{flag}: {e} in `{text}`")))
}

pub fn contour_arg(flag: &str, text: &str) -> Result<Contour, Failure> {
    parse_contour(text).map_err(|e| Failure::usage(format!("--{flag}: {e} in `{text}`")))
}

pub fn complex_arg(flag: &str, text: &str) -> Result<ComplexScalar, Failure> {
    parse_complex(text).map_err(|e| Failure::usage(format!("--{flag}: {e} in `{text}`")))
}

fn run_eval(phi: &str, contour: &str, z: &str, method: MethodArg, common: &Common) -> Result<(Value, u8), Failure> {
    let phi_e = expr_arg("phi", phi)?;
    let path = contour_arg("contour", contour)?;
    let z0 = complex_arg("z", z)?;
    let cfg = common.engine();
    let methods: &[Method] = match method {
        MethodArg::Riemann => &[Method::Riemann],
        MethodArg::Ode => &[Method::Ode],
        MethodArg::Both => &[Method::Ode, Method::Riemann],
    };
    let mut results = Vec::new();
    for &m in methods {
        results.push(comp_integral_with(m, &phi_e, &path, z0, &cfg).map_err(Failure::from)?);
    }
    let primary = results[0];
    let mut report = json!({
        "command": "eval",
        "config": config_echo(common, &json!({"phi": phi, "contour": path.to_string(), "z": z})),
        "value": complex(primary.value),
        "status": primary.status.name(),
        "n_final": primary.n_final,
        "error_estimate": primary.error_estimate,
        "method": primary.method.name(),
    });
    if results.len() > 1 {
        let list: Vec<Value> = results
            .iter()
            .map(|r| {
                json!({
                    "method": r.method.name(),
                    "value": complex(r.value),
                    "status": r.status.name(),
                    "n_final": r.n_final,
                    "error_estimate": r.error_estimate,
                })
            })
            .collect();
        report["results"] = Value::Array(list);
        report["agreement"] = json!((results[0].value - results[1].value).norm());
    }
    let worst = results
        .iter()
        .map(|r| r.status)
        .max_by_key(|s| match s {
            Status::Converged => 0,
            Status::MaxRefinement => 1,
            Status::Diverged => 2,
        })
        .expect("at least one method");
    Ok((report, status_exit(worst)))
}

fn run_residual(f: &str, pole: &str, order: u32, z: &str, common: &Common) -> Result<(Value, u8), Failure> {
    let f_e = expr_arg("f", f)?;
    let zeta = complex_arg("pole", pole)?;
    let z0 = complex_arg("z", z)?;
    let cfg = common.engine();
    let spec = PoleSpec::for_integrand(&f_e, zeta, order, "pole").map_err(Failure::from)?;
    let delta = common.delta.unwrap_or_else(|| default_delta(&spec, &[]));
    let r = compositional_residual(&f_e, &spec, z0, delta, &cfg).map_err(Failure::from)?;
    let report = json!({
        "command": "residual",
        "config": config_echo(common, &json!({"f": f, "pole": pole, "order": order, "z": z, "delta": delta})),
        "value": complex(r.value),
        "status": Status::Converged.name(),
        "error_estimate": r.error_estimate,
        "method": Method::Ode.name(),
    });
    Ok((report, 0))
}

#[allow(clippy::too_many_arguments)]
fn run_map(
    phi: &str,
    contour: &str,
    window: Window,
    nx: usize,
    ny: usize,
    out: Option<PathBuf>,
    common: &Common,
) -> Result<(Value, u8), Failure> {
    let phi_e = expr_arg("phi", phi)?;
    let path = contour_arg("contour", contour)?;
    let cfg = common.engine();
    let grid = classify_grid(&phi_e, &path, window, nx, ny, &cfg).map_err(Failure::from)?;
    let mut csv = String::from("re,im,status,value_re,value_im,n_final\n");
    for cell in &grid.cells {
        let r = &cell.result;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            cell.z.re,
            cell.z.im,
            r.status.code(),
            r.value.re,
            r.value.im,
            r.n_final
        ));
    }
    match &out {
        Some(file) => {
            let written = File::create(file).and_then(|f| {
                let mut w = BufWriter::new(f);
                w.write_all(csv.as_bytes())?;
                w.flush()
            });
            written.map_err(|e| Failure::usage(format!("cannot write {}: {e}", file.display())))?;
        }
        None => {
            emit(&csv);
            return Ok((Value::Null, 0));
        }
    }
    let report = json!({
        "command": "map",
        "config": config_echo(common, &json!({
            "phi": phi, "contour": path.to_string(), "nx": nx, "ny": ny,
            "window": [window.re_min, window.re_max, window.im_min, window.im_max],
            "max_doublings": cfg.max_doublings,
        })),
        "out": out.as_ref().map(|p| p.display().to_string()),
        "counts": {
            "C": grid.count(Status::Converged),
            "D": grid.count(Status::Diverged),
            "M": grid.count(Status::MaxRefinement),
        },
    });
    Ok((report, 0))
}

#[allow(clippy::too_many_arguments)]
fn run_transform(
    kind: TransformKind,
    h: &str,
    phi: &str,
    contour: &str,
    xi: Option<&str>,
    y: Option<&str>,
    z: &str,
    n: u32,
    common: &Common,
) -> Result<(Value, u8), Failure> {
    let h_e = expr_arg("h", h)?;
    let phi_e = expr_arg("phi", phi)?;
    let gamma = contour_arg("contour", contour)?;
    let z0 = complex_arg("z", z)?;
    let cfg = common.engine();
    let tcfg = common.transform();
    let d = DerivedResidual::with_nodes(h_e, phi_e, gamma.clone(), vec![], common.quad_n.unwrap_or(RULE_NODES)).map_err(Failure::from)?;
    let echo = json!({"h": h, "phi": phi, "contour": gamma.to_string(), "z": z});
    let (name, value, truncation, steps, err) = match kind {
        TransformKind::Fourier => {
            let xi = complex_arg("xi", xi.ok_or_else(|| Failure::usage("fourier needs --xi".into()))?)?;
            let v = fourier_transform(&d, xi, z0, &tcfg, &cfg).map_err(Failure::from)?;
            ("fourier", v.value, v.truncation, v.steps, v.error_estimate)
        }
        TransformKind::Laplace => {
            let y = complex_arg("y", y.ok_or_else(|| Failure::usage("laplace needs --y".into()))?)?;
            let v = laplace_transform(&d, y, z0, &tcfg, &cfg).map_err(Failure::from)?;
            ("laplace", v.value, v.truncation, v.steps, v.error_estimate)
        }
        TransformKind::Poisson => {
            let r = poisson_composition(&d, n, z0, &tcfg, &cfg).map_err(Failure::from)?;
            let report = json!({
                "command": "transform poisson",
                "config": config_echo(common, &json!({"h": h, "phi": phi, "contour": gamma.to_string(), "z": z, "N": n})),
                "value": complex(r.rhs),
                "lhs": complex(r.lhs),
                "rhs": complex(r.rhs),
                "deviation": r.deviation,
                "status": Status::Converged.name(),
                "n_final": 2 * n + 1,
                "error_estimate": r.deviation,
                "method": Method::Ode.name(),
            });
            return Ok((report, 0));
        }
    };
    let report = json!({
        "command": format!("transform {name}"),
        "config": config_echo(common, &echo),
        "value": complex(value),
        "truncation": truncation,
        "status": Status::Converged.name(),
        "n_final": steps,
        "error_estimate": err,
        "method": Method::Ode.name(),
    });
    Ok((report, 0))
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Diverged { .. } => 2,
            EngineError::NoConvergence { .. } => 3,
            EngineError::Eval(compint::EvalError::Diverged) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<ResidueError> for Failure {
    fn from(e: ResidueError) -> Self {
        match e {
            ResidueError::Engine(inner) => inner.into(),
            ResidueError::DeltaDependence { .. } | ResidueError::Disagreement { .. } => {
                Failure { code: 3, message: e.to_string() }
            }
            other => Failure::usage(other.to_string()),
        }
    }
}

impl From<TransformError> for Failure {
    fn from(e: TransformError) -> Self {
        match e {
            TransformError::Engine(inner) => inner.into(),
            TransformError::Residue(inner) => inner.into(),
            TransformError::SlowDecay { .. } => Failure { code: 3, message: e.to_string() },
            other => Failure::usage(other.to_string()),
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
