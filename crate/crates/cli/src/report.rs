use serde_json::{json, Value};

use compint::engine::Status;
use compint::transforms::RULE_NODES;
use compint::ComplexScalar;

use crate::Common;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: String) -> Failure {
        Failure { code: 1, message }
    }
}

pub fn complex(v: ComplexScalar) -> Value {
    json!({"re": v.re, "im": v.im})
}

pub fn status_exit(status: Status) -> u8 {
    match status {
        Status::Converged => 0,
        Status::Diverged => 2,
        Status::MaxRefinement => 3,
    }
}

/// Everything that influenced the run, for reproducibility.
pub fn config_echo(common: &Common, inputs: &Value) -> Value {
    let cfg = common.engine();
    let t = common.transform();
    json!({
        "tol": cfg.tol,
        "max_doublings": cfg.max_doublings,
        "initial_n": cfg.initial_n,
        "divergence_cap": cfg.divergence_cap,
        "ode_abs_tol": cfg.ode_abs_tol,
        "ode_rel_tol": cfg.ode_rel_tol,
        "delta": common.delta,
        "truncation": t.truncation,
        "quad_points_per_unit": t.quad_points_per_unit,
        "tail_bound_target": t.tail_bound_target,
        "quad_n": common.quad_n.unwrap_or(RULE_NODES),
        "inputs": inputs,
    })
}
