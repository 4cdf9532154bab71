use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn compint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compint")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn value(v: &Value) -> (f64, f64) {
    (v["value"]["re"].as_f64().unwrap(), v["value"]["im"].as_f64().unwrap())
}

fn golden(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

/// Same shape and strings, numbers equal to a relative 1e-9.
fn same(a: &Value, b: &Value, at: &str) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let mut kx: Vec<_> = x.keys().collect();
            let mut ky: Vec<_> = y.keys().collect();
            kx.sort();
            ky.sort();
            assert_eq!(kx, ky, "keys differ at {at}");
            for k in kx {
                same(&x[k], &y[k], &format!("{at}.{k}"));
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "length differs at {at}");
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                same(p, q, &format!("{at}[{i}]"));
            }
        }
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-300) || x == y, "{at}: {x} vs {y}");
        }
        _ => assert_eq!(a, b, "mismatch at {at}"),
    }
}

fn check_golden(args: &[&str], file: &str) {
    let out = compint(args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut got = json_of(&out);
    assert!(got["wall_ms"].as_f64().unwrap() >= 0.0);
    got.as_object_mut().unwrap().remove("wall_ms");
    same(&got, &golden(file), "$");
}

#[test]
fn golden_constant_on_circle() {
    check_golden(&["eval", "--phi", "1", "--contour", "circle(0,1)", "--z", "0.3+0.1i"], "eval_constant_circle.json");
}

#[test]
fn golden_sqrt_e_both_methods() {
    check_golden(&["eval", "--phi", "z", "--contour", "seg(0,0.5)", "--z", "1", "--method", "both"], "eval_sqrt_e_both.json");
}

#[test]
fn golden_log2_riemann() {
    check_golden(&["eval", "--phi", "exp(-z)", "--contour", "seg(0,1)", "--z", "0", "--method", "riemann"], "eval_log2_riemann.json");
}

#[test]
fn eval_report_has_stable_keys() {
    let v = json_of(&compint(&["eval", "--phi", "z^2", "--contour", "seg(0,1)", "--z", "0.5"]));
    for key in ["command", "value", "status", "n_final", "error_estimate", "method", "wall_ms", "config"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["command"], "eval");
    let (re, im) = value(&v);
    assert!((re - 1.0).abs() < 1e-8 && im.abs() < 1e-8);
}

#[test]
fn eval_examples() {
    let v = json_of(&compint(&["eval", "--phi", "z", "--contour", "seg(0,0.5)", "--z", "1", "--method", "both"]));
    assert!((value(&v).0 - 1.648_721_270_700_128).abs() < 1e-8);
    assert!(v["agreement"].as_f64().unwrap() < 1e-8);
    let v = json_of(&compint(&["eval", "--phi", "1", "--contour", "circle(0,1)", "--z", "0.3+0.1i"]));
    let (re, im) = value(&v);
    assert!((re - 0.3).abs() < 1e-9 && (im - 0.1).abs() < 1e-9);
    let v = json_of(&compint(&["eval", "--phi", "exp(-z)", "--contour", "seg(0,1)", "--z", "0"]));
    assert!((value(&v).0 - std::f64::consts::LN_2).abs() < 1e-7);
}

#[test]
fn exit_codes_follow_status() {
    let out = compint(&["eval", "--phi", "z^2", "--contour", "seg(0,1)", "--z", "1"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json_of(&out)["status"], "diverged");
    let out = compint(&["eval", "--phi", "z^2", "--contour", "seg(0,1)", "--z", "1", "--method", "riemann", "--tol", "1e-14", "--max-doublings", "8"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json_of(&out)["status"], "max_refinement");
}

#[test]
fn usage_errors_exit_one_without_panicking() {
    let cases: &[&[&str]] = &[
        &["bogus"],
        &["eval", "--phi", "z+", "--contour", "seg(0,1)", "--z", "0"],
        &["eval", "--phi", "conj(z)", "--contour", "seg(0,1)", "--z", "0"],
        &["eval", "--phi", "z", "--contour", "seg(0,1) > seg(2,3)", "--z", "0"],
        &["eval", "--phi", "z", "--contour", "seg(0,1)", "--z", "1 + i"],
        &["eval", "--phi", "z", "--contour", "circle(0,-1)", "--z", "0"],
        &["eval", "--phi", "z", "--contour", "seg(0,1)", "--z", "0", "--tol", "-1"],
        &["check", "no-such-check"],
        &["check", "homomorphism", "--phi", "z"],
        &["check", "poisson", "--family", "cubic"],
        &["residual", "--f", "z", "--pole", "0", "--z", "1"],
        &["residual", "--f", "z/s", "--pole", "0", "--order", "0", "--z", "1"],
        &["map", "--phi", "z", "--contour", "seg(0,1)", "--re-min", "1", "--re-max", "0", "--im-min", "0", "--im-max", "1"],
        &["transform", "fourier", "--h", "exp(-pi*w^2)/s", "--phi", "1", "--z", "0"],
        &["eval", "--phi", "((((", "--contour", "seg(0,1)", "--z", "0"],
        &["eval", "--phi", "\u{1F600}", "--contour", "seg(0,1)", "--z", "0"],
    ];
    for args in cases {
        let out = compint(args);
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(code(&out), 1, "{args:?}: {err}");
        assert!(!err.contains("panicked"), "{args:?}: {err}");
    }
}

#[test]
fn parse_errors_carry_offsets() {
    let out = compint(&["eval", "--phi", "z*(1+", "--contour", "seg(0,1)", "--z", "0"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.chars().any(|c| c.is_ascii_digit()), "{err}");
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&compint(&["--help"])), 0);
    assert_eq!(code(&compint(&["check", "--help"])), 0);
}

#[test]
fn checks_from_the_examples_pass() {
    for args in [
        &["check", "closed-contour"][..],
        &["check", "orientation", "--phi", "z^2", "--contour", "seg(0,1)", "--z", "0.5"],
        &["check", "poisson", "--family", "additive", "--scale", "1", "--N", "4"],
    ] {
        let out = compint(args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json_of(&out);
        assert_eq!(v["pass"], true);
        assert!(!v["cases"].as_array().unwrap().is_empty());
        for case in v["cases"].as_array().unwrap() {
            assert!(case["deviation"].as_f64().unwrap() <= case["tol"].as_f64().unwrap());
        }
    }
}

#[test]
fn failing_check_exits_four() {
    let out = compint(&["check", "closed-contour", "--phi", "1/s", "--contour", "circle(0,1)", "--z", "0.2"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_of(&out)["pass"], false);
}

#[test]
fn residual_command() {
    let out = compint(&["residual", "--f", "z^2/s", "--pole", "0", "--z", "1"]);
    assert_eq!(code(&out), 0);
    let (re, im) = value(&json_of(&out));
    let exact = 1.0 / compint::c(1.0, -std::f64::consts::TAU);
    assert!((re - exact.re).abs() < 1e-8 && (im - exact.im).abs() < 1e-8);
    let out = compint(&["residual", "--f", "z/(s-0.5)", "--pole", "0.5", "--z", "0.3+0.2i", "--delta", "0.25"]);
    let (re, im) = value(&json_of(&out));
    assert!((re - 0.3).abs() < 1e-8 && (im - 0.2).abs() < 1e-8);
}

#[test]
fn map_rows_in_order() {
    let out = compint(&[
        "map", "--phi", "1", "--contour", "seg(0,1)", "--re-min", "-1", "--re-max", "1", "--im-min", "0", "--im-max", "2",
        "--nx", "3", "--ny", "2",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im,status,value_re,value_im,n_final"));
    let rows: Vec<(f64, f64, String)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].to_string())
        })
        .collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.2 == "C"));
    let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.1, r.0)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
}

#[test]
fn map_to_file_finds_pole() {
    let dir = std::env::temp_dir().join(format!("compint-map-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("map.csv");
    let out = compint(&[
        "map", "--phi", "z^2", "--contour", "seg(0,1)", "--re-min", "0.5", "--re-max", "1.5", "--im-min", "-0.5",
        "--im-max", "0.5", "--nx", "11", "--ny", "11", "--max-doublings", "10", "--out", file.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["command"], "map");
    let csv = std::fs::read_to_string(&file).unwrap();
    let rows: Vec<(f64, f64, String)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].to_string())
        })
        .collect();
    // The trajectory 1/Y = 1/z - t meets zero for real z >= 1.
    let to_ray = |re: f64, im: f64| if re >= 1.0 { im.abs() } else { (re - 1.0).hypot(im) };
    assert!(rows.iter().any(|r| r.2 == "D"));
    for (re, im, status) in &rows {
        match status.as_str() {
            "D" => assert!(im.abs() < 1e-9 && *re > 1.0, "{re},{im}"),
            "M" => assert!(to_ray(*re, *im) < 0.15, "{re},{im}"),
            _ => {}
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn map_unwritable_path_is_an_error() {
    let out = compint(&[
        "map", "--phi", "1", "--contour", "seg(0,1)", "--re-min", "0", "--re-max", "1", "--im-min", "0", "--im-max", "1",
        "--nx", "2", "--ny", "2", "--out", "/nonexistent-dir/x/map.csv",
    ]);
    assert_ne!(code(&out), 0);
    assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
}

#[test]
fn transform_laplace_additive() {
    let out = compint(&["transform", "laplace", "--h", "exp(-w)/s", "--phi", "1", "--y", "1", "--z", "0.2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (re, im) = value(&json_of(&out));
    assert!((re - 0.2).abs() < 1e-6 && (im - std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn transform_poisson() {
    let out = compint(&["transform", "poisson", "--h", "exp(-pi*w^2)/s", "--phi", "1", "--z", "0", "--N", "4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (re, im) = value(&json_of(&out));
    let theta: f64 = (-4i32..=4).map(|n| (-std::f64::consts::PI * f64::from(n * n)).exp()).sum();
    assert!(re.abs() < 1e-6 && (im - std::f64::consts::TAU * theta).abs() < 1e-5);
}

#[test]
fn output_is_deterministic() {
    let args = ["eval", "--phi", "exp(z)*s", "--contour", "arc(0,1,0,2)", "--z", "0.1-0.2i"];
    let mut a = json_of(&compint(&args));
    let mut b = json_of(&compint(&args));
    a.as_object_mut().unwrap().remove("wall_ms");
    b.as_object_mut().unwrap().remove("wall_ms");
    assert_eq!(a, b);
}
