use std::f64::consts::TAU;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use compint::{c, comp_integral, comp_integral_ode, parse_expr, Contour, EngineConfig};

#[test]
fn riemann_and_ode_agree_on_random_segments() {
    let phis: Vec<_> = ["z", "z^2", "z^3", "exp(-z)", "s*z"].iter().map(|t| parse_expr(t).unwrap()).collect();
    let cfg = EngineConfig::default();
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let phi = &phis[i % phis.len()];
        let a = c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let b = a + c(0.0, rng.gen_range(0.0..TAU)).exp() * rng.gen_range(0.05..0.3);
        let z = c(0.0, rng.gen_range(0.0..TAU)).exp() * rng.gen_range(0.0..0.5);
        let path = Contour::segment(a, b);
        let x = comp_integral(phi, &path, z, &cfg).unwrap().converged().unwrap();
        let y = comp_integral_ode(phi, &path, z, &cfg).unwrap().converged().unwrap();
        worst = worst.max((x - y).norm());
    }
    assert!(worst <= 1e-6, "max disagreement {worst:e}");
}

#[test]
fn z_cubed_example() {
    let phi = parse_expr("z^3").unwrap();
    let path = Contour::segment(c(0.0, 0.0), c(1.0, 0.0));
    let r = comp_integral(&phi, &path, c(0.1, 0.0), &EngineConfig::default()).unwrap();
    assert!((r.value - c(1.0 / 98f64.sqrt(), 0.0)).norm() < 1e-8);
    assert!((r.value.re - 0.1010153).abs() < 1e-7);
}
