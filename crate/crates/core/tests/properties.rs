use proptest::prelude::*;

use compint::engine::{normal_sum_bound, riemann_partial};
use compint::{
    c, comp_integral, comp_integral_ode, eval_dual, inner_compose, outer_compose, parse_expr, Bindings,
    ComplexScalar, Contour, EngineConfig, EvalError, Expr,
};

fn cfg() -> EngineConfig {
    EngineConfig::default()
}

fn complex(radius: f64) -> impl Strategy<Value = ComplexScalar> {
    (-radius..radius, -radius..radius).prop_map(|(re, im)| c(re, im))
}

/// Entire expressions in `s` and `z`, so derivatives exist everywhere.
fn entire() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::s()),
        Just(Expr::z()),
        complex(1.0).prop_map(Expr::constant),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 0..4i32).prop_map(|(a, n)| a.powi(n)),
            inner.clone().prop_map(|a| -a),
            inner.clone().prop_map(|a| Expr::call(compint::expr::Func::Exp, a)),
            inner.clone().prop_map(|a| Expr::call(compint::expr::Func::Sin, a)),
            inner.prop_map(|a| Expr::call(compint::expr::Func::Cos, a)),
        ]
    })
}

/// Integrands `a + b·z + d·s·z + e·z²` with small coefficients.
fn tame() -> impl Strategy<Value = Expr> {
    (complex(0.5), complex(0.5), complex(0.5), complex(0.3)).prop_map(|(a, b, d, e)| {
        Expr::constant(a)
            + Expr::constant(b) * Expr::z()
            + Expr::constant(d) * Expr::s() * Expr::z()
            + Expr::constant(e) * Expr::z().powi(2)
    })
}

fn segment() -> impl Strategy<Value = Contour> {
    (complex(0.5), 0.1..0.6f64, 0.0..std::f64::consts::TAU)
        .prop_map(|(a, len, angle)| Contour::segment(a, a + c(0.0, angle).exp() * len))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn dual_derivative_matches_difference(e in entire(), s in complex(0.8), z in complex(0.8)) {
        let d = eval_dual(&e, s, z, None).unwrap();
        let h = 1e-6;
        let f = |v| e.eval(&Bindings::new().s(s).z(v)).unwrap();
        let fd = (f(z + h) - f(z - h)) / (2.0 * h);
        let scale = d.deriv.norm().max(d.value.norm()).max(1.0);
        prop_assert!((d.deriv - fd).norm() <= 1e-5 * scale, "{e}: {} vs {fd}", d.deriv);
    }

    #[test]
    fn printed_expressions_parse_back(e in entire(), s in complex(0.8), z in complex(0.8)) {
        let text = e.to_string();
        let back = parse_expr(&text).unwrap();
        // a complex constant prints as `a+bi`, which parses as a sum, so only
        // the second round trip is exact
        let again = back.to_string();
        prop_assert_eq!(parse_expr(&again).unwrap().to_string(), again);
        let b = Bindings::new().s(s).z(z);
        let (u, v) = (e.eval(&b).unwrap(), back.eval(&b).unwrap());
        prop_assert!((u - v).norm() <= 1e-12 * u.norm().max(1.0), "{text}: {u} vs {v}");
    }

    #[test]
    fn outer_is_inner_reversed(
        coeffs in prop::collection::vec((complex(1.0), complex(1.0)), 0..6),
        z in complex(1.0),
    ) {
        let maps: Vec<_> = coeffs.iter().map(|&(a, b)| move |v: ComplexScalar| Ok::<_, EvalError>(a * v * v + b)).collect();
        let reversed: Vec<_> = maps.iter().rev().cloned().collect();
        let outer = outer_compose(&maps, z).unwrap();
        let inner = inner_compose(&reversed, z).unwrap();
        prop_assert_eq!(outer, inner);
    }

    #[test]
    fn normal_bound_grows_with_radius(phi in tame(), path in segment(), r in 0.05..0.5f64, z0 in complex(0.3)) {
        let small = normal_sum_bound(&phi, &path, r, z0).bound;
        let large = normal_sum_bound(&phi, &path, 1.5 * r, z0).bound;
        prop_assert!(small <= large * (1.0 + 1e-9), "{small} > {large}");
    }

    #[test]
    fn normal_bound_covers_displacement(
        coeffs in prop::collection::vec(complex(0.3), 1..4),
        path in segment(),
        z in complex(0.3),
    ) {
        // z + Σ c_j z^(j+1), a convergent power-series perturbation of the identity map
        let phi = coeffs.iter().enumerate().fold(Expr::real(0.0), |acc, (j, &cj)| {
            acc + Expr::constant(cj) * Expr::z().powi(j as i32 + 1)
        });
        let bound = normal_sum_bound(&phi, &path, 0.5, c(0.0, 0.0));
        prop_assume!(bound.bound.is_finite());
        let y = comp_integral_ode(&phi, &path, z, &cfg()).unwrap().converged().unwrap();
        prop_assert!((y - z).norm() <= bound.bound + 1e-9, "moved {} past {}", (y - z).norm(), bound.bound);
    }

    #[test]
    fn evaluators_agree(phi in tame(), path in segment(), z in complex(0.5)) {
        let a = comp_integral_ode(&phi, &path, z, &cfg()).unwrap();
        let b = comp_integral(&phi, &path, z, &cfg()).unwrap();
        prop_assume!(a.is_converged() && b.is_converged());
        prop_assert!((a.value - b.value).norm() <= 1e-6, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn concatenation_composes(phi in tame(), a in complex(0.4), m in complex(0.4), b in complex(0.4), z in complex(0.4)) {
        let first = Contour::segment(a, m);
        let second = Contour::segment(m, b);
        let whole = first.concat(&second).unwrap();
        let run = |path: &Contour, v| comp_integral_ode(&phi, path, v, &cfg()).unwrap();
        let step = run(&first, z);
        prop_assume!(step.is_converged());
        let stepped = run(&second, step.value);
        let direct = run(&whole, z);
        prop_assume!(stepped.is_converged() && direct.is_converged());
        prop_assert!((stepped.value - direct.value).norm() <= 1e-8);
    }

    #[test]
    fn subdividing_a_segment_changes_nothing(phi in tame(), a in complex(0.4), b in complex(0.4), t in 0.1..0.9f64, z in complex(0.4)) {
        let m = a + (b - a) * t;
        let split = Contour::segment(a, m).concat(&Contour::segment(m, b)).unwrap();
        let straight = Contour::segment(a, b);
        let x = comp_integral_ode(&phi, &straight, z, &cfg()).unwrap();
        let y = comp_integral_ode(&phi, &split, z, &cfg()).unwrap();
        prop_assume!(x.is_converged() && y.is_converged());
        prop_assert!((x.value - y.value).norm() <= 1e-8);
    }

    #[test]
    fn reversal_undoes(phi in tame(), path in segment(), z in complex(0.4)) {
        let there = comp_integral_ode(&phi, &path, z, &cfg()).unwrap();
        prop_assume!(there.is_converged());
        let back = comp_integral_ode(&phi, &path.rev(), there.value, &cfg()).unwrap();
        prop_assume!(back.is_converged());
        prop_assert!((back.value - z).norm() <= 1e-8);
    }

    #[test]
    fn constant_integrand_telescopes(k in complex(1.0), path in segment(), z in complex(1.0), n in 1usize..64) {
        let y = riemann_partial(&Expr::constant(k), &path, z, n, &cfg()).unwrap();
        let exact = z + k * (path.end() - path.start());
        prop_assert!((y - exact).norm() <= 1e-12 * exact.norm().max(1.0));
    }
}
