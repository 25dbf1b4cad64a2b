use holoflow_core::expr::FieldAst;
use num_complex::Complex64;
use proptest::prelude::*;

fn num() -> impl Strategy<Value = String> {
    (-30i32..30, 0u32..4).prop_map(|(m, d)| format!("{}", f64::from(m) / f64::from(10u32.pow(d))))
}

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("i".to_string()),
        Just("pi".to_string()),
        Just("e".to_string()),
        num().prop_map(|n| format!("({n})")),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}+{b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}-{b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}*{b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}/({b})")),
            (inner.clone(), 0u32..5).prop_map(|(a, n)| format!("({a})^{n}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("exp({a})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.prop_map(|a| format!("cos({a})")),
        ]
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..8)
}

fn poly_source(c: &[(f64, f64)]) -> String {
    c.iter()
        .enumerate()
        .map(|(k, (a, b))| format!("(({a})+({b})*i)*x^{k}"))
        .collect::<Vec<_>>()
        .join("+")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_round_trip(s in expr()) {
        let a = FieldAst::parse(&s).unwrap();
        let b = FieldAst::parse(&a.to_string()).unwrap();
        prop_assert_eq!(&a, &b);
        let c = FieldAst::parse(&b.to_string()).unwrap();
        prop_assert_eq!(a.to_string(), c.to_string());
    }

    #[test]
    fn derivative_matches_centered_difference(
        c in coeffs(),
        r in 0.0..2.0f64,
        t in 0.0..std::f64::consts::TAU,
    ) {
        let f = FieldAst::parse(&poly_source(&c)).unwrap();
        let df = f.derivative(1);
        let z = Complex64::from_polar(r, t);
        let h = 1e-6;
        let fd = (f.value(z + h) - f.value(z - h)) / (2.0 * h);
        let d = df.value(z);
        prop_assert!((d - fd).norm() <= 1e-6 * (1.0 + d.norm()), "{} vs {}", d, fd);
    }

    #[test]
    fn derivative_of_entire_terms(a in -1.5..1.5f64, b in -1.5..1.5f64) {
        let f = FieldAst::parse("x*exp(x)+sin(x)^2-cos(2*x)").unwrap();
        let z = Complex64::new(a, b);
        let want = z.exp() * (z + 1.0) + 2.0 * z.sin() * z.cos() + 2.0 * (2.0 * z).sin();
        let got = f.derivative(1).value(z);
        prop_assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()));
    }
}

/// Real and imaginary parts of `x·exp(x)` written out in `x₁ + i·x₂`.
#[test]
fn exponential_field_decomposition() {
    use rand::{Rng, SeedableRng};
    let f = FieldAst::parse("x*exp(x)").unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for _ in 0..1000 {
        let x1 = rng.gen_range(-20.0..-1.0f64);
        let x2 = rng.gen_range(0.0..0.1f64);
        let v = f.value(Complex64::new(x1, x2));
        let re = x1.exp() * (x1 * x2.cos() - x2 * x2.sin());
        let im = x1.exp() * (x1 * x2.sin() + x2 * x2.cos());
        assert!((v.re - re).abs() <= 1e-12 * re.abs());
        assert!((v.im - im).abs() <= 1e-12 * im.abs().max(1e-300));
        assert!(v.re < 0.0 && v.im <= 0.0);
    }
}
