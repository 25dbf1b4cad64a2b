use holoflow_core::equilibria::analyze;
use holoflow_core::expr::FieldAst;
use holoflow_core::geometry::Rect;
use holoflow_core::integrator::{Controls, Direction, FateKind, Flow};
use num_complex::Complex64;
use proptest::prelude::*;

fn flow(src: &str) -> Flow {
    let w = Rect::new(-2.0, -2.0, 2.0, 2.0);
    let f = FieldAst::parse(src).unwrap();
    let eqs = analyze(&f, &w).unwrap();
    Flow::new(&f, &eqs, Controls::for_window(&w).certified_for(&f))
}

fn exact(src: &str, z0: Complex64, t: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    match src {
        "x" => z0 * t.exp(),
        "x^2" => z0 / (one - z0 * t),
        "1+x^2" => {
            let k = Complex64::new(t.tan(), 0.0);
            (z0 + k) / (one - z0 * k)
        }
        "i*x" => z0 * Complex64::new(0.0, t).exp(),
        _ => unreachable!(),
    }
}

fn seed() -> impl Strategy<Value = Complex64> {
    (0.3..1.5f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn winding(points: &[Complex64], a: Complex64) -> f64 {
    let mut total = 0.0;
    for w in points.windows(2) {
        total += ((w[1] - a) / (w[0] - a)).arg();
    }
    total += ((points[0] - a) / (points[points.len() - 1] - a)).arg();
    total / std::f64::consts::TAU
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn closed_forms(z0 in seed(), k in 0usize..4) {
        let src = ["x", "x^2", "1+x^2", "i*x"][k];
        let fl = flow(src);
        let tr = fl.orbit(z0).unwrap();
        let mut checked = 0;
        for s in &tr.samples {
            // near a blow-up the clock error dominates the pointwise comparison
            if s.z.norm() > 100.0 || s.t.abs() > 50.0 {
                continue;
            }
            let w = exact(src, z0, s.t);
            prop_assert!((s.z - w).norm() <= 1e-8 * w.norm().max(1e-3), "{} t={} {} vs {}", src, s.t, s.z, w);
            checked += 1;
        }
        prop_assert!(checked > 5);
    }

    #[test]
    fn time_symmetry(z0 in seed(), t in 0.05..0.5f64, k in 0usize..3) {
        let fl = flow(["x^2", "1+x^2", "sin(x)"][k]);
        let z1 = fl.advance(z0, t).unwrap();
        let back = fl.advance(z1, -t).unwrap();
        let mut length = 0.0;
        let mut p = z0;
        for j in 1..=100 {
            let q = fl.advance(z0, t * f64::from(j) / 100.0).unwrap();
            length += (q - p).norm();
            p = q;
        }
        prop_assert!((back - z0).norm() <= 1e-7 * length.max(1e-3), "{:e} vs length {}", (back - z0).norm(), length);
    }

    #[test]
    fn periodic_fates_wind_once(r in 0.05..0.4f64, t in 0.0..std::f64::consts::TAU) {
        let fl = flow("i*x*(x-1)");
        let z0 = Complex64::from_polar(r, t);
        let h = fl.integrate(z0, Direction::Forward).unwrap();
        match h.fate.kind {
            FateKind::PeriodicAround { equilibrium: Some(0), period } => {
                let pts: Vec<Complex64> = h.samples.iter().map(|s| s.z).collect();
                let n = winding(&pts, Complex64::new(0.0, 0.0));
                prop_assert!((n.abs() - 1.0).abs() < 1e-6, "winding {}", n);
                let res = h.fate.diagnostics.return_residual.unwrap();
                prop_assert!(res <= fl.controls().periodic_tol);
                prop_assert!(period > 0.0);
            }
            other => prop_assert!(false, "unexpected fate {:?}", other),
        }
    }

    #[test]
    fn power_blow_up_times(k in 2u32..=5, z0 in 0.5..2.0f64) {
        let fl = flow(&format!("x^{k}"));
        let h = fl.integrate(Complex64::new(z0, 0.0), Direction::Forward).unwrap();
        let want = 1.0 / (f64::from(k - 1) * z0.powi(k as i32 - 1));
        match h.fate.kind {
            FateKind::BlowUp { t_star, .. } => {
                prop_assert!((t_star - want).abs() <= 1e-6 * want, "{} vs {}", t_star, want)
            }
            other => prop_assert!(false, "unexpected fate {:?}", other),
        }
    }
}
