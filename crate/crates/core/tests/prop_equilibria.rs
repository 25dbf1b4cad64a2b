use std::f64::consts::PI;

use holoflow_core::equilibria::{
    analyze, contour_count, find_zeros, sector_directions, zero_order, EquilibriumClass,
};
use holoflow_core::expr::FieldAst;
use holoflow_core::geometry::Rect;
use num_complex::Complex64;
use proptest::prelude::*;

fn factor(a: Complex64) -> String {
    format!("(x-({})-({})*i)", a.re, a.im)
}

/// Roots in [-1,1]² at least 0.1 apart.
fn roots() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=6)
        .prop_map(|v| {
            let mut out: Vec<Complex64> = Vec::new();
            for (a, b) in v {
                let z = Complex64::new(a, b);
                if out.iter().all(|w| (w - z).norm() > 0.1) {
                    out.push(z);
                }
            }
            out
        })
}

fn product(roots: &[Complex64]) -> FieldAst {
    let s: Vec<String> = roots.iter().map(|r| factor(*r)).collect();
    FieldAst::parse(&s.join("*")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn constructed_roots_are_found(roots in roots()) {
        let f = product(&roots);
        let w = Rect::new(-1.5, -1.5, 1.5, 1.5);
        let found = find_zeros(&f, &w).unwrap();
        prop_assert_eq!(found.len(), roots.len());
        for r in &roots {
            let d = found.iter().map(|z| (z - r).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-9, "root {} missed by {:e}", r, d);
        }
        let n = contour_count(&f, &f.derivative(1), &w).unwrap();
        prop_assert!((n - roots.len() as f64).abs() < 1e-6, "count {}", n);
    }

    #[test]
    fn double_root_has_order_two(a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64) {
        let r = Complex64::new(a, b);
        let other = Complex64::new(c, 3.0);
        let f = FieldAst::parse(&format!("{}^2*{}", factor(r), factor(other))).unwrap();
        prop_assert_eq!(zero_order(&f, r).unwrap(), 2);
    }

    #[test]
    fn direction_structure(m in 2u32..=4, a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let r = Complex64::new(a, b);
        let f = FieldAst::parse(&format!("{}^{m}", factor(r))).unwrap();
        let d = sector_directions(&f, r, m).unwrap();
        prop_assert_eq!(d.len() as u32, 2 * m - 2);
        let gap = PI / f64::from(m - 1);
        for k in 0..d.len() {
            let next = if k + 1 < d.len() { d[k + 1] } else { d[0] + 2.0 * PI };
            prop_assert!((next - d[k] - gap).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_and_time_reversal(re in -3.0..3.0f64, im in 0.2..3.0f64, s in 0.1..10.0f64) {
        // linear field with eigenvalue λ = re + i·im, plus a center when re = 0
        for lam in [Complex64::new(re, im), Complex64::new(0.0, im)] {
            let src = format!("(({})+({})*i)*x*(1+x/10)", lam.re, lam.im);
            let w = Rect::new(-1.0, -1.0, 1.0, 1.0);
            let base = analyze(&FieldAst::parse(&src).unwrap(), &w).unwrap();
            let scaled = analyze(&FieldAst::parse(&format!("({s})*({src})")).unwrap(), &w).unwrap();
            let neg = analyze(&FieldAst::parse(&format!("-({src})")).unwrap(), &w).unwrap();
            prop_assert_eq!(base.len(), 1);
            prop_assert_eq!(scaled[0].class, base[0].class);
            prop_assert_eq!(neg[0].class, base[0].class.reversed());
            if let (Some(p), Some(q)) = (base[0].period, scaled[0].period) {
                prop_assert!((q * s - p).abs() <= 1e-9 * p);
            }
            if lam.re == 0.0 {
                prop_assert_eq!(base[0].class, EquilibriumClass::Center);
            } else if lam.re < 0.0 {
                prop_assert!(base[0].class.is_stable());
            }
        }
    }
}
