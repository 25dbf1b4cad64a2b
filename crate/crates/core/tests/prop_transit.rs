use std::f64::consts::PI;

use holoflow_core::equilibria::analyze;
use holoflow_core::expr::FieldAst;
use holoflow_core::geometry::Rect;
use holoflow_core::integrator::{Controls, Flow};
use holoflow_core::transit::{
    clock_contour_check, contour_integral_reciprocal, residue_period, transit_time_contour,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn flow(src: &str, w: &Rect) -> Flow {
    let f = FieldAst::parse(src).unwrap();
    let eqs = analyze(&f, w).unwrap();
    Flow::new(&f, &eqs, Controls::for_window(w).certified_for(&f))
}

fn rectangle_path(r: &Rect, per_side: usize) -> Vec<Complex64> {
    let c = [
        Complex64::new(r.xmin, r.ymin),
        Complex64::new(r.xmax, r.ymin),
        Complex64::new(r.xmax, r.ymax),
        Complex64::new(r.xmin, r.ymax),
    ];
    let mut out = Vec::new();
    for k in 0..4 {
        for j in 0..per_side {
            let s = j as f64 / per_side as f64;
            out.push(c[k] + (c[(k + 1) % 4] - c[k]) * s);
        }
    }
    out.push(c[0]);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn cauchy_null_homotopy(
        roots in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..5),
        x0 in -2.0..1.5f64, y0 in -2.0..1.5f64, w in 0.1..1.0f64, h in 0.1..1.0f64,
    ) {
        let src: Vec<String> = roots.iter().map(|(a, b)| format!("(x-({a})-({b})*i)")).collect();
        let f = FieldAst::parse(&src.join("*")).unwrap();
        let rect = Rect::new(x0, y0, x0 + w, y0 + h);
        let zeros: Vec<Complex64> = roots.iter().map(|(a, b)| Complex64::new(*a, *b)).collect();
        // keep the rectangle and its neighbourhood free of zeros
        prop_assume!(zeros.iter().all(|z| !rect.dilate(0.2).contains(*z)));
        let path = rectangle_path(&rect, 4);
        let min_f = path.iter().map(|z| f.value(*z).norm()).fold(f64::INFINITY, f64::min);
        let r = contour_integral_reciprocal(&f, &path, &zeros, 0.0).unwrap();
        let length = 2.0 * (w + h);
        prop_assert!(r.value.norm() <= 1e-8 * length / min_f, "{:e}", r.value.norm());
    }

    #[test]
    fn residue_identity(k in 0usize..4, scale in 0.0..1.0f64) {
        let (src, w) = [
            ("i*x*(x-1)", Rect::new(-2.0, -2.0, 3.0, 2.0)),
            ("1+x^2", Rect::new(-3.0, -3.0, 3.0, 3.0)),
            ("x*(x-1)", Rect::new(-2.0, -2.0, 3.0, 2.0)),
            ("x*exp(x)", Rect::new(-3.0, -3.0, 3.0, 3.0)),
        ][k];
        let fl = flow(src, &w);
        let zeros: Vec<Complex64> = fl.equilibria().iter().map(|e| e.location).collect();
        for e in fl.equilibria() {
            // radius over one decade, [0.02, 0.2]
            let r = 0.02 * 10f64.powf(scale);
            let v = residue_period(fl.field(), e.location, r, &zeros).unwrap();
            let want = Complex64::new(0.0, 2.0 * PI) / e.derivative_at;
            prop_assert!((v - want).norm() <= 1e-9 * want.norm(), "{} vs {}", v, want);
        }
    }

    #[test]
    fn clock_equals_contour(re in -1.5..1.5f64, im in 0.2..1.5f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let w = Rect::new(-2.0, -2.0, 2.0, 2.0);
        let fl = flow("x^2*(x-1)*(x-i)*(x-1-i)", &w);
        let tr = fl.orbit(Complex64::new(re, im)).unwrap();
        let (lo, hi) = tr.span();
        let (lo, hi) = (lo.max(-5.0), hi.min(5.0));
        let (t1, t2) = (lo + a * (hi - lo), lo + b * (hi - lo));
        prop_assume!((t2 - t1).abs() > 1e-6);
        prop_assert!(clock_contour_check(&fl, &tr, t1, t2).unwrap() <= 1e-6);
    }
}

/// Sampled transit times along the real axis of `1+x²` approach its
/// interval of existence, of length π, from below.
#[test]
fn real_axis_supremum() {
    use rand::{Rng, SeedableRng};
    let w = Rect::new(-3.0, -3.0, 3.0, 3.0);
    let fl = flow("1+x^2", &w);
    let tr = fl.orbit(Complex64::new(0.0, 0.0)).unwrap();
    let n = tr.samples.len();
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    let mut best: f64 = 0.0;
    for k in 0..100 {
        // the first pair spans the whole trace
        let (i, j) = if k == 0 { (0, n - 1) } else { (rng.gen_range(0..n), rng.gen_range(0..n)) };
        if i == j {
            continue;
        }
        let (t1, t2) = (tr.samples[i].t, tr.samples[j].t);
        let tau = transit_time_contour(&fl, &tr, t1, t2).unwrap().value.re;
        let want = tr.samples[j].z.re.atan() - tr.samples[i].z.re.atan();
        assert!((tau - want).abs() < 1e-6, "{tau} vs {want}");
        assert!(tau.abs() < PI);
        best = best.max(tau.abs());
    }
    assert!(best >= PI - 1e-3, "{best}");
}
