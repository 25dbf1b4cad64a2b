use std::sync::OnceLock;

use holoflow_core::equilibria::analyze;
use holoflow_core::expr::FieldAst;
use holoflow_core::geometry::Rect;
use holoflow_core::integrator::{Controls, Flow};
use holoflow_core::separatrix::{
    analyze_configuration, label_for, point_fate, BoundaryOptions, CellLabel, FateGrid, Side,
};
use proptest::prelude::*;

struct Setup {
    flow: Flow,
    grid: FateGrid,
}

fn setup(src: &str, w: Rect) -> Setup {
    let f = FieldAst::parse(src).unwrap();
    let eqs = analyze(&f, &w).unwrap();
    let flow = Flow::new(&f, &eqs, Controls::for_window(&w).certified_for(&f));
    let grid = FateGrid::compute(&flow, &w, 32, 32).unwrap();
    Setup { flow, grid }
}

fn corpus() -> &'static [Setup] {
    static C: OnceLock<Vec<Setup>> = OnceLock::new();
    C.get_or_init(|| {
        vec![
            setup("i*x*(x-1)", Rect::new(-2.0, -2.0, 3.0, 2.0)),
            setup("x*(x-1)", Rect::new(-2.0, -2.0, 3.0, 2.0)),
            setup("x^2*(x-1)*(x-i)*(x-1-i)", Rect::new(-1.5, -1.5, 2.5, 2.5)),
            setup("x*exp(x)", Rect::new(-4.0, -4.0, 4.0, 4.0)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4000))]

    #[test]
    fn basin_labels_are_flow_invariant(k in 0usize..4, cell in 0usize..1024, t in -0.5..0.5f64) {
        let s = &corpus()[k];
        let fate = &s.grid.cells[cell];
        let z = s.grid.center(cell % s.grid.nx, cell / s.grid.nx);
        for e in s.flow.equilibria() {
            if let CellLabel::InBasin(id) = label_for(e, fate) {
                // stay inside the interval of existence
                let tr = s.flow.orbit(z).unwrap();
                let Ok(w) = s.flow.state_at(&tr, t) else { continue };
                let again = label_for(e, &point_fate(&s.flow, w));
                prop_assert_eq!(again, CellLabel::InBasin(id), "cell {} at {} moved to {}", cell, z, w);
            }
        }
    }
}

/// Reversing time swaps the sides of every separatrix and leaves the record
/// count unchanged.
#[test]
fn time_reversal_swaps_sides() {
    for (src, w) in [
        ("x^2", Rect::new(-2.0, -2.0, 2.0, 2.0)),
        ("x*(x-1)", Rect::new(-2.0, -2.0, 3.0, 2.0)),
    ] {
        let run = |s: &str| {
            let f = FieldAst::parse(s).unwrap();
            let eqs = analyze(&f, &w).unwrap();
            let fl = Flow::new(&f, &eqs, Controls::for_window(&w).certified_for(&f));
            let (_, reps) = analyze_configuration(&fl, &w, (20, 20), &BoundaryOptions::default()).unwrap();
            let mut sides: Vec<(usize, Side)> = reps
                .iter()
                .flat_map(|r| r.records.iter().map(move |x| (r.equilibrium.id, x.side)))
                .collect();
            sides.sort_by_key(|(id, s)| (*id, s.name()));
            sides
        };
        let fwd = run(src);
        let mut rev: Vec<(usize, Side)> = run(&format!("-({src})"))
            .into_iter()
            .map(|(id, s)| {
                let s = match s {
                    Side::Positive => Side::Negative,
                    Side::Negative => Side::Positive,
                    other => other,
                };
                (id, s)
            })
            .collect();
        rev.sort_by_key(|(id, s)| (*id, s.name()));
        assert_eq!(fwd, rev, "{src}");
    }
}
