use std::f64::consts::PI;

use anyhow::Result;
use holoflow_core::equilibria::{analyze, EquilibriumClass};
use holoflow_core::expr::FieldAst;
use holoflow_core::geometry::Rect;
use holoflow_core::integrator::{Controls, Direction, FateKind, Flow};
use holoflow_core::separatrix::{
    analyze_configuration, BoundaryOptions, ConfigurationReport, RegionKind, SeparatrixSummary,
    Side,
};
use num_complex::Complex64;

pub struct Row {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

struct Case {
    flow: Flow,
    reports: Vec<ConfigurationReport>,
}

fn flow(src: &str, w: &Rect) -> Result<Flow> {
    let f = FieldAst::parse(src)?;
    let eqs = analyze(&f, w)?;
    Ok(Flow::new(&f, &eqs, Controls::for_window(w).certified_for(&f)))
}

fn case(src: &str, w: Rect, res: (usize, usize)) -> Result<Case> {
    let flow = flow(src, &w)?;
    let (_, reports) = analyze_configuration(&flow, &w, res, &BoundaryOptions::default())?;
    Ok(Case { flow, reports })
}

fn verdict_row(name: &str, c: &Case) -> Row {
    let failed: Vec<String> = c
        .reports
        .iter()
        .flat_map(|r| r.verdicts.iter().filter(|v| !v.pass).map(|v| v.name.clone()))
        .collect();
    let total: usize = c.reports.iter().map(|r| r.verdicts.len()).sum();
    Row {
        name: format!("{name}: verdicts"),
        pass: failed.is_empty() && total > 0,
        detail: if failed.is_empty() {
            format!("{total} verdicts over {} regions", c.reports.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    }
}

fn blow_up_row(name: &str, src: &str, z0: f64, want: f64, tol: f64) -> Row {
    let w = Rect::new(-2.0, -2.0, 2.0, 2.0);
    let got = flow(src, &w)
        .and_then(|f| Ok(f.integrate(Complex64::new(z0, 0.0), Direction::Forward)?))
        .ok()
        .and_then(|h| match h.fate.kind {
            FateKind::BlowUp { t_star, .. } => Some(t_star),
            _ => None,
        });
    let err = got.map_or(f64::INFINITY, |t| (t - want).abs());
    Row {
        name: format!("{name}: blow-up time from {z0}"),
        pass: err <= tol,
        detail: format!("t* = {got:?}, expected {want:.12} within {tol:.0e}"),
    }
}

fn push(rows: &mut Vec<Row>, name: &str, r: Result<Vec<Row>>) {
    match r {
        Ok(v) => rows.extend(v),
        Err(e) => rows.push(Row {
            name: name.to_string(),
            pass: false,
            detail: format!("error: {e:#}"),
        }),
    }
}

/// Corpus checks against closed forms and the expected configurations.
pub fn run() -> Vec<Row> {
    let mut rows = Vec::new();
    push(&mut rows, "i*x*(x-1)", (|| {
        let c = case("i*x*(x-1)", Rect::new(-2.0, -2.0, 3.0, 2.0), (32, 24))?;
        let taus: Vec<f64> = c
            .reports
            .iter()
            .flat_map(|r| r.records.iter().filter_map(|x| x.transit_time))
            .collect();
        let ok = taus.len() == 2 && taus.iter().all(|t| (t - 2.0 * PI).abs() <= 1e-3);
        Ok(vec![
            verdict_row("i*x*(x-1)", &c),
            Row {
                name: "i*x*(x-1): boundary transit time 2pi".into(),
                pass: ok,
                detail: format!("{taus:?}"),
            },
        ])
    })());
    push(&mut rows, "1+x^2", (|| {
        let c = case("1+x^2", Rect::new(-3.0, -3.0, 3.0, 3.0), (32, 32))?;
        let s = SeparatrixSummary::from_reports(&c.flow, &c.reports, 1e-5);
        let real: Vec<f64> = s
            .records
            .iter()
            .filter(|r| r.side == Side::Double && r.seed.im.abs() < 1e-6)
            .filter_map(|r| r.transit_time)
            .collect();
        Ok(vec![
            verdict_row("1+x^2", &c),
            Row {
                name: "1+x^2: real axis double-sided, transit pi".into(),
                pass: real.len() == 1 && (real[0] - PI).abs() <= 1e-3,
                detail: format!("{real:?}"),
            },
        ])
    })());
    rows.push(blow_up_row("1+x^2", "1+x^2", 0.0, PI / 2.0, 1e-6));
    push(&mut rows, "x^2", (|| {
        let c = case("x^2", Rect::new(-2.0, -2.0, 2.0, 2.0), (24, 24))?;
        let s = SeparatrixSummary::from_reports(&c.flow, &c.reports, 1e-5);
        Ok(vec![
            verdict_row("x^2", &c),
            Row {
                name: "x^2: one positive, one negative separatrix".into(),
                pass: (s.positive, s.negative, s.double) == (1, 1, 0),
                detail: format!("+{} -{} double {}", s.positive, s.negative, s.double),
            },
        ])
    })());
    rows.push(blow_up_row("x^2", "x^2", 1.0, 1.0, 1e-6));
    push(&mut rows, "x*(x-1)", (|| {
        let c = case("x*(x-1)", Rect::new(-2.0, -2.0, 3.0, 2.0), (20, 16))?;
        let tags: Vec<String> = c
            .reports
            .iter()
            .filter(|r| r.equilibrium.id == 0)
            .flat_map(|r| r.components.iter().map(|k| k.tag.clone()))
            .collect();
        Ok(vec![
            verdict_row("x*(x-1)", &c),
            Row {
                name: "x*(x-1): basin of 0 has one (B) component".into(),
                pass: tags == ["(iii)/(B)"],
                detail: format!("{tags:?}"),
            },
        ])
    })());
    rows.push(blow_up_row("x*(x-1)", "x*(x-1)", 2.0, 2f64.ln(), 1e-6));
    push(&mut rows, "quartic", (|| {
        let src = "x^2*(x-1)*(x-i)*(x-1-i)";
        let c = case(src, Rect::new(-1.5, -1.5, 2.5, 2.5), (40, 40))?;
        let eqs = c.flow.equilibria();
        let class_at = |z: Complex64| {
            eqs.iter()
                .find(|e| (e.location - z).norm() < 1e-9)
                .map(|e| e.class)
        };
        let classes = [
            class_at(Complex64::new(0.0, 0.0)),
            class_at(Complex64::new(1.0, 0.0)),
            class_at(Complex64::new(0.0, 1.0)),
            class_at(Complex64::new(1.0, 1.0)),
        ];
        let want = [
            Some(EquilibriumClass::Multiple),
            Some(EquilibriumClass::StableFocus),
            Some(EquilibriumClass::StableFocus),
            Some(EquilibriumClass::StableNode),
        ];
        let sectors = c
            .reports
            .iter()
            .filter(|r| r.region_kind == RegionKind::EllipticSector)
            .count();
        Ok(vec![
            Row {
                name: "quartic: equilibria and classes".into(),
                pass: classes == want && eqs.len() == 4 && sectors == 2,
                detail: format!("{classes:?}, {sectors} sectors"),
            },
            verdict_row("quartic", &c),
        ])
    })());
    push(&mut rows, "x*exp(x)", (|| {
        let c = case("x*exp(x)", Rect::new(-6.0, -6.0, 6.0, 6.0), (40, 40))?;
        let s = SeparatrixSummary::from_reports(&c.flow, &c.reports, 1e-5);
        let class = c.flow.equilibria().first().map(|e| e.class);
        Ok(vec![
            verdict_row("x*exp(x)", &c),
            Row {
                name: "x*exp(x): repelling node with two negative separatrices".into(),
                pass: class == Some(EquilibriumClass::UnstableNode)
                    && (s.positive, s.negative, s.double) == (0, 2, 0),
                detail: format!("{class:?}, +{} -{} double {}", s.positive, s.negative, s.double),
            },
        ])
    })());
    rows
}
