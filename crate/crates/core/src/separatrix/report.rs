use num_complex::Complex64;
use serde::Serialize;

use crate::equilibria::{Equilibrium, EquilibriumClass};
use crate::geometry::Rect;
use crate::integrator::Flow;

use super::boundary::{scan_region, slit_probe, BoundaryOptions};
use super::components::{assemble_components, PathComponent};
use super::grid::{CellCounts, CellLabel, FateGrid};
use super::records::{dedupe_records, Side, SeparatrixRecord};
use super::sector::sector_pair;
use super::verify::{verify_theorems, TheoremVerdict};
use super::SeparatrixError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionKind {
    CenterBasin,
    NodeFocusBasin,
    EllipticSector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionSpec {
    pub equilibrium: usize,
    pub kind: RegionKind,
    pub sector: Option<usize>,
}

/// One region per simple equilibrium and one per elliptic sector.
pub fn region_kinds(equilibria: &[Equilibrium]) -> Vec<RegionSpec> {
    let mut out = Vec::new();
    for e in equilibria {
        match e.class {
            EquilibriumClass::Center => out.push(RegionSpec {
                equilibrium: e.id,
                kind: RegionKind::CenterBasin,
                sector: None,
            }),
            EquilibriumClass::Multiple => {
                let n = e.sector_directions.as_ref().map_or(0, Vec::len);
                out.extend((0..n).map(|j| RegionSpec {
                    equilibrium: e.id,
                    kind: RegionKind::EllipticSector,
                    sector: Some(j),
                }));
            }
            _ => out.push(RegionSpec {
                equilibrium: e.id,
                kind: RegionKind::NodeFocusBasin,
                sector: None,
            }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationReport {
    pub field_source: String,
    pub window: Rect,
    pub equilibrium: Equilibrium,
    pub region_kind: RegionKind,
    pub sector: Option<usize>,
    pub components: Vec<PathComponent>,
    pub records: Vec<SeparatrixRecord>,
    pub verdicts: Vec<TheoremVerdict>,
    pub boundary_empty: bool,
    pub counts: CellCounts,
    pub transitions: usize,
    pub refinements: usize,
    pub notes: Vec<String>,
}

impl ConfigurationReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn count(&self, side: Side) -> usize {
        self.records.iter().filter(|r| r.side == side).count()
    }
}

/// Equilibria other than the region's own that touch region cells.
fn boundary_equilibria(flow: &Flow, grid: &FateGrid, labels: &[CellLabel], region: CellLabel, own: usize) -> Vec<usize> {
    let (dx, dy) = grid.cell_size();
    let reach = 1.5 * dx.hypot(dy);
    flow.equilibria()
        .iter()
        .filter(|e| e.id != own && grid.window.contains(e.location))
        .filter(|e| {
            (0..grid.ny).any(|j| {
                (0..grid.nx).any(|i| {
                    labels[j * grid.nx + i] == region
                        && (grid.center(i, j) - e.location).norm() <= reach
                })
            })
        })
        .map(|e| e.id)
        .collect()
}

/// Separatrix configuration of one region on a precomputed fate grid.
pub fn analyze_region(
    flow: &Flow,
    fates: &FateGrid,
    spec: RegionSpec,
    opts: &BoundaryOptions,
) -> Result<ConfigurationReport, SeparatrixError> {
    let eq = flow
        .equilibria()
        .iter()
        .find(|e| e.id == spec.equilibrium)
        .cloned()
        .ok_or(SeparatrixError::OutsideWindow(spec.equilibrium))?;
    let grid = fates.basin(&eq);
    let region = match spec.sector {
        Some(j) => CellLabel::InSector(eq.id, j),
        None => CellLabel::InBasin(eq.id),
    };
    let mut notes = Vec::new();
    let mut existing = Vec::new();
    if let Some(j) = spec.sector {
        match sector_pair(flow, &eq, j) {
            Ok(p) => {
                existing.push(p.gamma1);
                existing.push(p.gamma2);
            }
            Err(e) => notes.push(e.to_string()),
        }
    }
    let (mut records, boundary_empty, transitions, refinements) =
        match scan_region(flow, &grid, &eq, region, existing.clone(), opts) {
            Ok(s) => {
                if s.skipped > 0 {
                    notes.push(format!(
                        "refinement budget exhausted; {} transitions left unexamined",
                        s.skipped
                    ));
                }
                (s.records, false, s.transitions, s.refinements)
            }
            Err(SeparatrixError::EmptyBoundary) => (existing, true, 0, 0),
            Err(e) => return Err(e),
        };
    let isolated = boundary_equilibria(flow, fates, &grid.labels, region, eq.id);
    if spec.kind == RegionKind::NodeFocusBasin {
        for e in flow.equilibria().iter().filter(|e| isolated.contains(&e.id)) {
            let found = slit_probe(flow, e, &records, opts);
            records.extend(found);
        }
    }
    let boundary_empty = boundary_empty && records.is_empty();
    if boundary_empty {
        notes.push("boundary is empty within the window".to_string());
    }
    for (k, r) in records.iter_mut().enumerate() {
        r.id = k;
    }
    let node = spec.kind == RegionKind::NodeFocusBasin;
    let (components, malformed) = match assemble_components(&records, &isolated, node) {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let mut report = ConfigurationReport {
        field_source: flow.field().source().to_string(),
        window: fates.window,
        counts: grid.counts(region),
        equilibrium: eq,
        region_kind: spec.kind,
        sector: spec.sector,
        components,
        records,
        verdicts: Vec::new(),
        boundary_empty,
        transitions,
        refinements,
        notes,
    };
    report.verdicts = verify_theorems(&report);
    report.verdicts.push(TheoremVerdict {
        name: "components.well_formed".to_string(),
        pass: malformed.is_none(),
        measured: report.components.len() as f64,
        bound: None,
        detail: malformed.unwrap_or_else(|| "every component has a listed type".to_string()),
    });
    Ok(report)
}

/// Fate grid plus one report per region of every equilibrium in the window.
pub fn analyze_configuration(
    flow: &Flow,
    window: &Rect,
    resolution: (usize, usize),
    opts: &BoundaryOptions,
) -> Result<(FateGrid, Vec<ConfigurationReport>), SeparatrixError> {
    let fates = FateGrid::compute(flow, window, resolution.0, resolution.1)?;
    let inside: Vec<Equilibrium> = flow
        .equilibria()
        .iter()
        .filter(|e| window.contains(e.location))
        .cloned()
        .collect();
    let reports = region_kinds(&inside)
        .into_iter()
        .map(|spec| analyze_region(flow, &fates, spec, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((fates, reports))
}

/// Distinct separatrices across several reports of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatrixSummary {
    pub records: Vec<SeparatrixRecord>,
    pub positive: usize,
    pub negative: usize,
    pub double: usize,
    pub none: usize,
    pub undetermined: usize,
}

impl SeparatrixSummary {
    pub fn from_reports(flow: &Flow, reports: &[ConfigurationReport], tol: f64) -> Self {
        let all: Vec<SeparatrixRecord> = reports.iter().flat_map(|r| r.records.clone()).collect();
        let records = dedupe_records(flow, all, tol);
        let count = |s: Side| records.iter().filter(|r| r.side == s).count();
        Self {
            positive: count(Side::Positive),
            negative: count(Side::Negative),
            double: count(Side::Double),
            none: count(Side::None),
            undetermined: count(Side::Undetermined),
            records,
        }
    }

    pub fn one_sided(&self) -> usize {
        self.positive + self.negative
    }

    /// Double-sided records whose trace passes within `tol` of `z`.
    pub fn double_through(&self, z: Complex64, tol: f64) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| {
                r.side == Side::Double
                    && crate::geometry::polyline_distance(z, &r.orbit.densified()) <= tol
            })
            .map(|r| r.id)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::analyze;
    use crate::expr::FieldAst;
    use crate::integrator::Controls;
    use crate::separatrix::ComponentType;
    use std::f64::consts::PI;

    fn setup(src: &str, w: Rect) -> Flow {
        let f = FieldAst::parse(src).unwrap();
        let eqs = analyze(&f, &w).unwrap();
        Flow::new(&f, &eqs, Controls::for_window(&w).certified_for(&f))
    }

    #[test]
    fn regions_follow_classes() {
        let fl = setup("x^2*(x-1)", Rect::new(-2.0, -2.0, 2.0, 2.0));
        let kinds: Vec<_> = region_kinds(fl.equilibria()).iter().map(|s| s.kind).collect();
        assert_eq!(kinds.iter().filter(|k| **k == RegionKind::EllipticSector).count(), 2);
        assert_eq!(kinds.iter().filter(|k| **k == RegionKind::NodeFocusBasin).count(), 1);
    }

    #[test]
    fn center_line_boundary() {
        let w = Rect::new(-2.0, -2.0, 3.0, 2.0);
        let fl = setup("i*x*(x-1)", w);
        let (_, reps) = analyze_configuration(&fl, &w, (30, 24), &BoundaryOptions::default()).unwrap();
        assert_eq!(reps.len(), 2);
        for r in &reps {
            assert!(r.passed(), "{:?}", r.verdicts);
            assert_eq!(r.records.len(), 1);
            let rec = &r.records[0];
            assert_eq!(rec.side, Side::Double);
            assert!((rec.transit_time.unwrap() - 2.0 * PI).abs() < 1e-6);
            assert!((rec.seed.re - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn square_sectors() {
        let w = Rect::new(-2.0, -2.0, 2.0, 2.0);
        let fl = setup("x^2", w);
        let (_, reps) = analyze_configuration(&fl, &w, (24, 24), &BoundaryOptions::default()).unwrap();
        assert_eq!(reps.len(), 2);
        for r in &reps {
            assert!(r.passed(), "{:?}", r.verdicts);
            assert_eq!(r.count(Side::Positive), 1);
            assert_eq!(r.count(Side::Negative), 1);
            assert_eq!(r.components.len(), 1);
            assert_eq!(r.components[0].kind, ComponentType::IV);
        }
        let s = SeparatrixSummary::from_reports(&fl, &reps, 1e-5);
        assert_eq!((s.positive, s.negative, s.double), (1, 1, 0));
    }

    #[test]
    fn node_slit() {
        let w = Rect::new(-2.0, -2.0, 3.0, 2.0);
        let fl = setup("x*(x-1)", w);
        let (_, reps) = analyze_configuration(&fl, &w, (20, 16), &BoundaryOptions::default()).unwrap();
        let r = reps.iter().find(|r| r.equilibrium.id == 0).unwrap();
        assert!(r.passed(), "{:?}", r.verdicts);
        assert_eq!(r.components.len(), 1);
        assert_eq!(r.components[0].tag, "(iii)/(B)");
        assert_eq!(r.components[0].attached_equilibria, vec![1]);
        let rec = &r.records[0];
        assert_eq!(rec.side, Side::Positive);
        // blow-up from the seed on (1, ∞): t* = ln(x/(x-1))
        let x = rec.seed.re;
        assert!(rec.seed.im.abs() < 1e-12);
        assert!((rec.blow_up_times.1.unwrap() - (x / (x - 1.0)).ln()).abs() < 1e-6);
    }
}
