use num_complex::Complex64;

use crate::equilibria::Equilibrium;
use crate::geometry::{segment_distance, segment_intersection, Rect};
use crate::integrator::{Direction, Flow};

use super::grid::{label_for, point_fate, BasinGrid, CellLabel, Membership};
use super::records::{classify_record, same_orbit, SeparatrixRecord};
use super::SeparatrixError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOptions {
    /// Bisections allowed per region.
    pub max_refinements: usize,
    pub bisection_tol: f64,
    /// Two seeds belong to one orbit when one's trace passes this close to the other.
    pub dedupe_tol: f64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self {
            max_refinements: 64,
            bisection_tol: 0.0,
            dedupe_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryScan {
    pub records: Vec<SeparatrixRecord>,
    /// Adjacent region/non-region cell pairs found on the grid.
    pub transitions: usize,
    pub refinements: usize,
    /// Transitions left unexamined once the refinement budget ran out.
    pub skipped: usize,
}

/// Polyline with per-chunk bounding boxes for fast segment tests.
struct Coverage {
    pts: Vec<Complex64>,
    chunks: Vec<(Rect, usize, usize)>,
}

const CHUNK: usize = 32;

impl Coverage {
    fn new(pts: Vec<Complex64>) -> Self {
        let mut chunks = Vec::new();
        let mut start = 0;
        while start + 1 < pts.len() {
            let end = (start + CHUNK).min(pts.len() - 1);
            let mut r = Rect::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for p in &pts[start..=end] {
                r.xmin = r.xmin.min(p.re);
                r.xmax = r.xmax.max(p.re);
                r.ymin = r.ymin.min(p.im);
                r.ymax = r.ymax.max(p.im);
            }
            chunks.push((r, start, end));
            start = end;
        }
        Self { pts, chunks }
    }

    fn crosses(&self, c: Complex64, d: Complex64) -> bool {
        let (lx, hx) = (c.re.min(d.re), c.re.max(d.re));
        let (ly, hy) = (c.im.min(d.im), c.im.max(d.im));
        self.chunks.iter().any(|(r, s, e)| {
            r.xmin <= hx
                && r.xmax >= lx
                && r.ymin <= hy
                && r.ymax >= ly
                && self.pts[*s..=*e]
                    .windows(2)
                    .any(|w| segment_intersection(w[0], w[1], c, d).is_some())
        })
    }
}

/// Generic boundary scan over cell memberships.
///
/// Transitions whose connecting segment is already crossed by a traced
/// orbit are skipped; each remaining one is bisected and the point on the
/// outer side is traced both ways.
#[allow(clippy::too_many_arguments)]
pub(crate) fn scan(
    flow: &Flow,
    window: &Rect,
    nx: usize,
    ny: usize,
    cells: &[Membership],
    member: &(dyn Fn(Complex64) -> Membership + Sync),
    avoid: &[(Complex64, f64)],
    existing: Vec<SeparatrixRecord>,
    opts: &BoundaryOptions,
) -> BoundaryScan {
    let dx = window.width() / nx as f64;
    let dy = window.height() / ny as f64;
    let center = |i: usize, j: usize| {
        Complex64::new(
            window.xmin + (i as f64 + 0.5) * dx,
            window.ymin + (j as f64 + 0.5) * dy,
        )
    };
    let mut transitions = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let here = cells[j * nx + i];
            for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                if ni >= nx || nj >= ny {
                    continue;
                }
                let there = cells[nj * nx + ni];
                match (here, there) {
                    (Membership::In, Membership::Out) => {
                        transitions.push((center(i, j), center(ni, nj)))
                    }
                    (Membership::Out, Membership::In) => {
                        transitions.push((center(ni, nj), center(i, j)))
                    }
                    _ => {}
                }
            }
        }
    }

    let mut records = existing;
    let mut cover: Vec<Coverage> = records
        .iter()
        .map(|r| Coverage::new(r.orbit.densified()))
        .collect();
    let mut refinements = 0;
    let mut skipped = 0;
    for &(p_in, p_out) in &transitions {
        if avoid
            .iter()
            .any(|&(a, r)| segment_distance(a, p_in, p_out) < r)
        {
            continue;
        }
        if cover.iter().any(|c| c.crosses(p_in, p_out)) {
            continue;
        }
        if refinements >= opts.max_refinements {
            skipped += 1;
            continue;
        }
        refinements += 1;
        let Some(seed) = bisect(member, p_in, p_out, opts.bisection_tol) else {
            continue;
        };
        let Ok(orbit) = flow.orbit(seed) else { continue };
        let rec = classify_record(records.len(), seed, orbit);
        let dup = records
            .iter()
            .any(|r| same_orbit(flow, r, &rec, opts.dedupe_tol));
        cover.push(Coverage::new(rec.orbit.densified()));
        if !dup {
            records.push(rec);
        }
    }
    BoundaryScan {
        records,
        transitions: transitions.len(),
        refinements,
        skipped,
    }
}

/// Outer endpoint of the bisected segment, within `tol` of the flip.
fn bisect(
    member: &(dyn Fn(Complex64) -> Membership + Sync),
    mut p_in: Complex64,
    mut p_out: Complex64,
    tol: f64,
) -> Option<Complex64> {
    for _ in 0..200 {
        if (p_in - p_out).norm() <= tol * p_out.norm().max(1.0) {
            break;
        }
        let mid = (p_in + p_out) * 0.5;
        if mid == p_in || mid == p_out {
            break;
        }
        match member(mid) {
            Membership::In => p_in = mid,
            Membership::Out => p_out = mid,
            Membership::Unknown => return Some(p_out),
        }
    }
    Some(p_out)
}

fn region_member<'a>(
    flow: &'a Flow,
    eq: &'a Equilibrium,
    region: CellLabel,
) -> impl Fn(Complex64) -> Membership + Sync + 'a {
    move |z| label_membership(label_for(eq, &point_fate(flow, z)), region)
}

pub(crate) fn label_membership(label: CellLabel, region: CellLabel) -> Membership {
    match label {
        l if l == region => Membership::In,
        CellLabel::Unresolved | CellLabel::Equilibrium => Membership::Unknown,
        _ => Membership::Out,
    }
}

/// Flow used for membership tests. Orbits are followed further out than
/// the tracing radius so that large periodic or homoclinic loops near a
/// boundary are not mistaken for escapes.
pub(crate) fn quiet(flow: &Flow) -> Flow {
    let mut c = *flow.controls();
    c.record = false;
    c.extrap_radius = c.extrap_radius.powf(1.5).max(c.extrap_radius);
    flow.with_controls(c)
}

/// Disks around multiple equilibria where grid transitions are not refined;
/// their attached orbits come from the sector construction.
pub(crate) fn avoid_disks(flow: &Flow, window: &Rect, nx: usize, ny: usize) -> Vec<(Complex64, f64)> {
    let diag = (window.width() / nx as f64).hypot(window.height() / ny as f64);
    flow.equilibria()
        .iter()
        .filter_map(|e| {
            flow.multiple_capture_radius(e.id)
                .map(|r| (e.location, (2.0 * r).max(2.0 * diag)))
        })
        .collect()
}

pub(crate) fn scan_region(
    flow: &Flow,
    grid: &BasinGrid,
    eq: &Equilibrium,
    region: CellLabel,
    existing: Vec<SeparatrixRecord>,
    opts: &BoundaryOptions,
) -> Result<BoundaryScan, SeparatrixError> {
    let cells: Vec<Membership> = grid
        .labels
        .iter()
        .map(|&l| label_membership(l, region))
        .collect();
    let q = quiet(flow);
    let member = region_member(&q, eq, region);
    let avoid = avoid_disks(flow, &grid.window, grid.nx, grid.ny);
    let out = scan(
        flow,
        &grid.window,
        grid.nx,
        grid.ny,
        &cells,
        &member,
        &avoid,
        existing,
        opts,
    );
    if out.transitions == 0 {
        return Err(SeparatrixError::EmptyBoundary);
    }
    Ok(out)
}

/// Boundary seeds of `region` on a labelled grid, one per distinct orbit.
pub fn extract_boundary(
    flow: &Flow,
    grid: &BasinGrid,
    eq: &Equilibrium,
    region: CellLabel,
    opts: &BoundaryOptions,
) -> Result<Vec<Complex64>, SeparatrixError> {
    let scan = scan_region(flow, grid, eq, region, Vec::new(), opts)?;
    Ok(scan.records.iter().map(|r| r.seed).collect())
}

/// Trace seeds both ways, classify, and merge seeds lying on one orbit.
pub fn trace_and_classify(
    flow: &Flow,
    seeds: &[Complex64],
    opts: &BoundaryOptions,
) -> Vec<SeparatrixRecord> {
    let mut out: Vec<SeparatrixRecord> = Vec::new();
    for &s in seeds {
        let Ok(orbit) = flow.orbit(s) else { continue };
        let rec = classify_record(out.len(), s, orbit);
        if !out.iter().any(|r| same_orbit(flow, r, &rec, opts.dedupe_tol)) {
            out.push(rec);
        }
    }
    out
}

/// Orbits leaving a simple boundary equilibrium `b` towards infinity.
///
/// Such orbits can form slits of the region, invisible to any grid. On a
/// small circle around `b` the maximal modulus of the orbit leaving `b`
/// diverges at the slit angle; local maxima are refined by golden-section
/// search and kept when the traced orbit blows up.
pub(crate) fn slit_probe(
    flow: &Flow,
    b: &Equilibrium,
    existing: &[SeparatrixRecord],
    opts: &BoundaryOptions,
) -> Vec<SeparatrixRecord> {
    const SAMPLES: usize = 64;
    if b.order != 1 {
        return Vec::new();
    }
    let lambda = b.derivative_at;
    let dir = if lambda.re > 0.0 {
        Direction::Forward
    } else if lambda.re < 0.0 {
        Direction::Backward
    } else {
        return Vec::new();
    };
    let gap = flow
        .equilibria()
        .iter()
        .filter(|e| e.id != b.id)
        .map(|e| (e.location - b.location).norm())
        .fold(f64::INFINITY, f64::min);
    let rho = (1e-2 * b.location.norm().max(1.0)).min(0.25 * gap);
    let q = quiet(flow);
    let at = |phi: f64| b.location + Complex64::from_polar(rho, phi);
    let reach = |phi: f64| match q.integrate(at(phi), dir) {
        Ok(h) => h.fate.diagnostics.max_modulus,
        Err(_) => 0.0,
    };
    let step = 2.0 * std::f64::consts::PI / SAMPLES as f64;
    let vals: Vec<f64> = (0..SAMPLES).map(|k| reach(k as f64 * step)).collect();
    let esc = flow.controls().escape_radius;
    let mut out: Vec<SeparatrixRecord> = Vec::new();
    for k in 0..SAMPLES {
        let (l, c, r) = (
            vals[(k + SAMPLES - 1) % SAMPLES],
            vals[k],
            vals[(k + 1) % SAMPLES],
        );
        if !(c >= l && c > r) || c < esc {
            continue;
        }
        let phi = golden_max(&reach, (k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
        let seed = at(phi);
        let Ok(orbit) = flow.orbit(seed) else { continue };
        let rec = classify_record(existing.len() + out.len(), seed, orbit);
        if !rec.side.is_separatrix() {
            continue;
        }
        let dup = existing
            .iter()
            .chain(out.iter())
            .any(|r| same_orbit(flow, r, &rec, opts.dedupe_tol));
        if !dup {
            out.push(rec);
        }
    }
    out
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..120 {
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}
