//! Serialization of results: JSON reports, CSV orbit dumps and SVG portraits.
//!
//! Every real number in JSON output is written with 17 significant digits;
//! non-finite values become `null`.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::equilibria::{Equilibrium, EquilibriumClass};
use crate::geometry::{clip_to, Rect};
use crate::integrator::{FateKind, HalfTrace, OrbitTrace};
use crate::separatrix::{
    label_for, CellLabel, ConfigurationReport, FateGrid, HeteroclinicReport, RegionKind, Side,
    SeparatrixRecord, SeparatrixSummary, TheoremVerdict,
};
use crate::transit::{Checkpoint, TransitResult};

/// A real number serialized with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(format_num(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

/// `x` in scientific notation with 17 significant digits.
pub fn format_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn num(x: f64) -> Num {
    Num(x)
}

fn opt(x: Option<f64>) -> Option<Num> {
    x.map(Num)
}

fn cplx(z: Complex64) -> [Num; 2] {
    [Num(z.re), Num(z.im)]
}

fn window_json(w: &Rect) -> [Num; 4] {
    w.as_array().map(Num)
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumJson {
    pub id: usize,
    pub location: [Num; 2],
    pub order: u32,
    pub class: &'static str,
    pub period: Option<Num>,
    pub sector_directions: Option<Vec<Num>>,
    pub derivative_at: [Num; 2],
    pub leading_coefficient: [Num; 2],
    pub near_degenerate: bool,
}

impl From<&Equilibrium> for EquilibriumJson {
    fn from(e: &Equilibrium) -> Self {
        Self {
            id: e.id,
            location: cplx(e.location),
            order: e.order,
            class: e.class.name(),
            period: opt(e.period),
            sector_directions: e
                .sector_directions
                .as_ref()
                .map(|d| d.iter().copied().map(Num).collect()),
            derivative_at: cplx(e.derivative_at),
            leading_coefficient: cplx(e.leading_coefficient),
            near_degenerate: e.near_degenerate,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriaJson {
    pub field_source: String,
    pub window: [Num; 4],
    pub equilibria: Vec<EquilibriumJson>,
}

pub fn equilibria_json(source: &str, window: &Rect, eqs: &[Equilibrium]) -> EquilibriaJson {
    EquilibriaJson {
        field_source: source.to_string(),
        window: window_json(window),
        equilibria: eqs.iter().map(EquilibriumJson::from).collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FateJson {
    pub kind: String,
    pub equilibrium: Option<usize>,
    pub approach_angle: Option<Num>,
    pub period: Option<Num>,
    pub t_star: Option<Num>,
    pub error: Option<Num>,
    pub direction_angle: Option<Num>,
    pub reason: Option<&'static str>,
    pub steps: usize,
    pub rejected: usize,
    pub elapsed: Num,
    pub final_z: [Num; 2],
    pub max_modulus: Num,
    pub return_residual: Option<Num>,
}

impl From<&crate::integrator::Fate> for FateJson {
    fn from(f: &crate::integrator::Fate) -> Self {
        let d = &f.diagnostics;
        let mut out = Self {
            kind: String::new(),
            equilibrium: None,
            approach_angle: None,
            period: None,
            t_star: None,
            error: None,
            direction_angle: None,
            reason: None,
            steps: d.steps,
            rejected: d.rejected,
            elapsed: num(d.elapsed),
            final_z: cplx(d.final_z),
            max_modulus: num(d.max_modulus),
            return_residual: opt(d.return_residual),
        };
        match f.kind {
            FateKind::ConvergesTo {
                equilibrium,
                approach_angle,
            } => {
                out.kind = "ConvergesTo".into();
                out.equilibrium = Some(equilibrium);
                out.approach_angle = opt(approach_angle);
            }
            FateKind::PeriodicAround {
                equilibrium,
                period,
            } => {
                out.kind = "PeriodicAround".into();
                out.equilibrium = equilibrium;
                out.period = Some(num(period));
            }
            FateKind::BlowUp {
                t_star,
                error,
                direction_angle,
            } => {
                out.kind = "BlowUp".into();
                out.t_star = Some(num(t_star));
                out.error = Some(num(error));
                out.direction_angle = Some(num(direction_angle));
            }
            FateKind::Undetermined(r) => {
                out.kind = "Undetermined".into();
                out.reason = Some(r.name());
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitJson {
    pub field_source: String,
    pub seed: [Num; 2],
    pub samples: usize,
    pub t_minus: Num,
    pub t_plus: Num,
    pub forward_fate: FateJson,
    pub backward_fate: FateJson,
}

pub fn orbit_json(source: &str, trace: &OrbitTrace) -> OrbitJson {
    OrbitJson {
        field_source: source.to_string(),
        seed: cplx(trace.origin()),
        samples: trace.samples.len(),
        t_minus: num(trace.t_minus),
        t_plus: num(trace.t_plus),
        forward_fate: (&trace.forward_fate).into(),
        backward_fate: (&trace.backward_fate).into(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfOrbitJson {
    pub field_source: String,
    pub seed: [Num; 2],
    pub direction: &'static str,
    pub samples: usize,
    pub fate: FateJson,
}

pub fn half_orbit_json(source: &str, half: &HalfTrace) -> HalfOrbitJson {
    HalfOrbitJson {
        field_source: source.to_string(),
        seed: cplx(half.samples.first().map_or(Complex64::new(f64::NAN, f64::NAN), |s| s.z)),
        direction: match half.direction {
            crate::integrator::Direction::Forward => "forward",
            crate::integrator::Direction::Backward => "backward",
        },
        samples: half.samples.len(),
        fate: (&half.fate).into(),
    }
}

/// Orbit dump with header `t,re,im`, one row per accepted step.
pub fn orbit_csv(trace: &OrbitTrace) -> String {
    let mut s = String::from("t,re,im\n");
    for p in &trace.samples {
        let _ = writeln!(s, "{},{},{}", format_num(p.t), format_num(p.z.re), format_num(p.z.im));
    }
    s
}

/// Orbit dump of a single half-trace.
pub fn half_csv(half: &HalfTrace) -> String {
    let mut s = String::from("t,re,im\n");
    for p in &half.samples {
        let _ = writeln!(s, "{},{},{}", format_num(p.t), format_num(p.z.re), format_num(p.z.im));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitJson {
    pub value: [Num; 2],
    pub method: &'static str,
    pub error_estimate: Num,
    pub path_descriptor: String,
}

impl From<&TransitResult> for TransitJson {
    fn from(r: &TransitResult) -> Self {
        Self {
            value: cplx(r.value),
            method: match r.method {
                crate::transit::Method::Clock => "clock",
                crate::transit::Method::Contour => "contour",
            },
            error_estimate: num(r.error_estimate),
            path_descriptor: r.path_descriptor.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckpointJson {
    pub threshold: Num,
    pub time: Num,
    pub re: Num,
    pub im: Num,
    pub comparator: Option<Num>,
    pub margin: Option<Num>,
}

impl From<&Checkpoint> for CheckpointJson {
    fn from(c: &Checkpoint) -> Self {
        Self {
            threshold: num(c.threshold),
            time: num(c.time),
            re: num(c.re),
            im: num(c.im),
            comparator: opt(c.comparator),
            margin: opt(c.margin),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentJson {
    #[serde(rename = "type")]
    pub kind: String,
    pub orbit_ids: Vec<usize>,
    pub attached_equilibria: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparatrixJson {
    pub id: usize,
    pub side: &'static str,
    pub transit_time: Option<Num>,
    pub blow_up_times: [Option<Num>; 2],
    pub seed: [Num; 2],
    pub role: Option<&'static str>,
    pub reason: Option<&'static str>,
    pub backward_fate: String,
    pub forward_fate: String,
}

impl From<&SeparatrixRecord> for SeparatrixJson {
    fn from(r: &SeparatrixRecord) -> Self {
        Self {
            id: r.id,
            side: r.side.name(),
            transit_time: opt(r.transit_time),
            blow_up_times: [opt(r.blow_up_times.0), opt(r.blow_up_times.1)],
            seed: cplx(r.seed),
            role: r.role.map(|g| match g {
                crate::separatrix::SectorRole::Gamma1 => "gamma1",
                crate::separatrix::SectorRole::Gamma2 => "gamma2",
            }),
            reason: r.reason.map(|x| x.name()),
            backward_fate: r.orbit.backward_fate.kind.label(),
            forward_fate: r.orbit.forward_fate.kind.label(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictJson {
    pub name: String,
    pub pass: bool,
    pub measured: Num,
    pub bound: Option<Num>,
    pub detail: String,
}

impl From<&TheoremVerdict> for VerdictJson {
    fn from(v: &TheoremVerdict) -> Self {
        Self {
            name: v.name.clone(),
            pass: v.pass,
            measured: num(v.measured),
            bound: opt(v.bound),
            detail: v.detail.clone(),
        }
    }
}

pub fn region_kind_name(k: RegionKind) -> &'static str {
    match k {
        RegionKind::CenterBasin => "CenterBasin",
        RegionKind::NodeFocusBasin => "NodeFocusBasin",
        RegionKind::EllipticSector => "EllipticSector",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigurationJson {
    pub field_source: String,
    pub window: [Num; 4],
    pub equilibrium: EquilibriumJson,
    pub region_kind: &'static str,
    pub sector: Option<usize>,
    pub components: Vec<ComponentJson>,
    pub separatrices: Vec<SeparatrixJson>,
    pub theorem_verdicts: Vec<VerdictJson>,
    pub boundary_empty: bool,
    pub cells: crate::separatrix::CellCounts,
    pub notes: Vec<String>,
}

impl From<&ConfigurationReport> for ConfigurationJson {
    fn from(r: &ConfigurationReport) -> Self {
        Self {
            field_source: r.field_source.clone(),
            window: window_json(&r.window),
            equilibrium: (&r.equilibrium).into(),
            region_kind: region_kind_name(r.region_kind),
            sector: r.sector,
            components: r
                .components
                .iter()
                .map(|c| ComponentJson {
                    kind: c.tag.clone(),
                    orbit_ids: c.orbit_ids.clone(),
                    attached_equilibria: c.attached_equilibria.clone(),
                })
                .collect(),
            separatrices: r.records.iter().map(SeparatrixJson::from).collect(),
            theorem_verdicts: r.verdicts.iter().map(VerdictJson::from).collect(),
            boundary_empty: r.boundary_empty,
            cells: r.counts,
            notes: r.notes.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryJson {
    pub positive: usize,
    pub negative: usize,
    pub double: usize,
    pub none: usize,
    pub undetermined: usize,
    pub separatrices: Vec<SeparatrixJson>,
}

impl From<&SeparatrixSummary> for SummaryJson {
    fn from(s: &SeparatrixSummary) -> Self {
        Self {
            positive: s.positive,
            negative: s.negative,
            double: s.double,
            none: s.none,
            undetermined: s.undetermined,
            separatrices: s.records.iter().map(SeparatrixJson::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HeteroclinicJson {
    pub pair: [usize; 2],
    pub cells: usize,
    pub outcomes: crate::separatrix::OutcomeCounts,
    pub separatrices: Vec<SeparatrixJson>,
}

impl From<&HeteroclinicReport> for HeteroclinicJson {
    fn from(h: &HeteroclinicReport) -> Self {
        Self {
            pair: [h.pair.0, h.pair.1],
            cells: h.cells,
            outcomes: h.outcomes(),
            separatrices: h.records.iter().map(SeparatrixJson::from).collect(),
        }
    }
}

/// Gaussian integers inside `window` that the trace of `record` passes
/// within `tol` of.
pub fn lattice_marks(record: &SeparatrixRecord, window: &Rect, tol: f64) -> Vec<Complex64> {
    let pts = record.orbit.densified();
    let mut out = Vec::new();
    for n in (window.ymin.ceil() as i64)..=(window.ymax.floor() as i64) {
        for m in (window.xmin.ceil() as i64)..=(window.xmax.floor() as i64) {
            let z = Complex64::new(m as f64, n as f64);
            if crate::geometry::polyline_distance(z, &pts) <= tol {
                out.push(z);
            }
        }
    }
    out
}

/// `2`, `-i`, `1+2i`, ...
pub fn gaussian_label(z: Complex64) -> String {
    let (a, b) = (z.re.round() as i64, z.im.round() as i64);
    let imag = match b {
        1 => "i".to_string(),
        -1 => "-i".to_string(),
        _ => format!("{b}i"),
    };
    match (a, b) {
        (_, 0) => a.to_string(),
        (0, _) => imag,
        _ if b > 0 => format!("{a}+{imag}"),
        _ => format!("{a}{imag}"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DoubleMarksJson {
    pub id: usize,
    pub passes_through: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntryJson {
    pub value: Num,
    pub field_source: String,
    pub summary: SummaryJson,
    pub double_marks: Vec<DoubleMarksJson>,
    pub reports: Vec<ConfigurationJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepJson {
    pub field_template: String,
    pub parameter: String,
    pub entries: Vec<SweepEntryJson>,
    pub changes: Vec<String>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

/// Checks that a parsed configuration report carries the stable field names.
pub fn validate_configuration(v: &serde_json::Value) -> Result<(), String> {
    fn need<'a>(v: &'a serde_json::Value, key: &str) -> Result<&'a serde_json::Value, String> {
        v.get(key).ok_or_else(|| format!("missing field `{key}`"))
    }
    fn real(v: &serde_json::Value, what: &str) -> Result<(), String> {
        if v.is_number() || v.is_null() {
            Ok(())
        } else {
            Err(format!("`{what}` is not a number"))
        }
    }
    if !need(v, "field_source")?.is_string() {
        return Err("`field_source` is not a string".into());
    }
    let w = need(v, "window")?.as_array().ok_or("`window` is not an array")?;
    if w.len() != 4 {
        return Err("`window` needs four numbers".into());
    }
    for x in w {
        real(x, "window")?;
    }
    let e = need(v, "equilibrium")?;
    for k in ["location", "order", "class", "period", "sector_directions"] {
        need(e, k)?;
    }
    let kind = need(v, "region_kind")?.as_str().ok_or("`region_kind` is not a string")?;
    if !["CenterBasin", "NodeFocusBasin", "EllipticSector"].contains(&kind) {
        return Err(format!("unknown region kind `{kind}`"));
    }
    for c in need(v, "components")?.as_array().ok_or("`components` is not an array")? {
        for k in ["type", "orbit_ids", "attached_equilibria"] {
            need(c, k)?;
        }
    }
    for r in need(v, "separatrices")?.as_array().ok_or("`separatrices` is not an array")? {
        for k in ["id", "side", "transit_time", "blow_up_times", "seed"] {
            need(r, k)?;
        }
        let side = r["side"].as_str().ok_or("`side` is not a string")?;
        if !["positive", "negative", "double", "none", "undetermined"].contains(&side) {
            return Err(format!("unknown side `{side}`"));
        }
        real(&r["transit_time"], "transit_time")?;
    }
    for t in need(v, "theorem_verdicts")?.as_array().ok_or("`theorem_verdicts` is not an array")? {
        for k in ["name", "pass", "measured", "bound"] {
            need(t, k)?;
        }
        if !t["pass"].is_boolean() {
            return Err("`pass` is not a boolean".into());
        }
        real(&t["measured"], "measured")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgStyle {
    /// Width in pixels; the height follows the window's aspect ratio.
    pub width: f64,
    pub orbit_stroke: f64,
    pub separatrix_stroke: f64,
    pub equilibrium_radius: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            width: 800.0,
            orbit_stroke: 1.0,
            separatrix_stroke: 2.0,
            equilibrium_radius: 4.0,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#cfe3f7", "#f7dccf", "#d8f0d2", "#efd9f2", "#f5efc6", "#cdeeed", "#e6e0d6", "#f2cfd9",
];

/// Region key of every cell: the first equilibrium (in id order) whose basin
/// or sector contains it.
pub fn portrait_labels(grid: &FateGrid, eqs: &[Equilibrium]) -> Vec<Option<(usize, Option<usize>)>> {
    grid.cells
        .iter()
        .map(|c| {
            eqs.iter().find_map(|e| match label_for(e, c) {
                CellLabel::InBasin(id) => Some((id, None)),
                CellLabel::InSector(id, j) => Some((id, Some(j))),
                _ => None,
            })
        })
        .collect()
}

fn side_class(s: Side) -> &'static str {
    match s {
        Side::Positive => "separatrix positive",
        Side::Negative => "separatrix negative",
        Side::Double => "separatrix double",
        Side::None => "orbit",
        Side::Undetermined => "orbit undetermined",
    }
}

/// Layered phase portrait: region fill, plain orbits, separatrices,
/// definite-direction rays and equilibria.
pub fn render_svg(
    window: &Rect,
    grid: Option<&FateGrid>,
    records: &[SeparatrixRecord],
    orbits: &[OrbitTrace],
    equilibria: &[Equilibrium],
    style: &SvgStyle,
) -> String {
    let w = style.width;
    let h = (w * window.height() / window.width()).round().max(1.0);
    let sx = w / window.width();
    let sy = h / window.height();
    let px = |z: Complex64| ((z.re - window.xmin) * sx, (window.ymax - z.im) * sy);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(
        s,
        "<style>.orbit{{fill:none;stroke:#555;stroke-width:{:.2}}}.undetermined{{stroke-dasharray:4 3}}.separatrix{{fill:none;stroke-width:{:.2}}}.positive{{stroke:#d62728}}.negative{{stroke:#2ca02c}}.double{{stroke:#9467bd}}.ray{{stroke:#000;stroke-width:0.8;stroke-dasharray:2 2}}.eq{{stroke:#000;stroke-width:1}}</style>",
        style.orbit_stroke, style.separatrix_stroke
    );
    let _ = writeln!(s, r##"<rect width="{w:.0}" height="{h:.0}" fill="#ffffff"/>"##);

    if let Some(g) = grid {
        let labels = portrait_labels(g, equilibria);
        let mut keys: Vec<(usize, Option<usize>)> = labels.iter().flatten().copied().collect();
        keys.sort_unstable();
        keys.dedup();
        let cw = w / g.nx as f64;
        let ch = h / g.ny as f64;
        s.push_str("<g id=\"regions\">\n");
        for j in 0..g.ny {
            let mut i = 0;
            while i < g.nx {
                let key = labels[j * g.nx + i];
                let start = i;
                while i < g.nx && labels[j * g.nx + i] == key {
                    i += 1;
                }
                let Some(k) = key else { continue };
                let idx = keys.iter().position(|x| *x == k).unwrap_or(0);
                let y = h - (j + 1) as f64 * ch;
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                    start as f64 * cw,
                    y,
                    (i - start) as f64 * cw,
                    ch,
                    PALETTE[idx % PALETTE.len()]
                );
            }
        }
        s.push_str("</g>\n");
    }

    let view = window.dilate(0.5);
    let polyline = |s: &mut String, pts: &[Complex64], class: &str| {
        let pts = clip_to(pts, &view);
        if pts.len() < 2 {
            return;
        }
        let _ = write!(s, r#"<polyline class="{class}" points=""#);
        for (k, z) in pts.iter().enumerate() {
            let (x, y) = px(*z);
            let _ = write!(s, "{}{:.3},{:.3}", if k == 0 { "" } else { " " }, x, y);
        }
        s.push_str("\"/>\n");
    };
    if !orbits.is_empty() {
        s.push_str("<g id=\"orbits\">\n");
        for o in orbits {
            polyline(&mut s, &o.points(), "orbit");
        }
        s.push_str("</g>\n");
    }
    if !records.is_empty() {
        s.push_str("<g id=\"separatrices\">\n");
        for r in records {
            polyline(&mut s, &r.orbit.points(), side_class(r.side));
        }
        s.push_str("</g>\n");
    }
    let rays: Vec<&Equilibrium> = equilibria
        .iter()
        .filter(|e| e.class == EquilibriumClass::Multiple)
        .collect();
    if !rays.is_empty() {
        s.push_str("<g id=\"directions\">\n");
        let len = 0.08 * window.diameter();
        for e in rays {
            for &theta in e.sector_directions.iter().flatten() {
                let (x0, y0) = px(e.location);
                let (x1, y1) = px(e.location + Complex64::from_polar(len, theta));
                let _ = writeln!(
                    s,
                    r#"<line class="ray" x1="{x0:.3}" y1="{y0:.3}" x2="{x1:.3}" y2="{y1:.3}"/>"#
                );
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("<g id=\"equilibria\">\n");
    for e in equilibria.iter().filter(|e| window.contains(e.location)) {
        let (x, y) = px(e.location);
        let fill = match e.class {
            EquilibriumClass::Center => "#ffffff",
            EquilibriumClass::Multiple => "#ff7f0e",
            c if c.is_stable() => "#000000",
            _ => "#888888",
        };
        let _ = writeln!(
            s,
            r#"<circle class="eq" data-id="{}" data-class="{}" cx="{x:.3}" cy="{y:.3}" r="{:.2}" fill="{fill}"/>"#,
            e.id,
            e.class.name(),
            style.equilibrium_radius
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::analyze;
    use crate::expr::FieldAst;
    use crate::integrator::{Controls, Flow};
    use crate::separatrix::{analyze_configuration, BoundaryOptions};

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_num(std::f64::consts::PI), "3.1415926535897931e0");
        for x in [0.1, -2.5e-300, 6.02214076e23, 1.0 / 3.0] {
            assert_eq!(format_num(x).parse::<f64>().unwrap(), x);
        }
        let j = serde_json::to_string(&[Num(1.5), Num(f64::NAN), Num(f64::INFINITY)]).unwrap();
        assert_eq!(j, "[1.5000000000000000e0,null,null]");
    }

    #[test]
    fn report_schema_and_determinism() {
        let w = Rect::new(-2.0, -2.0, 2.0, 2.0);
        let f = FieldAst::parse("x^2").unwrap();
        let eqs = analyze(&f, &w).unwrap();
        let fl = Flow::new(&f, &eqs, Controls::for_window(&w).certified_for(&f));
        let (g, reps) = analyze_configuration(&fl, &w, (16, 16), &BoundaryOptions::default()).unwrap();
        let js: Vec<ConfigurationJson> = reps.iter().map(ConfigurationJson::from).collect();
        let text = to_json(&js);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for r in v.as_array().unwrap() {
            validate_configuration(r).unwrap();
        }
        let recs: Vec<_> = reps.iter().flat_map(|r| r.records.clone()).collect();
        let a = render_svg(&w, Some(&g), &recs, &[], &eqs, &SvgStyle::default());
        let b = render_svg(&w, Some(&g), &recs, &[], &eqs, &SvgStyle::default());
        assert_eq!(a, b);
        assert!(a.contains("separatrix positive") && a.contains("separatrix negative"));
        assert!(a.contains("class=\"ray\""));
        let bare = render_svg(&w, None, &[], &[], &eqs, &SvgStyle::default());
        assert!(!bare.contains("id=\"separatrices\""));
    }

    #[test]
    fn gaussian_labels() {
        let l = |a, b| gaussian_label(Complex64::new(a, b));
        assert_eq!(
            [l(0.0, 0.0), l(0.0, 1.0), l(0.0, -2.0), l(1.0, 1.0), l(-1.0, -1.0), l(3.0, 0.0)],
            ["0", "i", "-2i", "1+i", "-1-i", "3"]
        );
    }

    #[test]
    fn schema_rejects_missing_fields() {
        let v = serde_json::json!({"field_source": "x", "window": [0, 0, 1, 1]});
        assert!(validate_configuration(&v).is_err());
    }
}
