use std::fmt;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use holoflow_core::equilibria::{analyze, Equilibrium};
use holoflow_core::expr::{substitute_parameter, FieldAst};
use holoflow_core::geometry::Rect;
use holoflow_core::integrator::{join, Controls, Direction, Fate, FateKind, Flow};
use holoflow_core::report::{
    self, gaussian_label, lattice_marks, ConfigurationJson, DoubleMarksJson, Num, SummaryJson,
    SweepEntryJson, SweepJson, SvgStyle, TransitJson,
};
use holoflow_core::separatrix::{
    analyze_configuration, BoundaryOptions, ConfigurationReport, FateGrid, SeparatrixSummary,
};
use holoflow_core::transit::{
    contour_integral_reciprocal, pole_guard, residue_period, transit_time_clock,
    transit_time_contour,
};
use num_complex::Complex64;

use crate::util::{parse_complex, parse_param, parse_res, parse_window, write_atomic};

/// Marks an error as caused by the command line rather than the numerics.
#[derive(Debug)]
pub struct Usage;

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("usage error")
    }
}

/// Returned when a verdict fails under `--strict`.
#[derive(Debug)]
pub struct VerdictFailure(pub String);

impl fmt::Display for VerdictFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "verdict failure: {}", self.0)
    }
}

impl std::error::Error for VerdictFailure {}

pub fn usage<T>(r: Result<T>) -> Result<T> {
    r.context(Usage)
}

/// Distance within which two seeds are taken to lie on the same orbit.
const DEDUPE_TOL: f64 = 1e-5;
/// Distance within which a double-sided separatrix passes through a lattice point.
const MARK_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// xmin,ymin,xmax,ymax
    #[arg(long, allow_hyphen_values = true, default_value = "-2,-2,2,2")]
    pub window: String,
    /// nx,ny (each at least 16)
    #[arg(long, default_value = "48,48")]
    pub res: String,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long = "escape-radius")]
    pub escape_radius: Option<f64>,
    /// Time budget per half-orbit.
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Exit with status 3 when a verdict fails.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirArg {
    Forward,
    Backward,
    Both,
}

pub struct Setup {
    pub field: FieldAst,
    pub window: Rect,
    pub resolution: (usize, usize),
    pub flow: Flow,
}

impl Setup {
    pub fn new(source: &str, common: &Common) -> Result<Self> {
        let window = usage(parse_window(&common.window))?;
        let resolution = usage(parse_res(&common.res))?;
        let field = FieldAst::parse(source)
            .map_err(anyhow::Error::from)
            .with_context(|| format!("cannot parse field `{source}`"))
            .context(Usage)?;
        let equilibria = analyze(&field, &window)?;
        let mut c = Controls::for_window(&window);
        if let Some(r) = common.escape_radius {
            usage(positive(r, "--escape-radius"))?;
            c.escape_radius = r;
        }
        c = c.certified_for(&field);
        if let Some(r) = common.rtol {
            usage(positive(r, "--rtol"))?;
            c.rtol = r;
        }
        if let Some(b) = common.budget {
            usage(positive(b, "--budget"))?;
            c.t_max = b;
        }
        let flow = Flow::new(&field, &equilibria, c);
        Ok(Self {
            field,
            window,
            resolution,
            flow,
        })
    }

    pub fn equilibria(&self) -> &[Equilibrium] {
        self.flow.equilibria()
    }
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        bail!("{what} must be a positive number, got {x}")
    }
}

fn loc(z: Complex64) -> String {
    format!("{:.10}{:+.10}i", z.re, z.im)
}

fn describe_fate(f: &Fate) -> String {
    match f.kind {
        FateKind::BlowUp { t_star, error, .. } => {
            format!("BlowUp: blow-up at t* = {t_star:.10} (error {error:.1e})")
        }
        FateKind::PeriodicAround { period, .. } => {
            format!("{}: period {period:.10}", f.kind.label())
        }
        _ => format!(
            "{} after t = {:.6} at {}",
            f.kind.label(),
            f.diagnostics.elapsed,
            loc(f.diagnostics.final_z)
        ),
    }
}

fn print_equilibria(eqs: &[Equilibrium]) {
    println!("{} equilibria", eqs.len());
    for e in eqs {
        let mut line = format!(
            "  [{}] {}  order {}  {}",
            e.id,
            loc(e.location),
            e.order,
            e.class.name()
        );
        if let Some(p) = e.period {
            line.push_str(&format!("  period {p:.10}"));
        }
        if let Some(d) = &e.sector_directions {
            let d: Vec<String> = d.iter().map(|t| format!("{t:.6}")).collect();
            line.push_str(&format!("  directions [{}]", d.join(", ")));
        }
        if e.near_degenerate {
            line.push_str("  (near-degenerate)");
        }
        println!("{line}");
    }
}

pub fn equilibria(field: &str, common: &Common) -> Result<()> {
    let s = Setup::new(field, common)?;
    print_equilibria(s.equilibria());
    if let Some(p) = &common.json {
        let j = report::equilibria_json(s.field.source(), &s.window, s.equilibria());
        write_atomic(p, &report::to_json(&j))?;
    }
    Ok(())
}

pub fn portrait(field: &str, common: &Common, orbits: usize) -> Result<()> {
    let s = Setup::new(field, common)?;
    let grid = FateGrid::compute(&s.flow, &s.window, s.resolution.0, s.resolution.1)?;
    print_equilibria(s.equilibria());
    let labels = report::portrait_labels(&grid, s.equilibria());
    let unlabeled = labels.iter().filter(|l| l.is_none()).count();
    println!(
        "{}x{} cells, {} outside every basin and sector",
        grid.nx, grid.ny, unlabeled
    );
    let mut traces = Vec::new();
    for j in 0..orbits {
        for i in 0..orbits {
            let z = Complex64::new(
                s.window.xmin + (i as f64 + 0.5) / orbits as f64 * s.window.width(),
                s.window.ymin + (j as f64 + 0.5) / orbits as f64 * s.window.height(),
            );
            if let Ok(t) = s.flow.orbit(z) {
                traces.push(t);
            }
        }
    }
    if let Some(p) = &common.svg {
        let svg = report::render_svg(
            &s.window,
            Some(&grid),
            &[],
            &traces,
            s.equilibria(),
            &SvgStyle::default(),
        );
        write_atomic(p, &svg)?;
    }
    if let Some(p) = &common.json {
        let j = report::equilibria_json(s.field.source(), &s.window, s.equilibria());
        write_atomic(p, &report::to_json(&j))?;
    }
    Ok(())
}

pub fn orbit(field: &str, common: &Common, from: &str, dir: DirArg) -> Result<()> {
    let s = Setup::new(field, common)?;
    let z0 = usage(parse_complex(from))?;
    let (csv, json, pts) = match dir {
        DirArg::Both => {
            let t = s.flow.orbit(z0)?;
            println!("seed {}", loc(z0));
            println!("  forward:  {}", describe_fate(&t.forward_fate));
            println!("  backward: {}", describe_fate(&t.backward_fate));
            (
                report::orbit_csv(&t),
                report::to_json(&report::orbit_json(s.field.source(), &t)),
                Some(t),
            )
        }
        DirArg::Forward | DirArg::Backward => {
            let d = if dir == DirArg::Forward {
                Direction::Forward
            } else {
                Direction::Backward
            };
            let h = s.flow.integrate(z0, d)?;
            println!("seed {}", loc(z0));
            println!(
                "  {}: {}",
                if dir == DirArg::Forward { "forward" } else { "backward" },
                describe_fate(&h.fate)
            );
            let csv = report::half_csv(&h);
            let json = report::to_json(&report::half_orbit_json(s.field.source(), &h));
            let t = match &common.svg {
                Some(_) => {
                    let other = s.flow.integrate(z0, d.reversed())?;
                    Some(match d {
                        Direction::Forward => join(other, h),
                        Direction::Backward => join(h, other),
                    })
                }
                None => None,
            };
            (csv, json, t)
        }
    };
    if let Some(p) = &common.csv {
        write_atomic(p, &csv)?;
    }
    if let Some(p) = &common.json {
        write_atomic(p, &json)?;
    }
    if let (Some(p), Some(t)) = (&common.svg, pts) {
        let svg = report::render_svg(
            &s.window,
            None,
            &[],
            &[t],
            s.equilibria(),
            &SvgStyle::default(),
        );
        write_atomic(p, &svg)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct TransitArgs {
    /// Seed of the orbit for a clock/contour comparison.
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub t1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t2: Option<f64>,
    /// Polyline `z0;z1;...` for a contour integral of 1/F.
    #[arg(long, allow_hyphen_values = true)]
    pub path: Option<String>,
    /// Equilibrium whose period is computed by a residue integral.
    #[arg(long, allow_hyphen_values = true)]
    pub residue: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
}

pub fn transit(field: &str, common: &Common, a: &TransitArgs) -> Result<()> {
    let s = Setup::new(field, common)?;
    let zeros: Vec<Complex64> = s.equilibria().iter().map(|e| e.location).collect();
    let mut results = Vec::new();
    if let Some(from) = &a.from {
        let z0 = usage(parse_complex(from))?;
        let t2 = a
            .t2
            .ok_or_else(|| anyhow!("--from needs --t2"))
            .context(Usage)?;
        let trace = s.flow.orbit(z0)?;
        let clock = transit_time_clock(&trace, a.t1, t2)?;
        let contour = transit_time_contour(&s.flow, &trace, a.t1, t2)?;
        println!(
            "clock   {:.12}\ncontour {:.12}{:+.3e}i  (error {:.1e})",
            clock.value.re, contour.value.re, contour.value.im, contour.error_estimate
        );
        println!("residual {:.3e}", (contour.value - clock.value).norm());
        results.push(clock);
        results.push(contour);
    }
    if let Some(path) = &a.path {
        let pts = path
            .split(';')
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()
            .context(Usage)?;
        let r = contour_integral_reciprocal(&s.field, &pts, &zeros, pole_guard(&s.window))?;
        println!(
            "contour {:.12}{:+.12}i  (error {:.1e})",
            r.value.re, r.value.im, r.error_estimate
        );
        results.push(r);
    }
    if let Some(at) = &a.residue {
        let z = usage(parse_complex(at))?;
        let e = s
            .equilibria()
            .iter()
            .min_by(|x, y| (x.location - z).norm().total_cmp(&(y.location - z).norm()))
            .ok_or_else(|| anyhow!("no equilibrium in the window"))?;
        let radius = a.radius.unwrap_or_else(|| {
            zeros
                .iter()
                .map(|b| (b - e.location).norm())
                .filter(|d| *d > 1e-9)
                .fold(0.4, |m, d| m.min(0.25 * d))
        });
        let v = residue_period(&s.field, e.location, radius, &zeros)?;
        println!(
            "residue integral at {}: {:.12}{:+.12}i, period {:.12}",
            loc(e.location),
            v.re,
            v.im,
            v.norm()
        );
        if let Some(p) = e.period {
            println!("period from F'(a): {p:.12}");
        }
    }
    if a.from.is_none() && a.path.is_none() && a.residue.is_none() {
        return Err(anyhow!("transit needs --from, --path or --residue").context(Usage));
    }
    if let Some(p) = &common.json {
        let j: Vec<TransitJson> = results.iter().map(TransitJson::from).collect();
        write_atomic(p, &report::to_json(&j))?;
    }
    Ok(())
}

fn print_report(r: &ConfigurationReport) {
    let sector = r.sector.map(|j| format!(" sector {j}")).unwrap_or_default();
    println!(
        "[{}] {} {}  {}{}",
        r.equilibrium.id,
        loc(r.equilibrium.location),
        r.equilibrium.class.name(),
        report::region_kind_name(r.region_kind),
        sector
    );
    for rec in &r.records {
        let tau = rec
            .transit_time
            .map_or("inf".to_string(), |t| format!("{t:.10}"));
        println!(
            "    separatrix {} seed {} side {} transit {}",
            rec.id,
            loc(rec.seed),
            rec.side.name(),
            tau
        );
    }
    for c in &r.components {
        println!(
            "    component {} orbits {:?} equilibria {:?}",
            c.tag, c.orbit_ids, c.attached_equilibria
        );
    }
    for v in &r.verdicts {
        println!(
            "    {} {}  {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    for n in &r.notes {
        println!("    note: {n}");
    }
}

fn failing(reports: &[ConfigurationReport]) -> Vec<String> {
    reports
        .iter()
        .flat_map(|r| {
            r.verdicts
                .iter()
                .filter(|v| !v.pass)
                .map(move |v| format!("{} at equilibrium {}", v.name, r.equilibrium.id))
        })
        .collect()
}

pub fn separatrices(field: &str, common: &Common) -> Result<()> {
    let s = Setup::new(field, common)?;
    let (grid, reports) = analyze_configuration(
        &s.flow,
        &s.window,
        s.resolution,
        &BoundaryOptions::default(),
    )?;
    for r in &reports {
        print_report(r);
    }
    let summary = SeparatrixSummary::from_reports(&s.flow, &reports, DEDUPE_TOL);
    println!(
        "{} distinct separatrices: {} positive, {} negative, {} double",
        summary.records.len(),
        summary.positive,
        summary.negative,
        summary.double
    );
    if let Some(p) = &common.json {
        let j: Vec<ConfigurationJson> = reports.iter().map(ConfigurationJson::from).collect();
        write_atomic(p, &report::to_json(&j))?;
    }
    if let Some(p) = &common.svg {
        let svg = report::render_svg(
            &s.window,
            Some(&grid),
            &summary.records,
            &[],
            s.equilibria(),
            &SvgStyle::default(),
        );
        write_atomic(p, &svg)?;
    }
    let bad = failing(&reports);
    if common.strict && !bad.is_empty() {
        return Err(VerdictFailure(bad.join("; ")).into());
    }
    Ok(())
}

pub fn sweep(field: &str, common: &Common, param: &str) -> Result<()> {
    let (name, values) = usage(parse_param(param))?;
    let mut entries = Vec::new();
    let mut changes = Vec::new();
    let mut previous: Option<(f64, SeparatrixSummary)> = None;
    let mut bad = Vec::new();
    for &v in &values {
        let src = substitute_parameter(field, &name, v);
        let s = Setup::new(&src, common)?;
        let (_, reports) = analyze_configuration(
            &s.flow,
            &s.window,
            s.resolution,
            &BoundaryOptions::default(),
        )?;
        let summary = SeparatrixSummary::from_reports(&s.flow, &reports, DEDUPE_TOL);
        let marks: Vec<DoubleMarksJson> = summary
            .records
            .iter()
            .filter(|r| r.side == holoflow_core::separatrix::Side::Double)
            .map(|r| DoubleMarksJson {
                id: r.id,
                passes_through: lattice_marks(r, &s.window, MARK_TOL)
                    .into_iter()
                    .map(gaussian_label)
                    .collect(),
            })
            .collect();
        let mut line = format!(
            "{name} = {v}: {} one-sided ({} positive, {} negative), {} double",
            summary.one_sided(),
            summary.positive,
            summary.negative,
            summary.double
        );
        for m in &marks {
            if !m.passes_through.is_empty() {
                line.push_str(&format!(
                    "; double-sided separatrix through {}",
                    m.passes_through.join(", ")
                ));
            }
        }
        println!("{line}");
        if let Some((pv, ps)) = &previous {
            let before = (ps.positive, ps.negative, ps.double);
            let after = (summary.positive, summary.negative, summary.double);
            if before != after {
                let c = format!(
                    "{name} {pv} -> {v}: one-sided {} -> {}, double {} -> {}",
                    ps.one_sided(),
                    summary.one_sided(),
                    ps.double,
                    summary.double
                );
                println!("  change: {c}");
                changes.push(c);
            }
        }
        bad.extend(failing(&reports).into_iter().map(|b| format!("{name}={v}: {b}")));
        entries.push(SweepEntryJson {
            value: Num(v),
            field_source: src,
            summary: SummaryJson::from(&summary),
            double_marks: marks,
            reports: reports.iter().map(ConfigurationJson::from).collect(),
        });
        previous = Some((v, summary));
    }
    if changes.is_empty() {
        println!("configuration unchanged over the sweep");
    }
    if let Some(p) = &common.json {
        let j = SweepJson {
            field_template: field.to_string(),
            parameter: name,
            entries,
            changes,
        };
        write_atomic(p, &report::to_json(&j))?;
    }
    if common.strict && !bad.is_empty() {
        return Err(VerdictFailure(bad.join("; ")).into());
    }
    Ok(())
}
