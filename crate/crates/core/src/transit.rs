//! Transit times as contour integrals of `1/F`, residue periods, and growth
//! probes for escaping orbits.

use std::f64::consts::E;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{polyline_distance, Rect};
use crate::integrator::{Direction, FateKind, Flow, OrbitTrace, UndeterminedReason};
use crate::quadrature::{circle_integral, integrate, polyline_integral, QuadOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransitError {
    #[error("path passes within {distance:.3e} of an equilibrium (guard {guard:.3e})")]
    PoleProximity { distance: f64, guard: f64 },
    #[error("time {t} is outside the resolved span [{lo}, {hi}]")]
    OutOfSpan { t: f64, lo: f64, hi: f64 },
    #[error("orbit is not escaping without blow-up in the requested direction")]
    NotEscaping,
    #[error("checkpoints are not strictly monotone")]
    NonMonotoneCheckpoints,
    #[error("orbit never reaches the checkpoint {threshold}")]
    CheckpointNotReached { threshold: f64 },
    #[error("path needs at least two points")]
    DegeneratePath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Clock,
    Contour,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitResult {
    /// Time units; the imaginary part of a contour value is a residual.
    pub value: Complex64,
    pub method: Method,
    pub error_estimate: f64,
    pub path_descriptor: String,
}

/// Default distance a contour must keep from every zero.
pub fn pole_guard(window: &Rect) -> f64 {
    1e-3 * window.diameter()
}

fn quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_intervals: 2000,
    }
}

/// `∫ dz / F(z)` along a polyline, keeping `guard` away from `zeros`.
pub fn contour_integral_reciprocal(
    flow_field: &crate::expr::FieldAst,
    path: &[Complex64],
    zeros: &[Complex64],
    guard: f64,
) -> Result<TransitResult, TransitError> {
    if path.len() < 2 {
        return Err(TransitError::DegeneratePath);
    }
    check_guard(path, zeros, guard)?;
    let r = polyline_integral(|z| flow_field.value(z).inv(), path, quad_options());
    Ok(TransitResult {
        value: r.value,
        method: Method::Contour,
        error_estimate: r.error,
        path_descriptor: format!("polyline({} points)", path.len()),
    })
}

fn check_guard(path: &[Complex64], zeros: &[Complex64], guard: f64) -> Result<(), TransitError> {
    for &a in zeros {
        let d = polyline_distance(a, path);
        if d < guard {
            return Err(TransitError::PoleProximity { distance: d, guard });
        }
    }
    Ok(())
}

fn check_span(trace: &OrbitTrace, t: f64) -> Result<(), TransitError> {
    let (lo, hi) = trace.span();
    if (lo..=hi).contains(&t) {
        Ok(())
    } else {
        Err(TransitError::OutOfSpan { t, lo, hi })
    }
}

/// `t2 - t1` on a resolved trace.
pub fn transit_time_clock(
    trace: &OrbitTrace,
    t1: f64,
    t2: f64,
) -> Result<TransitResult, TransitError> {
    check_span(trace, t1)?;
    check_span(trace, t2)?;
    Ok(TransitResult {
        value: Complex64::new(t2 - t1, 0.0),
        method: Method::Clock,
        error_estimate: 0.0,
        path_descriptor: format!("trace[{t1}, {t2}]"),
    })
}

/// Densified trace polyline restricted to `[t1, t2]`, with exact endpoints.
pub fn trace_piece(
    flow: &Flow,
    trace: &OrbitTrace,
    t1: f64,
    t2: f64,
) -> Result<Vec<Complex64>, TransitError> {
    check_span(trace, t1)?;
    check_span(trace, t2)?;
    let (lo, hi) = (t1.min(t2), t1.max(t2));
    let map = |e| match e {
        crate::integrator::IntegratorError::OutOfSpan { t, lo, hi } => {
            TransitError::OutOfSpan { t, lo, hi }
        }
        _ => TransitError::DegeneratePath,
    };
    let za = flow.state_at(trace, lo).map_err(map)?;
    let zb = flow.state_at(trace, hi).map_err(map)?;
    let inner: Vec<_> = trace
        .samples
        .iter()
        .filter(|s| s.t > lo && s.t < hi)
        .copied()
        .collect();
    let mut pts = vec![za];
    let mut prev = crate::integrator::Sample {
        t: lo,
        z: za,
        f: flow.field().value(za),
    };
    let end = crate::integrator::Sample {
        t: hi,
        z: zb,
        f: flow.field().value(zb),
    };
    for s in inner.iter().chain(std::iter::once(&end)) {
        let h = s.t - prev.t;
        pts.push((prev.z + s.z) * 0.5 + (prev.f - s.f) * (h / 8.0));
        pts.push(s.z);
        prev = *s;
    }
    if t2 < t1 {
        pts.reverse();
    }
    Ok(pts)
}

/// Contour transit time along the trace piece from `t1` to `t2`.
pub fn transit_time_contour(
    flow: &Flow,
    trace: &OrbitTrace,
    t1: f64,
    t2: f64,
) -> Result<TransitResult, TransitError> {
    let pts = trace_piece(flow, trace, t1, t2)?;
    let zeros: Vec<Complex64> = flow.equilibria().iter().map(|e| e.location).collect();
    let mut r = contour_integral_reciprocal(flow.field(), &pts, &zeros, 0.0)?;
    r.path_descriptor = format!("trace[{t1}, {t2}] densified");
    Ok(r)
}

/// `|∫ dz/F along the piece − (t2 − t1)|`.
pub fn clock_contour_check(
    flow: &Flow,
    trace: &OrbitTrace,
    t1: f64,
    t2: f64,
) -> Result<f64, TransitError> {
    let contour = transit_time_contour(flow, trace, t1, t2)?;
    Ok((contour.value - Complex64::new(t2 - t1, 0.0)).norm())
}

/// `∮ dz/F` on the circle of `radius` around `a`; for a simple zero this is
/// `2πi/F′(a)`.
pub fn residue_period(
    f: &crate::expr::FieldAst,
    a: Complex64,
    radius: f64,
    zeros: &[Complex64],
) -> Result<Complex64, TransitError> {
    for &b in zeros {
        let d = (b - a).norm();
        if d > 1e-9 * (1.0 + a.norm()) && d <= radius * 1.05 {
            return Err(TransitError::PoleProximity {
                distance: (d - radius).abs(),
                guard: 0.05 * radius,
            });
        }
    }
    let r = circle_integral(
        |z| f.value(z).inv(),
        a,
        radius,
        QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_intervals: 2000,
        },
    );
    Ok(r.value)
}

/// Coordinate along which escape checkpoints are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coordinate {
    Re,
    Im,
    Modulus,
}

impl Coordinate {
    pub fn of(self, z: Complex64) -> f64 {
        match self {
            Self::Re => z.re,
            Self::Im => z.im,
            Self::Modulus => z.norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub threshold: f64,
    /// Elapsed flow time from the trace origin.
    pub time: f64,
    pub re: f64,
    pub im: f64,
    pub comparator: Option<f64>,
    /// `time − comparator` when a comparator is registered.
    pub margin: Option<f64>,
}

/// Cumulative transit times from the trace origin to the first passage of
/// each threshold, for an orbit escaping without blow-up.
pub fn divergence_probe(
    flow: &Flow,
    trace: &OrbitTrace,
    dir: Direction,
    coord: Coordinate,
    thresholds: &[f64],
    comparator: Option<&dyn Fn(f64) -> f64>,
) -> Result<Vec<Checkpoint>, TransitError> {
    if trace.fate(dir).kind != FateKind::Undetermined(UndeterminedReason::UnboundedSlow) {
        return Err(TransitError::NotEscaping);
    }
    let o = trace.origin_index;
    let samples: Vec<_> = match dir {
        Direction::Forward => trace.samples[o..].to_vec(),
        Direction::Backward => trace.samples[..=o].iter().rev().copied().collect(),
    };
    let c0 = coord.of(samples[0].z);
    // thresholds must move monotonically away from the start
    let away = thresholds
        .first()
        .map(|&t| (t - c0).signum())
        .unwrap_or(1.0);
    let mut last = c0;
    for &t in thresholds {
        if (t - last) * away <= 0.0 {
            return Err(TransitError::NonMonotoneCheckpoints);
        }
        last = t;
    }
    let mut out = Vec::with_capacity(thresholds.len());
    let mut k = 0;
    for &thr in thresholds {
        let g = |z: Complex64| (coord.of(z) - thr) * away;
        while k + 1 < samples.len() && g(samples[k + 1].z) < 0.0 {
            k += 1;
        }
        if k + 1 >= samples.len() {
            return Err(TransitError::CheckpointNotReached { threshold: thr });
        }
        let (t, z) = flow.refine_event(&samples[k], &samples[k + 1], g);
        let time = t.abs();
        let comp = comparator.map(|c| c(thr));
        out.push(Checkpoint {
            threshold: thr,
            time,
            re: z.re,
            im: z.im,
            comparator: comp,
            margin: comp.map(|c| time - c),
        });
    }
    Ok(out)
}

/// Lower bound `∫₁^{|y|} eᵘ/u du − 2e` on the transit time from the point of
/// the upper boundary orbit of `x·exp(x)` with real part −1 to the point with
/// real part `y < −1`.
pub fn exponential_comparator(y: f64) -> f64 {
    let r = integrate(
        |u| Complex64::new(u.exp() / u, 0.0),
        1.0,
        y.abs(),
        quad_options(),
    );
    r.value.re - 2.0 * E
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::analyze;
    use crate::expr::FieldAst;
    use crate::integrator::Controls;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn flow(src: &str, w: Rect) -> Flow {
        let f = FieldAst::parse(src).unwrap();
        let eqs = analyze(&f, &w).unwrap();
        Flow::new(&f, &eqs, Controls::for_window(&w).certified_for(&f))
    }

    #[test]
    fn reciprocal_of_linear_field() {
        let f = FieldAst::parse("x").unwrap();
        let r = contour_integral_reciprocal(&f, &[c(1.0, 0.0), c(2.0, 0.0)], &[c(0.0, 0.0)], 1e-3)
            .unwrap();
        assert!((r.value.re - 2f64.ln()).abs() < 1e-13);
        assert_eq!(r.method, Method::Contour);
    }

    #[test]
    fn guard_violation() {
        let f = FieldAst::parse("x").unwrap();
        let e = contour_integral_reciprocal(&f, &[c(-1.0, 0.0), c(1.0, 0.0)], &[c(0.0, 0.0)], 1e-3);
        assert!(matches!(e, Err(TransitError::PoleProximity { .. })));
    }

    #[test]
    fn center_boundary_line() {
        // along Re = 1/2 the integrand is −1/(s² + 1/4) with the upward orientation
        let f = FieldAst::parse("i*x*(x-1)").unwrap();
        let s = 40.0;
        let r = contour_integral_reciprocal(
            &f,
            &[c(0.5, -s), c(0.5, s)],
            &[c(0.0, 0.0), c(1.0, 0.0)],
            1e-3,
        )
        .unwrap();
        let exact = -4.0 * (2.0 * s).atan();
        assert!((r.value.re - exact).abs() < 1e-10, "{}", r.value);
        assert!((r.value.norm() - 2.0 * PI).abs() < 0.05);
    }

    #[test]
    fn residues() {
        let f = FieldAst::parse("i*x").unwrap();
        let p = residue_period(&f, c(0.0, 0.0), 0.1, &[c(0.0, 0.0)]).unwrap();
        assert!((p - c(2.0 * PI, 0.0)).norm() < 1e-12);
        let f = FieldAst::parse("1+x^2").unwrap();
        let p = residue_period(&f, c(0.0, 1.0), 0.3, &[c(0.0, 1.0), c(0.0, -1.0)]).unwrap();
        assert!((p - c(PI, 0.0)).norm() < 1e-12);
        let f = FieldAst::parse("x^2*(x-1)*(x-i)*(x-1-i)").unwrap();
        let zs = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)];
        let p = residue_period(&f, c(1.0, 1.0), 0.2, &zs).unwrap();
        assert!((p - c(0.0, -PI)).norm() < 1e-11);
        assert!(residue_period(&f, c(1.0, 1.0), 1.0, &zs).is_err());
    }

    #[test]
    fn clock_values() {
        let fl = flow("1+x^2", Rect::new(-2.0, -2.0, 2.0, 2.0));
        let tr = fl.orbit(c(0.0, 0.0)).unwrap();
        assert_eq!(transit_time_clock(&tr, 0.3, 0.3).unwrap().value, c(0.0, 0.0));
        assert_eq!(transit_time_clock(&tr, 0.0, 1.2).unwrap().value, c(1.2, 0.0));
        assert!(transit_time_clock(&tr, 0.0, 3.0).is_err());
        let res = clock_contour_check(&fl, &tr, -0.4, 1.2).unwrap();
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn rotation_quarter_turn() {
        let fl = flow("i*x", Rect::new(-2.0, -2.0, 2.0, 2.0));
        let tr = fl.orbit(c(1.0, 0.0)).unwrap();
        let res = clock_contour_check(&fl, &tr, 0.0, PI / 2.0).unwrap();
        assert!(res < 1e-8, "{res}");
    }

    #[test]
    fn linear_escape_grows_logarithmically() {
        let fl = flow("x", Rect::new(-2.0, -2.0, 2.0, 2.0));
        let tr = fl.orbit(c(1.0, 0.0)).unwrap();
        let cps = divergence_probe(
            &fl,
            &tr,
            Direction::Forward,
            Coordinate::Modulus,
            &[10.0, 100.0],
            None,
        )
        .unwrap();
        assert!((cps[0].time - 10f64.ln()).abs() < 1e-8);
        assert!((cps[1].time - 100f64.ln()).abs() < 1e-8);
        let fl = flow("1+x^2", Rect::new(-2.0, -2.0, 2.0, 2.0));
        let tr = fl.orbit(c(0.0, 0.0)).unwrap();
        let e = divergence_probe(&fl, &tr, Direction::Forward, Coordinate::Modulus, &[10.0], None);
        assert_eq!(e, Err(TransitError::NotEscaping));
    }

    #[test]
    fn comparator_values() {
        // ∫₁³ eᵘ/u du = Ei(3) − Ei(1)
        let ei3 = 9.933_832_570_625_416;
        let ei1 = 1.895_117_816_355_936_8;
        assert!((exponential_comparator(-3.0) - (ei3 - ei1 - 2.0 * E)).abs() < 1e-10);
    }
}
