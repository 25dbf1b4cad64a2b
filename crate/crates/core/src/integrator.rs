//! Adaptive Dormand–Prince 5(4) integration of `ẋ = ±F(x)` with fate
//! detection: capture by an equilibrium, periodic return, finite-time blow-up.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::equilibria::{factorial, Equilibrium, EquilibriumClass};
use crate::expr::FieldAst;
use crate::geometry::{angle_diff, wrap_angle, Rect};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("start point lies on equilibrium {equilibrium}")]
    StartAtEquilibrium { equilibrium: usize },
    #[error("segment is tangent to the flow at a sampled point")]
    NotTransversal,
    #[error("time {t} is outside the resolved span [{lo}, {hi}]")]
    OutOfSpan { t: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Self::Forward => 1.0,
            Self::Backward => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Self::Forward => Self::Backward,
            Self::Backward => Self::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UndeterminedReason {
    /// Escaping beyond the window without a certified blow-up.
    UnboundedSlow,
    TimeBudget,
    StepBudget,
    StepSizeUnderflow,
    NonFinite,
    /// Repeated returns close to, but not within, the periodic tolerance.
    NearlyPeriodic,
}

impl UndeterminedReason {
    pub fn name(self) -> &'static str {
        match self {
            Self::UnboundedSlow => "unbounded-slow",
            Self::TimeBudget => "time-budget",
            Self::StepBudget => "step-budget",
            Self::StepSizeUnderflow => "step-size-underflow",
            Self::NonFinite => "non-finite",
            Self::NearlyPeriodic => "nearly-periodic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FateKind {
    /// Captured by an equilibrium; at a multiple equilibrium the limiting
    /// tangent angle predicted by the local model is attached.
    ConvergesTo {
        equilibrium: usize,
        approach_angle: Option<f64>,
    },
    PeriodicAround {
        equilibrium: Option<usize>,
        period: f64,
    },
    /// `t_star` is signed: negative for a backward blow-up.
    BlowUp {
        t_star: f64,
        error: f64,
        direction_angle: f64,
    },
    Undetermined(UndeterminedReason),
}

impl FateKind {
    pub fn converges_to(&self) -> Option<usize> {
        match self {
            Self::ConvergesTo { equilibrium, .. } => Some(*equilibrium),
            _ => None,
        }
    }

    pub fn is_blow_up(&self) -> bool {
        matches!(self, Self::BlowUp { .. })
    }

    pub fn label(&self) -> String {
        match self {
            Self::ConvergesTo { equilibrium, .. } => format!("ConvergesTo({equilibrium})"),
            Self::PeriodicAround {
                equilibrium: Some(e),
                ..
            } => format!("PeriodicAround({e})"),
            Self::PeriodicAround { .. } => "PeriodicAround(?)".to_string(),
            Self::BlowUp { .. } => "BlowUp".to_string(),
            Self::Undetermined(r) => format!("Undetermined({})", r.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub steps: usize,
    pub rejected: usize,
    /// Elapsed flow time (non-negative in either direction).
    pub elapsed: f64,
    pub final_z: Complex64,
    pub return_residual: Option<f64>,
    pub winding: Option<f64>,
    pub max_modulus: f64,
    /// Twice the signed area swept by the path as seen from the start point.
    pub area_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fate {
    pub kind: FateKind,
    pub diagnostics: Diagnostics,
}

/// Accepted step endpoint with its field value (`dz/dt = f`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub z: Complex64,
    pub f: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfTrace {
    pub direction: Direction,
    /// Ordered by elapsed time, so `t` decreases for backward traces.
    pub samples: Vec<Sample>,
    pub fate: Fate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitTrace {
    /// Strictly increasing in `t`; the start point has `t = 0`.
    pub samples: Vec<Sample>,
    pub origin_index: usize,
    pub forward_fate: Fate,
    pub backward_fate: Fate,
    pub t_plus: f64,
    pub t_minus: f64,
}

impl OrbitTrace {
    pub fn points(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.z).collect()
    }

    pub fn origin(&self) -> Complex64 {
        self.samples[self.origin_index].z
    }

    pub fn span(&self) -> (f64, f64) {
        (self.samples[0].t, self.samples[self.samples.len() - 1].t)
    }

    pub fn fate(&self, dir: Direction) -> &Fate {
        match dir {
            Direction::Forward => &self.forward_fate,
            Direction::Backward => &self.backward_fate,
        }
    }

    /// Samples with the cubic Hermite midpoint of every step inserted.
    pub fn densified(&self) -> Vec<Complex64> {
        densify(&self.samples)
    }
}

pub fn densify(samples: &[Sample]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(2 * samples.len());
    for (k, s) in samples.iter().enumerate() {
        if k > 0 {
            out.push(hermite_mid(&samples[k - 1], s));
        }
        out.push(s.z);
    }
    out
}

fn hermite_mid(a: &Sample, b: &Sample) -> Complex64 {
    let h = b.t - a.t;
    (a.z + b.z) * 0.5 + (a.f - b.f) * (h / 8.0)
}

/// Cubic Hermite interpolant between two samples at fraction `s ∈ [0, 1]`.
pub fn hermite(a: &Sample, b: &Sample, s: f64) -> Complex64 {
    let h = b.t - a.t;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    a.z * h00 + a.f * (h10 * h) + b.z * h01 + b.f * (h11 * h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub t_max: f64,
    pub escape_radius: f64,
    pub extrap_radius: f64,
    pub capture_radius: f64,
    pub capture_residual: f64,
    pub periodic_tol: f64,
    /// Outside the escape radius, an orbit whose time-to-go estimate
    /// `|z|/|F(z)|` falls below this is treated as having escaped.
    pub time_to_go: f64,
    /// Step bound `h ≤ c·max(|z|,1)/|F(z)|`.
    pub step_factor: f64,
    pub window: Option<Rect>,
    pub record: bool,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 200_000,
            t_max: 1e6,
            escape_radius: 10.0,
            extrap_radius: 1e8,
            capture_radius: 1e-8,
            capture_residual: 1e-8,
            periodic_tol: 1e-8,
            time_to_go: 1e-12,
            step_factor: 0.1,
            window: None,
            record: true,
        }
    }
}

impl Controls {
    /// Defaults with the escape radius tied to the window.
    pub fn for_window(window: &Rect) -> Self {
        Self {
            escape_radius: (2.0 * window.extent()).max(10.0),
            window: Some(*window),
            ..Self::default()
        }
    }

    /// Certification radius adapted to the growth of a polynomial field,
    /// so that the remaining time beyond it is below about `1e-9`. Orbits
    /// seeded at float precision next to a separatrix of a degree-`d` field
    /// turn back near `1e16^{1/(d-1)}`, so a larger radius would not be reached.
    pub fn certified_for(mut self, f: &FieldAst) -> Self {
        self.extrap_radius = match f.polynomial_degree() {
            Some(d) if d >= 2 => 1e9_f64
                .powf(1.0 / (d as f64 - 1.0))
                .clamp(64.0 * self.escape_radius, 1e8),
            _ => 1e8,
        };
        self
    }
}

#[derive(Debug, Clone)]
enum Capture {
    Simple {
        id: usize,
        a: Complex64,
        re_lambda: f64,
        radius: f64,
    },
    Multiple {
        id: usize,
        a: Complex64,
        c: Complex64,
        m: u32,
        radius: f64,
    },
}

/// Integration context: a field, its equilibria and the controls.
#[derive(Debug, Clone)]
pub struct Flow {
    f: FieldAst,
    equilibria: Vec<Equilibrium>,
    controls: Controls,
    captures: Vec<Capture>,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// C2..C5 document the tableau; the field is autonomous.
const _: [f64; 4] = [C2, C3, C4, C5];

/// Per-step error allowance. Near a zero of F the allowance shrinks with |F|
/// so that the time error `δz/F` of one step stays below `rtol`.
fn error_scale(ctl: &Controls, z0: Complex64, z1: Complex64, f0: Complex64, f1: Complex64) -> f64 {
    let position = ctl.atol + ctl.rtol * z0.norm().max(z1.norm());
    let time = ctl.rtol * f0.norm().min(f1.norm());
    position.min(time).max(f64::MIN_POSITIVE)
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

struct Step {
    z: Complex64,
    k7: Complex64,
    err: f64,
}

/// Escape-time ladder entries `(|z|, elapsed)`.
pub type Ladder = Vec<(f64, f64)>;

/// Time remaining to blow-up from a ladder of `(|z|, elapsed)` records:
/// fits `t = t* - C·R^{-p}` on consecutive triples and returns `(t*, spread)`
/// when the increments contract over the last three thresholds.
pub fn detect_blow_up(ladder: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = ladder.len();
    if n < 5 {
        return None;
    }
    // increments normalised per unit of ln R
    let d: Vec<f64> = ladder
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 / w[0].0).ln())
        .collect();
    let k = d.len();
    let contracting = (k - 3..k).all(|j| d[j] < 0.9 * d[j - 1] || d[j] == 0.0);
    if !contracting || d.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return None;
    }
    let mut estimates = Vec::new();
    for w in ladder.windows(3) {
        if let Some(t) = richardson(w[0], w[1], w[2]) {
            estimates.push(t);
        }
    }
    let last = *estimates.last().unwrap_or(&ladder[n - 1].1);
    let tail = ladder[n - 1].1;
    if estimates.len() < 2 {
        let incr = ladder[n - 1].1 - ladder[n - 2].1;
        return Some((last.max(tail), incr.abs()));
    }
    let m = estimates.len();
    let spread = (estimates[m - 1] - estimates[m - 2]).abs();
    if m >= 3 {
        let prev = (estimates[m - 2] - estimates[m - 3]).abs();
        let floor = 1e-12 * (1.0 + last.abs());
        if spread > prev && spread > floor {
            return None;
        }
    }
    Some((last.max(tail), spread.max(f64::EPSILON * last.abs())))
}

fn richardson(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> Option<f64> {
    let (r0, t0) = p0;
    let (r1, t1) = p1;
    let (r2, t2) = p2;
    let d01 = t1 - t0;
    let d12 = t2 - t1;
    if d01 <= 0.0 {
        return if d12 == 0.0 { Some(t2) } else { None };
    }
    let q = d12 / d01;
    let g = |p: f64| (r1.powf(-p) - r2.powf(-p)) / (r0.powf(-p) - r1.powf(-p));
    let (mut lo, mut hi) = (1e-6, 60.0);
    if q >= g(lo) {
        return None;
    }
    if q <= g(hi) {
        return Some(t2);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let c = d01 / (r0.powf(-p) - r1.powf(-p));
    Some(t2 + c * r2.powf(-p))
}

impl Flow {
    pub fn new(f: &FieldAst, equilibria: &[Equilibrium], controls: Controls) -> Self {
        let captures = equilibria
            .iter()
            .filter_map(|e| {
                let a = e.location;
                let radius = controls.capture_radius * a.norm().max(1.0);
                match e.class {
                    EquilibriumClass::Center => None,
                    EquilibriumClass::Multiple => {
                        let c = e.taylor_leading();
                        let c_next = e.next_derivative / factorial(e.order + 1);
                        let others = equilibria
                            .iter()
                            .filter(|o| o.id != e.id)
                            .map(|o| (o.location - a).norm())
                            .fold(f64::INFINITY, f64::min);
                        let model = if c_next.norm() > 0.0 {
                            0.1 * c.norm() / c_next.norm()
                        } else {
                            f64::INFINITY
                        };
                        let r = (1e-2 * a.norm().max(1.0))
                            .min(0.05 * others)
                            .min(model)
                            .max(radius);
                        Some(Capture::Multiple {
                            id: e.id,
                            a,
                            c,
                            m: e.order,
                            radius: r,
                        })
                    }
                    _ => Some(Capture::Simple {
                        id: e.id,
                        a,
                        re_lambda: e.derivative_at.re,
                        radius,
                    }),
                }
            })
            .collect();
        Self {
            f: f.clone(),
            equilibria: equilibria.to_vec(),
            controls,
            captures,
        }
    }

    pub fn field(&self) -> &FieldAst {
        &self.f
    }

    pub fn equilibria(&self) -> &[Equilibrium] {
        &self.equilibria
    }

    pub fn controls(&self) -> &Controls {
        &self.controls
    }

    pub fn with_controls(&self, controls: Controls) -> Self {
        Self::new(&self.f, &self.equilibria, controls)
    }

    /// Radius of the region in which the local model decides capture at a
    /// multiple equilibrium.
    pub fn multiple_capture_radius(&self, id: usize) -> Option<f64> {
        self.captures.iter().find_map(|c| match c {
            Capture::Multiple { id: i, radius, .. } if *i == id => Some(*radius),
            _ => None,
        })
    }

    #[inline]
    fn rhs(&self, sign: f64, z: Complex64) -> Complex64 {
        let v = self.f.value(z);
        if sign > 0.0 {
            v
        } else {
            -v
        }
    }

    fn dp_step(&self, sign: f64, z: Complex64, k1: Complex64, h: f64) -> Step {
        let k2 = self.rhs(sign, z + k1 * (h * A21));
        let k3 = self.rhs(sign, z + (k1 * A31 + k2 * A32) * h);
        let k4 = self.rhs(sign, z + (k1 * A41 + k2 * A42 + k3 * A43) * h);
        let k5 = self.rhs(sign, z + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h);
        let k6 = self.rhs(
            sign,
            z + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h,
        );
        let zn = z + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
        let k7 = self.rhs(sign, zn);
        let e = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
        Step {
            z: zn,
            k7,
            err: e.norm(),
        }
    }

    fn at_equilibrium(&self, z: Complex64) -> Option<usize> {
        self.equilibria.iter().find_map(|e| {
            let r = self.controls.capture_radius * e.location.norm().max(1.0);
            ((z - e.location).norm() <= r).then_some(e.id)
        })
    }

    fn capture(&self, sign: f64, z: Complex64, fz: Complex64) -> Option<FateKind> {
        for cap in &self.captures {
            match *cap {
                Capture::Simple {
                    id,
                    a,
                    re_lambda,
                    radius,
                } => {
                    if (z - a).norm() <= radius
                        && fz.norm() <= self.controls.capture_residual
                        && sign * re_lambda < 0.0
                    {
                        return Some(FateKind::ConvergesTo {
                            equilibrium: id,
                            approach_angle: None,
                        });
                    }
                }
                Capture::Multiple {
                    id,
                    a,
                    c,
                    m,
                    radius,
                } => {
                    let w = z - a;
                    let r = w.norm();
                    if r > radius || r == 0.0 {
                        continue;
                    }
                    // u = w^{1-m} moves on the line u0 + v t in the local model
                    let u = crate::expr::powu(w, m - 1).inv();
                    let v = c * ((1.0 - f64::from(m)) * sign);
                    if (u * v.conj()).re > 0.5 * u.norm() * v.norm() {
                        let delta = angle_diff(v.arg(), u.arg());
                        let theta = wrap_angle(w.arg() + delta / (1.0 - f64::from(m)));
                        return Some(FateKind::ConvergesTo {
                            equilibrium: id,
                            approach_angle: Some(theta),
                        });
                    }
                }
            }
        }
        None
    }

    /// Index of the center with winding number ±1, if exactly one qualifies.
    fn enclosed_center(&self, winding: &[f64]) -> Option<usize> {
        let mut hit = None;
        for (e, w) in self.equilibria.iter().zip(winding) {
            if (w.abs() - 1.0).abs() < 0.25 {
                if e.class != EquilibriumClass::Center || hit.is_some() {
                    return None;
                }
                hit = Some(e.id);
            }
        }
        hit
    }

    fn initial_step(&self, z: Complex64, fz: Complex64) -> f64 {
        let n = fz.norm();
        if n == 0.0 {
            return 1e-3;
        }
        (0.01 * z.norm().max(1.0) / n).min(1.0)
    }

    /// One-sided integration from `z0` until a fate is reached.
    pub fn integrate(&self, z0: Complex64, dir: Direction) -> Result<HalfTrace, IntegratorError> {
        if let Some(id) = self.at_equilibrium(z0) {
            return Err(IntegratorError::StartAtEquilibrium { equilibrium: id });
        }
        let ctl = &self.controls;
        let sign = dir.sign();
        let f0 = self.f.value(z0);
        let mut samples = Vec::new();
        let mut diag = Diagnostics {
            final_z: z0,
            max_modulus: z0.norm(),
            ..Diagnostics::default()
        };
        if ctl.record {
            samples.push(Sample {
                t: 0.0,
                z: z0,
                f: f0,
            });
        }
        let done = |kind: FateKind, diag: Diagnostics, samples: Vec<Sample>| HalfTrace {
            direction: dir,
            samples,
            fate: Fate {
                kind,
                diagnostics: diag,
            },
        };
        if !finite(f0) {
            return Ok(done(
                FateKind::Undetermined(UndeterminedReason::NonFinite),
                diag,
                samples,
            ));
        }
        if f0.norm() == 0.0 {
            // an exact zero that is not a located equilibrium
            return Ok(done(
                FateKind::Undetermined(UndeterminedReason::StepSizeUnderflow),
                diag,
                samples,
            ));
        }

        let section = f0 * sign / f0.norm();
        let sigma = |z: Complex64| ((z - z0) * section.conj()).re;
        let mut winding = vec![0.0; self.equilibria.len()];
        let mut near_returns = 0;
        let mut ladder: Ladder = Vec::new();
        // ladder times are kept relative to its first rung so that the
        // shrinking increments near blow-up stay resolved
        let mut ladder_base = 0.0_f64;
        let mut ladder_local = 0.0_f64;
        let mut next_threshold = ctl.escape_radius;
        let mut orbit_scale: f64 = 1.0;

        let mut z = z0;
        let mut k1 = f0 * sign;
        let mut tau = 0.0_f64;
        let mut h = self.initial_step(z0, f0);

        loop {
            if diag.steps >= ctl.max_steps {
                return Ok(done(
                    FateKind::Undetermined(UndeterminedReason::StepBudget),
                    diag,
                    samples,
                ));
            }
            let cap = ctl.step_factor * z.norm().max(1.0) / k1.norm();
            h = h.min(cap);
            let stalled = if ladder.is_empty() {
                tau + h == tau
            } else {
                ladder_local + h == ladder_local
            };
            if stalled {
                return Ok(done(
                    FateKind::Undetermined(UndeterminedReason::StepSizeUnderflow),
                    diag,
                    samples,
                ));
            }
            let st = self.dp_step(sign, z, k1, h);
            let escaping = z.norm() >= ctl.escape_radius;
            if !(finite(st.z) && finite(st.k7) && st.err.is_finite()) {
                if escaping {
                    // overflow while escaping counts as reaching the ladder's end
                    let kind = self.finish_escape(sign, ladder_base, &ladder, z);
                    return Ok(done(kind, diag, samples));
                }
                h *= 0.25;
                diag.rejected += 1;
                continue;
            }
            let ratio = st.err / error_scale(ctl, z, st.z, k1, st.k7);
            if ratio > 1.0 {
                h *= (0.9 * ratio.powf(-0.2)).max(0.2);
                diag.rejected += 1;
                continue;
            }

            let (z_prev, k1_prev, tau_prev, h_used) = (z, k1, tau, h);
            z = st.z;
            k1 = st.k7;
            tau += h_used;
            ladder_local += h_used;
            diag.steps += 1;
            diag.elapsed = tau;
            diag.final_z = z;
            diag.max_modulus = diag.max_modulus.max(z.norm());
            diag.area_sum += cross(z_prev - z0, z - z0);
            orbit_scale = orbit_scale.max((z - z0).norm());
            h = if ratio == 0.0 {
                h_used * 5.0
            } else {
                h_used * (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            let fz = k1 * sign;
            if ctl.record {
                samples.push(Sample {
                    t: sign * tau,
                    z,
                    f: fz,
                });
            }
            let mid = {
                let a = Sample {
                    t: tau_prev,
                    z: z_prev,
                    f: k1_prev,
                };
                let b = Sample { t: tau, z, f: k1 };
                hermite_mid(&a, &b)
            };
            for (w, e) in winding.iter_mut().zip(&self.equilibria) {
                let a = e.location;
                *w += (((mid - a) / (z_prev - a)).arg() + ((z - a) / (mid - a)).arg()) / TAU;
            }

            if let Some(kind) = self.capture(sign, z, fz) {
                return Ok(done(kind, diag, samples));
            }

            // return to the section through z0
            let (s_prev, s_new) = (sigma(z_prev), sigma(z));
            if diag.steps > 1 && s_prev < 0.0 && s_new >= 0.0 {
                let lin = z_prev + (z - z_prev) * (s_prev / (s_prev - s_new));
                if (lin - z0).norm() <= 1e-3 * orbit_scale.max(diag.max_modulus) {
                    let (theta, zc) = self.refine_root(sign, z_prev, k1_prev, h_used, |p| sigma(p));
                    let residual = (zc - z0).norm() / orbit_scale;
                    diag.return_residual = Some(residual);
                    let mut wind_c = winding.clone();
                    for (w, e) in wind_c.iter_mut().zip(&self.equilibria) {
                        let a = e.location;
                        // remove the partial step past the section, add the piece to zc
                        *w -= (((mid - a) / (z_prev - a)).arg() + ((z - a) / (mid - a)).arg())
                            / TAU;
                        *w += ((zc - a) / (z_prev - a)).arg() / TAU;
                    }
                    if residual <= ctl.periodic_tol {
                        let period = tau_prev + theta * h_used;
                        let target = self.enclosed_center(&wind_c);
                        diag.winding = target.map(|id| wind_c[id]);
                        return Ok(done(
                            FateKind::PeriodicAround {
                                equilibrium: target,
                                period,
                            },
                            diag,
                            samples,
                        ));
                    }
                    if residual < 1e-5 {
                        near_returns += 1;
                        if near_returns >= 3 {
                            return Ok(done(
                                FateKind::Undetermined(UndeterminedReason::NearlyPeriodic),
                                diag,
                                samples,
                            ));
                        }
                    }
                }
            }

            // escape ladder
            let r = z.norm();
            if let Some(&(last, _)) = ladder.last() {
                if r < 0.5 * last {
                    ladder.clear();
                    next_threshold = ctl.escape_radius;
                }
            }
            if r >= ctl.escape_radius && r >= next_threshold {
                if ladder.is_empty() {
                    ladder_base = tau;
                    ladder_local = 0.0;
                }
                ladder.push((r, ladder_local));
                let k = (r / ctl.escape_radius).log2().floor();
                next_threshold = ctl.escape_radius * 2f64.powf(k + 1.0);
            }
            if r >= ctl.extrap_radius {
                let kind = self.finish_escape(sign, ladder_base, &ladder, z);
                return Ok(done(kind, diag, samples));
            }
            let to_go = r / fz.norm();
            if r >= ctl.escape_radius && to_go <= ctl.time_to_go {
                let kind = match self.finish_escape(sign, ladder_base, &ladder, z) {
                    k @ FateKind::BlowUp { .. } => k,
                    _ => FateKind::BlowUp {
                        t_star: sign * tau,
                        error: to_go,
                        direction_angle: wrap_angle(z.arg()),
                    },
                };
                return Ok(done(kind, diag, samples));
            }

            if tau > ctl.t_max {
                let outside = match ctl.window {
                    Some(w) => !w.contains(z),
                    None => r >= ctl.escape_radius,
                };
                let reason = if outside {
                    UndeterminedReason::UnboundedSlow
                } else {
                    UndeterminedReason::TimeBudget
                };
                return Ok(done(FateKind::Undetermined(reason), diag, samples));
            }
        }
    }

    fn finish_escape(&self, sign: f64, base: f64, ladder: &[(f64, f64)], z: Complex64) -> FateKind {
        match detect_blow_up(ladder) {
            Some((t_star, error)) => FateKind::BlowUp {
                t_star: sign * (base + t_star),
                error,
                direction_angle: wrap_angle(z.arg()),
            },
            None => FateKind::Undetermined(UndeterminedReason::UnboundedSlow),
        }
    }

    /// Root in `θ ∈ [0, 1]` of `g(step(z, θh))`, found by bisection with a
    /// fresh single step from `z` for each trial; `g(z) < 0 ≤ g(step(z, h))`
    /// is assumed or the sign change is taken as given.
    fn refine_root<G: Fn(Complex64) -> f64>(
        &self,
        sign: f64,
        z: Complex64,
        k1: Complex64,
        h: f64,
        g: G,
    ) -> (f64, Complex64) {
        let g0 = g(z);
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut best = self.dp_step(sign, z, k1, h).z;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let p = self.dp_step(sign, z, k1, mid * h).z;
            if (g(p) < 0.0) == (g0 < 0.0) {
                lo = mid;
            } else {
                hi = mid;
                best = p;
            }
            if (hi - lo) * h * k1.norm() < 1e-14 * (1.0 + z.norm()) {
                break;
            }
        }
        (hi, best)
    }

    /// Point between two consecutive samples where `g` changes sign, with
    /// its time, refined by bisection on single-step re-integration.
    pub fn refine_event<G: Fn(Complex64) -> f64>(
        &self,
        a: &Sample,
        b: &Sample,
        g: G,
    ) -> (f64, Complex64) {
        let h = b.t - a.t;
        let sign = if h >= 0.0 { 1.0 } else { -1.0 };
        let (theta, z) = self.refine_root(sign, a.z, a.f * sign, h.abs(), g);
        (a.t + theta * h, z)
    }

    /// Both half-orbits through `z0`.
    pub fn orbit(&self, z0: Complex64) -> Result<OrbitTrace, IntegratorError> {
        let back = self.integrate(z0, Direction::Backward)?;
        let fwd = self.integrate(z0, Direction::Forward)?;
        Ok(join(back, fwd))
    }

    /// Position after flowing for `duration` (sign selects the direction),
    /// without fate detection.
    pub fn advance(&self, z0: Complex64, duration: f64) -> Option<Complex64> {
        let sign = if duration >= 0.0 { 1.0 } else { -1.0 };
        let target = duration.abs();
        let ctl = &self.controls;
        let mut z = z0;
        let mut k1 = self.rhs(sign, z0);
        let mut tau = 0.0;
        let mut h = self.initial_step(z0, k1).min(target.max(1e-300));
        let mut steps = 0;
        while tau < target {
            if steps > ctl.max_steps || !finite(k1) {
                return None;
            }
            let cap = ctl.step_factor * z.norm().max(1.0) / k1.norm();
            h = h.min(cap).min(target - tau);
            if h <= 0.0 {
                break;
            }
            let st = self.dp_step(sign, z, k1, h);
            if !(finite(st.z) && st.err.is_finite()) {
                h *= 0.25;
                steps += 1;
                continue;
            }
            let ratio = st.err / error_scale(ctl, z, st.z, k1, st.k7);
            if ratio > 1.0 {
                h *= (0.9 * ratio.powf(-0.2)).max(0.2);
                steps += 1;
                continue;
            }
            tau = if target - tau <= h { target } else { tau + h };
            z = st.z;
            k1 = st.k7;
            steps += 1;
            h *= if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
        }
        Some(z)
    }

    /// First transversal crossing of the recorded orbit (for `t > 0`) with the
    /// segment `[a, b]`, refined on the segment's line to `1e-12`.
    pub fn find_crossing(
        &self,
        trace: &OrbitTrace,
        a: Complex64,
        b: Complex64,
    ) -> Result<Option<(f64, Complex64)>, IntegratorError> {
        self.check_transversal(a, b)?;
        Ok(self.crossing_in(&trace.samples[trace.origin_index..], a, b))
    }

    /// Tangency test at sampled points of the segment.
    pub fn check_transversal(&self, a: Complex64, b: Complex64) -> Result<(), IntegratorError> {
        let d = (b - a) / (b - a).norm();
        for k in 0..=16 {
            let p = a + (b - a) * (f64::from(k) / 16.0);
            let v = self.f.value(p);
            let n = v.norm();
            if n == 0.0 || !finite(v) {
                continue;
            }
            if (cross(d, v) / n).abs() < 1e-3 {
                return Err(IntegratorError::NotTransversal);
            }
        }
        Ok(())
    }

    /// First crossing of the segment `[a, b]` among consecutive samples
    /// (ordered by travel), refined by single-step re-integration.
    pub fn crossing_in(
        &self,
        samples: &[Sample],
        a: Complex64,
        b: Complex64,
    ) -> Option<(f64, Complex64)> {
        let len = (b - a).norm();
        let dir = (b - a) / len;
        let dist = |z: Complex64| cross(dir, z - a);
        let along = |z: Complex64| ((z - a) * dir.conj()).re / len;
        let slack = 1e-9;
        for w in samples.windows(2) {
            let (s0, s1) = (dist(w[0].z), dist(w[1].z));
            if s0 == 0.0 && w[0].t != samples[0].t {
                let u = along(w[0].z);
                if (-slack..=1.0 + slack).contains(&u) {
                    return Some((w[0].t, w[0].z));
                }
            }
            if (s0 < 0.0) == (s1 < 0.0) || s1 == 0.0 && s0 == 0.0 {
                continue;
            }
            let u_lin = along(w[0].z + (w[1].z - w[0].z) * (s0 / (s0 - s1)));
            if !(-0.01..=1.01).contains(&u_lin) {
                continue;
            }
            let (t, zc) = self.refine_event(&w[0], &w[1], |p| dist(p) * s0.signum());
            let u = along(zc);
            if (-slack..=1.0 + slack).contains(&u) {
                return Some((t, zc));
            }
        }
        None
    }

    /// Position on a recorded orbit at time `t`, by single-step re-integration
    /// from the preceding sample.
    pub fn state_at(&self, trace: &OrbitTrace, t: f64) -> Result<Complex64, IntegratorError> {
        let (lo, hi) = trace.span();
        if !(lo..=hi).contains(&t) {
            return Err(IntegratorError::OutOfSpan { t, lo, hi });
        }
        let s = &trace.samples;
        let k = s.partition_point(|p| p.t <= t).saturating_sub(1).min(s.len() - 1);
        let base = if t >= 0.0 {
            k
        } else {
            // integrate backward from the later sample
            (k + 1).min(s.len() - 1)
        };
        let p = s[base];
        let dt = t - p.t;
        if dt == 0.0 {
            return Ok(p.z);
        }
        let sign = dt.signum();
        Ok(self.dp_step(sign, p.z, p.f * sign, dt.abs()).z)
    }
}

/// Merge backward and forward halves into one time-ordered trace.
pub fn join(back: HalfTrace, fwd: HalfTrace) -> OrbitTrace {
    let mut samples: Vec<Sample> = back.samples.into_iter().rev().collect();
    let origin_index = samples.len().saturating_sub(1);
    samples.extend(fwd.samples.into_iter().skip(1));
    let t_plus = match fwd.fate.kind {
        FateKind::BlowUp { t_star, .. } => t_star,
        _ => f64::INFINITY,
    };
    let t_minus = match back.fate.kind {
        FateKind::BlowUp { t_star, .. } => t_star,
        _ => f64::NEG_INFINITY,
    };
    OrbitTrace {
        samples,
        origin_index,
        forward_fate: fwd.fate,
        backward_fate: back.fate,
        t_plus,
        t_minus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::analyze;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn flow(src: &str, window: Rect) -> Flow {
        let f = FieldAst::parse(src).unwrap();
        let eqs = analyze(&f, &window).unwrap();
        Flow::new(&f, &eqs, Controls::for_window(&window).certified_for(&f))
    }

    fn sq() -> Rect {
        Rect::new(-2.0, -2.0, 2.0, 2.0)
    }

    #[test]
    fn square_blows_up_at_one() {
        let fl = flow("x^2", sq());
        let h = fl.integrate(c(1.0, 0.0), Direction::Forward).unwrap();
        match h.fate.kind {
            FateKind::BlowUp { t_star, error, .. } => {
                assert!((t_star - 1.0).abs() < 1e-6, "{t_star}");
                assert!(error < 1e-6);
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn tangent_blows_up_at_half_pi() {
        let fl = flow("1+x^2", sq());
        let h = fl.integrate(c(0.0, 0.0), Direction::Forward).unwrap();
        match h.fate.kind {
            FateKind::BlowUp { t_star, .. } => assert!((t_star - PI / 2.0).abs() < 1e-6),
            k => panic!("{k:?}"),
        }
        let h = fl.integrate(c(0.0, 0.0), Direction::Backward).unwrap();
        match h.fate.kind {
            FateKind::BlowUp { t_star, .. } => assert!((t_star + PI / 2.0).abs() < 1e-6),
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn rotation_is_periodic() {
        let fl = flow("i*x", sq());
        let h = fl.integrate(c(1.0, 0.0), Direction::Forward).unwrap();
        match h.fate.kind {
            FateKind::PeriodicAround {
                equilibrium: Some(0),
                period,
            } => assert!((period - 2.0 * PI).abs() < 1e-8, "{period}"),
            k => panic!("{k:?}"),
        }
        assert!(h.fate.diagnostics.return_residual.unwrap() <= 1e-8);
        assert!((h.fate.diagnostics.winding.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn linear_escape_is_not_blow_up() {
        let fl = flow("x", sq());
        let h = fl.integrate(c(1.0, 0.0), Direction::Forward).unwrap();
        assert_eq!(
            h.fate.kind,
            FateKind::Undetermined(UndeterminedReason::UnboundedSlow)
        );
        let h = fl.integrate(c(1.0, 0.5), Direction::Backward).unwrap();
        assert_eq!(h.fate.kind.converges_to(), Some(0));
    }

    #[test]
    fn ladder_oracle_for_square() {
        // remaining time from |z| = R is exactly 1/R for real z
        let ladder: Vec<(f64, f64)> = [1e2, 1e3, 1e4, 1e6, 1e8]
            .iter()
            .map(|&r| (r, 1.0 - 1.0 / r))
            .collect();
        let (t, err) = detect_blow_up(&ladder).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!(err < 1e-6);
        let lin: Vec<(f64, f64)> = [1e1, 1e2, 1e3, 1e4, 1e5]
            .iter()
            .map(|&r: &f64| (r, r.ln()))
            .collect();
        assert!(detect_blow_up(&lin).is_none());
    }

    #[test]
    fn stable_node_captures() {
        let fl = flow("x*(x-1)", sq());
        let h = fl.integrate(c(0.5, 0.3), Direction::Forward).unwrap();
        assert_eq!(h.fate.kind.converges_to(), Some(0));
        let h = fl.integrate(c(0.5, 0.3), Direction::Backward).unwrap();
        assert_eq!(h.fate.kind.converges_to(), Some(1));
    }

    #[test]
    fn homoclinic_at_double_zero() {
        let fl = flow("x^2", sq());
        let z0 = c(0.0, 0.5);
        let f = fl.integrate(z0, Direction::Forward).unwrap();
        let b = fl.integrate(z0, Direction::Backward).unwrap();
        match (f.fate.kind, b.fate.kind) {
            (
                FateKind::ConvergesTo {
                    equilibrium: 0,
                    approach_angle: Some(tf),
                },
                FateKind::ConvergesTo {
                    equilibrium: 0,
                    approach_angle: Some(tb),
                },
            ) => {
                assert!((tf - PI).abs() < 1e-6, "{tf}");
                assert!(tb.abs() < 1e-6 || (tb - TAU).abs() < 1e-6, "{tb}");
            }
            k => panic!("{k:?}"),
        }
    }

    #[test]
    fn start_on_equilibrium_is_rejected() {
        let fl = flow("x^2", sq());
        assert_eq!(
            fl.integrate(c(0.0, 0.0), Direction::Forward),
            Err(IntegratorError::StartAtEquilibrium { equilibrium: 0 })
        );
    }

    #[test]
    fn rotation_crossing() {
        let fl = flow("i*x", sq());
        let tr = fl.orbit(c(1.0, 0.0)).unwrap();
        let (t, z) = fl
            .find_crossing(&tr, c(0.0, 1.0), c(0.0, 3.0))
            .unwrap()
            .unwrap();
        assert!((t - PI / 2.0).abs() < 1e-9, "{t}");
        assert!((z - c(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn square_crossing_on_negative_axis() {
        let fl = flow("x^2", sq());
        let tr = fl.orbit(c(-1.0, 0.0)).unwrap();
        let (t, z) = fl
            .find_crossing(&tr, c(-0.5, -0.2), c(-0.5, 0.2))
            .unwrap()
            .unwrap();
        assert!((z - c(-0.5, 0.0)).norm() < 1e-10);
        assert!((t - 1.0).abs() < 1e-8);
    }

    #[test]
    fn tangent_segment_rejected() {
        let fl = flow("1", sq());
        let tr = fl.orbit(c(0.0, 0.0)).unwrap_or_else(|_| unreachable!());
        assert_eq!(
            fl.find_crossing(&tr, c(0.0, 1.0), c(1.0, 1.0)),
            Err(IntegratorError::NotTransversal)
        );
    }

    #[test]
    fn advance_matches_tangent() {
        let fl = flow("1+x^2", sq());
        let z = fl.advance(c(0.0, 0.0), 1.2).unwrap();
        assert!((z - c(1.2f64.tan(), 0.0)).norm() < 1e-9 * 1.2f64.tan());
    }

    #[test]
    fn state_lookup() {
        let fl = flow("1+x^2", sq());
        let tr = fl.orbit(c(0.0, 0.0)).unwrap();
        let z = fl.state_at(&tr, 1.2).unwrap();
        assert!((z.re - 1.2f64.tan()).abs() < 1e-8 * 1.2f64.tan());
        let z = fl.state_at(&tr, -0.7).unwrap();
        assert!((z.re + 0.7f64.tan()).abs() < 1e-9);
        assert!(fl.state_at(&tr, 2.0).is_err());
    }

    #[test]
    fn certification_radius() {
        let w = sq();
        let f = FieldAst::parse("x^2").unwrap();
        assert_eq!(Controls::for_window(&w).certified_for(&f).extrap_radius, 1e8);
        let f = FieldAst::parse("(x-1)^2*(x+1)^2").unwrap();
        let r = Controls::for_window(&w).certified_for(&f).extrap_radius;
        assert!((r - 1e3).abs() < 1e-9);
    }
}
