//! Zeros of `F`: location, order, classification, periods and the definite
//! directions of multiple equilibria.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{horner, FieldAst};
use crate::geometry::{wrap_angle, Rect};
use crate::quadrature::{segment_integral, QuadOptions};

/// Relative tolerance on `Re λ / |λ|` separating centers from foci.
pub const CENTER_TOL: f64 = 1e-10;
/// Upper edge of the band in which a center/focus decision is flagged.
pub const DEGENERATE_BAND: f64 = 1e-6;
/// Largest order searched by [`zero_order`].
pub const MAX_ORDER: u32 = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriaError {
    #[error("invalid window")]
    InvalidWindow,
    #[error("field vanishes identically")]
    ZeroField,
    #[error("argument principle counts {contour} zeros but {found} were located")]
    WindingMismatch { contour: i64, found: usize },
    #[error("contour count over the window is not close to an integer ({value})")]
    ContourFailure { value: f64 },
    #[error("Newton iteration stalled near {re} + {im}i")]
    NonConvergence { re: f64, im: f64 },
    #[error("no derivative of order <= {MAX_ORDER} is nonzero at {re} + {im}i")]
    OrderOverflow { re: f64, im: f64 },
    #[error("point {re} + {im}i is not a zero of the field")]
    NotAZero { re: f64, im: f64 },
    #[error("equilibrium is not a center")]
    NotACenter,
    #[error("equilibrium is simple; sector directions need order >= 2")]
    NotMultiple,
}

type Result<T> = std::result::Result<T, EquilibriaError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EquilibriumClass {
    Center,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    Multiple,
}

impl EquilibriumClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::Center => "Center",
            Self::StableNode => "StableNode",
            Self::UnstableNode => "UnstableNode",
            Self::StableFocus => "StableFocus",
            Self::UnstableFocus => "UnstableFocus",
            Self::Multiple => "Multiple",
        }
    }

    /// Class of the same point for the time-reversed field `-F`.
    pub fn reversed(self) -> Self {
        match self {
            Self::StableNode => Self::UnstableNode,
            Self::UnstableNode => Self::StableNode,
            Self::StableFocus => Self::UnstableFocus,
            Self::UnstableFocus => Self::StableFocus,
            other => other,
        }
    }

    pub fn is_stable(self) -> bool {
        matches!(self, Self::StableNode | Self::StableFocus)
    }

    pub fn is_node_or_focus(self) -> bool {
        matches!(
            self,
            Self::StableNode | Self::UnstableNode | Self::StableFocus | Self::UnstableFocus
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub id: usize,
    pub location: Complex64,
    pub order: u32,
    pub class: EquilibriumClass,
    pub period: Option<f64>,
    pub sector_directions: Option<Vec<f64>>,
    /// `F′(a)`.
    pub derivative_at: Complex64,
    /// `F^{(m)}(a)`.
    pub leading_coefficient: Complex64,
    /// `F^{(m+1)}(a)`, used to size the region where `F ≈ c (x-a)^m` holds.
    pub next_derivative: Complex64,
    /// Center/focus decision lies within the flagged band.
    pub near_degenerate: bool,
}

impl Equilibrium {
    /// Taylor coefficient `c = F^{(m)}(a)/m!`.
    pub fn taylor_leading(&self) -> Complex64 {
        self.leading_coefficient / factorial(self.order)
    }

    /// Whether the direction `theta` at a multiple equilibrium points away from it.
    pub fn is_outgoing(&self, theta: f64) -> bool {
        let c = self.taylor_leading();
        (c.arg() + f64::from(self.order - 1) * theta).cos() > 0.0
    }
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Symbolic derivatives of a field built on demand.
pub struct DerivativeTower {
    ders: Vec<FieldAst>,
}

impl DerivativeTower {
    pub fn new(f: &FieldAst) -> Self {
        Self {
            ders: vec![f.clone()],
        }
    }

    pub fn get(&mut self, k: u32) -> &FieldAst {
        while self.ders.len() <= k as usize {
            let next = self.ders.last().expect("tower holds F").derivative(1);
            self.ders.push(next);
        }
        &self.ders[k as usize]
    }

    pub fn value(&mut self, k: u32, z: Complex64) -> Complex64 {
        self.get(k).value(z)
    }
}

/// `max(1, max |F|)` over a ring of points at unit distance from `a`.
pub fn local_scale(f: &FieldAst, a: Complex64) -> f64 {
    (0..16)
        .map(|k| f.value(a + Complex64::from_polar(1.0, TAU * f64::from(k) / 16.0)).norm())
        .filter(|v| v.is_finite())
        .fold(1.0, f64::max)
}

pub fn zero_tol(scale: f64) -> f64 {
    1e-10 * (1.0 + scale)
}

pub fn deriv_tol(k: u32, scale: f64) -> f64 {
    1e-8 * factorial(k) * scale
}

/// Smallest `k ≥ 1` with `|F^{(k)}(a)| > deriv_tol`.
pub fn zero_order(f: &FieldAst, a: Complex64) -> Result<u32> {
    order_with(&mut DerivativeTower::new(f), f, a)
}

fn order_with(tower: &mut DerivativeTower, f: &FieldAst, a: Complex64) -> Result<u32> {
    let scale = local_scale(f, a);
    if f.value(a).norm() > zero_tol(scale) {
        return Err(EquilibriaError::NotAZero { re: a.re, im: a.im });
    }
    for k in 1..=MAX_ORDER {
        if tower.value(k, a).norm() > deriv_tol(k, scale) {
            return Ok(k);
        }
    }
    Err(EquilibriaError::OrderOverflow { re: a.re, im: a.im })
}

/// The `2m-2` values `(ℓπ - arg F^{(m)}(a))/(m-1) mod 2π`, ascending.
pub fn directions_from(leading: Complex64, m: u32) -> Vec<f64> {
    let n = 2 * (m - 1);
    let d = f64::from(m - 1);
    let mut out: Vec<f64> = (0..n)
        .map(|l| wrap_angle((f64::from(l) * PI - leading.arg()) / d))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

pub fn sector_directions(f: &FieldAst, a: Complex64, m: u32) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(EquilibriaError::NotMultiple);
    }
    let lead = f.derivative(m).value(a);
    Ok(directions_from(lead, m))
}

pub fn classify(f: &FieldAst, a: Complex64) -> Result<Equilibrium> {
    classify_with(&mut DerivativeTower::new(f), f, a, 0)
}

fn classify_with(
    tower: &mut DerivativeTower,
    f: &FieldAst,
    a: Complex64,
    id: usize,
) -> Result<Equilibrium> {
    let m = order_with(tower, f, a)?;
    let lambda = tower.value(1, a);
    let lead = tower.value(m, a);
    let next = tower.value(m + 1, a);
    let mut eq = Equilibrium {
        id,
        location: a,
        order: m,
        class: EquilibriumClass::Multiple,
        period: None,
        sector_directions: None,
        derivative_at: lambda,
        leading_coefficient: lead,
        next_derivative: next,
        near_degenerate: false,
    };
    if m >= 2 {
        eq.sector_directions = Some(directions_from(lead, m));
        return Ok(eq);
    }
    let mag = lambda.norm();
    let re_rel = lambda.re.abs() / mag;
    let im_rel = lambda.im.abs() / mag;
    let stable = lambda.re < 0.0;
    eq.class = if re_rel <= CENTER_TOL {
        EquilibriumClass::Center
    } else if im_rel <= CENTER_TOL {
        if stable {
            EquilibriumClass::StableNode
        } else {
            EquilibriumClass::UnstableNode
        }
    } else if stable {
        EquilibriumClass::StableFocus
    } else {
        EquilibriumClass::UnstableFocus
    };
    eq.near_degenerate = (re_rel > CENTER_TOL && re_rel < DEGENERATE_BAND)
        || (im_rel > CENTER_TOL && im_rel < DEGENERATE_BAND);
    if eq.class == EquilibriumClass::Center {
        eq.period = Some((TAU / lambda.im).abs());
    }
    Ok(eq)
}

/// `T(a) = |2π / Im F′(a)|` for a center.
pub fn period(f: &FieldAst, a: Complex64) -> Result<f64> {
    classify(f, a)?.period.ok_or(EquilibriaError::NotACenter)
}

/// Zeros inside `window`, sorted by real then imaginary part.
pub fn find_zeros(f: &FieldAst, window: &Rect) -> Result<Vec<Complex64>> {
    Ok(locate(f, window)?.into_iter().map(|(z, _)| z).collect())
}

/// Zeros with their orders and classification, ids in sorted order.
pub fn analyze(f: &FieldAst, window: &Rect) -> Result<Vec<Equilibrium>> {
    let mut tower = DerivativeTower::new(f);
    locate(f, window)?
        .into_iter()
        .enumerate()
        .map(|(id, (z, _))| classify_with(&mut tower, f, z, id))
        .collect()
}

/// `(1/2πi) ∮ F′/F dz` over the boundary of `rect`, or `None` if the
/// quadrature fails (typically a zero on or next to an edge).
pub fn contour_count(f: &FieldAst, df: &FieldAst, rect: &Rect) -> Option<f64> {
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_intervals: 2000,
    };
    let b = rect.boundary();
    let mut total = Complex64::new(0.0, 0.0);
    for w in b.windows(2) {
        let r = segment_integral(|z| df.value(z) / f.value(z), w[0], w[1], opts);
        if !r.converged {
            return None;
        }
        total += r.value;
    }
    let n = total / Complex64::new(0.0, TAU);
    (n.im.abs() < 1e-3).then_some(n.re)
}

/// Rounding residue in one component is set to zero so that sorting is stable.
fn snap(z: Complex64) -> Complex64 {
    let floor = 8.0 * f64::EPSILON * z.norm();
    let clean = |v: f64| if v.abs() <= floor { 0.0 } else { v };
    Complex64::new(clean(z.re), clean(z.im))
}

fn rounded_count(v: f64) -> Option<i64> {
    let r = v.round();
    ((v - r).abs() < 0.05).then_some(r as i64)
}

fn locate(f: &FieldAst, window: &Rect) -> Result<Vec<(Complex64, u32)>> {
    if !window.is_valid() {
        return Err(EquilibriaError::InvalidWindow);
    }
    if let Some(p) = f.polynomial() {
        if p.iter().all(|c| c.norm() == 0.0) {
            return Err(EquilibriaError::ZeroField);
        }
    }
    let df = f.derivative(1);
    let mut win = *window;
    for attempt in 0..6 {
        let roots = match f.polynomial() {
            Some(p) => polynomial_zeros(f, p, &win)?,
            None => {
                let Some(n) = contour_count(f, &df, &win).and_then(rounded_count) else {
                    win = win.dilate(0.01);
                    continue;
                };
                let mut out = Vec::new();
                subdivide(f, &df, &win, n, 0, &mut out)?;
                out
            }
        };
        let margin = 1e-9 * win.diameter();
        if attempt < 5 && roots.iter().any(|(z, _)| win.inset(*z).abs() <= margin) {
            win = win.dilate(0.01);
            continue;
        }
        let mut roots: Vec<_> = roots
            .into_iter()
            .filter(|(z, _)| win.inset(*z) > 0.0)
            .map(|(z, m)| (snap(z), m))
            .collect();
        roots.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        let found: u32 = roots.iter().map(|r| r.1).sum();
        match contour_count(f, &df, &win) {
            Some(v) => match rounded_count(v) {
                Some(n) if n == i64::from(found) => return Ok(roots),
                Some(n) => {
                    return Err(EquilibriaError::WindingMismatch {
                        contour: n,
                        found: found as usize,
                    })
                }
                None => return Err(EquilibriaError::ContourFailure { value: v }),
            },
            None => {
                win = win.dilate(0.01);
                continue;
            }
        }
    }
    Err(EquilibriaError::ContourFailure { value: f64::NAN })
}

fn poly_derivative(p: &[Complex64]) -> Vec<Complex64> {
    if p.len() <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

/// Simultaneous (Aberth–Ehrlich) iteration on all roots of `p`.
fn aberth(p: &[Complex64]) -> Vec<Complex64> {
    let n = p.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let dp = poly_derivative(p);
    let lead = p[n].norm();
    // Cauchy-type radius for the initial circle
    let radius = (0..n)
        .map(|k| (p[k].norm() / lead).powf(1.0 / (n - k) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(radius, 0.4 + TAU * k as f64 / n as f64))
        .collect();
    for _ in 0..1000 {
        let mut moved = false;
        for k in 0..n {
            let pv = horner(p, z[k]);
            if pv.norm() == 0.0 {
                continue;
            }
            let ratio = pv / horner(&dp, z[k]);
            let s: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| 1.0 / (z[k] - z[j]))
                .sum();
            let step = ratio / (1.0 - ratio * s);
            if step.re.is_finite() && step.im.is_finite() {
                z[k] -= step;
                if step.norm() > 1e-15 * (1.0 + z[k].norm()) {
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }
    z
}

/// Damped Newton on `g/g′`; returns the limit when the step stalls at
/// rounding level.
fn newton<G, D>(g: G, dg: D, z0: Complex64, max_iter: usize) -> Option<Complex64>
where
    G: Fn(Complex64) -> Complex64,
    D: Fn(Complex64) -> Complex64,
{
    let mut z = z0;
    let mut gz = g(z);
    for _ in 0..max_iter {
        if gz.norm() == 0.0 {
            return Some(z);
        }
        let d = dg(z);
        let step = gz / d;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = z - step * lambda;
            let gc = g(cand);
            if gc.norm() < gz.norm() {
                z = cand;
                gz = gc;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted || step.norm() * lambda <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
            // rounding floor reached: a last full step may still shave an ulp
            return Some(z);
        }
    }
    Some(z)
}

fn polynomial_zeros(
    f: &FieldAst,
    p: &[Complex64],
    window: &Rect,
) -> Result<Vec<(Complex64, u32)>> {
    let mut tower = DerivativeTower::new(f);
    let zero_low = p.iter().take_while(|c| c.norm() == 0.0).count();
    let reduced = &p[zero_low..];
    let mut out = Vec::new();
    if zero_low > 0 {
        out.push((Complex64::new(0.0, 0.0), zero_low as u32));
    }
    let roots = aberth(reduced);
    // clusters of nearly coincident roots are candidate multiple zeros
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![roots[i]];
        let tol = 1e-4 * (1.0 + roots[i].norm());
        for j in i + 1..roots.len() {
            if !used[j] && (roots[j] - roots[i]).norm() <= tol {
                used[j] = true;
                members.push(roots[j]);
            }
        }
        let m = members.len() as u32;
        let centroid = members.iter().sum::<Complex64>() / members.len() as f64;
        if !window.dilate(0.05).contains(centroid) {
            continue;
        }
        if let Some(z) = polish(f, &mut tower, centroid, m) {
            out.push((z, m));
        } else {
            for z0 in members {
                let z = polish(f, &mut tower, z0, 1).ok_or(EquilibriaError::NonConvergence {
                    re: z0.re,
                    im: z0.im,
                })?;
                out.push((z, 1));
            }
        }
    }
    Ok(out)
}

/// Newton on `F^{(m-1)}`, accepted when the limit is a zero of order `m`.
fn polish(f: &FieldAst, tower: &mut DerivativeTower, z0: Complex64, m: u32) -> Option<Complex64> {
    let g = tower.get(m - 1).clone();
    let dg = tower.get(m).clone();
    let z = newton(|z| g.value(z), |z| dg.value(z), z0, 100)?;
    match order_with(tower, f, z) {
        Ok(k) if k == m => Some(z),
        _ => None,
    }
}

const SPLITS: [f64; 4] = [0.5123, 0.4871, 0.5377, 0.4619];

fn subdivide(
    f: &FieldAst,
    df: &FieldAst,
    rect: &Rect,
    count: i64,
    depth: u32,
    out: &mut Vec<(Complex64, u32)>,
) -> Result<()> {
    if count <= 0 {
        return Ok(());
    }
    let mut tower = DerivativeTower::new(f);
    let c = rect.center();
    if depth >= 2 || rect.diameter() < 1.0 {
        let m = count as u32;
        if let Some(z) = polish(f, &mut tower, c, m) {
            if rect.dilate(1e-6).contains(z) {
                out.push((z, m));
                return Ok(());
            }
        }
    }
    if depth > 48 {
        return Err(EquilibriaError::NonConvergence { re: c.re, im: c.im });
    }
    for frac in SPLITS {
        let (a, b) = if rect.width() >= rect.height() {
            let x = rect.xmin + frac * rect.width();
            (
                Rect::new(rect.xmin, rect.ymin, x, rect.ymax),
                Rect::new(x, rect.ymin, rect.xmax, rect.ymax),
            )
        } else {
            let y = rect.ymin + frac * rect.height();
            (
                Rect::new(rect.xmin, rect.ymin, rect.xmax, y),
                Rect::new(rect.xmin, y, rect.xmax, rect.ymax),
            )
        };
        let na = contour_count(f, df, &a).and_then(rounded_count);
        let nb = contour_count(f, df, &b).and_then(rounded_count);
        if let (Some(na), Some(nb)) = (na, nb) {
            if na + nb == count {
                subdivide(f, df, &a, na, depth + 1, out)?;
                subdivide(f, df, &b, nb, depth + 1, out)?;
                return Ok(());
            }
        }
    }
    Err(EquilibriaError::NonConvergence { re: c.re, im: c.im })
}
