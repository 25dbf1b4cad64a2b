use num_complex::Complex64;
use serde::Serialize;

use crate::geometry::segment_distance;
use crate::integrator::{FateKind, Flow, OrbitTrace, UndeterminedReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Positive,
    Negative,
    Double,
    None,
    Undetermined,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Double => "double",
            Self::None => "none",
            Self::Undetermined => "undetermined",
        }
    }

    /// Side of the same orbit under time reversal.
    pub fn reversed(self) -> Self {
        match self {
            Self::Positive => Self::Negative,
            Self::Negative => Self::Positive,
            s => s,
        }
    }

    pub fn is_one_sided(self) -> bool {
        matches!(self, Self::Positive | Self::Negative)
    }

    pub fn is_separatrix(self) -> bool {
        matches!(self, Self::Positive | Self::Negative | Self::Double)
    }
}

/// Role of a sector boundary orbit attached to the multiple equilibrium:
/// `Gamma1` leaves it, `Gamma2` enters it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SectorRole {
    Gamma1,
    Gamma2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatrixRecord {
    pub id: usize,
    pub seed: Complex64,
    pub orbit: OrbitTrace,
    pub side: Side,
    /// `t_plus − t_minus` for double-sided records.
    pub transit_time: Option<f64>,
    pub blow_up_times: (Option<f64>, Option<f64>),
    /// Integrator reason behind an undetermined side.
    pub reason: Option<UndeterminedReason>,
    pub role: Option<SectorRole>,
}

impl SeparatrixRecord {
    pub fn attachments(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for kind in [self.orbit.backward_fate.kind, self.orbit.forward_fate.kind] {
            if let Some(b) = kind.converges_to() {
                if !out.contains(&b) {
                    out.push(b);
                }
            }
        }
        out
    }
}

fn blow_up_time(kind: &FateKind) -> Option<f64> {
    match kind {
        FateKind::BlowUp { t_star, .. } => Some(*t_star),
        _ => None,
    }
}

fn infinite_time(kind: &FateKind) -> bool {
    match kind {
        FateKind::ConvergesTo { .. } | FateKind::PeriodicAround { .. } => true,
        FateKind::Undetermined(r) => *r == UndeterminedReason::UnboundedSlow,
        FateKind::BlowUp { .. } => false,
    }
}

fn reason(kind: &FateKind) -> Option<UndeterminedReason> {
    match kind {
        FateKind::Undetermined(r) if *r != UndeterminedReason::UnboundedSlow => Some(*r),
        _ => None,
    }
}

/// Separatrix class of an orbit from its two fates.
pub fn classify_record(id: usize, seed: Complex64, orbit: OrbitTrace) -> SeparatrixRecord {
    let f = &orbit.forward_fate.kind;
    let b = &orbit.backward_fate.kind;
    let (tp, tm) = (blow_up_time(f), blow_up_time(b));
    let side = match (tp.is_some(), tm.is_some()) {
        (true, true) => Side::Double,
        (true, false) if infinite_time(b) => Side::Positive,
        (false, true) if infinite_time(f) => Side::Negative,
        (false, false) if infinite_time(f) && infinite_time(b) => Side::None,
        _ => Side::Undetermined,
    };
    let transit_time = match (tp, tm) {
        (Some(p), Some(m)) => Some(p - m),
        _ => None,
    };
    SeparatrixRecord {
        id,
        seed,
        side,
        transit_time,
        blow_up_times: (tm, tp),
        reason: if side == Side::Undetermined {
            reason(f).or(reason(b))
        } else {
            None
        },
        role: None,
        orbit,
    }
}

/// Whether the orbit of `trace` passes within `tol` of `z`, using a local
/// re-integrated crossing of the normal line through `z`.
pub fn passes_near(flow: &Flow, trace: &OrbitTrace, z: Complex64, tol: f64) -> bool {
    let s = &trace.samples;
    if s.len() < 2 {
        return s.first().is_some_and(|p| (p.z - z).norm() <= tol);
    }
    let Some((k, d)) = s
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, segment_distance(z, w[0].z, w[1].z)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
    else {
        return false;
    };
    let chord = (s[k + 1].z - s[k].z).norm();
    if d > tol + 0.25 * chord {
        return false;
    }
    let fz = flow.field().value(z);
    if fz.norm() == 0.0 || !fz.re.is_finite() || !fz.im.is_finite() {
        return d <= tol;
    }
    let n = Complex64::new(0.0, 1.0) * fz / fz.norm();
    let half = 2.0 * (d + chord) + tol;
    let lo = k.saturating_sub(1);
    let hi = (k + 3).min(s.len());
    match flow.crossing_in(&s[lo..hi], z - n * half, z + n * half) {
        Some((_, zc)) => (zc - z).norm() <= tol,
        None => d <= tol,
    }
}

/// Whether two records describe the same orbit.
pub fn same_orbit(flow: &Flow, a: &SeparatrixRecord, b: &SeparatrixRecord, tol: f64) -> bool {
    passes_near(flow, &a.orbit, b.seed, tol) || passes_near(flow, &b.orbit, a.seed, tol)
}

/// Records with duplicates of earlier ones removed, renumbered in order.
pub fn dedupe_records(
    flow: &Flow,
    records: Vec<SeparatrixRecord>,
    tol: f64,
) -> Vec<SeparatrixRecord> {
    let mut out: Vec<SeparatrixRecord> = Vec::new();
    for r in records {
        if !out.iter().any(|o| same_orbit(flow, o, &r, tol)) {
            out.push(r);
        }
    }
    for (k, r) in out.iter_mut().enumerate() {
        r.id = k;
    }
    out
}
