use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibria::{Equilibrium, EquilibriumClass};
use crate::geometry::{angle_diff, Rect};
use crate::integrator::{Direction, Fate, FateKind, Flow, IntegratorError, UndeterminedReason};

use super::SeparatrixError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CellLabel {
    InBasin(usize),
    InSector(usize, usize),
    Outside,
    Equilibrium,
    Unresolved,
}

/// Whether a point belongs to a region under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    In,
    Out,
    Unknown,
}

/// Both fates of the orbit through a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellFate {
    pub forward: FateKind,
    pub backward: FateKind,
    /// Sector index at a multiple equilibrium, for homoclinic orbits.
    pub sector: Option<usize>,
    /// Set when the point lies on an equilibrium.
    pub equilibrium: Option<usize>,
}

impl CellFate {
    pub fn fate(&self, dir: Direction) -> FateKind {
        match dir {
            Direction::Forward => self.forward,
            Direction::Backward => self.backward,
        }
    }
}

fn definite(kind: &FateKind) -> bool {
    match kind {
        FateKind::Undetermined(r) => *r == UndeterminedReason::UnboundedSlow,
        FateKind::PeriodicAround { equilibrium, .. } => equilibrium.is_some(),
        _ => true,
    }
}

/// Sector index of a homoclinic orbit at the multiple equilibrium `eq`.
///
/// The orbit's departure and arrival directions are matched to the sorted
/// definite directions, and the orientation of the loop closed through the
/// equilibrium selects which of the two adjacent sectors it encloses.
pub fn homoclinic_sector(eq: &Equilibrium, z0: Complex64, fwd: &Fate, bwd: &Fate) -> Option<usize> {
    let dirs = eq.sector_directions.as_ref()?;
    let (tf, tb) = match (fwd.kind, bwd.kind) {
        (
            FateKind::ConvergesTo {
                equilibrium: e1,
                approach_angle: Some(tf),
            },
            FateKind::ConvergesTo {
                equilibrium: e2,
                approach_angle: Some(tb),
            },
        ) if e1 == eq.id && e2 == eq.id => (tf, tb),
        _ => return None,
    };
    let nearest = |theta: f64| {
        dirs.iter()
            .enumerate()
            .min_by(|a, b| {
                angle_diff(*a.1, theta)
                    .abs()
                    .total_cmp(&angle_diff(*b.1, theta).abs())
            })
            .map(|(k, _)| k)
    };
    let o = nearest(tb)?;
    let i = nearest(tf)?;
    if !eq.is_outgoing(dirs[o]) || eq.is_outgoing(dirs[i]) {
        return None;
    }
    let n = dirs.len();
    let a = eq.location;
    let cross = |p: Complex64, q: Complex64| p.re * q.im - p.im * q.re;
    let zf = fwd.diagnostics.final_z;
    let zb = bwd.diagnostics.final_z;
    let area = fwd.diagnostics.area_sum + cross(zf - z0, a - z0) + cross(a - z0, zb - z0)
        - bwd.diagnostics.area_sum;
    if area > 0.0 {
        (i == (o + 1) % n).then_some(o)
    } else if area < 0.0 {
        (o == (i + 1) % n).then_some(i)
    } else {
        None
    }
}

/// Fates of the orbit through `z` in both directions.
pub fn point_fate(flow: &Flow, z: Complex64) -> CellFate {
    let fwd = match flow.integrate(z, Direction::Forward) {
        Ok(h) => h.fate,
        Err(IntegratorError::StartAtEquilibrium { equilibrium }) => {
            return CellFate {
                forward: FateKind::ConvergesTo {
                    equilibrium,
                    approach_angle: None,
                },
                backward: FateKind::ConvergesTo {
                    equilibrium,
                    approach_angle: None,
                },
                sector: None,
                equilibrium: Some(equilibrium),
            }
        }
        Err(_) => unreachable!("integrate only rejects starts on equilibria"),
    };
    // a closed orbit has the same fate backward
    let bwd = if matches!(fwd.kind, FateKind::PeriodicAround { .. }) {
        fwd
    } else {
        match flow.integrate(z, Direction::Backward) {
            Ok(h) => h.fate,
            Err(_) => unreachable!("start was accepted forward"),
        }
    };
    let sector = match (fwd.kind.converges_to(), bwd.kind.converges_to()) {
        (Some(a), Some(b)) if a == b => flow
            .equilibria()
            .iter()
            .find(|e| e.id == a && e.class == EquilibriumClass::Multiple)
            .and_then(|e| homoclinic_sector(e, z, &fwd, &bwd)),
        _ => None,
    };
    CellFate {
        forward: fwd.kind,
        backward: bwd.kind,
        sector,
        equilibrium: None,
    }
}

/// Region label of a point with respect to equilibrium `eq`.
pub fn label_for(eq: &Equilibrium, fate: &CellFate) -> CellLabel {
    if fate.equilibrium.is_some() {
        return CellLabel::Equilibrium;
    }
    let id = eq.id;
    let one_sided = |kind: &FateKind, hit: bool| {
        if hit {
            CellLabel::InBasin(id)
        } else if definite(kind) {
            CellLabel::Outside
        } else {
            CellLabel::Unresolved
        }
    };
    match eq.class {
        EquilibriumClass::Center => match fate.forward {
            FateKind::PeriodicAround {
                equilibrium: Some(a),
                ..
            } if a == id => CellLabel::InBasin(id),
            ref k => one_sided(k, false),
        },
        c if c.is_stable() => one_sided(&fate.forward, fate.forward.converges_to() == Some(id)),
        EquilibriumClass::Multiple => {
            let f_hit = fate.forward.converges_to() == Some(id);
            let b_hit = fate.backward.converges_to() == Some(id);
            if f_hit && b_hit {
                match fate.sector {
                    Some(j) => CellLabel::InSector(id, j),
                    None => CellLabel::Unresolved,
                }
            } else if (!f_hit && definite(&fate.forward)) || (!b_hit && definite(&fate.backward)) {
                CellLabel::Outside
            } else {
                CellLabel::Unresolved
            }
        }
        _ => one_sided(&fate.backward, fate.backward.converges_to() == Some(id)),
    }
}

/// Fates at the cell centers of a regular grid over a window.
#[derive(Debug, Clone)]
pub struct FateGrid {
    pub window: Rect,
    pub nx: usize,
    pub ny: usize,
    /// Row-major from the lower-left cell.
    pub cells: Vec<CellFate>,
}

impl FateGrid {
    pub fn compute(
        flow: &Flow,
        window: &Rect,
        nx: usize,
        ny: usize,
    ) -> Result<Self, SeparatrixError> {
        if nx < 2 || ny < 2 {
            return Err(SeparatrixError::Resolution);
        }
        let mut controls = *flow.controls();
        controls.record = false;
        let quiet = flow.with_controls(controls);
        let cells = (0..nx * ny)
            .into_par_iter()
            .map(|k| point_fate(&quiet, cell_center(window, nx, ny, k % nx, k / nx)))
            .collect();
        Ok(Self {
            window: *window,
            nx,
            ny,
            cells,
        })
    }

    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        cell_center(&self.window, self.nx, self.ny, i, j)
    }

    pub fn cell(&self, i: usize, j: usize) -> &CellFate {
        &self.cells[j * self.nx + i]
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            self.window.width() / self.nx as f64,
            self.window.height() / self.ny as f64,
        )
    }

    /// Labels with respect to one equilibrium.
    pub fn basin(&self, eq: &Equilibrium) -> BasinGrid {
        BasinGrid {
            window: self.window,
            nx: self.nx,
            ny: self.ny,
            equilibrium: eq.id,
            labels: self.cells.iter().map(|c| label_for(eq, c)).collect(),
        }
    }
}

fn cell_center(w: &Rect, nx: usize, ny: usize, i: usize, j: usize) -> Complex64 {
    let dx = w.width() / nx as f64;
    let dy = w.height() / ny as f64;
    Complex64::new(
        w.xmin + (i as f64 + 0.5) * dx,
        w.ymin + (j as f64 + 0.5) * dy,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CellCounts {
    pub in_region: usize,
    pub outside: usize,
    pub equilibrium: usize,
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinGrid {
    pub window: Rect,
    pub nx: usize,
    pub ny: usize,
    pub equilibrium: usize,
    pub labels: Vec<CellLabel>,
}

impl BasinGrid {
    pub fn label(&self, i: usize, j: usize) -> CellLabel {
        self.labels[j * self.nx + i]
    }

    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        cell_center(&self.window, self.nx, self.ny, i, j)
    }

    pub fn counts(&self, region: CellLabel) -> CellCounts {
        let mut c = CellCounts::default();
        for l in &self.labels {
            match l {
                l if *l == region => c.in_region += 1,
                CellLabel::Equilibrium => c.equilibrium += 1,
                CellLabel::Unresolved => c.unresolved += 1,
                _ => c.outside += 1,
            }
        }
        c
    }
}

/// Fate grid labelled for the basin (or sectors) of `eq`.
pub fn compute_basin(
    flow: &Flow,
    eq: &Equilibrium,
    window: &Rect,
    resolution: (usize, usize),
) -> Result<BasinGrid, SeparatrixError> {
    if !window.contains(eq.location) {
        return Err(SeparatrixError::OutsideWindow(eq.id));
    }
    Ok(FateGrid::compute(flow, window, resolution.0, resolution.1)?.basin(eq))
}
