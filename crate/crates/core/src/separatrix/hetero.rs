use serde::Serialize;

use crate::integrator::{FateKind, Flow, UndeterminedReason};

use super::boundary::{avoid_disks, quiet, scan, BoundaryOptions};
use super::grid::{point_fate, CellFate, FateGrid, Membership};
use super::records::{Side, SeparatrixRecord};

/// Measured outcomes on the boundary of the region of orbits connecting two
/// equilibria. Nothing here is asserted as a theorem.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroclinicReport {
    pub pair: (usize, usize),
    pub cells: usize,
    pub records: Vec<SeparatrixRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub positive: usize,
    pub negative: usize,
    pub double: usize,
    pub none: usize,
    pub undetermined: usize,
}

impl HeteroclinicReport {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn outcomes(&self) -> OutcomeCounts {
        let c = |s: Side| self.records.iter().filter(|r| r.side == s).count();
        OutcomeCounts {
            positive: c(Side::Positive),
            negative: c(Side::Negative),
            double: c(Side::Double),
            none: c(Side::None),
            undetermined: c(Side::Undetermined),
        }
    }
}

fn unresolved(k: &FateKind) -> bool {
    matches!(k, FateKind::Undetermined(r) if *r != UndeterminedReason::UnboundedSlow)
}

fn membership(f: &CellFate, a: usize, b: usize) -> Membership {
    if f.equilibrium.is_some() {
        return Membership::Unknown;
    }
    let (fw, bw) = (f.forward.converges_to(), f.backward.converges_to());
    if (bw == Some(a) && fw == Some(b)) || (bw == Some(b) && fw == Some(a)) {
        Membership::In
    } else if unresolved(&f.forward) || unresolved(&f.backward) {
        Membership::Unknown
    } else {
        Membership::Out
    }
}

/// Boundary orbits of the heteroclinic region between `a` and `b`, traced
/// with blow-up detection in both directions.
pub fn heteroclinic_region_probe(
    flow: &Flow,
    fates: &FateGrid,
    a: usize,
    b: usize,
    opts: &BoundaryOptions,
) -> HeteroclinicReport {
    let cells: Vec<Membership> = fates.cells.iter().map(|f| membership(f, a, b)).collect();
    let count = cells.iter().filter(|m| **m == Membership::In).count();
    if a == b || count == 0 {
        return HeteroclinicReport {
            pair: (a, b),
            cells: 0,
            records: Vec::new(),
        };
    }
    let q = quiet(flow);
    let member = move |z| membership(&point_fate(&q, z), a, b);
    let avoid = avoid_disks(flow, &fates.window, fates.nx, fates.ny);
    let mut records = scan(
        flow,
        &fates.window,
        fates.nx,
        fates.ny,
        &cells,
        &member,
        &avoid,
        Vec::new(),
        opts,
    )
    .records;
    for (k, r) in records.iter_mut().enumerate() {
        r.id = k;
    }
    HeteroclinicReport {
        pair: (a, b),
        cells: count,
        records,
    }
}
