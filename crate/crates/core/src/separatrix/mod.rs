//! Basins, elliptic sectors and their boundary orbits: grid classification,
//! boundary tracing, separatrix classes, path components and checks of the
//! separatrix-configuration theorems.

mod boundary;
mod components;
mod grid;
mod hetero;
mod records;
mod report;
mod sector;
mod verify;

use thiserror::Error;

use crate::equilibria::EquilibriaError;
use crate::integrator::IntegratorError;

pub use boundary::{extract_boundary, trace_and_classify, BoundaryOptions, BoundaryScan};
pub use components::{assemble_components, ComponentType, PathComponent};
pub use grid::{
    compute_basin, label_for, point_fate, BasinGrid, CellCounts, CellFate, CellLabel, FateGrid,
    Membership,
};
pub use hetero::{heteroclinic_region_probe, HeteroclinicReport, OutcomeCounts};
pub use records::{classify_record, dedupe_records, Side, SectorRole, SeparatrixRecord};
pub use report::{
    analyze_configuration, analyze_region, region_kinds, ConfigurationReport, RegionKind,
    RegionSpec, SeparatrixSummary,
};
pub use sector::{sector_pair, SectorPair};
pub use verify::{verify_theorems, TheoremVerdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeparatrixError {
    #[error("no transition between region and non-region cells in the window")]
    EmptyBoundary,
    #[error("no homoclinic seed found next to the direction {direction} of sector {sector}")]
    SectorSeedFailure { sector: usize, direction: f64 },
    #[error("{orbits} orbits attach to equilibrium {equilibrium} within one component")]
    MalformedComponent { equilibrium: usize, orbits: usize },
    #[error("equilibrium {0} is not a multiple equilibrium")]
    NotMultiple(usize),
    #[error("equilibrium {0} lies outside the window")]
    OutsideWindow(usize),
    #[error("grid resolution must be at least 2 in each direction")]
    Resolution,
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Equilibria(#[from] EquilibriaError),
}
