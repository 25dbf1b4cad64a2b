use std::f64::consts::PI;

use num_complex::Complex64;

use crate::equilibria::{Equilibrium, EquilibriumClass};
use crate::integrator::Flow;

use super::boundary::quiet;
use super::grid::point_fate;
use super::records::{classify_record, SectorRole, SeparatrixRecord};
use super::SeparatrixError;

/// The two orbits attached to a multiple equilibrium that bound one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorPair {
    pub sector: usize,
    pub out_direction: f64,
    pub in_direction: f64,
    pub gamma1: SeparatrixRecord,
    pub gamma2: SeparatrixRecord,
}

/// Locate `Γ₁` (leaving `eq` along the sector's outgoing direction) and `Γ₂`
/// (entering along the incoming one) for sector `sector`.
///
/// On a small circle around `eq`, the angle offset from the direction ray is
/// bisected between a point homoclinic in the sector and one that is not;
/// the orbit through the non-homoclinic end is traced.
pub fn sector_pair(
    flow: &Flow,
    eq: &Equilibrium,
    sector: usize,
) -> Result<SectorPair, SeparatrixError> {
    if eq.class != EquilibriumClass::Multiple {
        return Err(SeparatrixError::NotMultiple(eq.id));
    }
    let dirs = eq.sector_directions.as_ref().expect("multiple equilibria carry directions");
    let n = dirs.len();
    let lo = dirs[sector % n];
    let hi = if sector + 1 < n {
        dirs[sector + 1]
    } else {
        dirs[0] + 2.0 * PI
    };
    let (out_dir, out_sign, in_dir, in_sign) = if eq.is_outgoing(lo) {
        (lo, 1.0, hi, -1.0)
    } else {
        (hi, -1.0, lo, 1.0)
    };
    let q = quiet(flow);
    let r0 = 0.5
        * flow
            .multiple_capture_radius(eq.id)
            .expect("multiple equilibria have a local model");
    let gap = PI / f64::from(eq.order - 1);
    let homoclinic = |z: Complex64| {
        let f = point_fate(&q, z);
        f.sector == Some(sector)
    };

    let find = |theta: f64, sign: f64, role: SectorRole| {
        let mut rho = r0;
        for _ in 0..10 {
            let at = |phi: f64| eq.location + Complex64::from_polar(rho, theta + sign * phi);
            let (mut f_phi, mut t_phi) = (-0.25 * gap, 0.5 * gap);
            if !homoclinic(at(t_phi)) || homoclinic(at(f_phi)) {
                rho *= 0.5;
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (f_phi + t_phi);
                if mid == f_phi || mid == t_phi || at(mid) == at(f_phi) || at(mid) == at(t_phi) {
                    break;
                }
                if homoclinic(at(mid)) {
                    t_phi = mid;
                } else {
                    f_phi = mid;
                }
            }
            let seed = at(f_phi);
            let orbit = flow.orbit(seed)?;
            let mut rec = classify_record(0, seed, orbit);
            rec.role = Some(role);
            return Ok(rec);
        }
        Err(SeparatrixError::SectorSeedFailure {
            sector,
            direction: theta,
        })
    };
    let gamma1 = find(out_dir, out_sign, SectorRole::Gamma1)?;
    let mut gamma2 = find(in_dir, in_sign, SectorRole::Gamma2)?;
    gamma2.id = 1;
    Ok(SectorPair {
        sector,
        out_direction: crate::geometry::wrap_angle(out_dir),
        in_direction: crate::geometry::wrap_angle(in_dir),
        gamma1,
        gamma2,
    })
}
