use serde::Serialize;

use super::records::{SectorRole, Side};
use super::report::{ConfigurationReport, RegionKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremVerdict {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: Option<f64>,
    pub detail: String,
}

impl TheoremVerdict {
    fn new(name: &str, pass: bool, measured: f64, bound: Option<f64>, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            measured,
            bound,
            detail,
        }
    }
}

/// Relative slack on the transit-time budget of a center basin.
pub const BUDGET_SLACK: f64 = 1e-3;

/// Checks of the separatrix configuration of one region.
pub fn verify_theorems(report: &ConfigurationReport) -> Vec<TheoremVerdict> {
    let recs = &report.records;
    let total = recs.len() as f64;
    let count = |side: Side| recs.iter().filter(|r| r.side == side).count() as f64;
    match report.region_kind {
        RegionKind::CenterBasin => {
            let period = report.equilibrium.period.unwrap_or(f64::NAN);
            let sum: f64 = recs.iter().filter_map(|r| r.transit_time).sum();
            let doubles = count(Side::Double);
            vec![
                TheoremVerdict::new(
                    "center.double_sided",
                    doubles == total,
                    doubles,
                    Some(total),
                    format!("{doubles} of {total} boundary orbits blow up in both directions"),
                ),
                TheoremVerdict::new(
                    "center.transit_budget",
                    sum <= period * (1.0 + BUDGET_SLACK),
                    sum,
                    Some(period),
                    format!("sum of transit times {sum} against period {period}"),
                ),
            ]
        }
        RegionKind::NodeFocusBasin => {
            let stable = report.equilibrium.class.is_stable();
            let want = if stable { Side::Positive } else { Side::Negative };
            let hits = count(want);
            let one_way = recs
                .iter()
                .filter(|r| r.blow_up_times.0.is_some() != r.blow_up_times.1.is_some())
                .count() as f64;
            vec![
                TheoremVerdict::new(
                    "node.separatrix_sides",
                    hits == total,
                    hits,
                    Some(total),
                    format!(
                        "{hits} of {total} boundary orbits are {} separatrices ({} equilibrium)",
                        want.name(),
                        if stable { "stable" } else { "unstable" }
                    ),
                ),
                TheoremVerdict::new(
                    "node.blow_up_one_direction_only",
                    true,
                    one_way,
                    Some(total),
                    format!("{one_way} of {total} boundary orbits blow up in exactly one direction"),
                ),
            ]
        }
        RegionKind::EllipticSector => {
            let role = |r: SectorRole| recs.iter().find(|x| x.role == Some(r)).map(|x| x.side);
            let g1 = role(SectorRole::Gamma1);
            let g2 = role(SectorRole::Gamma2);
            let others: Vec<_> = recs.iter().filter(|r| r.role.is_none()).collect();
            let odd = others.iter().filter(|r| r.side != Side::Double).count() as f64;
            let show = |s: Option<Side>| s.map_or("missing", Side::name);
            vec![
                TheoremVerdict::new(
                    "sector.gamma1_positive",
                    g1 == Some(Side::Positive),
                    f64::from(u8::from(g1 == Some(Side::Positive))),
                    Some(1.0),
                    format!("outgoing boundary orbit is {}", show(g1)),
                ),
                TheoremVerdict::new(
                    "sector.gamma2_negative",
                    g2 == Some(Side::Negative),
                    f64::from(u8::from(g2 == Some(Side::Negative))),
                    Some(1.0),
                    format!("incoming boundary orbit is {}", show(g2)),
                ),
                TheoremVerdict::new(
                    "sector.others_double",
                    odd == 0.0,
                    odd,
                    Some(0.0),
                    format!("{odd} of {} further boundary orbits are not double-sided", others.len()),
                ),
            ]
        }
    }
}
