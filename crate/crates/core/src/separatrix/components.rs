use serde::Serialize;

use super::records::SeparatrixRecord;
use super::SeparatrixError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ComponentType {
    /// A single orbit.
    I,
    /// A single equilibrium.
    II,
    /// An equilibrium with one attached orbit.
    III,
    /// An equilibrium with two attached orbits.
    IV,
}

impl ComponentType {
    pub fn tag(self, node_basin: bool) -> &'static str {
        match (self, node_basin) {
            (Self::I, true) => "(i)/(A)",
            (Self::III, true) => "(iii)/(B)",
            (Self::IV, true) => "(iv)/(C)",
            (Self::I, false) => "(i)",
            (Self::II, _) => "(ii)",
            (Self::III, false) => "(iii)",
            (Self::IV, false) => "(iv)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathComponent {
    pub kind: ComponentType,
    pub tag: String,
    pub orbit_ids: Vec<usize>,
    pub attached_equilibria: Vec<usize>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Group boundary orbits and boundary equilibria into path components.
///
/// An orbit attaches to `b` when one of its ends converges to `b`.
/// `isolated` lists equilibria seen on the boundary regardless of attachments.
pub fn assemble_components(
    records: &[SeparatrixRecord],
    isolated: &[usize],
    node_basin: bool,
) -> Result<Vec<PathComponent>, SeparatrixError> {
    let mut eq_ids: Vec<usize> = isolated.to_vec();
    for r in records {
        for b in r.attachments() {
            if !eq_ids.contains(&b) {
                eq_ids.push(b);
            }
        }
    }
    eq_ids.sort_unstable();
    let n = records.len();
    let mut parent: Vec<usize> = (0..n + eq_ids.len()).collect();
    let eq_node = |b: usize| n + eq_ids.iter().position(|&e| e == b).unwrap_or(0);
    for (k, r) in records.iter().enumerate() {
        for b in r.attachments() {
            let (x, y) = (find(&mut parent, k), find(&mut parent, eq_node(b)));
            if x != y {
                parent[x.max(y)] = x.min(y);
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for node in 0..parent.len() {
        let root = find(&mut parent, node);
        let g = match roots.iter().position(|&r| r == root) {
            Some(g) => g,
            None => {
                roots.push(root);
                groups.push((Vec::new(), Vec::new()));
                groups.len() - 1
            }
        };
        if node < n {
            groups[g].0.push(records[node].id);
        } else {
            groups[g].1.push(eq_ids[node - n]);
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for (orbits, eqs) in groups {
        for &b in &eqs {
            let k = records
                .iter()
                .filter(|r| orbits.contains(&r.id) && r.attachments().contains(&b))
                .count();
            if k > 2 {
                return Err(SeparatrixError::MalformedComponent {
                    equilibrium: b,
                    orbits: k,
                });
            }
        }
        let kind = match (eqs.len(), orbits.len()) {
            (0, 1) => ComponentType::I,
            (1, 0) => ComponentType::II,
            (1, 1) => ComponentType::III,
            (1, 2) => ComponentType::IV,
            (e, o) => {
                // a chain through several equilibria, or several orbits at one
                return Err(SeparatrixError::MalformedComponent {
                    equilibrium: eqs.first().copied().unwrap_or(usize::MAX),
                    orbits: o.max(e),
                });
            }
        };
        out.push(PathComponent {
            kind,
            tag: kind.tag(node_basin).to_string(),
            orbit_ids: orbits,
            attached_equilibria: eqs,
        });
    }
    Ok(out)
}
