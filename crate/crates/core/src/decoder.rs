//! Greedy nearest-partner decoding of a measured syndrome.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{modulo, PauliOperator};
use crate::code::{HoleSet, Syndrome};
use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, SiteKind};

/// Where a visible excitation was sent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Partner {
    /// Fused with the anyon at this site.
    Anyon(usize),
    /// Absorbed by this hole.
    Hole(usize),
    /// A violated link check undone by a single-spin operator on this edge.
    Spin(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub kind: SiteKind,
    /// Site of the anyon, or edge of the link check.
    pub site: usize,
    pub value: u32,
    pub partner: Partner,
    pub distance: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub operator: PauliOperator,
    pub assignments: Vec<Assignment>,
}

/// (distance, class, anyon, target, target is a hole); class 0 is an exact
/// canceller, 1 a hole, 2 a fallback fusion.
type Candidate = (usize, u8, usize, usize, bool);

fn consider(best: &mut Option<Candidate>, cand: Candidate) {
    if best.map_or(true, |b| (cand.0, cand.1, cand.2, cand.3) < (b.0, b.1, b.2, b.3)) {
        *best = Some(cand);
    }
}

/// Decode a syndrome. Violated link checks are undone first by a power of
/// the single-spin operator on the link, which moves the excitation onto the
/// neighbouring closed sites. Then, repeatedly, the pair (anyon, target) with
/// the smallest key (distance, canceller before hole, anyon site, target
/// site) is joined by a string, where a target is another anyon whose value
/// cancels exactly or any hole of the same kind. If neither exists the anyon
/// is fused into its nearest anyon. Strings avoid links of the other kind.
pub fn decode_greedy(
    syndrome: &Syndrome,
    holes: &HoleSet,
    links: &BTreeMap<usize, SiteKind>,
    geom: &LatticeGeometry,
) -> Result<Correction> {
    let d = geom.d();
    let n = geom.num_edges();
    let mut operator = PauliOperator::identity(n, d)?;
    let mut assignments = Vec::new();
    let mut values = [syndrome.charges.clone(), syndrome.fluxes.clone()];
    let index = |k: SiteKind| match k {
        SiteKind::Vertex => 0,
        SiteKind::Plaquette => 1,
    };

    for (&e, &g) in &syndrome.link_checks {
        if g == 0 {
            continue;
        }
        let kind = *links
            .get(&e)
            .ok_or_else(|| Error::InconsistentSyndrome(format!("edge {e} is not a frozen link")))?;
        let g = g as i64;
        let fix = match kind {
            SiteKind::Vertex => PauliOperator::x_on(n, d, e, -g)?,
            SiteKind::Plaquette => PauliOperator::z_on(n, d, e, g)?,
        };
        let other = kind.other();
        for s in geom.edge_sites(other, e) {
            if let Some(v) = values[index(other)].get_mut(&s) {
                let c = fix.commutation_on(&geom.stabilizer(other, s)?, &[e]);
                *v = modulo(*v as i64 - c as i64, d);
            }
        }
        operator.mul_assign_unchecked(&fix);
        assignments.push(Assignment { kind, site: e, value: g as u32, partner: Partner::Spin(e), distance: 0 });
    }

    for kind in [SiteKind::Vertex, SiteKind::Plaquette] {
        let blocked: Vec<usize> = links.iter().filter(|(_, &k)| k != kind).map(|(&e, _)| e).collect();
        let is_blocked = |e: usize| blocked.contains(&e);
        let vals = &mut values[index(kind)];
        let sites: Vec<usize> = vals.iter().filter(|(_, &v)| v != 0).map(|(&s, _)| s).collect();
        let dist: BTreeMap<usize, Vec<Option<usize>>> =
            sites.iter().map(|&s| (s, geom.distances_from(kind, s, &is_blocked))).collect();
        let hole_sites = holes.of(kind);
        loop {
            let live: Vec<(usize, u32)> = sites.iter().map(|&s| (s, vals[&s])).filter(|&(_, v)| v != 0).collect();
            if live.is_empty() {
                break;
            }
            let mut best: Option<Candidate> = None;
            for &(a, g) in &live {
                let da = &dist[&a];
                for &(b, h) in &live {
                    if b != a && (g + h) % d == 0 {
                        if let Some(x) = da[b] {
                            consider(&mut best, (x, 0, a, b, false));
                        }
                    }
                }
                for &h in hole_sites {
                    if let Some(x) = da[h] {
                        consider(&mut best, (x, 1, a, h, true));
                    }
                }
            }
            if best.is_none() {
                for &(a, _) in &live {
                    for &(b, _) in &live {
                        if b != a {
                            if let Some(x) = dist[&a][b] {
                                consider(&mut best, (x, 2, a, b, false));
                            }
                        }
                    }
                }
            }
            let (distance, _, a, target, to_hole) = best.ok_or_else(|| {
                Error::InconsistentSyndrome(format!(
                    "{} {kind} excitations with nonzero total and no hole to absorb them",
                    live.len()
                ))
            })?;
            let g = vals[&a];
            let path = geom
                .shortest_path(kind, a, target, &is_blocked)
                .ok_or_else(|| Error::DisconnectedPath(format!("{kind} {a} to {target}")))?;
            let (string, _) = geom.string_along_edges(kind, a, &path, g as i64)?;
            operator.mul_assign_unchecked(&string);
            vals.insert(a, 0);
            let partner = if to_hole {
                Partner::Hole(target)
            } else {
                let v = vals.get_mut(&target).expect("target anyon is tracked");
                *v = (*v + g) % d;
                Partner::Anyon(target)
            };
            assignments.push(Assignment { kind, site: a, value: g, partner, distance });
        }
    }
    Ok(Correction { operator, assignments })
}
