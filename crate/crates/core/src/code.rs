//! Engine-backed code states: enforced stabilizers, holes, frozen links and
//! syndrome extraction.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{modulo, PauliOperator};
use crate::engine::{Engine, OutcomeSelector};
use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, SiteKind};

/// Sites whose stabilizer is not enforced.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoleSet {
    pub vertices: BTreeSet<usize>,
    pub plaquettes: BTreeSet<usize>,
}

impl HoleSet {
    pub fn of(&self, kind: SiteKind) -> &BTreeSet<usize> {
        match kind {
            SiteKind::Vertex => &self.vertices,
            SiteKind::Plaquette => &self.plaquettes,
        }
    }

    fn of_mut(&mut self, kind: SiteKind) -> &mut BTreeSet<usize> {
        match kind {
            SiteKind::Vertex => &mut self.vertices,
            SiteKind::Plaquette => &mut self.plaquettes,
        }
    }

    pub fn contains(&self, kind: SiteKind, site: usize) -> bool {
        self.of(kind).contains(&site)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.plaquettes.is_empty()
    }
}

/// Measured check values. Charges and fluxes cover closed sites only;
/// `link_checks` covers edges frozen between neighbouring holes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Syndrome {
    pub charges: BTreeMap<usize, u32>,
    pub fluxes: BTreeMap<usize, u32>,
    pub link_checks: BTreeMap<usize, u32>,
}

impl Syndrome {
    pub fn values(&self, kind: SiteKind) -> &BTreeMap<usize, u32> {
        match kind {
            SiteKind::Vertex => &self.charges,
            SiteKind::Plaquette => &self.fluxes,
        }
    }

    pub fn values_mut(&mut self, kind: SiteKind) -> &mut BTreeMap<usize, u32> {
        match kind {
            SiteKind::Vertex => &mut self.charges,
            SiteKind::Plaquette => &mut self.fluxes,
        }
    }

    /// Sites of `kind` carrying a nonzero value.
    pub fn anyons(&self, kind: SiteKind) -> Vec<(usize, u32)> {
        self.values(kind).iter().filter(|(_, &v)| v != 0).map(|(&s, &v)| (s, v)).collect()
    }

    pub fn is_clean(&self) -> bool {
        self.charges.values().chain(self.fluxes.values()).chain(self.link_checks.values()).all(|&v| v == 0)
    }

    /// Sum of the visible values of one kind, modulo `d`.
    pub fn total(&self, kind: SiteKind, d: u32) -> u32 {
        modulo(self.values(kind).values().map(|&v| v as i64).sum(), d)
    }
}

/// Identifies one enforced check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckId {
    Site(SiteKind, usize),
    Link(usize),
}

/// Serializable lattice summary for experiment configs and logs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDescription {
    pub lx: usize,
    pub ly: usize,
    pub d: u32,
    pub holes: HoleSet,
}

#[derive(Clone, Debug)]
pub struct CodeState<E> {
    geom: Arc<LatticeGeometry>,
    holes: HoleSet,
    /// Frozen edges and the kind of holes they join. Links between vertex
    /// holes enforce `Z_e`, links between plaquette holes enforce `X_e`.
    links: BTreeMap<usize, SiteKind>,
    engine: E,
}

impl<E: Engine> CodeState<E> {
    /// The anyonic vacuum with every closed non-contractible charge loop at
    /// eigenvalue 1. Built from `|0…0⟩` by measuring every vertex stabilizer
    /// and carrying the resulting charges to vertex 0, where they cancel.
    pub fn ground_state(geom: Arc<LatticeGeometry>, selector: &mut dyn OutcomeSelector) -> Result<Self> {
        let engine = E::zero_state(geom.num_edges(), geom.d())?;
        let mut state = Self { geom, holes: HoleSet::default(), links: BTreeMap::new(), engine };
        let n = state.geom.num_sites(SiteKind::Vertex);
        let mut charges = Vec::with_capacity(n);
        for v in 0..n {
            let a = state.geom.vertex_stabilizer(v)?;
            charges.push(state.engine.measure_pauli(&a, selector)?.exponent);
        }
        for (v, &c) in charges.iter().enumerate().skip(1) {
            if c != 0 {
                let op = state.transport(SiteKind::Vertex, v, 0, c as i64, &|_| false)?;
                state.engine.apply_pauli(&op)?;
            }
        }
        Ok(state)
    }

    /// Wrap an engine state prepared elsewhere.
    pub fn from_parts(geom: Arc<LatticeGeometry>, holes: HoleSet, engine: E) -> Result<Self> {
        if engine.num_sites() != geom.num_edges() || engine.dim() != geom.d() {
            return Err(Error::DimensionMismatch("engine does not match lattice".into()));
        }
        Ok(Self { geom, holes, links: BTreeMap::new(), engine })
    }

    pub fn geometry(&self) -> &Arc<LatticeGeometry> {
        &self.geom
    }

    pub fn holes(&self) -> &HoleSet {
        &self.holes
    }

    pub fn links(&self) -> &BTreeMap<usize, SiteKind> {
        &self.links
    }

    pub fn engine(&self) -> &E {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut E {
        &mut self.engine
    }

    pub fn into_engine(self) -> E {
        self.engine
    }

    pub fn d(&self) -> u32 {
        self.geom.d()
    }

    pub fn describe(&self) -> LatticeDescription {
        LatticeDescription { lx: self.geom.lx(), ly: self.geom.ly(), d: self.geom.d(), holes: self.holes.clone() }
    }

    pub fn apply_pauli(&mut self, p: &PauliOperator) -> Result<()> {
        self.engine.apply_pauli(p)
    }

    pub fn link_check(&self, edge: usize) -> Result<PauliOperator> {
        let n = self.geom.num_edges();
        match self.links.get(&edge) {
            Some(SiteKind::Vertex) => PauliOperator::z_on(n, self.d(), edge, 1),
            Some(SiteKind::Plaquette) => PauliOperator::x_on(n, self.d(), edge, 1),
            None => Err(Error::Hole(format!("edge {edge} is not a frozen link"))),
        }
    }

    /// Every enforced check with its operator, in a fixed order.
    pub fn enforced_checks(&self) -> Result<Vec<(CheckId, PauliOperator)>> {
        let mut out = Vec::new();
        for kind in [SiteKind::Vertex, SiteKind::Plaquette] {
            for s in 0..self.geom.num_sites(kind) {
                if !self.holes.contains(kind, s) {
                    out.push((CheckId::Site(kind, s), self.geom.stabilizer(kind, s)?));
                }
            }
        }
        for &e in self.links.keys() {
            out.push((CheckId::Link(e), self.link_check(e)?));
        }
        Ok(out)
    }

    /// Operator carrying `g` from `from` to `to` along a shortest path that
    /// avoids `blocked` edges.
    pub fn transport(
        &self,
        kind: SiteKind,
        from: usize,
        to: usize,
        g: i64,
        blocked: &dyn Fn(usize) -> bool,
    ) -> Result<PauliOperator> {
        let edges = self
            .geom
            .shortest_path(kind, from, to, blocked)
            .ok_or_else(|| Error::DisconnectedPath(format!("no path from {kind} {from} to {to}")))?;
        Ok(self.geom.string_along_edges(kind, from, &edges, g)?.0)
    }

    /// Edges that strings of `kind` must not cross: frozen links of the other
    /// kind, whose checks they would violate.
    pub fn blocked_edges(&self, kind: SiteKind) -> BTreeSet<usize> {
        self.links.iter().filter(|(_, &k)| k != kind).map(|(&e, _)| e).collect()
    }

    pub fn open_hole(&mut self, kind: SiteKind, site: usize) -> Result<()> {
        self.geom.check_site(site)?;
        if !self.holes.of_mut(kind).insert(site) {
            return Err(Error::Hole(format!("{kind} {site} is already open")));
        }
        Ok(())
    }

    /// Re-enforce the stabilizer at `site`. Frozen links touching it are
    /// released first. Returns the anyon value left in the hole.
    pub fn close_hole(&mut self, kind: SiteKind, site: usize, selector: &mut dyn OutcomeSelector) -> Result<u32> {
        if !self.holes.contains(kind, site) {
            return Err(Error::Hole(format!("{kind} {site} is not open")));
        }
        for e in self.geom.site_edges(kind, site) {
            if self.links.get(&e) == Some(&kind) {
                self.links.remove(&e);
            }
        }
        self.holes.of_mut(kind).remove(&site);
        let stab = self.geom.stabilizer(kind, site)?;
        Ok(self.engine.measure_pauli(&stab, selector)?.exponent)
    }

    pub fn measure(&mut self, op: &PauliOperator, selector: &mut dyn OutcomeSelector) -> Result<u32> {
        Ok(self.engine.measure_pauli(op, selector)?.exponent)
    }

    /// Measure every enforced check.
    pub fn extract_syndrome(&mut self, selector: &mut dyn OutcomeSelector) -> Result<Syndrome> {
        let checks = self.enforced_checks()?;
        self.measure_checks(&checks, selector)
    }

    /// Measure a precomputed list of checks, e.g. a cached copy of
    /// `enforced_checks`.
    pub fn measure_checks(
        &mut self,
        checks: &[(CheckId, PauliOperator)],
        selector: &mut dyn OutcomeSelector,
    ) -> Result<Syndrome> {
        let mut syn = Syndrome::default();
        for &(id, ref op) in checks {
            let v = self.engine.measure_pauli(op, selector)?.exponent;
            match id {
                CheckId::Site(kind, s) => {
                    syn.values_mut(kind).insert(s, v);
                }
                CheckId::Link(e) => {
                    syn.link_checks.insert(e, v);
                }
            }
        }
        Ok(syn)
    }

    /// Lowest-id edge joining two sites of `kind`.
    pub fn shared_edge(&self, kind: SiteKind, a: usize, b: usize) -> Result<usize> {
        self.geom
            .site_edges(kind, a)
            .into_iter()
            .filter(|&e| self.geom.across(kind, a, e) == Some(b))
            .min()
            .ok_or_else(|| Error::Hole(format!("{kind}s {a} and {b} are not adjacent")))
    }

    /// Enlarge hole `from` onto the neighbouring site `to`: open `to`, measure
    /// the shared spin (`Z` for vertex holes, `X` for plaquette holes) and
    /// rotate it back to the trivial value with a power of the stabilizer of
    /// `to`, which creates no anyons. The shared spin then stays frozen.
    /// Returns the measured value.
    pub fn split_hole(
        &mut self,
        kind: SiteKind,
        from: usize,
        to: usize,
        selector: &mut dyn OutcomeSelector,
    ) -> Result<u32> {
        if !self.holes.contains(kind, from) {
            return Err(Error::Hole(format!("{kind} {from} is not open")));
        }
        if self.holes.contains(kind, to) {
            return Err(Error::Hole(format!("{kind} {to} is already occupied")));
        }
        let e = self.shared_edge(kind, from, to)?;
        if self.geom.site_edges(kind, to).iter().any(|x| self.links.contains_key(x)) {
            return Err(Error::Hole(format!("{kind} {to} already borders a frozen link")));
        }
        self.open_hole(kind, to)?;
        self.links.insert(e, kind);
        let check = self.link_check(e)?;
        let g = self.measure(&check, selector)? as i64;
        if g != 0 {
            let s = self.geom.stabilizer_power(kind, to, e);
            // Stabilizer of `to` shifts the link check by -s·t (vertex: X on
            // a Z check) or +s·t (plaquette: Z on an X check).
            let t = match kind {
                SiteKind::Vertex => -g * s,
                SiteKind::Plaquette => g * s,
            };
            let fix = self.geom.stabilizer(kind, to)?.power(t);
            self.engine.apply_pauli(&fix)?;
        }
        debug_assert_eq!(self.engine.deterministic_value(&check)?, Some(0));
        Ok(g as u32)
    }

    /// Move a hole one step by code deformation: split onto `to`, release the
    /// link, close `from` and carry whatever it absorbed across into `to`.
    pub fn move_hole(&mut self, kind: SiteKind, from: usize, to: usize, selector: &mut dyn OutcomeSelector) -> Result<()> {
        if self.geom.site_edges(kind, from).iter().any(|e| self.links.contains_key(e)) {
            return Err(Error::Hole(format!("{kind} {from} is part of a row; move rows hole by hole")));
        }
        self.split_hole(kind, from, to, selector)?;
        let e = self.shared_edge(kind, from, to)?;
        let r = self.close_hole(kind, from, selector)?;
        if r != 0 {
            let (op, _) = self.geom.string_along_edges(kind, from, &[e], r as i64)?;
            self.engine.apply_pauli(&op)?;
        }
        Ok(())
    }

    /// Remove the visible anyons of a syndrome by pairing them up in site
    /// order, or sending them into a hole of the same kind when one exists.
    /// Used to restore the vacuum after closing holes; not a decoder.
    pub fn annihilate_pairs(&mut self, syn: &Syndrome) -> Result<()> {
        for kind in [SiteKind::Vertex, SiteKind::Plaquette] {
            let blocked = self.blocked_edges(kind);
            let blocked = |e: usize| blocked.contains(&e);
            let anyons = syn.anyons(kind);
            let sink = self.holes.of(kind).iter().next().copied();
            let mut carry: Option<(usize, u32)> = None;
            for (s, v) in anyons {
                match carry {
                    None => carry = Some((s, v)),
                    Some((c, cv)) => {
                        let op = self.transport(kind, c, s, cv as i64, &blocked)?;
                        self.engine.apply_pauli(&op)?;
                        let total = (cv + v) % self.d();
                        carry = (total != 0).then_some((s, total));
                    }
                }
            }
            if let Some((c, cv)) = carry {
                let sink = sink.ok_or_else(|| {
                    Error::InconsistentSyndrome(format!("{kind} values sum to {cv} with no hole to absorb them"))
                })?;
                let op = self.transport(kind, c, sink, cv as i64, &blocked)?;
                self.engine.apply_pauli(&op)?;
            }
        }
        Ok(())
    }
}

impl CodeState<crate::tableau::Tableau> {
    /// Rebuild the tableau so that its leading stabilizer rows are exactly
    /// `gens` (each with the phase it currently has on the state). Repeated
    /// measurements of these operators then cost one row product each.
    pub fn rebase(&mut self, gens: &[PauliOperator]) -> Result<()> {
        let mut phased = Vec::with_capacity(gens.len() + self.engine.n());
        for g in gens {
            let v = self
                .engine
                .deterministic_value(g)?
                .ok_or_else(|| Error::Protocol(format!("{g} is not fixed by the state")))?;
            phased.push(g.clone().times_omega(-(v as i64)));
        }
        phased.extend(self.engine.stabilizers().iter().cloned());
        self.engine = crate::tableau::Tableau::from_generators(&phased)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::StateVector;
    use crate::engine::{ForcedOutcomes, Sampler};
    use crate::tableau::Tableau;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geom(lx: usize, ly: usize, d: u32) -> Arc<LatticeGeometry> {
        Arc::new(LatticeGeometry::new(lx, ly, d).unwrap())
    }

    #[test]
    fn dense_ground_state_stabilizers_are_one() {
        let g = geom(2, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let state = CodeState::<StateVector>::ground_state(g.clone(), &mut Sampler(&mut rng)).unwrap();
        for (_, op) in state.enforced_checks().unwrap() {
            let e = state.engine().expectation(&op).unwrap();
            assert!((e - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
        for c in g.charge_cycles().unwrap() {
            let e = state.engine().expectation(&c).unwrap();
            assert!((e - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn tableau_ground_state_has_empty_syndrome() {
        let g = geom(4, 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut state = CodeState::<Tableau>::ground_state(g, &mut Sampler(&mut rng)).unwrap();
        let syn = state.extract_syndrome(&mut ForcedOutcomes::default()).unwrap();
        assert!(syn.is_clean());
        assert_eq!(syn.charges.len(), 12);
    }

    #[test]
    fn single_fault_syndromes() {
        let g = geom(3, 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = CodeState::<Tableau>::ground_state(g.clone(), &mut Sampler(&mut rng)).unwrap();
        let n = g.num_edges();
        let e = g.h_edge(1, 1);
        let mut s = base.clone();
        s.apply_pauli(&PauliOperator::z_on(n, 3, e, 1).unwrap()).unwrap();
        let syn = s.extract_syndrome(&mut ForcedOutcomes::default()).unwrap();
        // Z on the east spin (role 2) of vertex (1,1): e_1 there, e_-1 at (2,1).
        assert_eq!(syn.anyons(SiteKind::Vertex), vec![(g.vertex(1, 1), 1), (g.vertex(2, 1), 2)]);
        assert!(syn.anyons(SiteKind::Plaquette).is_empty());

        let mut s = base.clone();
        s.apply_pauli(&PauliOperator::x_on(n, 3, e, 1).unwrap()).unwrap();
        let syn = s.extract_syndrome(&mut ForcedOutcomes::default()).unwrap();
        // h(1,1) is the top (role 1) of plaquette (1,1) and bottom (role 3) of (1,0).
        assert_eq!(syn.anyons(SiteKind::Plaquette), vec![(g.plaquette(1, 0), 1), (g.plaquette(1, 1), 2)]);
        assert_eq!(syn.total(SiteKind::Plaquette, 3), 0);
    }

    #[test]
    fn holes_hide_string_endpoints() {
        let g = geom(2, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = CodeState::<StateVector>::ground_state(g.clone(), &mut Sampler(&mut rng)).unwrap();
        let (a, b) = (g.vertex(0, 0), g.vertex(1, 0));
        s.open_hole(SiteKind::Vertex, a).unwrap();
        s.open_hole(SiteKind::Vertex, b).unwrap();
        assert!(matches!(s.open_hole(SiteKind::Vertex, a), Err(Error::Hole(_))));
        let string = g.string_operator(SiteKind::Vertex, &[b, a], 1).unwrap();
        s.apply_pauli(&string).unwrap();
        assert!(s.extract_syndrome(&mut ForcedOutcomes::default()).unwrap().is_clean());
        assert_eq!(s.close_hole(SiteKind::Vertex, a, &mut ForcedOutcomes::default()).unwrap(), 1);
        assert_eq!(s.close_hole(SiteKind::Vertex, b, &mut ForcedOutcomes::default()).unwrap(), 2);
        assert!(matches!(
            s.close_hole(SiteKind::Vertex, b, &mut ForcedOutcomes::default()),
            Err(Error::Hole(_))
        ));
    }

    #[test]
    fn open_then_close_on_vacuum_absorbs_nothing() {
        let g = geom(3, 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = CodeState::<Tableau>::ground_state(g, &mut Sampler(&mut rng)).unwrap();
        for kind in [SiteKind::Vertex, SiteKind::Plaquette] {
            s.open_hole(kind, 4).unwrap();
            assert_eq!(s.close_hole(kind, 4, &mut ForcedOutcomes::default()).unwrap(), 0);
        }
    }

    #[test]
    fn split_hole_creates_no_anyons() {
        for kind in [SiteKind::Vertex, SiteKind::Plaquette] {
            let g = geom(4, 4, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let mut s = CodeState::<Tableau>::ground_state(g.clone(), &mut Sampler(&mut rng)).unwrap();
            let (a, b) = (g.site(kind, 0, 0), g.site(kind, 2, 0));
            s.open_hole(kind, a).unwrap();
            s.open_hole(kind, b).unwrap();
            let string = g.string_operator(kind, &[b, g.site(kind, 1, 0), a], 1).unwrap();
            s.apply_pauli(&string).unwrap();
            let a2 = g.site(kind, 0, 1);
            s.split_hole(kind, a, a2, &mut Sampler(&mut rng)).unwrap();
            let syn = s.extract_syndrome(&mut ForcedOutcomes::default()).unwrap();
            assert!(syn.is_clean(), "{syn:?}");
            assert_eq!(syn.link_checks.len(), 1);
            // The pair's content is now carried by the two-hole row.
            let row = g.stabilizer(kind, a).unwrap().compose(&g.stabilizer(kind, a2).unwrap()).unwrap();
            assert_eq!(s.engine().deterministic_value(&row).unwrap(), Some(1));
            assert!(matches!(
                s.split_hole(kind, a, a2, &mut Sampler(&mut rng)),
                Err(Error::Hole(_))
            ));
        }
    }

    #[test]
    fn move_hole_carries_content() {
        let g = geom(4, 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut s = CodeState::<Tableau>::ground_state(g.clone(), &mut Sampler(&mut rng)).unwrap();
        let (a, b) = (g.vertex(0, 0), g.vertex(1, 0));
        s.open_hole(SiteKind::Vertex, a).unwrap();
        s.open_hole(SiteKind::Vertex, b).unwrap();
        s.apply_pauli(&g.string_operator(SiteKind::Vertex, &[b, a], 2).unwrap()).unwrap();
        let target = g.vertex(0, 1);
        s.move_hole(SiteKind::Vertex, a, target, &mut Sampler(&mut rng)).unwrap();
        assert!(s.holes().contains(SiteKind::Vertex, target));
        assert!(!s.holes().contains(SiteKind::Vertex, a));
        assert!(s.extract_syndrome(&mut ForcedOutcomes::default()).unwrap().is_clean());
        let content = g.vertex_stabilizer(target).unwrap();
        assert_eq!(s.engine().deterministic_value(&content).unwrap(), Some(2));
    }

    #[test]
    fn rebase_keeps_the_state() {
        let g = geom(3, 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = CodeState::<Tableau>::ground_state(g.clone(), &mut Sampler(&mut rng)).unwrap();
        let ops: Vec<PauliOperator> = s.enforced_checks().unwrap().into_iter().map(|(_, op)| op).collect();
        let before = s.clone();
        s.rebase(&ops).unwrap();
        for row in before.engine().stabilizers() {
            assert_eq!(s.engine().deterministic_value(row).unwrap(), Some(0));
        }
        assert_eq!(s.engine().stabilizers()[0], ops[0]);
    }

    #[test]
    fn annihilation_restores_vacuum() {
        let g = geom(4, 4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut s = CodeState::<Tableau>::ground_state(g.clone(), &mut Sampler(&mut rng)).unwrap();
        let n = g.num_edges();
        for (e, x, z) in [(3usize, 1i64, 0i64), (9, 0, 2), (20, 2, 1)] {
            s.apply_pauli(&PauliOperator::single(n, 3, e, x, z).unwrap()).unwrap();
        }
        let syn = s.extract_syndrome(&mut ForcedOutcomes::default()).unwrap();
        assert!(!syn.is_clean());
        s.annihilate_pairs(&syn).unwrap();
        assert!(s.extract_syndrome(&mut ForcedOutcomes::default()).unwrap().is_clean());
    }
}
