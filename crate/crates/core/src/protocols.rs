//! Logical qudits stored in hole pairs, their gates, and the
//! measurement-based protocols built from them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{inverse_mod, modulo, PauliOperator};
use crate::code::CodeState;
use crate::dense::StateVector;
use crate::engine::{Engine, OutcomeSelector};
use crate::error::{Error, Result};
use crate::lattice::{Orientation, SiteKind};

/// Default attempt cap for repeat-until-success loops.
pub const DEFAULT_MAX_ATTEMPTS: u32 = 100;

/// A qudit stored as the anyonic content of two rows of holes. Row 0 starts
/// with the first primary hole, row 1 with the second; basis state `|j⟩`
/// means row 0 holds charge (or flux) `j` and row 1 holds `-j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalQudit {
    kind: SiteKind,
    d: u32,
    rows: [Vec<usize>; 2],
    /// Set after an odd number of relabellings, which swap the roles of
    /// the two rows.
    flipped: bool,
    x_rep: PauliOperator,
    z_rep: PauliOperator,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub protocol: String,
    pub attempts: u32,
    pub outcomes: Vec<u32>,
    pub corrections: Vec<PauliOperator>,
    pub success: bool,
    pub fidelity: Option<f64>,
}

impl ProtocolTranscript {
    fn new(protocol: &str) -> Self {
        Self { protocol: protocol.to_string(), ..Self::default() }
    }

    fn absorb(&mut self, other: ProtocolTranscript) {
        self.outcomes.extend(other.outcomes);
        self.corrections.extend(other.corrections);
    }
}

/// Shortest string route between two holes that crosses no enforced check it
/// would violate and does not pass through other holes.
fn route<E: Engine>(state: &CodeState<E>, kind: SiteKind, from: usize, to: usize, g: i64) -> Result<PauliOperator> {
    let geom = state.geometry().clone();
    let blocked_links = state.blocked_edges(kind);
    let holes = state.holes().of(kind).clone();
    let blocked = |e: usize| {
        blocked_links.contains(&e)
            || geom.edge_sites(kind, e).iter().any(|&s| s != from && s != to && holes.contains(&s))
    };
    state.transport(kind, from, to, g, &blocked)
}

impl LogicalQudit {
    /// Open two fresh holes, giving a qudit in `|0⟩`.
    pub fn encode<E: Engine>(state: &mut CodeState<E>, kind: SiteKind, first: usize, second: usize) -> Result<Self> {
        if first == second {
            return Err(Error::InvalidQudit("primary holes must differ".into()));
        }
        state.open_hole(kind, first)?;
        if let Err(e) = state.open_hole(kind, second) {
            state.close_hole(kind, first, &mut crate::engine::MostLikely)?;
            return Err(e);
        }
        Self::from_open_holes(state, kind, [vec![first], vec![second]])
    }

    /// Describe a qudit on rows of holes that are already open.
    pub fn from_open_holes<E: Engine>(state: &CodeState<E>, kind: SiteKind, rows: [Vec<usize>; 2]) -> Result<Self> {
        let geom = state.geometry();
        for row in &rows {
            if row.is_empty() {
                return Err(Error::InvalidQudit("empty row".into()));
            }
            for &s in row {
                if !state.holes().contains(kind, s) {
                    return Err(Error::InvalidQudit(format!("{kind} {s} is not an open hole")));
                }
            }
            for pair in row.windows(2) {
                state.shared_edge(kind, pair[0], pair[1])?;
            }
        }
        if rows[0].iter().any(|s| rows[1].contains(s)) {
            return Err(Error::InvalidQudit("rows overlap".into()));
        }
        let x_rep = route(state, kind, rows[1][0], rows[0][0], 1)?;
        let mut z_rep = PauliOperator::identity(geom.num_edges(), geom.d())?;
        for &s in &rows[0] {
            z_rep.mul_assign_unchecked(&geom.stabilizer(kind, s)?);
        }
        let q = Self { kind, d: geom.d(), rows, flipped: false, x_rep, z_rep };
        q.check_pair()?;
        Ok(q)
    }

    fn check_pair(&self) -> Result<()> {
        if self.z_rep.commutation_exponent(&self.x_rep)? != 1 {
            return Err(Error::InvalidQudit("logical Z and X do not satisfy ZX = ωXZ".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> SiteKind {
        self.kind
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Rows in the current labelling.
    pub fn rows(&self) -> [&[usize]; 2] {
        if self.flipped {
            [&self.rows[1], &self.rows[0]]
        } else {
            [&self.rows[0], &self.rows[1]]
        }
    }

    pub fn primary(&self) -> (usize, usize) {
        let [a, b] = self.rows();
        (a[0], b[0])
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().flatten().copied()
    }

    pub fn x_rep(&self) -> &PauliOperator {
        &self.x_rep
    }

    pub fn z_rep(&self) -> &PauliOperator {
        &self.z_rep
    }

    /// Replace the logical X representative, e.g. by one multiplied with
    /// stabilizers or with another qudit's logical Z.
    pub fn set_x_rep(&mut self, op: PauliOperator) -> Result<()> {
        let old = std::mem::replace(&mut self.x_rep, op);
        if let Err(e) = self.check_pair() {
            self.x_rep = old;
            return Err(e);
        }
        Ok(())
    }

    /// Swap the roles of the rows. On the stored state this is the logical
    /// map `|j⟩ → |-j⟩`, i.e. `F²`.
    pub fn relabel(&mut self) {
        self.flipped = !self.flipped;
        self.x_rep = self.x_rep.power(-1);
        self.z_rep = self.z_rep.power(-1);
    }

    pub fn is_relabelled(&self) -> bool {
        self.flipped
    }

    /// String carrying one unit from hole `j` of row 1 to hole `i` of row 0.
    /// Every such string acts as logical X.
    pub fn x_string<E: Engine>(&self, state: &CodeState<E>, i: usize, j: usize) -> Result<PauliOperator> {
        let [r0, r1] = self.rows();
        let (a, b) = (
            *r0.get(i).ok_or(Error::InvalidIndex { index: i, limit: r0.len() })?,
            *r1.get(j).ok_or(Error::InvalidIndex { index: j, limit: r1.len() })?,
        );
        route(state, self.kind, b, a, 1)
    }

    /// Extend `row` (in the current labelling) by the neighbouring site `to`.
    /// Returns the measured value of the frozen spin.
    pub fn split<E: Engine>(
        &mut self,
        state: &mut CodeState<E>,
        row: usize,
        to: usize,
        selector: &mut dyn OutcomeSelector,
    ) -> Result<u32> {
        if row > 1 {
            return Err(Error::InvalidIndex { index: row, limit: 2 });
        }
        let stored = row ^ (self.flipped as usize);
        let last = *self.rows[stored].last().expect("rows are nonempty");
        let g = state.split_hole(self.kind, last, to, selector)?;
        self.rows[stored].push(to);
        if stored == 0 {
            let extra = state.geometry().stabilizer(self.kind, to)?;
            let extra = if self.flipped { extra.power(-1) } else { extra };
            self.z_rep.mul_assign_unchecked(&extra);
        }
        Ok(g)
    }

    /// Close every hole, remove what they absorbed and reopen them, leaving
    /// `|0⟩` in the original labelling with freshly routed representatives.
    pub fn reset<E: Engine>(&mut self, state: &mut CodeState<E>, selector: &mut dyn OutcomeSelector) -> Result<()> {
        let kind = self.kind;
        let mut absorbed = Vec::new();
        for row in &self.rows {
            for &s in row.iter().rev() {
                absorbed.push((s, state.close_hole(kind, s, selector)?));
            }
        }
        let sink = self.rows[0][0];
        for (s, v) in absorbed {
            if v != 0 && s != sink {
                let op = route(state, kind, s, sink, v as i64)?;
                state.apply_pauli(&op)?;
            }
        }
        let rows = self.rows.clone();
        state.open_hole(kind, rows[0][0])?;
        state.open_hole(kind, rows[1][0])?;
        for row in &rows {
            for pair in row.windows(2) {
                state.split_hole(kind, pair[0], pair[1], selector)?;
            }
        }
        *self = Self::from_open_holes(state, kind, rows)?;
        Ok(())
    }

    /// The spin shared by the two primary holes when they are adjacent and
    /// the logical X string is the bare single-spin operator on it.
    pub fn single_spin_x<E: Engine>(&self, state: &CodeState<E>) -> Option<usize> {
        let (a, b) = self.primary();
        let natural = route(state, self.kind, b, a, 1).ok()?;
        let support = natural.support();
        let &[e] = support.as_slice() else { return None };
        let geom = state.geometry();
        let bare = match self.kind {
            SiteKind::Vertex => PauliOperator::z_on(geom.num_edges(), self.d, e, 1),
            SiteKind::Plaquette => PauliOperator::x_on(geom.num_edges(), self.d, e, 1),
        }
        .ok()?;
        (natural == bare).then_some(e)
    }
}

/// Make `q`'s logical X commute with `other`'s logical X by multiplying it
/// with a power of `other`'s logical Z.
pub fn decouple_x(q: &mut LogicalQudit, other: &LogicalQudit) -> Result<()> {
    let d = q.d;
    let c = q.x_rep.commutation_exponent(&other.x_rep)? as i64;
    if c == 0 {
        return Ok(());
    }
    let zc = other.z_rep.commutation_exponent(&other.x_rep)? as i64;
    // c(X_other, X_q Z_other^t) = -c + t·c(X_other, Z_other) = -c - t·zc
    let t = modulo(-c * inverse_mod(zc, d).expect("nonzero pairing") as i64, d) as i64;
    let op = q.x_rep.compose(&other.z_rep.power(t))?;
    q.set_x_rep(op)?;
    debug_assert!(q.x_rep.commutes_with(&other.x_rep)?);
    Ok(())
}

pub fn logical_x<E: Engine>(state: &mut CodeState<E>, q: &LogicalQudit, k: i64) -> Result<()> {
    state.apply_pauli(&q.x_rep.power(k))
}

/// Logical Z: a loop of the opposite anyon type around row 0, which equals
/// the product of the row's stabilizers.
pub fn logical_z<E: Engine>(state: &mut CodeState<E>, q: &LogicalQudit, k: i64) -> Result<()> {
    state.apply_pauli(&q.z_rep.power(k))
}

/// The braid of the row-0 charge of `v` around the row-0 flux of `p`:
/// `|a⟩|b⟩ → ω^{±ab}|a⟩|b⟩`, positive for clockwise.
pub fn braid_controlled_z<E: Engine>(
    state: &mut CodeState<E>,
    v: &LogicalQudit,
    p: &LogicalQudit,
    orientation: Orientation,
) -> Result<()> {
    if v.kind != SiteKind::Vertex || p.kind != SiteKind::Plaquette {
        return Err(Error::InvalidQudit("braiding needs a vertex qudit and a plaquette qudit".into()));
    }
    let k = match orientation {
        Orientation::Clockwise => 1,
        Orientation::Anticlockwise => -1,
    };
    state.engine_mut().apply_controlled_phase(&v.z_rep, &p.z_rep, k)
}

fn controlled_phase<E: Engine>(state: &mut CodeState<E>, a: &LogicalQudit, b: &LogicalQudit) -> Result<()> {
    match (a.kind, b.kind) {
        (SiteKind::Vertex, SiteKind::Plaquette) => braid_controlled_z(state, a, b, Orientation::Clockwise),
        (SiteKind::Plaquette, SiteKind::Vertex) => braid_controlled_z(state, b, a, Orientation::Clockwise),
        _ => Err(Error::InvalidQudit("controlled-Z needs qudits of opposite kinds".into())),
    }
}

/// Occupancy of row 0.
pub fn measure_logical_z<E: Engine>(
    state: &mut CodeState<E>,
    q: &LogicalQudit,
    selector: &mut dyn OutcomeSelector,
) -> Result<u32> {
    state.measure(&q.z_rep, selector)
}

/// Measurement in the Fourier basis `|l̃⟩ = F|l⟩`; returns `l`.
pub fn measure_logical_x<E: Engine>(
    state: &mut CodeState<E>,
    q: &LogicalQudit,
    selector: &mut dyn OutcomeSelector,
) -> Result<u32> {
    let m = state.measure(&q.x_rep, selector)?;
    Ok(modulo(-(m as i64), q.d))
}

/// Put `q` into `|0̃⟩` by an X measurement and a Z correction. Returns the
/// measured `l`.
pub fn prepare_x_eigenstate<E: Engine>(
    state: &mut CodeState<E>,
    q: &LogicalQudit,
    selector: &mut dyn OutcomeSelector,
) -> Result<u32> {
    let l = measure_logical_x(state, q, selector)?;
    if l != 0 {
        logical_z(state, q, -(l as i64))?;
    }
    Ok(l)
}

/// Move the state of `src` into `dst` (opposite kind, in `|0̃⟩`) while
/// applying `F`. `src` is left in a Fourier basis state.
pub fn fourier_teleport<E: Engine>(
    state: &mut CodeState<E>,
    src: &LogicalQudit,
    dst: &LogicalQudit,
    selector: &mut dyn OutcomeSelector,
) -> Result<ProtocolTranscript> {
    if src.kind == dst.kind {
        return Err(Error::InvalidQudit("teleportation needs qudits of opposite kinds".into()));
    }
    if state.engine().deterministic_value(&dst.x_rep)? != Some(0) {
        return Err(Error::Protocol("destination is not in |0̃⟩".into()));
    }
    let mut t = ProtocolTranscript::new("fourier_teleport");
    t.attempts = 1;
    controlled_phase(state, src, dst)?;
    let l = measure_logical_x(state, src, selector)?;
    t.outcomes.push(l);
    let correction = dst.x_rep.power(-(l as i64));
    state.apply_pauli(&correction)?;
    t.corrections.push(correction);
    t.success = true;
    Ok(t)
}

/// `|a⟩|b⟩ → |a⟩|b ± a⟩` for same-kind `control` and `target`, routed
/// through `ancilla` of the other kind. The forward gate is `F`, `ΛZ`, `F†`
/// on the target; the inverse is `F†`, `ΛZ`, `F`. `F†` is `F` followed by a
/// relabelling, so either `target` or `ancilla` ends up relabelled.
pub fn controlled_x<E: Engine>(
    state: &mut CodeState<E>,
    control: &LogicalQudit,
    target: &mut LogicalQudit,
    ancilla: &mut LogicalQudit,
    inverse: bool,
    selector: &mut dyn OutcomeSelector,
) -> Result<ProtocolTranscript> {
    if control.kind != target.kind || ancilla.kind == target.kind {
        return Err(Error::InvalidQudit(
            "controlled-X needs same-kind control and target and an ancilla of the other kind".into(),
        ));
    }
    let mut t = ProtocolTranscript::new(if inverse { "controlled_x_inverse" } else { "controlled_x" });
    t.attempts = 1;
    let l = prepare_x_eigenstate(state, ancilla, selector)?;
    t.outcomes.push(l);
    t.absorb(fourier_teleport(state, target, ancilla, selector)?);
    if inverse {
        ancilla.relabel();
    }
    controlled_phase(state, control, ancilla)?;
    let l = prepare_x_eigenstate(state, target, selector)?;
    t.outcomes.push(l);
    t.absorb(fourier_teleport(state, ancilla, target, selector)?);
    if !inverse {
        target.relabel();
    }
    t.success = true;
    Ok(t)
}

/// Phases `φ` of the single-spin measurement vector that leaves the
/// ancilla in `Σ_m e^{iθ_m}|m⟩` up to a global phase.
pub fn measurement_phases(theta: &[f64]) -> Vec<f64> {
    let d = theta.len();
    let mean = theta.iter().sum::<f64>() / d as f64;
    let mut phi = vec![0.0; d];
    for j in 1..d {
        phi[j] = phi[j - 1] + theta[j] - mean;
    }
    phi
}

/// Orthonormal basis `{Z^k|φ⟩}` with `|φ⟩ = Σ_j e^{iφ_j}|j⟩/√d`.
pub fn phase_basis(phi: &[f64]) -> Vec<Vec<Complex64>> {
    let d = phi.len();
    let s = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|k| {
            (0..d)
                .map(|g| Complex64::from_polar(s, phi[g] + 2.0 * PI * (k * g) as f64 / d as f64))
                .collect()
        })
        .collect()
}

/// Prepare `p` in `Σ_m e^{iθ_m}|m⟩/√d`. `v` and `p` must be fresh qudits
/// whose primary holes straddle one spin so that both logical X operators
/// are single-spin operators on it. The spin is measured in a basis of
/// phase states, `p` is post-selected on one Z outcome (retrying from fresh
/// holes otherwise), and the state is teleported from `v` into `p`.
/// Afterwards `p`'s logical X is decoupled from `v`.
pub fn prepare_ancilla_theta(
    state: &mut CodeState<StateVector>,
    v: &mut LogicalQudit,
    p: &mut LogicalQudit,
    theta: &[f64],
    selector: &mut dyn OutcomeSelector,
    max_attempts: u32,
) -> Result<ProtocolTranscript> {
    let d = state.d();
    if theta.len() != d as usize {
        return Err(Error::DimensionMismatch(format!("θ has {} entries, expected {d}", theta.len())));
    }
    if v.kind != SiteKind::Vertex || p.kind != SiteKind::Plaquette {
        return Err(Error::InvalidQudit("ancilla preparation needs a vertex and a plaquette qudit".into()));
    }
    let mut t = ProtocolTranscript::new("prepare_ancilla_theta");
    let basis = phase_basis(&measurement_phases(theta));
    for attempt in 1..=max_attempts {
        t.attempts = attempt;
        if attempt > 1 || v.flipped || p.flipped {
            v.reset(state, selector)?;
            p.reset(state, selector)?;
        } else {
            *p = LogicalQudit::from_open_holes(state, p.kind, p.rows.clone())?;
        }
        for q in [&*v, &*p] {
            if state.engine().deterministic_value(&q.z_rep)? != Some(0) {
                return Err(Error::Protocol("ancilla qudits must start in |0⟩".into()));
            }
        }
        let spin = v.single_spin_x(state).filter(|&i| p.single_spin_x(state) == Some(i)).ok_or_else(|| {
            Error::InvalidQudit("the primary holes do not straddle a common spin".into())
        })?;
        let rec = state.engine_mut().measure_in_basis(spin, &basis, "phase", selector)?;
        t.outcomes.push(rec.outcome as u32);
        let z = measure_logical_z(state, p, selector)?;
        t.outcomes.push(z);
        if z != 1 {
            continue;
        }
        decouple_x(p, v)?;
        let shift = p.x_rep.power(-1);
        state.apply_pauli(&shift)?;
        t.corrections.push(shift);
        let l = prepare_x_eigenstate(state, p, selector)?;
        t.outcomes.push(l);
        t.absorb(fourier_teleport(state, v, p, selector)?);
        t.success = true;
        return Ok(t);
    }
    Ok(t)
}

/// Apply `diag(e^{iθ_k})` to the plaquette qudit `data` by repeat-until-success:
/// each attempt prepares an ancilla in `p`, applies an inverse controlled-X
/// from `data` onto it and measures it; outcome `m` applies the phases
/// `τ_{k+m}`, and the next ancilla is chosen to finish the job.
pub fn phase_gate_rus(
    state: &mut CodeState<StateVector>,
    data: &LogicalQudit,
    v: &mut LogicalQudit,
    p: &mut LogicalQudit,
    theta: &[f64],
    selector: &mut dyn OutcomeSelector,
    max_attempts: u32,
) -> Result<ProtocolTranscript> {
    let d = state.d() as usize;
    if theta.len() != d {
        return Err(Error::DimensionMismatch(format!("θ has {} entries, expected {d}", theta.len())));
    }
    if data.kind != p.kind {
        return Err(Error::InvalidQudit("data and ancilla must be of the same kind".into()));
    }
    let mut t = ProtocolTranscript::new("phase_gate_rus");
    let mut applied = vec![0.0; d];
    for attempt in 1..=max_attempts {
        t.attempts = attempt;
        let tau: Vec<f64> = theta.iter().zip(&applied).map(|(a, b)| a - b).collect();
        if attempt > 1 {
            v.reset(state, selector)?;
            p.reset(state, selector)?;
        }
        let prep = prepare_ancilla_theta(state, v, p, &tau, selector, DEFAULT_MAX_ATTEMPTS)?;
        if !prep.success {
            t.absorb(prep);
            return Ok(t);
        }
        t.absorb(prep);
        t.absorb(controlled_x(state, data, p, v, true, selector)?);
        let m = measure_logical_z(state, p, selector)? as usize;
        t.outcomes.push(m as u32);
        for (k, a) in applied.iter_mut().enumerate() {
            *a += tau[(k + m) % d];
        }
        if is_constant_phase(theta, &applied) {
            t.success = true;
            return Ok(t);
        }
    }
    Ok(t)
}

/// Whether `a - b` is constant modulo `2π`.
pub fn is_constant_phase(a: &[f64], b: &[f64]) -> bool {
    let r0 = a[0] - b[0];
    a.iter().zip(b).all(|(x, y)| {
        let diff = (x - y - r0).rem_euclid(2.0 * PI);
        diff.min(2.0 * PI - diff) < 1e-9
    })
}

/// Check that the representatives of `qudits` generate independent Weyl
/// pairs: `Z_i X_i = ω X_i Z_i` and everything else commuting.
pub fn check_logical_algebra(qudits: &[&LogicalQudit]) -> Result<()> {
    for (i, a) in qudits.iter().enumerate() {
        a.check_pair()?;
        for b in &qudits[i + 1..] {
            for (p, q) in [(&a.x_rep, &b.x_rep), (&a.x_rep, &b.z_rep), (&a.z_rep, &b.x_rep), (&a.z_rep, &b.z_rep)] {
                if !p.commutes_with(q)? {
                    return Err(Error::NonCommuting("representatives of different qudits".into()));
                }
            }
        }
    }
    Ok(())
}

fn weyl_operator(qudits: &[&LogicalQudit], digits: &[i64], n: usize, d: u32) -> Result<PauliOperator> {
    let mut w = PauliOperator::identity(n, d)?;
    for (i, q) in qudits.iter().enumerate() {
        w.mul_assign_unchecked(&q.x_rep.power(digits[2 * i]));
        w.mul_assign_unchecked(&q.z_rep.power(digits[2 * i + 1]));
    }
    Ok(w)
}

/// Fidelity of the encoded state of `qudits` with the pure logical state
/// `target` (qudit 0 most significant), from the expectation values of all
/// logical Weyl operators.
pub fn logical_fidelity(state: &CodeState<StateVector>, qudits: &[&LogicalQudit], target: &StateVector) -> Result<f64> {
    check_logical_algebra(qudits)?;
    let m = qudits.len();
    let d = state.d();
    if target.n() != m || target.d() != d {
        return Err(Error::DimensionMismatch("target does not match the qudits".into()));
    }
    let n = state.engine().n();
    let mut digits = vec![0i64; 2 * m];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let xs: Vec<i64> = (0..m).map(|i| digits[2 * i]).collect();
        let zs: Vec<i64> = (0..m).map(|i| digits[2 * i + 1]).collect();
        let logical = PauliOperator::from_powers(d, &xs, &zs, 0)?;
        let physical = weyl_operator(qudits, &digits, n, d)?;
        total += target.expectation(&logical)?.conj() * state.engine().expectation(&physical)?;
        let mut i = 0;
        while i < digits.len() {
            digits[i] += 1;
            if digits[i] < d as i64 {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == digits.len() {
            break;
        }
    }
    Ok(total.re / (d as f64).powi(m as i32))
}

/// Write the logical state `amplitudes` (qudit 0 most significant) into
/// `qudits`, which must all be in `|0⟩`.
pub fn prepare_logical_state(
    state: &mut CodeState<StateVector>,
    qudits: &[&LogicalQudit],
    amplitudes: &[Complex64],
) -> Result<()> {
    check_logical_algebra(qudits)?;
    let d = state.d();
    let m = qudits.len();
    if amplitudes.len() != (d as usize).pow(m as u32) {
        return Err(Error::DimensionMismatch("amplitude count does not match the qudits".into()));
    }
    for q in qudits {
        if state.engine().deterministic_value(&q.z_rep)? != Some(0) {
            return Err(Error::Protocol("qudits must start in |0⟩".into()));
        }
    }
    let n = state.engine().n();
    let mut terms = Vec::with_capacity(amplitudes.len());
    for (idx, &c) in amplitudes.iter().enumerate() {
        if c.norm() == 0.0 {
            continue;
        }
        let mut digits = vec![0i64; 2 * m];
        let mut rest = idx;
        for i in (0..m).rev() {
            digits[2 * i] = (rest % d as usize) as i64;
            rest /= d as usize;
        }
        terms.push((c, weyl_operator(qudits, &digits, n, d)?));
    }
    state.engine_mut().apply_linear_combination(&terms)?;
    Ok(())
}

/// Three qudits in the corner of a lattice of at least 2×2: a vertex qudit
/// `v` and a plaquette qudit `p` whose primary holes straddle the spin
/// `h(0,0)`, and a plaquette data qudit straddling `h(1,0)`. `v` and `p`
/// serve as the ancilla pair of the ancilla and phase-gate protocols.
pub fn straddling_layout<E: Engine>(state: &mut CodeState<E>) -> Result<(LogicalQudit, LogicalQudit, LogicalQudit)> {
    let g = state.geometry().clone();
    let v = LogicalQudit::encode(state, SiteKind::Vertex, g.vertex(0, 0), g.vertex(1, 0))?;
    let p = LogicalQudit::encode(state, SiteKind::Plaquette, g.plaquette(0, 1), g.plaquette(0, 0))?;
    let data = LogicalQudit::encode(state, SiteKind::Plaquette, g.plaquette(1, 1), g.plaquette(1, 0))?;
    Ok((v, p, data))
}
