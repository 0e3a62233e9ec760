//! Stabilizer-tableau simulation over Z_d for prime `d`.
//!
//! The tableau always describes a pure state: `n` commuting stabilizer rows
//! `S_i` together with destabilizer rows `D_i` forming a symplectic basis,
//! `c(D_i, S_j) = δ_ij`, `c(S_i, S_j) = c(D_i, D_j) = 0`, where `c` is the
//! commutation exponent. Row phases carry the eigenvalue bookkeeping.

use serde::{Deserialize, Serialize};

use crate::algebra::{inverse_mod, is_prime, modulo, PauliOperator};
use crate::engine::{require_order_d, Engine, OutcomeSelector, PauliMeasurementOutcome};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    d: u32,
    stabilizers: Vec<PauliOperator>,
    destabilizers: Vec<PauliOperator>,
}

/// What `from_generators` learned about the generator list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSummary {
    /// Number of independent generators.
    pub rank: usize,
    /// `n - rank`: qudits left free by the generators.
    pub encoded_qudits: usize,
    /// Indices of generators that were products of earlier ones.
    pub dependent: Vec<usize>,
    /// `(logical X, logical Z)` pairs for the free qudits: they commute with
    /// every generator and pair canonically with each other.
    pub logical_pairs: Vec<(PauliOperator, PauliOperator)>,
}

enum Decomposition {
    /// Index of a stabilizer row with nonzero commutation exponent.
    Random(usize),
    /// Exponents `m_i` with `P ∝ Π S_i^{m_i}` and the eigenvalue exponent.
    Determined { exponents: Vec<u32>, value: u32 },
}

impl Tableau {
    /// `|0...0⟩`: `S_i = Z_i`, `D_i = X_i^{-1}`.
    pub fn zero(n: usize, d: u32) -> Result<Self> {
        if !is_prime(d) {
            return Err(Error::NotPrime(d));
        }
        let stabilizers = (0..n).map(|i| PauliOperator::z_on(n, d, i, 1)).collect::<Result<Vec<_>>>()?;
        let destabilizers = (0..n).map(|i| PauliOperator::x_on(n, d, i, -1)).collect::<Result<Vec<_>>>()?;
        Ok(Self { n, d, stabilizers, destabilizers })
    }

    /// A tableau stabilized by every generator with eigenvalue 1. Free
    /// qudits left by a rank-deficient list are fixed to an arbitrary
    /// stabilizer state and reported in the summary.
    pub fn from_generators(gens: &[PauliOperator]) -> Result<Self> {
        Ok(Self::from_generators_with_summary(gens)?.0)
    }

    pub fn from_generators_with_summary(gens: &[PauliOperator]) -> Result<(Self, GeneratorSummary)> {
        let first = gens.first().ok_or(Error::EmptyGenerators)?;
        let (n, d) = (first.n(), first.dim());
        if !is_prime(d) {
            return Err(Error::NotPrime(d));
        }
        for g in gens {
            if g.n() != n || g.dim() != d {
                return Err(Error::DimensionMismatch(format!("generator {g} does not match n={n}, d={d}")));
            }
            require_order_d(g)?;
        }
        for (i, a) in gens.iter().enumerate() {
            for b in &gens[i + 1..] {
                if a.commutation_exponent(b)? != 0 {
                    return Err(Error::NonCommuting(format!("{a} and {b}")));
                }
            }
        }
        let mut t = Self::zero(n, d)?;
        let mut pinned = vec![false; n];
        let mut dependent = Vec::new();
        for (gi, g) in gens.iter().enumerate() {
            match t.decompose(g) {
                Decomposition::Random(p) => {
                    t.collapse_onto(g, p, 0);
                    pinned[p] = true;
                }
                Decomposition::Determined { exponents, value } => {
                    let free = (0..n).find(|&j| !pinned[j] && exponents[j] != 0);
                    match free {
                        Some(j) => {
                            if value != 0 {
                                // Shift the phase of S_j so that g reads 1.
                                let u = inverse_mod(exponents[j] as i64, d).expect("prime modulus");
                                let shift = modulo(value as i64 * u as i64, d);
                                let fix = t.destabilizers[j].power(shift as i64);
                                t.apply_pauli_unchecked(&fix);
                            }
                            t.replace_row(j, g, &exponents);
                            pinned[j] = true;
                        }
                        None if value == 0 => dependent.push(gi),
                        None => {
                            return Err(Error::InconsistentPhase(format!(
                                "generator {gi} ({g}) is a product of earlier generators with eigenvalue ω^{value}"
                            )))
                        }
                    }
                }
            }
        }
        let logical_pairs = (0..n)
            .filter(|&j| !pinned[j])
            .map(|j| (t.destabilizers[j].unphased(), t.stabilizers[j].unphased()))
            .collect::<Vec<_>>();
        let rank = pinned.iter().filter(|&&p| p).count();
        let summary = GeneratorSummary { rank, encoded_qudits: n - rank, dependent, logical_pairs };
        Ok((t, summary))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn stabilizers(&self) -> &[PauliOperator] {
        &self.stabilizers
    }

    pub fn destabilizers(&self) -> &[PauliOperator] {
        &self.destabilizers
    }

    fn check_operator(&self, p: &PauliOperator) -> Result<()> {
        if p.n() != self.n || p.dim() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "operator on {} qudits of dimension {} applied to tableau of {} qudits of dimension {}",
                p.n(),
                p.dim(),
                self.n,
                self.d
            )));
        }
        Ok(())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n {
            Err(Error::InvalidIndex { index: site, limit: self.n })
        } else {
            Ok(())
        }
    }

    /// Verify the symplectic pairing and stabilizer commutation.
    pub fn check_invariants(&self) -> Result<()> {
        for i in 0..self.n {
            for j in 0..self.n {
                let ss = self.stabilizers[i].commutation_unchecked(&self.stabilizers[j]);
                let dd = self.destabilizers[i].commutation_unchecked(&self.destabilizers[j]);
                let ds = self.destabilizers[i].commutation_unchecked(&self.stabilizers[j]);
                let expected = u32::from(i == j);
                if ss != 0 || dd != 0 || ds != expected {
                    return Err(Error::NonCommuting(format!(
                        "tableau rows {i}, {j} break the symplectic pairing"
                    )));
                }
            }
        }
        Ok(())
    }

    fn decompose(&self, p: &PauliOperator) -> Decomposition {
        let support = p.support();
        if let Some(row) = self
            .stabilizers
            .iter()
            .position(|s| s.commutation_on(p, &support) != 0)
        {
            return Decomposition::Random(row);
        }
        let exponents: Vec<u32> =
            self.destabilizers.iter().map(|dr| dr.commutation_on(p, &support)).collect();
        let value = self.determined_value(p, &support, &exponents);
        Decomposition::Determined { exponents, value }
    }

    /// Eigenvalue exponent of `p ∝ Π S_i^{m_i}` from the phase of the product.
    fn determined_value(&self, p: &PauliOperator, support: &[usize], exponents: &[u32]) -> u32 {
        let mut nonzero = exponents.iter().enumerate().filter(|(_, &m)| m != 0);
        let q_phase = match (nonzero.next(), nonzero.next()) {
            (None, _) => 0,
            // A single row: S_i^m has the support of p, so its phase only
            // needs the sites in that support.
            (Some((i, &m)), None) => {
                let s = &self.stabilizers[i];
                let d = self.d as u64;
                let m = m as u64;
                let tri = (m * (m - 1) / 2) % d;
                let reorder: u64 = support
                    .iter()
                    .map(|&j| (s.x_power(j) as u64 * s.z_power(j) as u64 % d) * tri)
                    .sum::<u64>()
                    % d;
                ((s.phase_numerator() as u64 * m + 2 * reorder) % (2 * d)) as u32
            }
            _ => {
                let mut q = PauliOperator::identity(self.n, self.d).expect("valid dimension");
                for (s, &m) in self.stabilizers.iter().zip(exponents) {
                    if m != 0 {
                        q.mul_assign_power_sparse(s, &s.support(), m);
                    }
                }
                debug_assert!(q.same_support_powers(p));
                q.phase_numerator()
            }
        };
        let diff = modulo(p.phase_numerator() as i64 - q_phase as i64, 2 * self.d);
        debug_assert_eq!(diff % 2, 0, "order-d operators have d-th root eigenvalues");
        diff / 2
    }

    /// Post-measurement update when `p` does not commute with row `pivot`,
    /// with the outcome eigenvalue `ω^k`.
    fn collapse_onto(&mut self, p: &PauliOperator, pivot: usize, k: u32) {
        let d = self.d as i64;
        let support = p.support();
        let old = self.stabilizers[pivot].clone();
        let old_support = old.support();
        let c_pivot = old.commutation_on(p, &support);
        let inv = inverse_mod(c_pivot as i64, self.d).expect("prime modulus") as i64;
        for i in 0..self.n {
            for row in [&mut self.stabilizers[i], &mut self.destabilizers[i]] {
                if i == pivot {
                    continue;
                }
                let c = row.commutation_on(p, &support) as i64;
                if c != 0 {
                    let t = modulo(-c * inv % d, self.d);
                    row.mul_assign_power_sparse(&old, &old_support, t);
                }
            }
        }
        self.destabilizers[pivot] = old.power(inv);
        self.stabilizers[pivot] = p.clone().times_omega(-(k as i64));
    }

    /// Replace stabilizer row `j` by `g ∝ Π S_i^{m_i}` (with `m_j` invertible),
    /// adjusting destabilizers to keep the pairing.
    fn replace_row(&mut self, j: usize, g: &PauliOperator, m: &[u32]) {
        let d = self.d;
        let inv = inverse_mod(m[j] as i64, d).expect("prime modulus") as i64;
        let dj = self.destabilizers[j].clone();
        let dj_support = dj.support();
        for (i, dest) in self.destabilizers.iter_mut().enumerate() {
            if i != j && m[i] != 0 {
                let v = modulo(-(m[i] as i64) * inv, d);
                dest.mul_assign_power_sparse(&dj, &dj_support, v);
            }
        }
        self.destabilizers[j] = dj.power(inv);
        self.stabilizers[j] = g.clone();
    }

    fn apply_pauli_unchecked(&mut self, q: &PauliOperator) {
        let support = q.support();
        for row in self.stabilizers.iter_mut().chain(self.destabilizers.iter_mut()) {
            let c = q.commutation_on(row, &support);
            if c != 0 {
                row.add_omega(c as i64);
            }
        }
    }

    /// `Q|ψ⟩`: each row `R` becomes `Q R Q† = ω^{c(Q,R)} R`.
    pub fn apply_pauli(&mut self, q: &PauliOperator) -> Result<()> {
        self.check_operator(q)?;
        self.apply_pauli_unchecked(q);
        Ok(())
    }

    pub fn apply_fourier(&mut self, site: usize, inverse: bool) -> Result<()> {
        self.check_site(site)?;
        for row in self.stabilizers.iter_mut().chain(self.destabilizers.iter_mut()) {
            if row.x_power(site) != 0 || row.z_power(site) != 0 {
                // F R F† for the forward gate, F† R F for the inverse.
                *row = row.fourier_conjugate(site, inverse)?;
            }
        }
        Ok(())
    }

    /// `U = Σ ω^{kab} Π_a(A)Π_b(B)` conjugates `G` to
    /// `ω^{-kαβ} A^{kβ} B^{kα} G` with `α = c(A,G)`, `β = c(B,G)`.
    pub fn apply_controlled_phase(&mut self, a: &PauliOperator, b: &PauliOperator, k: i64) -> Result<()> {
        self.check_operator(a)?;
        self.check_operator(b)?;
        require_order_d(a)?;
        require_order_d(b)?;
        if a.commutation_exponent(b)? != 0 {
            return Err(Error::NonCommuting(format!("{a} and {b}")));
        }
        let d = self.d as i64;
        let (sa, sb) = (a.support(), b.support());
        for row in self.stabilizers.iter_mut().chain(self.destabilizers.iter_mut()) {
            let alpha = a.commutation_on(row, &sa) as i64;
            let beta = b.commutation_on(row, &sb) as i64;
            if alpha == 0 && beta == 0 {
                continue;
            }
            let mut g = a.power(modulo(k * beta, self.d) as i64);
            g.mul_assign_power_sparse(b, &sb, modulo(k * alpha, self.d));
            g.mul_assign_unchecked(row);
            g.add_omega(-(k.rem_euclid(d) * alpha % d * beta % d));
            *row = g;
        }
        Ok(())
    }

    pub fn apply_controlled_z(&mut self, control: usize, target: usize, k: i64) -> Result<()> {
        self.check_site(control)?;
        self.check_site(target)?;
        if control == target {
            return Err(Error::SameSite(control));
        }
        for row in self.stabilizers.iter_mut().chain(self.destabilizers.iter_mut()) {
            if row.x_power(control) != 0 || row.x_power(target) != 0 {
                *row = row.controlled_z_conjugate(control, target, k)?;
            }
        }
        Ok(())
    }

    pub fn measure_pauli(
        &mut self,
        p: &PauliOperator,
        selector: &mut dyn OutcomeSelector,
    ) -> Result<PauliMeasurementOutcome> {
        self.check_operator(p)?;
        require_order_d(p)?;
        match self.decompose(p) {
            Decomposition::Random(pivot) => {
                let probs = vec![1.0 / self.d as f64; self.d as usize];
                let k = selector.select(&probs)? as u32;
                self.collapse_onto(p, pivot, k);
                Ok(PauliMeasurementOutcome { exponent: k, was_deterministic: false, probability: probs[0] })
            }
            Decomposition::Determined { value, .. } => {
                let mut probs = vec![0.0; self.d as usize];
                probs[value as usize] = 1.0;
                selector.select(&probs)?;
                Ok(PauliMeasurementOutcome { exponent: value, was_deterministic: true, probability: 1.0 })
            }
        }
    }

    /// Eigenvalue exponent of `p` if it is fixed by the state.
    pub fn deterministic_value(&self, p: &PauliOperator) -> Result<Option<u32>> {
        self.check_operator(p)?;
        require_order_d(p)?;
        Ok(match self.decompose(p) {
            Decomposition::Random(_) => None,
            Decomposition::Determined { value, .. } => Some(value),
        })
    }
}

impl Engine for Tableau {
    fn zero_state(n: usize, d: u32) -> Result<Self> {
        Tableau::zero(n, d)
    }

    fn num_sites(&self) -> usize {
        self.n
    }

    fn dim(&self) -> u32 {
        self.d
    }

    fn apply_pauli(&mut self, p: &PauliOperator) -> Result<()> {
        Tableau::apply_pauli(self, p)
    }

    fn apply_fourier(&mut self, site: usize, inverse: bool) -> Result<()> {
        Tableau::apply_fourier(self, site, inverse)
    }

    fn apply_controlled_phase(&mut self, a: &PauliOperator, b: &PauliOperator, k: i64) -> Result<()> {
        Tableau::apply_controlled_phase(self, a, b, k)
    }

    fn measure_pauli(
        &mut self,
        p: &PauliOperator,
        selector: &mut dyn OutcomeSelector,
    ) -> Result<PauliMeasurementOutcome> {
        Tableau::measure_pauli(self, p, selector)
    }

    fn deterministic_value(&self, p: &PauliOperator) -> Result<Option<u32>> {
        Tableau::deterministic_value(self, p)
    }

    fn apply_controlled_z(&mut self, control: usize, target: usize, k: i64) -> Result<()> {
        Tableau::apply_controlled_z(self, control, target, k)
    }
}
