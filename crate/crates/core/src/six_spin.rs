//! A six-spin non-topological stabilizer code with a qubit stored by leaving
//! two of its generators unenforced.
//!
//! Spins are numbered 0..6. The generators are
//! `S1 = Z0 Z1`, `S2 = Z1 Z2`, `S3 = Z3 Z4`, `S4 = Z4 Z5`, `S5 = X0…X5` and
//! `S6 = Z0 Z2 Z3 Z5`.

use serde::{Deserialize, Serialize};

use crate::algebra::PauliOperator;
use crate::engine::{Engine, OutcomeSelector};
use crate::error::{Error, Result};
use crate::montecarlo::{for_each_fault, FaultFamily};
use crate::tableau::Tableau;

pub const NUM_SPINS: usize = 6;
const D: u32 = 2;

/// Which generators are left unenforced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SixSpinVariant {
    /// `S1` and `S2` unenforced: logical `Z = S1`, `X = X1`.
    A,
    /// `S2` and `S3` unenforced: logical `Z = S2`, `X = X2 X3`.
    B,
    /// Every generator enforced.
    Full,
}

impl SixSpinVariant {
    pub const ALL: [SixSpinVariant; 3] = [SixSpinVariant::A, SixSpinVariant::B, SixSpinVariant::Full];

    /// Indices into the generator list of the unenforced generators.
    pub fn holes(self) -> &'static [usize] {
        match self {
            SixSpinVariant::A => &[0, 1],
            SixSpinVariant::B => &[1, 2],
            SixSpinVariant::Full => &[],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SixSpinVariant::A => "A",
            SixSpinVariant::B => "B",
            SixSpinVariant::Full => "full",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SixSpinCode {
    generators: Vec<PauliOperator>,
}

/// A prepared code state with the stored qubit in logical `|0⟩`.
#[derive(Clone, Debug)]
pub struct EncodedSixSpin<E: Engine> {
    pub variant: SixSpinVariant,
    pub engine: E,
    pub logical_z: Option<PauliOperator>,
    pub logical_x: Option<PauliOperator>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtectionReport {
    pub variant: SixSpinVariant,
    pub enforced: Vec<usize>,
    /// Number of independent enforced generators.
    pub rank: usize,
    pub encoded_qubits: usize,
    /// Largest fault weight searched.
    pub searched_weight: usize,
    /// Smallest weight of a fault that passes every enforced check but is
    /// not itself a product of enforced checks.
    pub min_weight: Option<usize>,
    pub example: Option<String>,
    /// Whether that fault flips the stored qubit's `Z` or `X`.
    pub hits_stored_qubit: Option<bool>,
}

impl Default for SixSpinCode {
    fn default() -> Self {
        Self::new()
    }
}

impl SixSpinCode {
    pub fn new() -> Self {
        let z = |sites: &[usize]| {
            let f: Vec<(usize, i64, i64)> = sites.iter().map(|&s| (s, 0, 1)).collect();
            PauliOperator::from_sparse(NUM_SPINS, D, &f).expect("valid operator")
        };
        let all_x: Vec<(usize, i64, i64)> = (0..NUM_SPINS).map(|s| (s, 1, 0)).collect();
        let generators = vec![
            z(&[0, 1]),
            z(&[1, 2]),
            z(&[3, 4]),
            z(&[4, 5]),
            PauliOperator::from_sparse(NUM_SPINS, D, &all_x).expect("valid operator"),
            z(&[0, 2, 3, 5]),
        ];
        Self { generators }
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    pub fn enforced_indices(&self, variant: SixSpinVariant) -> Vec<usize> {
        (0..self.generators.len()).filter(|i| !variant.holes().contains(i)).collect()
    }

    pub fn enforced(&self, variant: SixSpinVariant) -> Vec<PauliOperator> {
        self.enforced_indices(variant).into_iter().map(|i| self.generators[i].clone()).collect()
    }

    pub fn logical_z(&self, variant: SixSpinVariant) -> Option<PauliOperator> {
        variant.holes().first().map(|&i| self.generators[i].clone())
    }

    pub fn logical_x(&self, variant: SixSpinVariant) -> Option<PauliOperator> {
        let sites: &[usize] = match variant {
            SixSpinVariant::A => &[1],
            SixSpinVariant::B => &[2, 3],
            SixSpinVariant::Full => return None,
        };
        let f: Vec<(usize, i64, i64)> = sites.iter().map(|&s| (s, 1, 0)).collect();
        Some(PauliOperator::from_sparse(NUM_SPINS, D, &f).expect("valid operator"))
    }

    /// Prepare the code state on any engine by measuring every generator,
    /// enforced or not, and undoing nonzero outcomes with a low-weight Pauli
    /// that leaves earlier generators alone. The unenforced generators
    /// reading 1 is logical `|0⟩`.
    pub fn encode<E: Engine>(
        &self,
        variant: SixSpinVariant,
        selector: &mut dyn OutcomeSelector,
    ) -> Result<EncodedSixSpin<E>> {
        let mut engine = E::zero_state(NUM_SPINS, D)?;
        for (i, g) in self.generators.iter().enumerate() {
            let m = engine.measure_pauli(g, selector)?.exponent;
            if m != 0 {
                let fix = self.flip_of(i)?;
                engine.apply_pauli(&fix)?;
            }
        }
        Ok(EncodedSixSpin { variant, engine, logical_z: self.logical_z(variant), logical_x: self.logical_x(variant) })
    }

    /// Lowest-weight Pauli anticommuting with generator `i` and commuting
    /// with the generators measured before it.
    fn flip_of(&self, i: usize) -> Result<PauliOperator> {
        let target = &self.generators[i];
        let earlier = &self.generators[..i];
        for w in 1..=NUM_SPINS {
            let mut found = None;
            for_each_fault(NUM_SPINS, D, w, FaultFamily::Any, &mut |p| {
                if found.is_none() && p.commutation_exponent(target)? != 0 {
                    for g in earlier {
                        if g.commutation_exponent(p)? != 0 {
                            return Ok(());
                        }
                    }
                    found = Some(p.clone());
                }
                Ok(())
            })?;
            if let Some(p) = found {
                return Ok(p);
            }
        }
        Err(Error::Protocol(format!("no Pauli flips generator {i} alone")))
    }

    /// Exhaustive search for the lightest fault of weight at most
    /// `max_weight` that commutes with every enforced generator but is not
    /// in the group they generate. Among faults of that weight one that flips
    /// the stored qubit is reported if there is one.
    pub fn protection_report(&self, variant: SixSpinVariant, max_weight: usize) -> Result<ProtectionReport> {
        let enforced = self.enforced(variant);
        let (_, summary) = Tableau::from_generators_with_summary(&enforced)?;
        let logicals: Vec<PauliOperator> =
            summary.logical_pairs.iter().flat_map(|(x, z)| [x.clone(), z.clone()]).collect();
        let stored: Vec<PauliOperator> =
            self.logical_z(variant).into_iter().chain(self.logical_x(variant)).collect();
        let mut report = ProtectionReport {
            variant,
            enforced: self.enforced_indices(variant),
            rank: summary.rank,
            encoded_qubits: summary.encoded_qudits,
            searched_weight: max_weight,
            min_weight: None,
            example: None,
            hits_stored_qubit: None,
        };
        for w in 1..=max_weight.min(NUM_SPINS) {
            let mut found: Option<(PauliOperator, bool)> = None;
            for_each_fault(NUM_SPINS, D, w, FaultFamily::Any, &mut |p| {
                if matches!(found, Some((_, true))) {
                    return Ok(());
                }
                for g in &enforced {
                    if g.commutation_exponent(p)? != 0 {
                        return Ok(());
                    }
                }
                let mut nontrivial = false;
                for l in &logicals {
                    nontrivial |= l.commutation_exponent(p)? != 0;
                }
                if nontrivial {
                    let mut hits = false;
                    for l in &stored {
                        hits |= l.commutation_exponent(p)? != 0;
                    }
                    if found.is_none() || hits {
                        found = Some((p.clone(), hits));
                    }
                }
                Ok(())
            })?;
            if let Some((p, hits)) = found {
                report.min_weight = Some(w);
                report.example = Some(p.to_string());
                report.hits_stored_qubit = Some(hits);
                break;
            }
        }
        Ok(report)
    }
}
