//! The interface shared by the dense and tableau simulators, and the way
//! measurement outcomes are chosen.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::PauliOperator;
use crate::error::{Error, Result};

/// Probabilities below this are treated as impossible branches.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-14;

/// Chooses a measurement outcome given the Born probabilities.
pub trait OutcomeSelector {
    fn select(&mut self, probs: &[f64]) -> Result<usize>;
}

/// Samples outcomes from a random number generator.
pub struct Sampler<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> OutcomeSelector for Sampler<'_, R> {
    fn select(&mut self, probs: &[f64]) -> Result<usize> {
        sample_index(self.0, probs)
    }
}

pub(crate) fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> Result<usize> {
    let total: f64 = probs.iter().filter(|&&p| p >= MIN_BRANCH_PROBABILITY).sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityBranch(0));
    }
    let r = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p < MIN_BRANCH_PROBABILITY {
            continue;
        }
        last = k;
        acc += p;
        if r < acc {
            return Ok(k);
        }
    }
    Ok(last)
}

/// Replays a queue of prescribed outcomes. Measurements whose result is
/// certain do not consume from the queue; asking for an impossible branch is
/// an error.
#[derive(Clone, Debug, Default)]
pub struct ForcedOutcomes {
    queue: VecDeque<usize>,
}

impl ForcedOutcomes {
    pub fn new(outcomes: impl IntoIterator<Item = usize>) -> Self {
        Self { queue: outcomes.into_iter().collect() }
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

impl OutcomeSelector for ForcedOutcomes {
    fn select(&mut self, probs: &[f64]) -> Result<usize> {
        if let Some(k) = probs.iter().position(|&p| p > 1.0 - 1e-9) {
            return Ok(k);
        }
        let k = self.queue.pop_front().ok_or(Error::OutcomeQueueExhausted)?;
        match probs.get(k) {
            Some(&p) if p >= MIN_BRANCH_PROBABILITY => Ok(k),
            _ => Err(Error::ZeroProbabilityBranch(k)),
        }
    }
}

/// Always picks the most likely outcome, lowest index on ties.
#[derive(Clone, Copy, Debug, Default)]
pub struct MostLikely;

impl OutcomeSelector for MostLikely {
    fn select(&mut self, probs: &[f64]) -> Result<usize> {
        let mut best = 0;
        for (k, &p) in probs.iter().enumerate() {
            if p > probs[best] + 1e-12 {
                best = k;
            }
        }
        Ok(best)
    }
}

/// Result of measuring a Pauli operator of order `d`: eigenvalue `ω^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliMeasurementOutcome {
    pub exponent: u32,
    pub was_deterministic: bool,
    pub probability: f64,
}

/// Operations every simulation backend provides.
pub trait Engine: Clone + Send + Sync {
    /// `|0...0>` on `n` qudits of dimension `d`.
    fn zero_state(n: usize, d: u32) -> Result<Self>
    where
        Self: Sized;

    fn num_sites(&self) -> usize;

    fn dim(&self) -> u32;

    fn apply_pauli(&mut self, p: &PauliOperator) -> Result<()>;

    /// Single-site Fourier gate `F` (or `F†` when `inverse`).
    fn apply_fourier(&mut self, site: usize, inverse: bool) -> Result<()>;

    /// The unitary `Σ_{a,b} ω^{k·a·b} Π_a(A) Π_b(B)` where `Π_a(A)` projects on
    /// the `ω^a` eigenspace of `A`. `A` and `B` must commute and have order `d`.
    /// With single-site `Z` operators this is the controlled-Z power gate.
    fn apply_controlled_phase(&mut self, a: &PauliOperator, b: &PauliOperator, k: i64) -> Result<()>;

    /// Projective measurement of an order-`d` Pauli operator.
    fn measure_pauli(
        &mut self,
        p: &PauliOperator,
        selector: &mut dyn OutcomeSelector,
    ) -> Result<PauliMeasurementOutcome>;

    /// The eigenvalue exponent of `p` if the state is an eigenstate of it.
    fn deterministic_value(&self, p: &PauliOperator) -> Result<Option<u32>>;

    fn apply_controlled_z(&mut self, control: usize, target: usize, k: i64) -> Result<()> {
        if control == target {
            return Err(Error::SameSite(control));
        }
        let n = self.num_sites();
        let d = self.dim();
        let a = PauliOperator::z_on(n, d, control, 1)?;
        let b = PauliOperator::z_on(n, d, target, 1)?;
        self.apply_controlled_phase(&a, &b, k)
    }
}

/// Check that `p^d` is the identity so that its eigenvalues are `ω^k`.
pub(crate) fn require_order_d(p: &PauliOperator) -> Result<()> {
    if p.has_order_d() {
        Ok(())
    } else {
        Err(Error::NotOrderD(p.to_string()))
    }
}
