//! Independent single-spin faults.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::PauliOperator;
use crate::code::CodeState;
use crate::engine::Engine;
use crate::error::{Error, Result};

/// Each spin independently suffers a shift fault `X^a` with probability
/// `p_x` and a clock fault `Z^b` with probability `p_z`, with `a`, `b`
/// uniform over the nonzero powers. Shift faults create fluxes, clock faults
/// create charges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p_x: f64,
    pub p_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub fault: PauliOperator,
    pub weight: usize,
}

impl NoiseModel {
    pub fn new(p_x: f64, p_z: f64) -> Result<Self> {
        for (name, p) in [("p_x", p_x), ("p_z", p_z)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(Self { p_x, p_z })
    }

    pub fn noiseless() -> Self {
        Self { p_x: 0.0, p_z: 0.0 }
    }

    /// Draw a fault on `n` spins. Random numbers are consumed spin by spin,
    /// shift draw before clock draw.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, d: u32, rng: &mut R) -> Result<PauliOperator> {
        let mut x = vec![0i64; n];
        let mut z = vec![0i64; n];
        for i in 0..n {
            if rng.gen::<f64>() < self.p_x {
                x[i] = rng.gen_range(1..d) as i64;
            }
            if rng.gen::<f64>() < self.p_z {
                z[i] = rng.gen_range(1..d) as i64;
            }
        }
        PauliOperator::from_powers(d, &x, &z, 0)
    }
}

pub fn apply_noise<E: Engine, R: Rng + ?Sized>(
    state: &mut CodeState<E>,
    model: &NoiseModel,
    rng: &mut R,
) -> Result<FaultRecord> {
    let fault = model.sample(state.geometry().num_edges(), state.d(), rng)?;
    state.apply_pauli(&fault)?;
    let weight = fault.weight();
    Ok(FaultRecord { fault, weight })
}
