//! Simulation of abelian quantum-double lattice codes over Z_d: generalized
//! Pauli algebra, dense and stabilizer-tableau engines, hole-encoded logical
//! qudits with their gate protocols, and Monte Carlo error-suppression studies.

pub mod algebra;
pub mod code;
pub mod decoder;
pub mod dense;
pub mod engine;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod montecarlo;
pub mod noise;
pub mod protocols;
pub mod six_spin;
pub mod tableau;

pub use code::{CodeState, HoleSet, LatticeDescription, Syndrome};
pub use algebra::{GroupElement, PauliOperator, PhaseExponent};
pub use dense::{MeasurementRecord, StateVector};
pub use engine::{Engine, ForcedOutcomes, OutcomeSelector, PauliMeasurementOutcome, Sampler};
pub use error::{Error, Result};
pub use lattice::{LatticeGeometry, Orientation, SiteKind};
pub use tableau::Tableau;
