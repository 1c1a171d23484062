//! Thermofield-dynamics qubits on truncated doubled Fock spaces.
//!
//! The crate builds thermal vacua and their excitations, gate-operated
//! thermofield states, a two-engine teleportation protocol, Mandel-parameter
//! diagnostics, the spin-1/2 Gibbs/Hadamard construction and the no-cloning
//! and broadcasting maps, and wraps them in reproducible experiments.

use serde::{Deserialize, Serialize};

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod gates;
pub mod hilbert;
pub mod nogo_maps;
pub mod random;
pub mod spin_gibbs;
pub mod teleport;
pub mod thermo;

pub use error::{Result, TfdError};
pub use hilbert::{ComplexMatrix, FockOperators, StateVector, C64};
pub use thermo::{InverseTemperature, ThermalParams, ThermofieldQubit};

/// Which representation a computation runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Exact label algebra; thermofield states at different temperatures are orthonormal.
    Abstract,
    /// Truncated Fock-space vectors.
    Numeric,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Abstract => "abstract",
            Engine::Numeric => "numeric",
        })
    }
}
