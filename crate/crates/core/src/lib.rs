//! Two qubits coupled to a bosonic field mode or to a composite spin of `N`
//! qubits: exact dynamics, entanglement diagnostics, attractor states, and
//! decoherence from Gaussian coupling mismatch.

pub mod dynamics;
pub mod measures;
pub mod mismatch;
pub mod output;
pub mod qalg;
pub mod scenario;
pub mod statekit;
pub mod timing;
