//! Matrix-product-state simulation of sampled TE-PAI circuits next to a
//! Trotter baseline, with dense oracles for small systems.

// negated float comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod dense;
pub mod estimator;
pub mod mps;
pub mod pai;
pub mod pauli;
pub mod rng;
pub mod runner;
pub mod trotter;
pub mod verify;

pub use circuit::{domain_wall_state, Circuit, GateList, LocalState, Rotation};
pub use dense::DenseState;
pub use mps::{CostLedger, MpsState, TruncationPolicy};
pub use pai::{PaiConfig, PaiMode, SampledCircuit};
pub use pauli::{build_spin_ring, Hamiltonian, OmegaSpec, Pauli, PauliString};
pub use trotter::{build_trotter_circuit, TrotterCircuit};
