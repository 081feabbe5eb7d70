//! Restricted-Boltzmann-machine neural quantum states for the basis-rotated
//! transverse-field Ising chain, evaluated by exact summation over the full
//! Hilbert space.
//!
//! The crate is organised bottom-up:
//!
//! - [`hilbert`]: spin configurations as bit patterns.
//! - [`hamiltonian`]: the rotated Ising Hamiltonian, its matrix rows and the
//!   phase/amplitude diagnostics.
//! - [`state`] and [`exact`]: normalized state vectors, exact diagonalization
//!   and the comparison metrics (infidelity, sign average, ...).
//! - [`rbm`]: the complex RBM ansatz.
//! - [`sr`]: stochastic reconfiguration with exact expectation values.
//! - [`cumulant`]: Walsh-Hadamard transform and the magnitude-ranked
//!   truncated cumulant expansion.

pub mod cumulant;
pub mod error;
pub mod exact;
pub mod hamiltonian;
pub mod hilbert;
mod lanczos;
pub mod rbm;
pub mod sr;
pub mod state;

pub use error::{Error, Result};
pub use hamiltonian::RotatedTfim;
pub use hilbert::SpinConfig;
pub use num_complex::Complex64;
pub use rbm::RbmParams;
pub use state::StateVector;
