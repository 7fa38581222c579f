//! Sparse recovery of variational quantum cost landscapes.
//!
//! Landscapes of circuits built from Pauli rotations with integer-frequency
//! parameterisation are trigonometric polynomials on a bounded frequency
//! lattice. This crate samples them (exact statevector QAOA/MaxCut oracle or
//! finite-shot estimates), reconstructs them by full-grid DFT or by basis
//! pursuit denoising from few random grid samples, and evaluates Clifford
//! variational circuits in closed form by Heisenberg propagation.

pub mod circuit;
pub mod clifford;
pub mod error;
pub mod experiments;
pub mod fft;
pub mod oracle;
pub mod pauli;
pub mod qaoa;
pub mod sparse_recovery;
pub mod spectral;
pub mod statevector;
pub mod trigpoly;

pub use error::{Error, Result};
pub use oracle::Oracle;
pub use trigpoly::{FrequencyLattice, FrequencyVector, TrigPoly};
