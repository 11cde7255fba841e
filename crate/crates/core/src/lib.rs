//! Dynamic-circuit construction, noisy simulation and error mitigation for
//! variational and Trotterized spin-chain workloads.

pub mod builders;
pub mod circuit;
pub mod error;
pub mod hamiltonian;
mod linalg;
pub mod mitigation;
pub mod noise;
pub mod sim;
pub mod vqe;

pub use error::{Error, Result};
