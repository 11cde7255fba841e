//! Simulation backends: Monte Carlo trajectories, exact density matrices and
//! branch enumeration for noiseless dynamic circuits.

pub mod branch;
pub mod density;
pub mod state;
pub mod trajectory;

pub use branch::{
    channel_on_data, circuit_unitary, enumerate_branches, gate_only_state, statevector_expectation,
    BranchOutcome, ChannelOnData,
};
pub use density::{dm_evolve, DensityResult};
pub use state::StateVector;
pub use trajectory::{run_shots, run_trajectory, Executable, Histogram, ShotRecord};
