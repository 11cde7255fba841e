//! Dynamical decoupling, zero-noise extrapolation and improvement metrics.

mod dd;
mod metrics;
mod zne;

pub use dd::{insert_dd, DDPolicy, DDResult};
pub use metrics::{
    gap_guard, improvement_percent, median, FoldEnergy, Improvements, MitigationOutcome,
};
pub use zne::{zne_extrapolate, FitKind, ZNEConfig, ZneFit, ZnePoint};
