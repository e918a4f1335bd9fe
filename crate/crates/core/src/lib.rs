//! Generalized Feynman–Kac (GFK) ground-state sampling for N bosons in a 1D
//! harmonic trap with attractive Gaussian-regularized contact interactions.
//!
//! Units are ħ = m = ω = 1 throughout, except in [`units`].

pub mod config;
pub mod error;
pub mod estimator;
pub mod model;
pub mod observables;
pub mod output;
pub mod regularization;
pub mod runner;
pub mod sampler;
pub mod theory;
pub mod units;

pub use config::{parse_config, RunSpec};
pub use error::{Error, Result};
pub use estimator::{gfk_expectation, ground_energy, EstimatorResult, WeightingMode, Window};
pub use model::{CouplingMode, ModelConfig};
pub use observables::{Observable, PairMode};
pub use runner::{run, RunOutput};
pub use sampler::{generate_trajectories, IncrementKind, InitMode, SamplerConfig, TrajectorySet};
