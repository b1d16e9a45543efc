//! Simulation and analysis of a transversely pumped Bose–Einstein condensate
//! coupled to a single lossy cavity mode with a red-detuned pump.
//!
//! The numerical core is generic over the scalar type (see [`Real`]); the
//! aliases at the crate root fix it to `f64`, which is what the command-line
//! tool and the sweep machinery use.

pub mod classify;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod model;
pub mod scalar;
pub mod stability;
pub mod steady;
pub mod sweep;
pub mod twa;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Params = model::ModelParams<f64>;
pub type Condensate = model::CondensateState<f64>;
pub type State = model::SystemState<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;
pub type IntegratorConfig = dynamics::IntegratorConfig<f64>;
pub type SteadyState = steady::SteadyState<f64>;
pub type StabilityReport = stability::StabilityReport<f64>;
pub type IntensitySpectrum = classify::IntensitySpectrum<f64>;
pub type Classification = classify::Classification<f64>;
pub type Orbit = classify::Orbit<f64>;
pub type EnsembleConfig = twa::EnsembleConfig<f64>;
pub type EnsembleStats = twa::EnsembleStats<f64>;

pub use classify::PhaseLabel;
pub use config::RunConfig;
