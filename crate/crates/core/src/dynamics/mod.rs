//! Real-time integration of the coupled condensate/cavity equations.

pub mod integrator;
pub mod rhs;
pub mod slips;
pub mod snapshot;
pub mod trajectory;

pub use integrator::{ComplexOde, Dopri5, ExponentialMidpoint, StepStats};
pub use rhs::{coupled_rhs, mean_field_matrix, MeanFieldSystem};
pub use slips::{detect_phase_slips, PhaseSlip};
pub use snapshot::{read_snapshot, write_snapshot};
pub use trajectory::{
    default_initial_state, evolve_meanfield, IntegratorConfig, Method, Observables, Trajectory,
    DEFAULT_SEED_AMPLITUDE,
};
