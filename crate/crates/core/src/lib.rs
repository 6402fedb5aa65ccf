//! Discrete-event simulation of an offer-based cluster scheduler that places
//! gangs of containerized MPI processes.

pub mod calibrate;
pub mod commands;
pub mod drf;
pub mod engine;
pub mod error;
pub mod generate;
pub mod metrics;
pub mod placement;
pub mod profile;
pub mod resources;
pub mod scenario;
pub mod workload;

pub use engine::{run_scenario, run_scenario_traced, Scenario, SchedulingMode};
pub use error::{LoadError, SimError};
pub use metrics::MetricsReport;
pub use placement::PlacementPolicy;
pub use profile::CalibrationProfile;
pub use resources::{ClusterState, ResourceVector};
