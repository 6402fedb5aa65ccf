use std::path::PathBuf;

use thiserror::Error;

use crate::resources::{NodeId, ResourceVector};
use crate::workload::JobId;

/// Errors raised by the models and the simulation engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("capacity exceeded on node {node}: demand {demand} > available {available}")]
    CapacityExceeded {
        node: NodeId,
        demand: ResourceVector,
        available: ResourceVector,
    },
    #[error("cluster total has a zero component")]
    ZeroClusterTotal,
    #[error("insufficient capacity: {needed} containers requested, {available} placeable")]
    InsufficientCapacity { needed: u32, available: u64 },
    #[error("invalid scenario: {0}")]
    ScenarioInvalid(String),
    #[error("deadlock: job {job_id} can never fit even on an empty cluster")]
    Deadlock { job_id: JobId },
    #[error("no utilization samples recorded")]
    EmptyRun,
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

/// Errors raised while loading scenario or calibration files.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: schema error at `{key}`: {message}")]
    Schema {
        path: PathBuf,
        key: String,
        message: String,
    },
    #[error("{path}: validation error at `{field}`: {message}")]
    Validation {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("calibration profile `{name}` not found (searched {searched})")]
    ProfileNotFound { name: String, searched: String },
}
