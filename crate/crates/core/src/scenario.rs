//! JSON scenario files.
//!
//! ```json
//! {
//!   "cluster": {"nodes": 6, "cpus_per_node": 48, "mem_mib_per_node": 126976},
//!   "jobs": [{"name": "minife", "n": 24, "cpus": 2, "mem_mib": 4096,
//!             "compute_per_iter_s": 1.0, "iterations": 100, "mem_intensity": 0.8,
//!             "comm_volume_mib": 0, "arrival_s": 0}],
//!   "policy": "spread",
//!   "mode": "coscheduled",
//!   "calibration": "chameleon-2017"
//! }
//! ```
//!
//! `cluster.nodes` counts worker nodes; a head node of the same size is added
//! as node 0 and never receives containers. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::engine::{ClusterSpec, JobArrival, Scenario, SchedulingMode};
use crate::error::LoadError;
use crate::placement::PlacementPolicy;
use crate::profile::{load_profile, CalibrationProfile, DEFAULT_PROFILE};
use crate::resources::ResourceVector;
use crate::workload::{JobSpec, WorkloadProfile};

pub const DEFAULT_EPOCH_MS: u64 = 1000;
pub const DEFAULT_SAMPLE_MS: u64 = 1000;

const TOP_KEYS: [&str; 8] = ["cluster", "jobs", "policy", "mode", "calibration", "epoch_ms", "sample_ms", "seed"];
const TOP_REQUIRED: [&str; 3] = ["cluster", "jobs", "policy"];
const CLUSTER_KEYS: [&str; 3] = ["nodes", "cpus_per_node", "mem_mib_per_node"];
const JOB_KEYS: [&str; 9] = [
    "name",
    "n",
    "cpus",
    "mem_mib",
    "compute_per_iter_s",
    "iterations",
    "mem_intensity",
    "comm_volume_mib",
    "arrival_s",
];
const JOB_REQUIRED: [&str; 7] = ["name", "n", "cpus", "mem_mib", "compute_per_iter_s", "iterations", "mem_intensity"];

/// Raw file contents before validation.
#[derive(Clone, Debug, Deserialize)]
pub struct ScenarioFile {
    pub cluster: ClusterFile,
    pub jobs: Vec<JobFile>,
    pub policy: String,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_calibration")]
    pub calibration: String,
    #[serde(default = "default_epoch")]
    pub epoch_ms: i64,
    #[serde(default = "default_sample")]
    pub sample_ms: i64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ClusterFile {
    pub nodes: i64,
    pub cpus_per_node: f64,
    pub mem_mib_per_node: i64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct JobFile {
    pub name: String,
    pub n: i64,
    pub cpus: f64,
    pub mem_mib: i64,
    pub compute_per_iter_s: f64,
    pub iterations: i64,
    pub mem_intensity: f64,
    #[serde(default)]
    pub comm_volume_mib: f64,
    #[serde(default)]
    pub arrival_s: f64,
}

fn default_mode() -> String {
    "coscheduled".into()
}

fn default_calibration() -> String {
    DEFAULT_PROFILE.into()
}

fn default_epoch() -> i64 {
    DEFAULT_EPOCH_MS as i64
}

fn default_sample() -> i64 {
    DEFAULT_SAMPLE_MS as i64
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], required: &[&str], prefix: &str, path: &Path) -> Result<(), LoadError> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(LoadError::Schema {
                path: path.to_path_buf(),
                key: format!("{}{}", prefix, key),
                message: "unknown key".into(),
            });
        }
    }
    for key in required {
        if !obj.contains_key(*key) {
            return Err(LoadError::Schema {
                path: path.to_path_buf(),
                key: format!("{}{}", prefix, key),
                message: "missing key".into(),
            });
        }
    }
    Ok(())
}

fn schema(path: &Path, key: &str, message: &str) -> LoadError {
    LoadError::Schema {
        path: path.to_path_buf(),
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn check_schema(doc: &Value, path: &Path) -> Result<(), LoadError> {
    let top = doc.as_object().ok_or_else(|| schema(path, "<root>", "expected an object"))?;
    check_keys(top, &TOP_KEYS, &TOP_REQUIRED, "", path)?;
    let cluster = top["cluster"]
        .as_object()
        .ok_or_else(|| schema(path, "cluster", "expected an object"))?;
    check_keys(cluster, &CLUSTER_KEYS, &CLUSTER_KEYS, "cluster.", path)?;
    let jobs = top["jobs"].as_array().ok_or_else(|| schema(path, "jobs", "expected an array"))?;
    for (i, job) in jobs.iter().enumerate() {
        let prefix = format!("jobs[{}].", i);
        let obj = job
            .as_object()
            .ok_or_else(|| schema(path, &format!("jobs[{}]", i), "expected an object"))?;
        check_keys(obj, &JOB_KEYS, &JOB_REQUIRED, &prefix, path)?;
    }
    Ok(())
}

impl ScenarioFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, LoadError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| LoadError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        check_schema(&doc, path)?;
        serde_json::from_value(doc).map_err(|e| LoadError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Validate and convert, resolving the calibration profile with `resolve`.
    pub fn into_scenario<F>(self, path: &Path, resolve: F) -> Result<Scenario, LoadError>
    where
        F: FnOnce(&str) -> Result<CalibrationProfile, LoadError>,
    {
        let invalid = |field: String, message: &str| LoadError::Validation {
            path: path.to_path_buf(),
            field,
            message: message.to_string(),
        };
        let c = &self.cluster;
        if c.nodes < 1 || c.nodes > u32::MAX as i64 {
            return Err(invalid("cluster.nodes".into(), "must be >= 1"));
        }
        if !(c.cpus_per_node.is_finite() && c.cpus_per_node >= 0.0) {
            return Err(invalid("cluster.cpus_per_node".into(), "must be a non-negative number"));
        }
        if c.mem_mib_per_node < 0 {
            return Err(invalid("cluster.mem_mib_per_node".into(), "must be >= 0"));
        }
        let capacity = ResourceVector::from_cpus(c.cpus_per_node, c.mem_mib_per_node as u64);
        if !capacity.any_positive() {
            return Err(invalid("cluster".into(), "node capacity must be positive"));
        }
        if self.jobs.is_empty() {
            return Err(invalid("jobs".into(), "at least one job is required"));
        }
        let policy: PlacementPolicy = self.policy.parse().map_err(|m: String| invalid("policy".into(), &m))?;
        let mode: SchedulingMode = self.mode.parse().map_err(|m: String| invalid("mode".into(), &m))?;
        if self.epoch_ms < 1 {
            return Err(invalid("epoch_ms".into(), "must be >= 1"));
        }
        if self.sample_ms < 1 {
            return Err(invalid("sample_ms".into(), "must be >= 1"));
        }

        let mut jobs = Vec::with_capacity(self.jobs.len());
        for (i, j) in self.jobs.iter().enumerate() {
            let field = |k: &str| format!("jobs[{}].{}", i, k);
            if j.n < 1 || j.n > u32::MAX as i64 {
                return Err(invalid(field("n"), "must be >= 1"));
            }
            if !(j.cpus.is_finite() && j.cpus >= 0.0) {
                return Err(invalid(field("cpus"), "must be a non-negative number"));
            }
            if j.mem_mib < 0 {
                return Err(invalid(field("mem_mib"), "must be >= 0"));
            }
            let demand = ResourceVector::from_cpus(j.cpus, j.mem_mib as u64);
            if !demand.any_positive() {
                return Err(invalid(field("cpus"), "cpus and mem_mib cannot both be zero"));
            }
            if !(j.compute_per_iter_s.is_finite() && j.compute_per_iter_s >= 0.0) {
                return Err(invalid(field("compute_per_iter_s"), "must be >= 0"));
            }
            if j.iterations < 1 || j.iterations > u32::MAX as i64 {
                return Err(invalid(field("iterations"), "must be >= 1"));
            }
            if !(0.0..=1.0).contains(&j.mem_intensity) {
                return Err(invalid(field("mem_intensity"), "must lie in [0, 1]"));
            }
            if !(j.comm_volume_mib.is_finite() && j.comm_volume_mib >= 0.0) {
                return Err(invalid(field("comm_volume_mib"), "must be >= 0"));
            }
            if !(j.arrival_s.is_finite() && j.arrival_s >= 0.0) {
                return Err(invalid(field("arrival_s"), "must be >= 0"));
            }
            jobs.push(JobArrival {
                spec: JobSpec {
                    job_id: i as u32,
                    name: j.name.clone(),
                    n: j.n as u32,
                    demand,
                    profile: WorkloadProfile {
                        compute_per_iter_s: j.compute_per_iter_s,
                        iterations: j.iterations as u32,
                        mem_intensity: j.mem_intensity,
                        comm_volume_mib: j.comm_volume_mib,
                    },
                },
                arrival_ms: (j.arrival_s * 1000.0).round() as u64,
            });
        }

        let profile = resolve(&self.calibration)?;
        Ok(Scenario {
            cluster: ClusterSpec {
                workers: c.nodes as u32,
                node_capacity: capacity,
                head_capacity: capacity,
            },
            jobs,
            policy,
            mode,
            profile,
            epoch_ms: self.epoch_ms as u64,
            sample_ms: self.sample_ms as u64,
            seed: self.seed,
        })
    }
}

/// Parse and validate scenario text; `path` is used in diagnostics only.
pub fn parse_scenario(text: &str, path: &Path) -> Result<Scenario, LoadError> {
    ScenarioFile::parse(text, path)?.into_scenario(path, load_profile)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, path)
}

/// Scenarios bundled with the crate.
pub mod shipped {
    use super::*;

    pub const POLICY_AB_MINIFE: &str = include_str!("../scenarios/policy_ab_minife.json");
    pub const POLICY_AB_HP2P: &str = include_str!("../scenarios/policy_ab_hp2p.json");
    pub const COSCHEDULE_MINIFE_X10: &str = include_str!("../scenarios/coschedule_minife_x10.json");
    pub const OVERHEAD_SWEEP: &str = include_str!("../scenarios/overhead_sweep.json");
    pub const SINGLE_JOB: &str = include_str!("../scenarios/single_job.json");

    pub const ALL: [(&str, &str); 5] = [
        ("policy_ab_minife", POLICY_AB_MINIFE),
        ("policy_ab_hp2p", POLICY_AB_HP2P),
        ("coschedule_minife_x10", COSCHEDULE_MINIFE_X10),
        ("overhead_sweep", OVERHEAD_SWEEP),
        ("single_job", SINGLE_JOB),
    ];

    /// A shipped scenario evaluated under `profile`.
    pub fn load_with(name: &str, profile: &CalibrationProfile) -> Result<Scenario, LoadError> {
        let text = ALL
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| LoadError::Parse {
                path: name.into(),
                message: "no such shipped scenario".into(),
            })?;
        let path = Path::new(name);
        ScenarioFile::parse(text, path)?.into_scenario(path, |_| Ok(profile.clone()))
    }

    /// A shipped scenario with the builtin calibration.
    pub fn load(name: &str) -> Result<Scenario, LoadError> {
        load_with(name, &CalibrationProfile::chameleon_2017())
    }
}
