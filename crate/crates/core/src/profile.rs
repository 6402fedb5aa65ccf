//! Calibration profiles: the fitted model constants, stored as flat
//! `key = value` text.
//!
//! ```text
//! # comment
//! alpha = 0.03
//! base_s = 12
//! per_container_s = 0.5
//! intra_latency_us = 50
//! inter_latency_us = 200
//! intra_bw_mibs = 8192
//! inter_bw_mibs = 5400
//! ```

use std::collections::BTreeMap;
use std::env;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::LoadError;
use crate::workload::{NetworkModel, OverheadModel};

/// Environment variable that overrides the profile search path.
pub const PROFILE_DIR_ENV: &str = "SCYLLA_SIM_PROFILE_DIR";

pub const DEFAULT_PROFILE: &str = "chameleon-2017";

const BUILTIN_CHAMELEON: &str = include_str!("../profiles/chameleon-2017.profile");

const KEYS: [&str; 7] = [
    "alpha",
    "base_s",
    "per_container_s",
    "intra_latency_us",
    "inter_latency_us",
    "intra_bw_mibs",
    "inter_bw_mibs",
];

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationProfile {
    pub name: String,
    /// Memory-contention coefficient.
    pub alpha: f64,
    pub overhead: OverheadModel,
    pub network: NetworkModel,
}

impl CalibrationProfile {
    pub fn parse(name: &str, text: &str, origin: &Path) -> Result<Self, LoadError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| LoadError::Parse {
                path: origin.to_path_buf(),
                message: format!("line {}: expected `key = value`", lineno + 1),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(LoadError::Schema {
                    path: origin.to_path_buf(),
                    key: key.to_string(),
                    message: "unknown profile key".into(),
                });
            }
            let value: f64 = value.trim().parse().map_err(|_| LoadError::Parse {
                path: origin.to_path_buf(),
                message: format!("line {}: `{}` is not a decimal number", lineno + 1, value.trim()),
            })?;
            if values.insert(key, value).is_some() {
                return Err(LoadError::Schema {
                    path: origin.to_path_buf(),
                    key: key.to_string(),
                    message: "duplicate key".into(),
                });
            }
        }
        let get = |key: &str| {
            values.get(key).copied().ok_or_else(|| LoadError::Schema {
                path: origin.to_path_buf(),
                key: key.to_string(),
                message: "missing key".into(),
            })
        };
        let profile = CalibrationProfile {
            name: name.to_string(),
            alpha: get("alpha")?,
            overhead: OverheadModel {
                base_s: get("base_s")?,
                per_container_s: get("per_container_s")?,
            },
            network: NetworkModel {
                intra_latency_us: get("intra_latency_us")?,
                inter_latency_us: get("inter_latency_us")?,
                intra_bw_mibs: get("intra_bw_mibs")?,
                inter_bw_mibs: get("inter_bw_mibs")?,
            },
        };
        profile.validate().map_err(|(field, message)| LoadError::Validation {
            path: origin.to_path_buf(),
            field,
            message,
        })?;
        Ok(profile)
    }

    fn validate(&self) -> Result<(), (String, String)> {
        let non_negative = [
            ("alpha", self.alpha),
            ("base_s", self.overhead.base_s),
            ("per_container_s", self.overhead.per_container_s),
        ];
        for (key, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err((key.into(), "must be a non-negative number".into()));
            }
        }
        self.network
            .validate()
            .map_err(|m| ("network".to_string(), m))
    }

    /// Canonical text form; parsing it yields the same profile.
    pub fn to_text(&self) -> String {
        let mut out = format!("# calibration profile {}\n", self.name);
        let vals = [
            self.alpha,
            self.overhead.base_s,
            self.overhead.per_container_s,
            self.network.intra_latency_us,
            self.network.inter_latency_us,
            self.network.intra_bw_mibs,
            self.network.inter_bw_mibs,
        ];
        for (k, v) in KEYS.iter().zip(vals) {
            let _ = writeln!(out, "{} = {}", k, v);
        }
        out
    }

    /// The shipped default profile.
    pub fn chameleon_2017() -> Self {
        Self::parse(DEFAULT_PROFILE, BUILTIN_CHAMELEON, Path::new("<builtin>"))
            .expect("builtin profile is valid")
    }
}

/// Directories searched for `<name>.profile`: `$SCYLLA_SIM_PROFILE_DIR` when
/// set, otherwise `./profiles`.
pub fn profile_search_path() -> Vec<PathBuf> {
    match env::var_os(PROFILE_DIR_ENV) {
        Some(dir) if !dir.is_empty() => vec![PathBuf::from(dir)],
        _ => vec![PathBuf::from("profiles")],
    }
}

/// Resolve a profile by name. Without an override directory, the shipped
/// `chameleon-2017` profile is always available.
pub fn load_profile(name: &str) -> Result<CalibrationProfile, LoadError> {
    load_profile_from(name, &profile_search_path(), env::var_os(PROFILE_DIR_ENV).is_none())
}

pub fn load_profile_from(name: &str, dirs: &[PathBuf], allow_builtin: bool) -> Result<CalibrationProfile, LoadError> {
    for dir in dirs {
        let path = dir.join(format!("{}.profile", name));
        match fs::read_to_string(&path) {
            Ok(text) => return CalibrationProfile::parse(name, &text, &path),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
            Err(source) => return Err(LoadError::Io { path, source }),
        }
    }
    if allow_builtin && name == DEFAULT_PROFILE {
        return Ok(CalibrationProfile::chameleon_2017());
    }
    Err(LoadError::ProfileNotFound {
        name: name.to_string(),
        searched: dirs
            .iter()
            .map(|d| d.display().to_string())
            .collect::<Vec<_>>()
            .join(", "),
    })
}
