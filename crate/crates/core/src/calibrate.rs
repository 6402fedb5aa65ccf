//! Grid-search fitter for calibration profiles.
//!
//! Four constants are fitted: `alpha`, `per_container_s`, the
//! inter/intra latency ratio and `inter_bw_mibs`. The start-up base, intra
//! latency and intra bandwidth stay fixed. Each candidate is scored by its
//! worst tolerance-normalized residual; a score of at most 1 meets every
//! target.
//!
//! The compute targets (MiniFE policy gain, overhead fraction) run on
//! scenarios without communication, and the network targets depend on no
//! compute constant, so the two sub-grids are searched independently.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::engine::{run_scenario, Scenario};
use crate::error::{LoadError, SimError};
use crate::placement::PlacementPolicy;
use crate::profile::CalibrationProfile;
use crate::scenario::shipped;
use crate::workload::{comm_cost_for_counts, NetworkModel, OverheadModel};

pub const DEFAULT_TARGETS: &str = include_str!("../calibration/targets.json");

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub value: f64,
    pub tolerance: f64,
}

impl Target {
    fn residual(&self, achieved: f64) -> f64 {
        (achieved - self.value).abs() / self.tolerance
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedConstants {
    pub base_s: f64,
    pub intra_latency_us: f64,
    pub intra_bw_mibs: f64,
}

impl Default for FixedConstants {
    fn default() -> Self {
        Self {
            base_s: 10.0,
            intra_latency_us: 50.0,
            intra_bw_mibs: 8192.0,
        }
    }
}

/// Relative improvements the fitted profile must reproduce, as fractions.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Targets {
    /// `1 - runtime(Spread) / runtime(MinHost)` on the MiniFE A/B scenario.
    pub minife_spread_gain: Target,
    /// `1 - latency(MinHost) / latency(Spread)` on the HP2P A/B scenario.
    pub hp2p_minhost_gain: Target,
    /// `overhead / total` for the 16-container job on 4 hosts.
    pub overhead_fraction: Target,
    /// Relative rise of balanced 32-process pair latency from 2 to 4 hosts.
    pub latency_rise_2_to_4: Target,
    #[serde(default)]
    pub fixed: FixedConstants,
}

impl Targets {
    pub fn parse(text: &str, path: &Path) -> Result<Self, LoadError> {
        let t: Targets = serde_json::from_str(text).map_err(|e| LoadError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        for (field, target) in t.named() {
            if !(target.value.is_finite() && target.tolerance.is_finite() && target.tolerance > 0.0) {
                return Err(LoadError::Validation {
                    path: path.to_path_buf(),
                    field: field.to_string(),
                    message: "value must be finite and tolerance positive".into(),
                });
            }
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn shipped() -> Self {
        Self::parse(DEFAULT_TARGETS, Path::new("<builtin targets>")).expect("builtin targets are valid")
    }

    fn named(&self) -> [(&'static str, Target); 4] {
        [
            ("minife_spread_gain", self.minife_spread_gain),
            ("hp2p_minhost_gain", self.hp2p_minhost_gain),
            ("overhead_fraction", self.overhead_fraction),
            ("latency_rise_2_to_4", self.latency_rise_2_to_4),
        ]
    }
}

/// The four ratios a profile produces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Achieved {
    pub minife_spread_gain: f64,
    pub hp2p_minhost_gain: f64,
    pub overhead_fraction: f64,
    pub latency_rise_2_to_4: f64,
}

impl Achieved {
    pub fn residuals(&self, t: &Targets) -> [f64; 4] {
        [
            t.minife_spread_gain.residual(self.minife_spread_gain),
            t.hp2p_minhost_gain.residual(self.hp2p_minhost_gain),
            t.overhead_fraction.residual(self.overhead_fraction),
            t.latency_rise_2_to_4.residual(self.latency_rise_2_to_4),
        ]
    }

    pub fn score(&self, t: &Targets) -> f64 {
        self.residuals(t).into_iter().fold(0.0, f64::max)
    }

    pub fn report(&self, t: &Targets) -> String {
        let vals = [
            self.minife_spread_gain,
            self.hp2p_minhost_gain,
            self.overhead_fraction,
            self.latency_rise_2_to_4,
        ];
        let mut out = String::new();
        for ((name, target), v) in t.named().iter().zip(vals) {
            let _ = writeln!(
                out,
                "{:<22} achieved={:.4} target={:.4} tolerance={:.4} residual={:.3}",
                name,
                v,
                target.value,
                target.tolerance,
                target.residual(v)
            );
        }
        out
    }
}

struct Fixtures {
    minife: Scenario,
    hp2p: Scenario,
    overhead: Scenario,
}

impl Fixtures {
    fn new(profile: &CalibrationProfile) -> Result<Self, SimError> {
        let load = |name: &str| shipped::load_with(name, profile).map_err(|e| SimError::ScenarioInvalid(e.to_string()));
        let mut overhead = load("overhead_sweep")?;
        overhead.cluster.workers = 4;
        Ok(Self {
            minife: load("policy_ab_minife")?,
            hp2p: load("policy_ab_hp2p")?,
            overhead,
        })
    }

    fn with_profile(&mut self, p: &CalibrationProfile) {
        for s in [&mut self.minife, &mut self.hp2p, &mut self.overhead] {
            s.profile = p.clone();
        }
    }
}

fn with_policy(s: &Scenario, policy: PlacementPolicy) -> Scenario {
    Scenario {
        policy,
        ..s.clone()
    }
}

fn minife_gain(f: &Fixtures) -> Result<f64, SimError> {
    let spread = run_scenario(&with_policy(&f.minife, PlacementPolicy::Spread))?.mean_total_s();
    let minhost = run_scenario(&with_policy(&f.minife, PlacementPolicy::MinHost))?.mean_total_s();
    Ok(1.0 - spread / minhost)
}

fn overhead_fraction(f: &Fixtures) -> Result<f64, SimError> {
    let r = run_scenario(&f.overhead)?;
    let j = &r.per_job[0];
    Ok(j.overhead_s / j.total_s)
}

fn hp2p_gain(f: &Fixtures) -> Result<f64, SimError> {
    let minhost = run_scenario(&with_policy(&f.hp2p, PlacementPolicy::MinHost))?.mean_avg_pair_latency_us();
    let spread = run_scenario(&with_policy(&f.hp2p, PlacementPolicy::Spread))?.mean_avg_pair_latency_us();
    Ok(1.0 - minhost / spread)
}

/// Balanced placement of `n` processes over `hosts` hosts.
pub fn balanced_counts(n: u32, hosts: u32) -> Vec<u32> {
    (0..hosts).map(|h| n / hosts + u32::from(h < n % hosts)).collect()
}

/// Average pair latency of a balanced `n`-process placement on `hosts` hosts.
pub fn balanced_latency_us(n: u32, hosts: u32, volume_mib: f64, net: &NetworkModel) -> f64 {
    comm_cost_for_counts(&balanced_counts(n, hosts), volume_mib, net).avg_pair_latency_us
}

fn latency_rise(f: &Fixtures, net: &NetworkModel) -> f64 {
    let job = &f.hp2p.jobs[0].spec;
    let vol = job.profile.comm_volume_mib;
    balanced_latency_us(job.n, 4, vol, net) / balanced_latency_us(job.n, 2, vol, net) - 1.0
}

/// The four ratios under `profile`.
pub fn measure(profile: &CalibrationProfile) -> Result<Achieved, SimError> {
    let f = Fixtures::new(profile)?;
    Ok(Achieved {
        minife_spread_gain: minife_gain(&f)?,
        hp2p_minhost_gain: hp2p_gain(&f)?,
        overhead_fraction: overhead_fraction(&f)?,
        latency_rise_2_to_4: latency_rise(&f, &profile.network),
    })
}

/// Grid axes, walked in this order.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub alpha: Vec<f64>,
    pub per_container_s: Vec<f64>,
    pub latency_ratio: Vec<f64>,
    pub inter_bw_mibs: Vec<f64>,
}

fn steps(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            alpha: steps(0.0, 0.001, 61),
            per_container_s: steps(0.05, 0.05, 20),
            latency_ratio: steps(1.0, 1.0, 8),
            inter_bw_mibs: steps(4096.0, 16.0, 257),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fit {
    pub profile: CalibrationProfile,
    pub achieved: Achieved,
    pub score: f64,
}

impl Fit {
    pub fn feasible(&self) -> bool {
        self.score <= 1.0
    }
}

fn best_by<T: Copy>(candidates: impl Iterator<Item = Result<(T, f64), SimError>>) -> Result<Option<(T, f64)>, SimError> {
    let mut best: Option<(T, f64)> = None;
    for c in candidates {
        let (v, score) = c?;
        if best.is_none_or(|(_, b)| score < b) {
            best = Some((v, score));
        }
    }
    Ok(best)
}

/// Deterministic grid search; returns the best point found whether or not it
/// meets every tolerance.
pub fn fit(targets: &Targets, grid: &Grid, name: &str) -> Result<Fit, SimError> {
    let fixed = targets.fixed;
    let mut profile = CalibrationProfile {
        name: name.to_string(),
        alpha: 0.0,
        overhead: OverheadModel {
            base_s: fixed.base_s,
            per_container_s: 0.0,
        },
        network: NetworkModel {
            intra_latency_us: fixed.intra_latency_us,
            inter_latency_us: fixed.intra_latency_us,
            intra_bw_mibs: fixed.intra_bw_mibs,
            inter_bw_mibs: fixed.intra_bw_mibs,
        },
    };
    let mut fixtures = Fixtures::new(&profile)?;

    let compute_points = grid
        .alpha
        .iter()
        .flat_map(|&a| grid.per_container_s.iter().map(move |&pc| (a, pc)));
    let compute = best_by(compute_points.map(|(alpha, pc)| {
        let mut p = profile.clone();
        p.alpha = alpha;
        p.overhead.per_container_s = pc;
        fixtures.with_profile(&p);
        let score = targets
            .minife_spread_gain
            .residual(minife_gain(&fixtures)?)
            .max(targets.overhead_fraction.residual(overhead_fraction(&fixtures)?));
        Ok(((alpha, pc), score))
    }))?;

    let network_points = grid
        .latency_ratio
        .iter()
        .flat_map(|&r| grid.inter_bw_mibs.iter().map(move |&bw| (r, bw)));
    let network = best_by(network_points.map(|(ratio, bw)| {
        let mut p = profile.clone();
        p.network.inter_latency_us = fixed.intra_latency_us * ratio;
        p.network.inter_bw_mibs = bw;
        fixtures.with_profile(&p);
        let score = targets
            .hp2p_minhost_gain
            .residual(hp2p_gain(&fixtures)?)
            .max(targets.latency_rise_2_to_4.residual(latency_rise(&fixtures, &p.network)));
        Ok(((ratio, bw), score))
    }))?;

    let (Some(((alpha, pc), _)), Some(((ratio, bw), _))) = (compute, network) else {
        return Err(SimError::ScenarioInvalid("calibration grid is empty".into()));
    };
    profile.alpha = alpha;
    profile.overhead.per_container_s = pc;
    profile.network.inter_latency_us = fixed.intra_latency_us * ratio;
    profile.network.inter_bw_mibs = bw;
    let achieved = measure(&profile)?;
    Ok(Fit {
        score: achieved.score(targets),
        profile,
        achieved,
    })
}
