//! Seeded random scenarios for fuzzing the engine.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{ClusterSpec, JobArrival, Scenario, SchedulingMode};
use crate::placement::{max_containers, PlacementPolicy};
use crate::profile::CalibrationProfile;
use crate::resources::ResourceVector;
use crate::workload::{JobSpec, WorkloadProfile};

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub max_workers: u32,
    pub max_jobs: u32,
    pub max_containers: u32,
    /// Latest arrival, in seconds.
    pub arrival_span_s: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            max_workers: 6,
            max_jobs: 8,
            max_containers: 24,
            arrival_span_s: 60,
        }
    }
}

/// A feasible scenario drawn from `seed`: every job fits on the empty
/// cluster, so runs never deadlock.
pub fn random_scenario(seed: u64, params: &GenParams, profile: &CalibrationProfile) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let workers = rng.gen_range(1..=params.max_workers.max(1));
    let capacity = ResourceVector::new(rng.gen_range(2..=64) * 1000, rng.gen_range(1..=128) * 1024);
    let room = |demand: &ResourceVector| max_containers(&capacity, demand) * workers as u64;

    let job_count = rng.gen_range(1..=params.max_jobs.max(1));
    let mut jobs = Vec::with_capacity(job_count as usize);
    while jobs.len() < job_count as usize {
        let demand = ResourceVector::new(
            rng.gen_range(0..=capacity.milli_cpus / 500) * 500,
            rng.gen_range(0..=capacity.mem_mib / 256) * 256,
        );
        let fit = room(&demand);
        if !demand.any_positive() || fit == 0 {
            continue;
        }
        let n = rng.gen_range(1..=fit.min(params.max_containers as u64)) as u32;
        let job_id = jobs.len() as u32;
        jobs.push(JobArrival {
            spec: JobSpec {
                job_id,
                name: format!("job{}", job_id),
                n,
                demand,
                profile: WorkloadProfile {
                    compute_per_iter_s: rng.gen_range(0.0..2.0),
                    iterations: rng.gen_range(1..=20),
                    mem_intensity: rng.gen_range(0.0..=1.0),
                    comm_volume_mib: *[0.0, 1.0, 64.0, 512.0].choose(&mut rng).unwrap_or(&0.0),
                },
            },
            arrival_ms: rng.gen_range(0..=params.arrival_span_s * 1000),
        });
    }

    Scenario {
        cluster: ClusterSpec {
            workers,
            node_capacity: capacity,
            head_capacity: capacity,
        },
        jobs,
        policy: *[PlacementPolicy::Spread, PlacementPolicy::MinHost]
            .choose(&mut rng)
            .unwrap_or(&PlacementPolicy::Spread),
        mode: *[SchedulingMode::CoScheduled, SchedulingMode::Exclusive]
            .choose(&mut rng)
            .unwrap_or(&SchedulingMode::CoScheduled),
        profile: profile.clone(),
        epoch_ms: *[250, 1000, 3000].choose(&mut rng).unwrap_or(&1000),
        sample_ms: *[500, 1000, 2000].choose(&mut rng).unwrap_or(&1000),
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scenario() {
        let p = CalibrationProfile::chameleon_2017();
        let g = GenParams::default();
        assert_eq!(random_scenario(7, &g, &p), random_scenario(7, &g, &p));
        assert_ne!(random_scenario(7, &g, &p), random_scenario(8, &g, &p));
    }

    #[test]
    fn generated_scenarios_validate() {
        let p = CalibrationProfile::chameleon_2017();
        for seed in 0..200 {
            random_scenario(seed, &GenParams::default(), &p).validate().unwrap();
        }
    }
}
