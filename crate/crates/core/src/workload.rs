//! Analytic job models: container start-up overhead, memory contention and
//! overlay-network communication cost.
//!
//! Communication is an all-to-all exchange of `comm_volume_mib` per ordered
//! process pair per iteration. A pair on the same host pays the intra-host
//! latency and copies at `intra_bw`. A pair on different hosts pays the
//! inter-host latency and moves its payload at `inter_bw`, slowed by the link
//! load of the busier of the two hosts:
//!
//! ```text
//! link_load(host) = c * (n - c) / (n - 1)^2
//! ```
//!
//! where `c` is the job's container count on that host. `c * (n - c)` is the
//! number of process pairs the host's link carries; the normalisation keeps
//! the model independent of job size, so doubling both the process count and
//! the payload preserves the latency-versus-host-count curve.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::placement::Placement;
use crate::resources::{NodeId, ResourceVector};

pub type JobId = u32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    /// Seconds of per-process compute per iteration with no contention.
    pub compute_per_iter_s: f64,
    pub iterations: u32,
    /// Fraction in `[0, 1]`; how strongly co-located containers slow compute.
    pub mem_intensity: f64,
    /// MiB sent per ordered process pair per iteration.
    pub comm_volume_mib: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobSpec {
    pub job_id: JobId,
    pub name: String,
    /// Gang size: number of MPI processes, one container each.
    pub n: u32,
    pub demand: ResourceVector,
    pub profile: WorkloadProfile,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub intra_latency_us: f64,
    pub inter_latency_us: f64,
    pub intra_bw_mibs: f64,
    pub inter_bw_mibs: f64,
}

impl NetworkModel {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.intra_latency_us,
            self.inter_latency_us,
            self.intra_bw_mibs,
            self.inter_bw_mibs,
        ];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err("network parameters must be positive".into());
        }
        if self.inter_latency_us < self.intra_latency_us {
            return Err("inter_latency_us must be >= intra_latency_us".into());
        }
        if self.inter_bw_mibs > self.intra_bw_mibs {
            return Err("inter_bw_mibs must be <= intra_bw_mibs".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    pub base_s: f64,
    /// Creation time per container; hosts create their containers in parallel,
    /// serially within a host.
    pub per_container_s: f64,
}

/// `base + per_container * (largest per-host container count)`.
pub fn startup_overhead(p: &Placement, m: &OverheadModel) -> f64 {
    let max_per_host = p.counts().values().copied().max().unwrap_or(0);
    m.base_s + m.per_container_s * max_per_host as f64
}

/// `1 + alpha * mem_intensity * (co_located - 1)`; `co_located` counts every
/// container resident on the host, of any job.
pub fn contention_factor(co_located: u32, mem_intensity: f64, alpha: f64) -> f64 {
    1.0 + alpha * mem_intensity * (co_located.max(1) - 1) as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommCost {
    /// Seconds per iteration spent by the slowest process.
    pub per_iter_s: f64,
    /// Mean pair latency over all process pairs, in microseconds, including
    /// the payload transfer time.
    pub avg_pair_latency_us: f64,
}

fn link_load(c: u32, n: u32) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let (c, n) = (c as f64, n as f64);
    c * (n - c) / ((n - 1.0) * (n - 1.0))
}

struct PairCosts {
    intra_us: f64,
    inter_base_us: f64,
    inter_transfer_us: f64,
}

impl PairCosts {
    fn new(volume_mib: f64, net: &NetworkModel) -> Self {
        Self {
            intra_us: net.intra_latency_us + 1e6 * volume_mib / net.intra_bw_mibs,
            inter_base_us: net.inter_latency_us,
            inter_transfer_us: 1e6 * volume_mib / net.inter_bw_mibs,
        }
    }

    fn inter_us(&self, load_a: f64, load_b: f64) -> f64 {
        self.inter_base_us + self.inter_transfer_us * (1.0 + load_a.max(load_b))
    }
}

/// Communication cost of one iteration of the job's all-to-all exchange under
/// placement `p`.
pub fn comm_cost(p: &Placement, job: &JobSpec, net: &NetworkModel) -> CommCost {
    comm_cost_for_counts(&p.counts().into_values().collect::<Vec<_>>(), job.profile.comm_volume_mib, net)
}

/// [`comm_cost`] for per-host container counts.
pub fn comm_cost_for_counts(counts: &[u32], volume_mib: f64, net: &NetworkModel) -> CommCost {
    let counts: Vec<u32> = counts.iter().copied().filter(|&c| c > 0).collect();
    let n: u32 = counts.iter().sum();
    if volume_mib <= 0.0 || n < 2 {
        return CommCost {
            per_iter_s: 0.0,
            avg_pair_latency_us: net.intra_latency_us,
        };
    }
    let costs = PairCosts::new(volume_mib, net);
    let loads: Vec<f64> = counts.iter().map(|&c| link_load(c, n)).collect();

    let mut weighted_us = 0.0;
    let mut slowest_us: f64 = 0.0;
    for (a, &ca) in counts.iter().enumerate() {
        let ca_f = ca as f64;
        weighted_us += ca_f * (ca_f - 1.0) / 2.0 * costs.intra_us;
        // one process on host `a`: its pairs with every other process
        let mut process_us = (ca_f - 1.0) * costs.intra_us;
        for (b, &cb) in counts.iter().enumerate() {
            if a == b {
                continue;
            }
            let inter = costs.inter_us(loads[a], loads[b]);
            process_us += cb as f64 * inter;
            if b > a {
                weighted_us += ca_f * cb as f64 * inter;
            }
        }
        slowest_us = slowest_us.max(process_us);
    }
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    CommCost {
        per_iter_s: slowest_us * 1e-6,
        avg_pair_latency_us: weighted_us / pairs,
    }
}

/// Auditable split of a job's runtime; `total()` is the exact sum of the parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RuntimeBreakdown {
    pub overhead_s: f64,
    pub compute_s: f64,
    pub comm_s: f64,
}

impl RuntimeBreakdown {
    pub fn total(&self) -> f64 {
        self.overhead_s + self.compute_s + self.comm_s
    }
}

/// Largest contention factor over the hosts of `p`. Hosts absent from
/// `host_loads` count only the job's own containers.
pub fn bottleneck_contention(p: &Placement, host_loads: &BTreeMap<NodeId, u32>, mem_intensity: f64, alpha: f64) -> f64 {
    p.counts()
        .into_iter()
        .map(|(node, own)| {
            let load = host_loads.get(&node).copied().unwrap_or(own);
            contention_factor(load, mem_intensity, alpha)
        })
        .fold(1.0, f64::max)
}

/// Static runtime of a placed job: start-up overhead plus `iterations` of
/// compute (scaled by the bottleneck host's contention, since gang steps
/// synchronise) and communication.
pub fn job_runtime(
    p: &Placement,
    job: &JobSpec,
    host_loads: &BTreeMap<NodeId, u32>,
    net: &NetworkModel,
    m: &OverheadModel,
    alpha: f64,
) -> RuntimeBreakdown {
    let iters = job.profile.iterations as f64;
    let factor = bottleneck_contention(p, host_loads, job.profile.mem_intensity, alpha);
    RuntimeBreakdown {
        overhead_s: startup_overhead(p, m),
        compute_s: iters * job.profile.compute_per_iter_s * factor,
        comm_s: iters * comm_cost(p, job, net).per_iter_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(n: u32, compute: f64, iters: u32, mi: f64, vol: f64) -> JobSpec {
        JobSpec {
            job_id: 0,
            name: "t".into(),
            n,
            demand: ResourceVector::new(1000, 1024),
            profile: WorkloadProfile {
                compute_per_iter_s: compute,
                iterations: iters,
                mem_intensity: mi,
                comm_volume_mib: vol,
            },
        }
    }

    fn net(intra: f64, inter: f64, bw: f64) -> NetworkModel {
        NetworkModel {
            intra_latency_us: intra,
            inter_latency_us: inter,
            intra_bw_mibs: bw,
            inter_bw_mibs: bw,
        }
    }

    #[test]
    fn overhead_examples() {
        let m = OverheadModel {
            base_s: 2.0,
            per_container_s: 1.5,
        };
        let four = Placement::from_counts(0, &[(1, 4), (2, 4), (3, 4), (4, 4)]);
        assert_eq!(startup_overhead(&four, &m), 8.0);
        let two = Placement::from_counts(0, &[(1, 8), (2, 8)]);
        assert_eq!(startup_overhead(&two, &m), 14.0);
        let one = Placement::from_counts(0, &[(1, 1)]);
        assert_eq!(startup_overhead(&one, &m), 3.5);
    }

    #[test]
    fn contention_examples() {
        assert_eq!(contention_factor(1, 0.9, 3.0), 1.0);
        assert!((contention_factor(4, 1.0, 0.1) - 1.3).abs() < 1e-12);
        assert_eq!(contention_factor(40, 0.0, 0.5), 1.0);
    }

    #[test]
    fn single_host_latency_is_intra() {
        let p = Placement::from_counts(0, &[(1, 32)]);
        let c = comm_cost(&p, &job(32, 0.0, 1, 0.0, 0.0), &net(1.0, 10.0, 1e3));
        assert_eq!(c.avg_pair_latency_us, 1.0);
        assert_eq!(c.per_iter_s, 0.0);
        // bandwidth term negligible
        let c = comm_cost(&p, &job(32, 0.0, 1, 0.0, 1e-9), &net(1.0, 10.0, 1e3));
        assert!((c.avg_pair_latency_us - 1.0).abs() < 1e-6);
    }

    #[test]
    fn split_latency_matches_pair_enumeration() {
        // 240 same-host pairs at 1us, 256 cross pairs at 10us
        let p = Placement::from_counts(0, &[(1, 16), (2, 16)]);
        let c = comm_cost(&p, &job(32, 0.0, 1, 0.0, 1e-12), &net(1.0, 10.0, 1e3));
        let expected = (240.0 * 1.0 + 256.0 * 10.0) / 496.0;
        assert!((c.avg_pair_latency_us - expected).abs() < 1e-6, "{}", c.avg_pair_latency_us);
        assert!((expected - 5.645).abs() < 1e-3);
    }

    #[test]
    fn per_iter_is_slowest_process() {
        // host 1 holds 3 processes, host 2 holds 1; latency-only model
        let p = Placement::from_counts(0, &[(1, 3), (2, 1)]);
        let c = comm_cost(&p, &job(4, 0.0, 1, 0.0, 1e-12), &net(1.0, 10.0, 1e9));
        // lone process on host 2 talks to three remote peers
        assert!((c.per_iter_s - 30e-6).abs() < 1e-9);
    }

    #[test]
    fn compute_only_runtime() {
        let m = OverheadModel {
            base_s: 2.0,
            per_container_s: 1.5,
        };
        let p = Placement::from_counts(0, &[(1, 1)]);
        let j = job(1, 0.25, 40, 0.8, 0.0);
        let r = job_runtime(&p, &j, &BTreeMap::new(), &net(1.0, 2.0, 100.0), &m, 0.3);
        assert_eq!(r.overhead_s, 3.5);
        assert_eq!(r.compute_s, 10.0);
        assert_eq!(r.comm_s, 0.0);
        assert_eq!(r.total(), 13.5);
    }

    #[test]
    fn foreign_containers_raise_contention() {
        let p = Placement::from_counts(0, &[(1, 2), (2, 2)]);
        let mut loads = BTreeMap::new();
        loads.insert(1, 2);
        loads.insert(2, 6);
        let f = bottleneck_contention(&p, &loads, 1.0, 0.1);
        assert!((f - 1.5).abs() < 1e-12);
    }

    #[test]
    fn network_validation() {
        assert!(net(1.0, 2.0, 10.0).validate().is_ok());
        assert!(net(2.0, 1.0, 10.0).validate().is_err());
        let mut n = net(1.0, 2.0, 10.0);
        n.inter_bw_mibs = 20.0;
        assert!(n.validate().is_err());
    }
}
