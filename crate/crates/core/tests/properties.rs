use std::collections::BTreeMap;

use proptest::prelude::*;

use scylla_sim::calibrate::balanced_counts;
use scylla_sim::drf::{drf_admission_order, FrameworkAccount};
use scylla_sim::engine::{run_scenario, SchedulingMode};
use scylla_sim::generate::{random_scenario, GenParams};
use scylla_sim::metrics::{summarize, time_weighted_mean, JobResult, Sample};
use scylla_sim::placement::{eligible_offers, place, place_minhost, validate_placement, Placement, PlacementPolicy};
use scylla_sim::resources::{make_offers, ClusterState, NodeState, Offer, ResourceVector};
use scylla_sim::scenario::shipped;
use scylla_sim::workload::{comm_cost_for_counts, contention_factor, job_runtime, startup_overhead, JobSpec, NetworkModel, OverheadModel, WorkloadProfile};
use scylla_sim::CalibrationProfile;

fn resource() -> impl Strategy<Value = ResourceVector> {
    (0u64..64_000, 0u64..131_072).prop_map(|(c, m)| ResourceVector::new(c, m))
}

fn demand() -> impl Strategy<Value = ResourceVector> {
    (0u64..8, 0u64..8)
        .prop_filter("non-zero demand", |(c, m)| c + m > 0)
        .prop_map(|(c, m)| ResourceVector::new(c * 1000, m * 2048))
}

fn offers(max: usize) -> impl Strategy<Value = Vec<Offer>> {
    prop::collection::vec(resource(), 1..=max).prop_map(|rs| {
        rs.into_iter()
            .enumerate()
            .map(|(i, available)| Offer {
                node_id: i as u32 + 1,
                available,
                epoch: 0,
            })
            .collect()
    })
}

fn net() -> NetworkModel {
    CalibrationProfile::chameleon_2017().network
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn placements_are_valid(offers in offers(6), demand in demand(), n in 1u32..40, minhost in any::<bool>()) {
        let policy = if minhost { PlacementPolicy::MinHost } else { PlacementPolicy::Spread };
        let eligible = eligible_offers(&offers, &demand);
        let room: u64 = eligible.iter().map(|e| e.max_containers).sum();
        match place(policy, 0, &eligible, n) {
            Ok(p) => {
                prop_assert!(validate_placement(&p, &offers, &demand, n));
                prop_assert_eq!(p.master_node(), p.assignments.first().map(|a| a.1));
            }
            Err(_) => prop_assert!(room < n as u64),
        }
    }

    #[test]
    fn minhost_never_uses_more_hosts_than_spread(offers in offers(6), demand in demand(), n in 1u32..40) {
        let eligible = eligible_offers(&offers, &demand);
        if let (Ok(m), Ok(s)) = (place_minhost(0, &eligible, n), place(PlacementPolicy::Spread, 0, &eligible, n)) {
            prop_assert!(m.hosts_used() <= s.hosts_used());
        }
    }

    #[test]
    fn offers_cover_every_worker_with_room(caps in prop::collection::vec(resource(), 1..6), used in prop::collection::vec(0u64..=100, 6)) {
        let nodes: Vec<NodeState> = std::iter::once(NodeState::new(0, ResourceVector::new(1000, 1000)))
            .chain(caps.iter().enumerate().map(|(i, &c)| NodeState::new(i as u32 + 1, c)))
            .collect();
        let mut cluster = ClusterState::new(nodes, 0).unwrap();
        for (i, &c) in caps.iter().enumerate() {
            let part = ResourceVector::new(c.milli_cpus * used[i] / 100, c.mem_mib * used[i] / 100);
            cluster.allocate(i as u32 + 1, part).unwrap();
        }
        let offers = make_offers(&cluster, 3);
        prop_assert!(offers.iter().all(|o| o.node_id != 0 && o.available.any_positive()));
        prop_assert!(offers.windows(2).all(|w| w[0].node_id < w[1].node_id));
        let expected = cluster.workers().filter(|n| n.available().any_positive()).count();
        prop_assert_eq!(offers.len(), expected);
    }

    #[test]
    fn allocate_release_round_trip(cap in resource(), a in resource(), b in resource()) {
        let mut node = NodeState::new(1, cap);
        let before = node.clone();
        if node.allocate(a).is_ok() {
            prop_assert!(node.allocated.fits_in(&node.capacity));
            if node.allocate(b).is_err() {
                prop_assert!(!(a + b).fits_in(&cap));
            } else {
                node.release(b).unwrap();
            }
            node.release(a).unwrap();
            prop_assert_eq!(node, before);
        } else {
            prop_assert!(!a.fits_in(&cap));
        }
    }

    #[test]
    fn drf_order_is_a_permutation(jobs in prop::collection::vec((demand(), 1u32..8), 1..5)) {
        let accounts: Vec<FrameworkAccount> = jobs.iter().enumerate().map(|(i, &(d, n))| FrameworkAccount {
            job_id: i as u32,
            allocated_total: ResourceVector::ZERO,
            demand_per_task: d,
            pending_tasks: n,
        }).collect();
        let total = ResourceVector::new(32_000, 65_536);
        let order = drf_admission_order(&accounts, &total).unwrap();
        let mut sorted = order.clone();
        sorted.sort();
        prop_assert_eq!(sorted, (0..jobs.len() as u32).collect::<Vec<_>>());
        prop_assert_eq!(order, drf_admission_order(&accounts, &total).unwrap());
    }

    #[test]
    fn overhead_non_increasing_with_hosts(n in 1u32..64, base in 0.0f64..30.0, per in 0.0f64..2.0) {
        let m = OverheadModel { base_s: base, per_container_s: per };
        let mut last = f64::INFINITY;
        for hosts in 1..=8 {
            let counts: Vec<(u32, u32)> = balanced_counts(n, hosts).into_iter().enumerate().map(|(i, c)| (i as u32 + 1, c)).collect();
            let o = startup_overhead(&Placement::from_counts(0, &counts), &m);
            prop_assert!(o <= last);
            last = o;
        }
    }

    #[test]
    fn contention_is_monotone(k in 1u32..64, mi in 0.0f64..=1.0, alpha in 0.0f64..0.5) {
        let f = contention_factor(k, mi, alpha);
        prop_assert!(f >= 1.0);
        prop_assert!(contention_factor(k + 1, mi, alpha) >= f);
    }

    #[test]
    fn comm_cost_is_sane(counts in prop::collection::vec(0u32..16, 1..7), vol in 0.0f64..4096.0) {
        let c = comm_cost_for_counts(&counts, vol, &net());
        prop_assert!(c.per_iter_s >= 0.0);
        prop_assert!(c.avg_pair_latency_us >= net().intra_latency_us);
        let n: u32 = counts.iter().sum();
        let single = comm_cost_for_counts(&[n], vol, &net());
        prop_assert!(single.avg_pair_latency_us <= c.avg_pair_latency_us + 1e-9);
    }

    #[test]
    fn runtime_decomposes(n in 1u32..16, iters in 1u32..50, compute in 0.0f64..3.0, vol in 0.0f64..512.0, load in 0u32..8) {
        let job = JobSpec {
            job_id: 0,
            name: "p".into(),
            n,
            demand: ResourceVector::new(1000, 1024),
            profile: WorkloadProfile { compute_per_iter_s: compute, iterations: iters, mem_intensity: 0.7, comm_volume_mib: vol },
        };
        let counts: Vec<(u32, u32)> = balanced_counts(n, 3).into_iter().enumerate().map(|(i, c)| (i as u32 + 1, c)).collect();
        let p = Placement::from_counts(0, &counts);
        let loads: BTreeMap<u32, u32> = p.counts().into_iter().map(|(k, c)| (k, c + load)).collect();
        let profile = CalibrationProfile::chameleon_2017();
        let r = job_runtime(&p, &job, &loads, &profile.network, &profile.overhead, profile.alpha);
        prop_assert_eq!(r.total(), r.overhead_s + r.compute_s + r.comm_s);
        prop_assert!(r.compute_s >= iters as f64 * compute - 1e-9);
    }

    #[test]
    fn time_weighted_mean_survives_refinement(values in prop::collection::vec(0.0f64..=1.0, 1..10), step in 1u64..5000, split in 2u64..5) {
        let samples: Vec<Sample> = values.iter().enumerate().map(|(i, &v)| Sample { time_ms: i as u64 * step, cpu_util: v, mem_util: v }).collect();
        let end = values.len() as u64 * step;
        let mut fine = Vec::new();
        for s in &samples {
            for k in 0..split {
                fine.push(Sample { time_ms: s.time_ms + k * step / split, ..*s });
            }
        }
        fine.dedup_by_key(|s| s.time_ms);
        let a = time_weighted_mean(&samples, end, |s| s.cpu_util);
        let b = time_weighted_mean(&fine, end, |s| s.cpu_util);
        prop_assert!((a - b).abs() < 1e-9);
        let job = JobResult { job_id: 0, name: "x".into(), arrival_ms: 0, finish_ms: end, wait_s: 0.0, overhead_s: 0.0, compute_s: 0.0, comm_s: 0.0, total_s: 0.0, hosts_used: 1, avg_pair_latency_us: 0.0 };
        let r = summarize(samples, vec![job]).unwrap();
        prop_assert!((r.avg_cpu_util - a).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engine_runs_are_reproducible(seed in any::<u64>()) {
        let profile = CalibrationProfile::chameleon_2017();
        let s = random_scenario(seed, &GenParams::default(), &profile);
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        prop_assert_eq!(a.samples_csv(), b.samples_csv());
        prop_assert_eq!(a.jobs_csv(), b.jobs_csv());
        prop_assert!(a.samples.windows(2).all(|w| w[0].time_ms < w[1].time_ms));
        for j in &a.per_job {
            prop_assert!((j.total_s - (j.overhead_s + j.compute_s + j.comm_s)).abs() < 1e-9);
            prop_assert!(j.wait_s >= 0.0);
        }
    }
}

#[test]
fn exclusive_utilization_never_exceeds_coscheduled_on_shipped_pair() {
    let mut s = shipped::load("coschedule_minife_x10").unwrap();
    let co = run_scenario(&s).unwrap();
    s.mode = SchedulingMode::Exclusive;
    let ex = run_scenario(&s).unwrap();
    assert!(ex.avg_cpu_util <= co.avg_cpu_util);
    assert!(ex.avg_mem_util <= co.avg_mem_util);
}
