//! Deterministic discrete-event engine.
//!
//! Events are processed in `(time_ms, seq)` order, `seq` being the insertion
//! counter. Each offer epoch orders pending jobs (DRF when co-scheduling,
//! FCFS when exclusive), places whole gangs, blocks their resources and
//! schedules container start-up. Running jobs execute at a piecewise-constant
//! rate: whenever the container count on one of their hosts changes, the
//! remaining work is rescaled by the new bottleneck contention factor.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::drf::{drf_admission_order, FrameworkAccount};
use crate::error::SimError;
use crate::metrics::{sample_utilization, summarize, JobResult, MetricsReport, Sample};
use crate::placement::{eligible_offers, max_containers, place, Placement, PlacementPolicy};
use crate::profile::CalibrationProfile;
use crate::resources::{make_offers, ClusterState, NodeId, Offer, ResourceVector};
use crate::workload::{bottleneck_contention, comm_cost, startup_overhead, JobId, JobSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulingMode {
    /// Containers of several jobs may share a node.
    CoScheduled,
    /// Traditional HPC: a job blocks whole nodes regardless of its demand.
    Exclusive,
}

impl fmt::Display for SchedulingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchedulingMode::CoScheduled => "coscheduled",
            SchedulingMode::Exclusive => "exclusive",
        })
    }
}

impl FromStr for SchedulingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coscheduled" => Ok(SchedulingMode::CoScheduled),
            "exclusive" => Ok(SchedulingMode::Exclusive),
            other => Err(format!("unknown mode `{}` (expected coscheduled|exclusive)", other)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSpec {
    /// Worker nodes, ids `1..=workers`; node 0 is the head node.
    pub workers: u32,
    pub node_capacity: ResourceVector,
    pub head_capacity: ResourceVector,
}

impl ClusterSpec {
    pub fn build(&self) -> ClusterState {
        ClusterState::homogeneous(self.workers, self.node_capacity, self.head_capacity)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobArrival {
    pub spec: JobSpec,
    pub arrival_ms: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub cluster: ClusterSpec,
    pub jobs: Vec<JobArrival>,
    pub policy: PlacementPolicy,
    pub mode: SchedulingMode,
    pub profile: CalibrationProfile,
    pub epoch_ms: u64,
    pub sample_ms: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: String| Err(SimError::ScenarioInvalid(m));
        if self.cluster.workers == 0 {
            return invalid("cluster needs at least one worker node".into());
        }
        if !self.cluster.node_capacity.any_positive() {
            return invalid("node capacity is zero".into());
        }
        if self.jobs.is_empty() {
            return invalid("scenario has no jobs".into());
        }
        if self.epoch_ms == 0 || self.sample_ms == 0 {
            return invalid("epoch_ms and sample_ms must be positive".into());
        }
        for (idx, job) in self.jobs.iter().enumerate() {
            let s = &job.spec;
            if s.job_id as usize != idx {
                return invalid(format!("jobs[{}] has id {}", idx, s.job_id));
            }
            if s.n == 0 {
                return invalid(format!("jobs[{}].n must be >= 1", idx));
            }
            if !s.demand.any_positive() {
                return invalid(format!("jobs[{}] demand is zero", idx));
            }
            let p = &s.profile;
            if p.iterations == 0
                || !(p.compute_per_iter_s >= 0.0 && p.compute_per_iter_s.is_finite())
                || !(0.0..=1.0).contains(&p.mem_intensity)
                || !(p.comm_volume_mib >= 0.0 && p.comm_volume_mib.is_finite())
            {
                return invalid(format!("jobs[{}] has an invalid workload profile", idx));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    JobArrival(JobId),
    OfferEpoch,
    ContainersReady(JobId),
    /// Carries the job's rate version; stale finishes are dropped.
    JobFinish(JobId, u32),
    Sample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time_ms: u64,
    pub seq: u64,
    pub kind: EventKind,
}

/// Resource bookkeeping transitions, for auditing gang atomicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceKind {
    Launch,
    Ready,
    Finish,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub time_ms: u64,
    pub job_id: JobId,
    pub kind: TraceKind,
    /// Resources blocked (Launch) or released (Finish) per node.
    pub blocked: Vec<(NodeId, ResourceVector)>,
}

#[derive(Clone, Debug)]
struct Running {
    ready_ms: u64,
    last_ms: u64,
    /// Fraction of the job's work completed.
    progress: f64,
    factor: f64,
    version: u32,
    compute_s: f64,
    comm_s: f64,
}

#[derive(Clone, Debug)]
enum Phase {
    NotArrived,
    Pending,
    Starting,
    Running(Running),
    Finished,
}

#[derive(Clone, Debug)]
struct JobState {
    spec: JobSpec,
    arrival_ms: u64,
    phase: Phase,
    placement: Option<Placement>,
    blocked: Vec<(NodeId, ResourceVector)>,
    launch_ms: u64,
    overhead_s: f64,
    comm_per_iter_s: f64,
    avg_pair_latency_us: f64,
}

impl JobState {
    fn iter_time(&self, factor: f64) -> f64 {
        self.spec.profile.compute_per_iter_s * factor + self.comm_per_iter_s
    }

    fn run_time(&self, factor: f64) -> f64 {
        self.spec.profile.iterations as f64 * self.iter_time(factor)
    }
}

/// A successful gang launch.
#[derive(Clone, Debug, PartialEq)]
pub struct Launch {
    pub job_id: JobId,
    pub placement: Placement,
    pub blocked: Vec<(NodeId, ResourceVector)>,
}

fn ms_ceil(seconds: f64) -> u64 {
    (seconds * 1000.0).ceil().max(0.0) as u64
}

/// Try to place `job` on `offers` under `policy`. `None` when the gang does not fit.
fn try_place(job: &JobSpec, offers: &[Offer], policy: PlacementPolicy) -> Result<Option<Placement>, SimError> {
    let eligible = eligible_offers(offers, &job.demand);
    match place(policy, job.job_id, &eligible, job.n) {
        Ok(p) => Ok(Some(p)),
        Err(SimError::InsufficientCapacity { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Exclusive mode: strict FCFS. The head job gets whole free nodes chosen by
/// `policy`; the first job that does not fit stops the pass.
pub fn schedule_exclusive(
    pending: &[&JobSpec],
    cluster: &mut ClusterState,
    policy: PlacementPolicy,
    epoch: u64,
) -> Result<Vec<Launch>, SimError> {
    let mut launches = Vec::new();
    for job in pending {
        let offers: Vec<Offer> = cluster
            .workers()
            .filter(|n| n.is_idle())
            .map(|n| Offer {
                node_id: n.node_id,
                available: n.capacity,
                epoch,
            })
            .collect();
        let Some(placement) = try_place(job, &offers, policy)? else {
            break;
        };
        let mut blocked = Vec::new();
        for node in placement.counts().into_keys() {
            let capacity = cluster
                .node(node)
                .map(|n| n.capacity)
                .ok_or_else(|| SimError::InvariantViolation(format!("unknown node {}", node)))?;
            cluster.allocate(node, capacity)?;
            blocked.push((node, capacity));
        }
        launches.push(Launch {
            job_id: job.job_id,
            placement,
            blocked,
        });
    }
    Ok(launches)
}

/// Co-scheduled mode: jobs in DRF admission order, each placed against the
/// current remaining resources; a job that does not fit is skipped.
pub fn schedule_coscheduled(
    pending: &[&JobSpec],
    cluster: &mut ClusterState,
    policy: PlacementPolicy,
    epoch: u64,
) -> Result<Vec<Launch>, SimError> {
    if pending.is_empty() {
        return Ok(Vec::new());
    }
    let accounts: Vec<FrameworkAccount> = pending
        .iter()
        .map(|j| FrameworkAccount {
            job_id: j.job_id,
            allocated_total: ResourceVector::ZERO,
            demand_per_task: j.demand,
            pending_tasks: j.n,
        })
        .collect();
    let order = drf_admission_order(&accounts, &cluster.worker_capacity())?;
    let by_id: BTreeMap<JobId, &JobSpec> = pending.iter().map(|j| (j.job_id, *j)).collect();

    let mut launches = Vec::new();
    for id in order {
        let job = by_id[&id];
        let offers = make_offers(cluster, epoch);
        let Some(placement) = try_place(job, &offers, policy)? else {
            continue;
        };
        let mut blocked = Vec::new();
        for (node, count) in placement.counts() {
            let demand = job.demand.scale(count as u64);
            cluster.allocate(node, demand)?;
            blocked.push((node, demand));
        }
        launches.push(Launch {
            job_id: id,
            placement,
            blocked,
        });
    }
    Ok(launches)
}

/// Ensure every job fits on the empty cluster.
fn check_feasible(s: &Scenario) -> Result<(), SimError> {
    let cluster = s.cluster.build();
    for job in &s.jobs {
        let room: u64 = cluster
            .workers()
            .map(|n| max_containers(&n.capacity, &job.spec.demand))
            .sum();
        if room < job.spec.n as u64 {
            return Err(SimError::Deadlock {
                job_id: job.spec.job_id,
            });
        }
    }
    Ok(())
}

struct Engine<'a> {
    scenario: &'a Scenario,
    now_ms: u64,
    seq: u64,
    queue: BinaryHeap<Reverse<Event>>,
    cluster: ClusterState,
    jobs: Vec<JobState>,
    /// Containers resident per worker node, all jobs.
    host_loads: BTreeMap<NodeId, u32>,
    epoch: u64,
    finished: usize,
    samples: Vec<Sample>,
    trace: Vec<TraceEntry>,
    /// ready_ms, finish_ms, compute_s, comm_s
    finish_info: BTreeMap<JobId, (u64, u64, f64, f64)>,
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        let jobs = scenario
            .jobs
            .iter()
            .map(|j| JobState {
                spec: j.spec.clone(),
                arrival_ms: j.arrival_ms,
                phase: Phase::NotArrived,
                placement: None,
                blocked: Vec::new(),
                launch_ms: 0,
                overhead_s: 0.0,
                comm_per_iter_s: 0.0,
                avg_pair_latency_us: 0.0,
            })
            .collect();
        Self {
            scenario,
            now_ms: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            cluster: scenario.cluster.build(),
            jobs,
            host_loads: BTreeMap::new(),
            epoch: 0,
            finished: 0,
            samples: Vec::new(),
            trace: Vec::new(),
            finish_info: BTreeMap::new(),
        }
    }

    fn push(&mut self, time_ms: u64, kind: EventKind) {
        let ev = Event {
            time_ms,
            seq: self.seq,
            kind,
        };
        self.seq += 1;
        self.queue.push(Reverse(ev));
    }

    fn run(mut self) -> Result<(MetricsReport, Vec<TraceEntry>), SimError> {
        let mut arrivals: Vec<(u64, JobId)> = self
            .jobs
            .iter()
            .map(|j| (j.arrival_ms, j.spec.job_id))
            .collect();
        arrivals.sort_unstable();
        for (t, id) in arrivals {
            self.push(t, EventKind::JobArrival(id));
        }
        self.push(0, EventKind::OfferEpoch);
        self.push(0, EventKind::Sample);

        while let Some(Reverse(ev)) = self.queue.pop() {
            if ev.time_ms < self.now_ms {
                return Err(SimError::InvariantViolation("event scheduled in the past".into()));
            }
            self.now_ms = ev.time_ms;
            match ev.kind {
                EventKind::JobArrival(id) => self.on_arrival(id)?,
                EventKind::OfferEpoch => self.on_epoch()?,
                EventKind::ContainersReady(id) => self.on_ready(id)?,
                EventKind::JobFinish(id, version) => self.on_finish(id, version)?,
                EventKind::Sample => self.on_sample(),
            }
            self.check_invariants()?;
            if self.finished == self.jobs.len() {
                break;
            }
        }
        if self.finished != self.jobs.len() {
            return Err(SimError::InvariantViolation("event queue drained with unfinished jobs".into()));
        }

        let per_job = self.results();
        let report = summarize(self.samples, per_job)?;
        Ok((report, self.trace))
    }

    fn on_arrival(&mut self, id: JobId) -> Result<(), SimError> {
        let job = &mut self.jobs[id as usize];
        match job.phase {
            Phase::NotArrived => {
                job.phase = Phase::Pending;
                Ok(())
            }
            _ => Err(SimError::InvariantViolation(format!("job {} arrived twice", id))),
        }
    }

    fn on_sample(&mut self) {
        let (cpu, mem) = sample_utilization(&self.cluster);
        self.samples.push(Sample {
            time_ms: self.now_ms,
            cpu_util: cpu,
            mem_util: mem,
        });
        self.push(self.now_ms + self.scenario.sample_ms, EventKind::Sample);
    }

    fn on_epoch(&mut self) -> Result<(), SimError> {
        let pending_ids: Vec<JobId> = {
            let mut ids: Vec<(u64, JobId)> = self
                .jobs
                .iter()
                .filter(|j| matches!(j.phase, Phase::Pending))
                .map(|j| (j.arrival_ms, j.spec.job_id))
                .collect();
            ids.sort_unstable();
            ids.into_iter().map(|(_, id)| id).collect()
        };
        if !pending_ids.is_empty() {
            let specs: Vec<JobSpec> = pending_ids
                .iter()
                .map(|&id| self.jobs[id as usize].spec.clone())
                .collect();
            let refs: Vec<&JobSpec> = specs.iter().collect();
            let launches = match self.scenario.mode {
                SchedulingMode::CoScheduled => {
                    schedule_coscheduled(&refs, &mut self.cluster, self.scenario.policy, self.epoch)?
                }
                SchedulingMode::Exclusive => {
                    schedule_exclusive(&refs, &mut self.cluster, self.scenario.policy, self.epoch)?
                }
            };
            for launch in launches {
                self.launch(launch)?;
            }
        }
        self.epoch += 1;
        self.push(self.now_ms + self.scenario.epoch_ms, EventKind::OfferEpoch);
        Ok(())
    }

    fn launch(&mut self, launch: Launch) -> Result<(), SimError> {
        let profile = &self.scenario.profile;
        let id = launch.job_id;
        let overhead = startup_overhead(&launch.placement, &profile.overhead);
        let comm = comm_cost(&launch.placement, &self.jobs[id as usize].spec, &profile.network);
        let touched: Vec<NodeId> = launch.placement.counts().into_keys().collect();
        for (node, count) in launch.placement.counts() {
            *self.host_loads.entry(node).or_insert(0) += count;
        }
        self.trace.push(TraceEntry {
            time_ms: self.now_ms,
            job_id: id,
            kind: TraceKind::Launch,
            blocked: launch.blocked.clone(),
        });
        let job = &mut self.jobs[id as usize];
        job.phase = Phase::Starting;
        job.placement = Some(launch.placement);
        job.blocked = launch.blocked;
        job.launch_ms = self.now_ms;
        job.overhead_s = overhead;
        job.comm_per_iter_s = comm.per_iter_s;
        job.avg_pair_latency_us = comm.avg_pair_latency_us;
        self.push(self.now_ms + ms_ceil(overhead), EventKind::ContainersReady(id));
        self.rescale(&touched, Some(id));
        Ok(())
    }

    fn contention(&self, job: &JobState) -> f64 {
        let Some(p) = &job.placement else {
            return 1.0;
        };
        bottleneck_contention(
            p,
            &self.host_loads,
            job.spec.profile.mem_intensity,
            self.scenario.profile.alpha,
        )
    }

    fn on_ready(&mut self, id: JobId) -> Result<(), SimError> {
        if !matches!(self.jobs[id as usize].phase, Phase::Starting) {
            return Err(SimError::InvariantViolation(format!("job {} ready while not starting", id)));
        }
        let factor = self.contention(&self.jobs[id as usize]);
        let job = &mut self.jobs[id as usize];
        job.phase = Phase::Running(Running {
            ready_ms: self.now_ms,
            last_ms: self.now_ms,
            progress: 0.0,
            factor,
            version: 0,
            compute_s: 0.0,
            comm_s: 0.0,
        });
        let run = job.run_time(factor);
        self.trace.push(TraceEntry {
            time_ms: self.now_ms,
            job_id: id,
            kind: TraceKind::Ready,
            blocked: Vec::new(),
        });
        self.push(self.now_ms + ms_ceil(run), EventKind::JobFinish(id, 0));
        Ok(())
    }

    /// Split `dt` seconds of execution at `factor` into compute and comm time.
    fn split(job: &JobState, factor: f64, dt: f64) -> (f64, f64) {
        let iter = job.iter_time(factor);
        if iter <= 0.0 {
            return (0.0, 0.0);
        }
        let compute = job.spec.profile.compute_per_iter_s * factor;
        let c = dt * compute / iter;
        (c, dt - c)
    }

    /// Re-evaluate the contention of running jobs on `nodes` after their
    /// container counts changed.
    fn rescale(&mut self, nodes: &[NodeId], skip: Option<JobId>) {
        let now = self.now_ms;
        let mut reschedule = Vec::new();
        for idx in 0..self.jobs.len() {
            if Some(idx as JobId) == skip {
                continue;
            }
            let touches = match (&self.jobs[idx].phase, &self.jobs[idx].placement) {
                (Phase::Running(_), Some(p)) => p.assignments.iter().any(|(_, n)| nodes.contains(n)),
                _ => false,
            };
            if !touches {
                continue;
            }
            let new_factor = self.contention(&self.jobs[idx]);
            let job = &self.jobs[idx];
            let Phase::Running(run) = &job.phase else {
                continue;
            };
            if new_factor == run.factor {
                continue;
            }
            let mut run = run.clone();
            let total_old = job.run_time(run.factor);
            let dt = (now - run.last_ms) as f64 / 1000.0;
            if total_old > 0.0 {
                let done = (dt / total_old).min(1.0 - run.progress);
                let (c, m) = Self::split(job, run.factor, done * total_old);
                run.compute_s += c;
                run.comm_s += m;
                run.progress += done;
            }
            run.last_ms = now;
            run.factor = new_factor;
            run.version += 1;
            let remaining = (1.0 - run.progress) * job.run_time(new_factor);
            reschedule.push((idx as JobId, run.version, now + ms_ceil(remaining)));
            self.jobs[idx].phase = Phase::Running(run);
        }
        for (id, version, at) in reschedule {
            self.push(at, EventKind::JobFinish(id, version));
        }
    }

    fn on_finish(&mut self, id: JobId, version: u32) -> Result<(), SimError> {
        let job = &self.jobs[id as usize];
        let run = match &job.phase {
            Phase::Running(run) => run,
            // a rescale moved the finish earlier; this one is stale
            Phase::Finished => return Ok(()),
            _ => return Err(SimError::InvariantViolation(format!("finish for job {} not running", id))),
        };
        if run.version != version {
            // superseded by a rescale
            return Ok(());
        }
        let mut run = run.clone();
        let total = job.run_time(run.factor);
        let (c, m) = Self::split(job, run.factor, (1.0 - run.progress) * total);
        run.compute_s += c;
        run.comm_s += m;
        run.progress = 1.0;
        run.last_ms = self.now_ms;

        let blocked = job.blocked.clone();
        for &(node, amount) in &blocked {
            self.cluster.release(node, amount)?;
        }
        let counts = job.placement.as_ref().map(|p| p.counts()).unwrap_or_default();
        let touched: Vec<NodeId> = counts.keys().copied().collect();
        for (node, count) in counts {
            let load = self.host_loads.entry(node).or_insert(0);
            *load = load.checked_sub(count).ok_or_else(|| {
                SimError::InvariantViolation(format!("negative container count on node {}", node))
            })?;
        }
        self.trace.push(TraceEntry {
            time_ms: self.now_ms,
            job_id: id,
            kind: TraceKind::Finish,
            blocked,
        });
        self.jobs[id as usize].phase = Phase::Running(run);
        let finished = std::mem::replace(&mut self.jobs[id as usize].phase, Phase::Finished);
        self.record_finish(id, finished);
        self.finished += 1;
        self.rescale(&touched, None);
        Ok(())
    }

    fn record_finish(&mut self, id: JobId, phase: Phase) {
        if let Phase::Running(run) = phase {
            let job = &mut self.jobs[id as usize];
            job.blocked.clear();
            self.finish_info.insert(id, (run.ready_ms, self.now_ms, run.compute_s, run.comm_s));
        }
    }

    fn results(&self) -> Vec<JobResult> {
        self.jobs
            .iter()
            .map(|job| {
                let id = job.spec.job_id;
                let (_, finish_ms, compute_s, comm_s) = self.finish_info[&id];
                JobResult {
                    job_id: id,
                    name: job.spec.name.clone(),
                    arrival_ms: job.arrival_ms,
                    finish_ms,
                    wait_s: (job.launch_ms - job.arrival_ms) as f64 / 1000.0,
                    overhead_s: job.overhead_s,
                    compute_s,
                    comm_s,
                    total_s: job.overhead_s + compute_s + comm_s,
                    hosts_used: job.placement.as_ref().map_or(0, |p| p.hosts_used()),
                    avg_pair_latency_us: job.avg_pair_latency_us,
                }
            })
            .collect()
    }

    /// Capacity safety and conservation of blocked resources.
    fn check_invariants(&self) -> Result<(), SimError> {
        self.cluster.check_capacity()?;
        let mut expected: BTreeMap<NodeId, ResourceVector> = BTreeMap::new();
        for job in &self.jobs {
            if matches!(job.phase, Phase::Starting | Phase::Running(_)) {
                for &(node, amount) in &job.blocked {
                    let e = expected.entry(node).or_insert(ResourceVector::ZERO);
                    *e = *e + amount;
                }
            }
        }
        for node in self.cluster.nodes() {
            let want = expected.get(&node.node_id).copied().unwrap_or_default();
            if node.allocated != want {
                return Err(SimError::InvariantViolation(format!(
                    "node {} allocated {} but running jobs block {}",
                    node.node_id, node.allocated, want
                )));
            }
        }
        Ok(())
    }
}

/// Run a scenario to completion.
pub fn run_scenario(s: &Scenario) -> Result<MetricsReport, SimError> {
    run_scenario_traced(s).map(|(report, _)| report)
}

/// Like [`run_scenario`], also returning every launch, ready and finish transition.
pub fn run_scenario_traced(s: &Scenario) -> Result<(MetricsReport, Vec<TraceEntry>), SimError> {
    s.validate()?;
    check_feasible(s)?;
    Engine::new(s).run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::WorkloadProfile;

    const NODE: ResourceVector = ResourceVector::new(48_000, 126_976);

    fn job(id: JobId, n: u32, cpus: u64, iters: u32) -> JobArrival {
        JobArrival {
            spec: JobSpec {
                job_id: id,
                name: format!("j{}", id),
                n,
                demand: ResourceVector::new(cpus * 1000, 1024),
                profile: WorkloadProfile {
                    compute_per_iter_s: 1.0,
                    iterations: iters,
                    mem_intensity: 0.0,
                    comm_volume_mib: 0.0,
                },
            },
            arrival_ms: 0,
        }
    }

    fn scenario(workers: u32, jobs: Vec<JobArrival>, policy: PlacementPolicy, mode: SchedulingMode) -> Scenario {
        Scenario {
            cluster: ClusterSpec {
                workers,
                node_capacity: NODE,
                head_capacity: NODE,
            },
            jobs,
            policy,
            mode,
            profile: CalibrationProfile::chameleon_2017(),
            epoch_ms: 1000,
            sample_ms: 1000,
            seed: 0,
        }
    }

    #[test]
    fn single_job_makespan() {
        let s = scenario(1, vec![job(0, 1, 1, 10)], PlacementPolicy::MinHost, SchedulingMode::CoScheduled);
        let r = run_scenario(&s).unwrap();
        let overhead = s.profile.overhead.base_s + s.profile.overhead.per_container_s;
        let j = &r.per_job[0];
        assert_eq!(j.wait_s, 0.0);
        assert_eq!(j.overhead_s, overhead);
        assert_eq!(j.compute_s, 10.0);
        assert_eq!(r.makespan_s, (ms_ceil(overhead) + 10_000) as f64 / 1000.0);
        // one plateau: allocated from the first sample until the job ends
        assert!(r.samples.iter().all(|s| s.cpu_util == 1.0 / 48.0));
    }

    #[test]
    fn exclusive_blocks_whole_nodes() {
        let mut c = ClusterState::homogeneous(2, NODE, NODE);
        let a = job(0, 4, 12, 1).spec;
        let b = job(1, 4, 12, 1).spec;
        let l = schedule_exclusive(&[&a, &b], &mut c, PlacementPolicy::MinHost, 0).unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l[0].blocked, vec![(1, NODE)]);
        assert_eq!(l[1].blocked, vec![(2, NODE)]);
        // a third job waits although 36 cpus sit idle on each node
        let third = job(2, 1, 1, 1).spec;
        assert!(schedule_exclusive(&[&third], &mut c, PlacementPolicy::MinHost, 1).unwrap().is_empty());
        assert!(schedule_exclusive(&[], &mut c, PlacementPolicy::MinHost, 1).unwrap().is_empty());
    }

    #[test]
    fn exclusive_is_strict_fcfs() {
        let mut c = ClusterState::homogeneous(2, NODE, NODE);
        let big = job(0, 3, 48, 1).spec;
        let small = job(1, 1, 1, 1).spec;
        assert!(schedule_exclusive(&[&big, &small], &mut c, PlacementPolicy::Spread, 0).unwrap().is_empty());
    }

    #[test]
    fn coscheduled_examples() {
        let mut c = ClusterState::homogeneous(1, NODE, NODE);
        let a = job(0, 4, 12, 1).spec;
        let b = job(1, 4, 12, 1).spec;
        let l = schedule_coscheduled(&[&a, &b], &mut c, PlacementPolicy::MinHost, 0).unwrap();
        assert_eq!(l.iter().map(|l| l.job_id).collect::<Vec<_>>(), vec![0]);

        let mut c = ClusterState::homogeneous(1, NODE, NODE);
        let a = job(0, 2, 12, 1).spec;
        let b = job(1, 2, 12, 1).spec;
        let l = schedule_coscheduled(&[&a, &b], &mut c, PlacementPolicy::MinHost, 0).unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(c.node(1).unwrap().available(), ResourceVector::new(0, 126_976 - 4 * 1024));
    }

    #[test]
    fn oversized_job_deadlocks() {
        let s = scenario(1, vec![job(0, 5, 12, 1)], PlacementPolicy::Spread, SchedulingMode::Exclusive);
        assert_eq!(run_scenario(&s).unwrap_err(), SimError::Deadlock { job_id: 0 });
    }

    #[test]
    fn invalid_scenarios_rejected() {
        let s = scenario(1, vec![], PlacementPolicy::Spread, SchedulingMode::Exclusive);
        assert!(matches!(run_scenario(&s), Err(SimError::ScenarioInvalid(_))));
        let s = scenario(0, vec![job(0, 1, 1, 1)], PlacementPolicy::Spread, SchedulingMode::Exclusive);
        assert!(matches!(run_scenario(&s), Err(SimError::ScenarioInvalid(_))));
    }

    #[test]
    fn late_arrival_waits_for_next_epoch() {
        let mut j = job(0, 1, 1, 1);
        j.arrival_ms = 1500;
        let s = scenario(1, vec![j], PlacementPolicy::Spread, SchedulingMode::CoScheduled);
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.per_job[0].wait_s, 0.5);
    }

    #[test]
    fn contention_rescales_running_job() {
        // job 1 lands on job 0's node halfway through and slows it down
        let mut a = job(0, 1, 1, 100);
        a.spec.profile.mem_intensity = 1.0;
        let mut b = job(1, 10, 1, 10);
        b.arrival_ms = 40_000;
        let mut s = scenario(1, vec![a, b], PlacementPolicy::MinHost, SchedulingMode::CoScheduled);
        s.profile.alpha = 0.1;
        let r = run_scenario(&s).unwrap();
        let j = &r.per_job[0];
        assert!(j.compute_s > 100.0, "{}", j.compute_s);
        assert!((j.total_s - (j.overhead_s + j.compute_s + j.comm_s)).abs() < 1e-9);
    }

    #[test]
    fn trace_is_gang_atomic() {
        let jobs = vec![job(0, 6, 12, 3), job(1, 6, 12, 3), job(2, 2, 24, 3)];
        let s = scenario(2, jobs, PlacementPolicy::Spread, SchedulingMode::CoScheduled);
        let (_, trace) = run_scenario_traced(&s).unwrap();
        for id in 0..3 {
            let kinds: Vec<&TraceKind> = trace.iter().filter(|t| t.job_id == id).map(|t| &t.kind).collect();
            assert_eq!(kinds, vec![&TraceKind::Launch, &TraceKind::Ready, &TraceKind::Finish]);
        }
    }
}
