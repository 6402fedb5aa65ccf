//! Dominant Resource Fairness over cluster totals.
//!
//! Shares are compared exactly as fractions so that ties (and therefore the
//! lowest-job-id tie-break) are never decided by float rounding.

use std::cmp::Ordering;

use crate::error::SimError;
use crate::resources::ResourceVector;
use crate::workload::JobId;

/// A queued or running gang job as seen by the allocator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameworkAccount {
    pub job_id: JobId,
    pub allocated_total: ResourceVector,
    pub demand_per_task: ResourceVector,
    /// Tasks (containers) not yet granted.
    pub pending_tasks: u32,
}

/// `max(cpus/total.cpus, mem/total.mem)` as an exact fraction.
#[derive(Clone, Copy, Debug)]
pub struct Share {
    num: u128,
    den: u128,
}

impl Share {
    pub fn of(allocated: &ResourceVector, total: &ResourceVector) -> Result<Share, SimError> {
        if total.milli_cpus == 0 || total.mem_mib == 0 {
            return Err(SimError::ZeroClusterTotal);
        }
        let cpu = Share {
            num: allocated.milli_cpus as u128,
            den: total.milli_cpus as u128,
        };
        let mem = Share {
            num: allocated.mem_mib as u128,
            den: total.mem_mib as u128,
        };
        Ok(if cpu >= mem { cpu } else { mem })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Share {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Share {}

impl PartialOrd for Share {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Share {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Dominant share of `allocated` relative to `cluster_total`, in `[0, 1]` for
/// allocations within the total.
pub fn dominant_share(allocated: &ResourceVector, cluster_total: &ResourceVector) -> Result<f64, SimError> {
    Share::of(allocated, cluster_total).map(|s| s.value())
}

struct Progress {
    job_id: JobId,
    allocated: ResourceVector,
    demand: ResourceVector,
    pending: u32,
}

/// Progressive filling: repeatedly grant one task to the job with the lowest
/// dominant share (ties to the lower job id) among jobs whose next task still
/// fits in what is left of `cluster_total`. The callback sees each selection;
/// returning `false` stops the progression early.
fn progressive_fill<F>(queue: &[FrameworkAccount], cluster_total: &ResourceVector, mut on_grant: F) -> Result<(), SimError>
where
    F: FnMut(JobId, &[(JobId, Share)]) -> bool,
{
    // validates the totals up front
    Share::of(&ResourceVector::ZERO, cluster_total)?;
    let mut jobs: Vec<Progress> = queue
        .iter()
        .map(|a| Progress {
            job_id: a.job_id,
            allocated: a.allocated_total,
            demand: a.demand_per_task,
            pending: a.pending_tasks,
        })
        .collect();
    let mut used: ResourceVector = jobs.iter().map(|j| j.allocated).sum();

    loop {
        let remaining = cluster_total.saturating_sub(&used);
        let mut best: Option<(Share, JobId, usize)> = None;
        for (idx, job) in jobs.iter().enumerate() {
            if job.pending == 0 || job.demand.is_zero() || !job.demand.fits_in(&remaining) {
                continue;
            }
            let share = Share::of(&job.allocated, cluster_total)?;
            let better = match &best {
                None => true,
                Some((s, id, _)) => (share, job.job_id) < (*s, *id),
            };
            if better {
                best = Some((share, job.job_id, idx));
            }
        }
        let Some((_, job_id, idx)) = best else {
            return Ok(());
        };
        let job = &mut jobs[idx];
        job.allocated = job.allocated + job.demand;
        job.pending -= 1;
        used = used + job.demand;

        let shares: Vec<(JobId, Share)> = jobs
            .iter()
            .map(|j| Share::of(&j.allocated, cluster_total).map(|s| (j.job_id, s)))
            .collect::<Result<_, _>>()?;
        if !on_grant(job_id, &shares) {
            return Ok(());
        }
    }
}

/// Full DRF selection sequence (one entry per granted task) until no job can
/// receive another task.
pub fn drf_progression(queue: &[FrameworkAccount], cluster_total: &ResourceVector) -> Result<Vec<JobId>, SimError> {
    let mut seq = Vec::new();
    progressive_fill(queue, cluster_total, |id, _| {
        seq.push(id);
        true
    })?;
    Ok(seq)
}

/// Job order in which the engine offers resources: first appearance in the DRF
/// progression, followed by jobs the progression never reached, ordered by
/// (dominant share, job id).
pub fn drf_admission_order(queue: &[FrameworkAccount], cluster_total: &ResourceVector) -> Result<Vec<JobId>, SimError> {
    let mut order: Vec<JobId> = Vec::with_capacity(queue.len());
    let want = queue.len();
    progressive_fill(queue, cluster_total, |id, _| {
        if !order.contains(&id) {
            order.push(id);
        }
        order.len() < want
    })?;

    let mut rest: Vec<(Share, JobId)> = queue
        .iter()
        .filter(|a| !order.contains(&a.job_id))
        .map(|a| Share::of(&a.allocated_total, cluster_total).map(|s| (s, a.job_id)))
        .collect::<Result<_, _>>()?;
    rest.sort();
    order.extend(rest.into_iter().map(|(_, id)| id));
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acct(id: JobId, cpus: u64, mem: u64, tasks: u32) -> FrameworkAccount {
        FrameworkAccount {
            job_id: id,
            allocated_total: ResourceVector::ZERO,
            demand_per_task: ResourceVector::new(cpus * 1000, mem),
            pending_tasks: tasks,
        }
    }

    #[test]
    fn dominant_share_examples() {
        let total = ResourceVector::new(10_000, 40_960);
        let s = dominant_share(&ResourceVector::new(2_000, 4_096), &total).unwrap();
        assert!((s - 0.2).abs() < 1e-12);
        assert_eq!(dominant_share(&ResourceVector::ZERO, &total).unwrap(), 0.0);
        assert_eq!(dominant_share(&total, &total).unwrap(), 1.0);
    }

    #[test]
    fn zero_total_is_an_error() {
        let err = dominant_share(&ResourceVector::ZERO, &ResourceVector::new(0, 10)).unwrap_err();
        assert_eq!(err, SimError::ZeroClusterTotal);
    }

    #[test]
    fn classic_two_job_progression() {
        // A: (1 cpu, 4 GiB) tasks, B: (3 cpu, 1 GiB) tasks, cluster (9 cpu, 18 GiB)
        let total = ResourceVector::new(9_000, 18_432);
        let queue = vec![acct(0, 1, 4_096, 100), acct(1, 3, 1_024, 100)];
        let seq = drf_progression(&queue, &total).unwrap();
        assert_eq!(seq, vec![0, 1, 0, 1, 0]);
        assert_eq!(drf_admission_order(&queue, &total).unwrap(), vec![0, 1]);
    }

    #[test]
    fn single_job_is_first() {
        let total = ResourceVector::new(9_000, 18_432);
        let queue = vec![acct(7, 1, 1, 3)];
        assert_eq!(drf_admission_order(&queue, &total).unwrap(), vec![7]);
        assert_eq!(drf_progression(&queue, &total).unwrap(), vec![7, 7, 7]);
    }

    #[test]
    fn identical_jobs_alternate() {
        let total = ResourceVector::new(100_000, 100_000);
        let queue = vec![acct(4, 2, 100, 3), acct(2, 2, 100, 3)];
        let seq = drf_progression(&queue, &total).unwrap();
        assert_eq!(seq, vec![2, 4, 2, 4, 2, 4]);
    }

    #[test]
    fn unreachable_jobs_are_appended() {
        let total = ResourceVector::new(4_000, 4_096);
        let queue = vec![acct(0, 8, 1, 1), acct(1, 1, 1, 1)];
        assert_eq!(drf_admission_order(&queue, &total).unwrap(), vec![1, 0]);
    }
}
