//! Utilization sampling, per-job results and run summaries.
//!
//! Utilization counts blocked (allocated) resources, the way the resource
//! manager accounts for them, rather than instantaneous hardware usage. In
//! exclusive mode a job blocks its whole nodes.

use std::fmt::Write as _;

use crate::error::SimError;
use crate::resources::ClusterState;
use crate::workload::JobId;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub time_ms: u64,
    pub cpu_util: f64,
    pub mem_util: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobResult {
    pub job_id: JobId,
    pub name: String,
    pub arrival_ms: u64,
    pub finish_ms: u64,
    pub wait_s: f64,
    pub overhead_s: f64,
    pub compute_s: f64,
    pub comm_s: f64,
    /// Always `overhead_s + compute_s + comm_s`.
    pub total_s: f64,
    pub hosts_used: usize,
    pub avg_pair_latency_us: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub samples: Vec<Sample>,
    pub per_job: Vec<JobResult>,
    pub makespan_s: f64,
    pub avg_cpu_util: f64,
    pub avg_mem_util: f64,
}

/// Blocked fraction of worker CPU and memory.
pub fn sample_utilization(cluster: &ClusterState) -> (f64, f64) {
    let cap = cluster.worker_capacity();
    let used = cluster.worker_allocated();
    let frac = |u: u64, c: u64| if c == 0 { 0.0 } else { u as f64 / c as f64 };
    (
        frac(used.milli_cpus, cap.milli_cpus),
        frac(used.mem_mib, cap.mem_mib),
    )
}

/// Time-weighted mean of a step function defined by `samples` over `[0, end_ms]`.
/// Each sample holds until the next one.
pub fn time_weighted_mean<F: Fn(&Sample) -> f64>(samples: &[Sample], end_ms: u64, value: F) -> f64 {
    let Some(first) = samples.first() else {
        return 0.0;
    };
    if end_ms == 0 {
        return value(first);
    }
    let mut acc = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let start = s.time_ms.min(end_ms);
        let stop = samples.get(i + 1).map_or(end_ms, |n| n.time_ms).min(end_ms);
        acc += value(s) * (stop - start) as f64;
    }
    acc / end_ms as f64
}

/// Builds the report; the makespan is the last job finish.
pub fn summarize(samples: Vec<Sample>, per_job: Vec<JobResult>) -> Result<MetricsReport, SimError> {
    if samples.is_empty() {
        return Err(SimError::EmptyRun);
    }
    let end_ms = per_job.iter().map(|j| j.finish_ms).max().unwrap_or(0);
    Ok(MetricsReport {
        avg_cpu_util: time_weighted_mean(&samples, end_ms, |s| s.cpu_util),
        avg_mem_util: time_weighted_mean(&samples, end_ms, |s| s.mem_util),
        makespan_s: end_ms as f64 / 1000.0,
        samples,
        per_job,
    })
}

impl MetricsReport {
    pub fn job(&self, id: JobId) -> Option<&JobResult> {
        self.per_job.iter().find(|j| j.job_id == id)
    }

    pub fn mean_total_s(&self) -> f64 {
        mean(self.per_job.iter().map(|j| j.total_s))
    }

    pub fn mean_overhead_s(&self) -> f64 {
        mean(self.per_job.iter().map(|j| j.overhead_s))
    }

    pub fn mean_avg_pair_latency_us(&self) -> f64 {
        mean(self.per_job.iter().map(|j| j.avg_pair_latency_us))
    }

    pub fn samples_csv(&self) -> String {
        let mut out = String::from("time_ms,cpu_util,mem_util\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{:.6},{:.6}", s.time_ms, s.cpu_util, s.mem_util);
        }
        out
    }

    pub fn jobs_csv(&self) -> String {
        let mut out = String::from("job_id,wait_s,overhead_s,compute_s,comm_s,total_s,hosts_used,avg_pair_latency_us\n");
        for j in &self.per_job {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}",
                j.job_id, j.wait_s, j.overhead_s, j.compute_s, j.comm_s, j.total_s, j.hosts_used, j.avg_pair_latency_us
            );
        }
        out
    }

    pub fn summary_text(&self) -> String {
        format!(
            "makespan_s={:.6}\navg_cpu_util={:.6}\navg_mem_util={:.6}\njobs={}\nmean_total_s={:.6}\nmean_overhead_s={:.6}\nmean_avg_pair_latency_us={:.6}\n",
            self.makespan_s,
            self.avg_cpu_util,
            self.avg_mem_util,
            self.per_job.len(),
            self.mean_total_s(),
            self.mean_overhead_s(),
            self.mean_avg_pair_latency_us()
        )
    }
}

fn mean<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::{ClusterState, ResourceVector};

    fn s(t: u64, c: f64, m: f64) -> Sample {
        Sample {
            time_ms: t,
            cpu_util: c,
            mem_util: m,
        }
    }

    fn finished_at(ms: u64) -> JobResult {
        JobResult {
            job_id: 0,
            name: "j".into(),
            arrival_ms: 0,
            finish_ms: ms,
            wait_s: 0.0,
            overhead_s: 1.0,
            compute_s: 2.0,
            comm_s: 0.5,
            total_s: 3.5,
            hosts_used: 1,
            avg_pair_latency_us: 1.0,
        }
    }

    #[test]
    fn utilization_examples() {
        let node = ResourceVector::new(48_000, 1_000);
        let mut c = ClusterState::homogeneous(4, node, node);
        assert_eq!(sample_utilization(&c), (0.0, 0.0));
        c.allocate(1, ResourceVector::new(48_000, 0)).unwrap();
        assert_eq!(sample_utilization(&c).0, 0.25);
        for id in 1..=4 {
            let avail = c.node(id).unwrap().available();
            c.allocate(id, avail).unwrap();
        }
        assert_eq!(sample_utilization(&c), (1.0, 1.0));
    }

    #[test]
    fn constant_utilization_average() {
        let r = summarize(vec![s(0, 0.5, 0.5), s(1000, 0.5, 0.5)], vec![finished_at(4000)]).unwrap();
        assert_eq!(r.avg_cpu_util, 0.5);
        assert_eq!(r.makespan_s, 4.0);
    }

    #[test]
    fn half_and_half_average() {
        let r = summarize(vec![s(0, 0.2, 0.0), s(2000, 0.6, 1.0)], vec![finished_at(4000)]).unwrap();
        assert!((r.avg_cpu_util - 0.4).abs() < 1e-12);
        assert!((r.avg_mem_util - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_run_is_an_error() {
        assert_eq!(summarize(vec![], vec![finished_at(1)]).unwrap_err(), SimError::EmptyRun);
    }

    #[test]
    fn csv_layout() {
        let r = summarize(vec![s(0, 0.25, 0.125)], vec![finished_at(1000)]).unwrap();
        assert_eq!(r.samples_csv(), "time_ms,cpu_util,mem_util\n0,0.250000,0.125000\n");
        assert_eq!(
            r.jobs_csv(),
            "job_id,wait_s,overhead_s,compute_s,comm_s,total_s,hosts_used,avg_pair_latency_us\n\
             0,0.000000,1.000000,2.000000,0.500000,3.500000,1,1.000000\n"
        );
    }
}
