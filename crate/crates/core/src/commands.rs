//! Subcommand implementations. Each returns a process exit code and reports
//! failures on stderr as a single line starting with `error:`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use crate::calibrate::{fit, Grid, Targets};
use crate::engine::{run_scenario, Scenario, SchedulingMode};
use crate::metrics::MetricsReport;
use crate::placement::PlacementPolicy;
use crate::scenario::load_scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    let line = message.to_string().replace('\n', " ");
    eprintln!("error: {}", line);
    code
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("{}: {}", path.display(), e))
}

fn create_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {}", dir.display(), e))
}

/// Write samples.csv, jobs.csv and summary.txt into `out_dir`.
pub fn write_report(report: &MetricsReport, out_dir: &Path) -> Result<(), String> {
    create_dir(out_dir)?;
    write_file(&out_dir.join("samples.csv"), &report.samples_csv())?;
    write_file(&out_dir.join("jobs.csv"), &report.jobs_csv())?;
    write_file(&out_dir.join("summary.txt"), &report.summary_text())
}

pub fn cmd_run(scenario_path: &Path, out_dir: &Path) -> i32 {
    let scenario = match load_scenario(scenario_path) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    let report = match run_scenario(&scenario) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_FAILURE, format!("{}: {}", scenario_path.display(), e)),
    };
    if let Err(e) = write_report(&report, out_dir) {
        return fail(EXIT_FAILURE, e);
    }
    print!("{}", report.summary_text());
    EXIT_OK
}

pub fn cmd_validate(scenario_path: &Path) -> i32 {
    match load_scenario(scenario_path) {
        Ok(s) => {
            println!(
                "ok: {} jobs, {} worker nodes, policy={}, mode={}, calibration={}",
                s.jobs.len(),
                s.cluster.workers,
                s.policy,
                s.mode,
                s.profile.name
            );
            EXIT_OK
        }
        Err(e) => fail(EXIT_FAILURE, e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Policy,
    Mode,
    ClusterSize,
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "policy" => Ok(Axis::Policy),
            "mode" => Ok(Axis::Mode),
            "cluster_size" => Ok(Axis::ClusterSize),
            other => Err(format!("unknown axis `{}` (expected policy|mode|cluster_size)", other)),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Policy => "policy",
            Axis::Mode => "mode",
            Axis::ClusterSize => "cluster_size",
        })
    }
}

/// A copy of `base` with the axis set to `value`.
pub fn variant(base: &Scenario, axis: Axis, value: &str) -> Result<Scenario, String> {
    let mut s = base.clone();
    match axis {
        Axis::Policy => s.policy = value.parse::<PlacementPolicy>()?,
        Axis::Mode => s.mode = value.parse::<SchedulingMode>()?,
        Axis::ClusterSize => {
            s.cluster.workers = match value.parse::<u32>() {
                Ok(n) if n >= 1 => n,
                _ => return Err(format!("cluster_size `{}` is not a positive integer", value)),
            }
        }
    }
    Ok(s)
}

const COMPARE_METRICS: [&str; 6] = [
    "makespan_s",
    "avg_cpu_util",
    "avg_mem_util",
    "mean_total_s",
    "mean_overhead_s",
    "mean_avg_pair_latency_us",
];

fn metric_values(r: &MetricsReport) -> [f64; 6] {
    [
        r.makespan_s,
        r.avg_cpu_util,
        r.avg_mem_util,
        r.mean_total_s(),
        r.mean_overhead_s(),
        r.mean_avg_pair_latency_us(),
    ]
}

fn relative(x: f64, base: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        x / base - 1.0
    }
}

/// One row per axis value: the metrics, then each metric's relative change
/// against the first row.
pub fn compare_csv(axis: Axis, rows: &[(String, MetricsReport)]) -> String {
    let mut out = String::from("axis,value");
    for m in COMPARE_METRICS {
        let _ = write!(out, ",{}", m);
    }
    for m in COMPARE_METRICS {
        let _ = write!(out, ",rel_{}", m);
    }
    out.push('\n');
    let Some((_, first)) = rows.first() else {
        return out;
    };
    let base = metric_values(first);
    for (value, report) in rows {
        let vals = metric_values(report);
        let _ = write!(out, "{},{}", axis, value);
        for v in vals {
            let _ = write!(out, ",{:.6}", v);
        }
        for (v, b) in vals.iter().zip(base) {
            let _ = write!(out, ",{:.6}", relative(*v, b));
        }
        out.push('\n');
    }
    out
}

/// Run every variant on its own thread; results keep the input order.
pub fn run_variants(variants: &[Scenario]) -> Vec<Result<MetricsReport, crate::SimError>> {
    thread::scope(|scope| {
        let handles: Vec<_> = variants.iter().map(|s| scope.spawn(move || run_scenario(s))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("engine thread panicked"))
            .collect()
    })
}

pub fn cmd_compare(scenario_path: &Path, axis: &str, values: &[String], out_dir: &Path) -> i32 {
    let axis: Axis = match axis.parse() {
        Ok(a) => a,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    if values.is_empty() {
        return fail(EXIT_FAILURE, "compare needs at least one value");
    }
    let base = match load_scenario(scenario_path) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    let mut variants = Vec::with_capacity(values.len());
    for v in values {
        match variant(&base, axis, v) {
            Ok(s) => variants.push(s),
            Err(e) => return fail(EXIT_FAILURE, format!("{}: {}", axis, e)),
        }
    }
    let mut rows = Vec::with_capacity(values.len());
    for (value, result) in values.iter().zip(run_variants(&variants)) {
        match result {
            Ok(r) => rows.push((value.clone(), r)),
            Err(e) => return fail(EXIT_FAILURE, format!("{} ({}={}): {}", scenario_path.display(), axis, value, e)),
        }
    }
    let csv = compare_csv(axis, &rows);
    if let Err(e) = create_dir(out_dir).and_then(|_| write_file(&out_dir.join("compare.csv"), &csv)) {
        return fail(EXIT_FAILURE, e);
    }
    print!("{}", csv);
    EXIT_OK
}

pub fn cmd_calibrate(targets_path: &Path, out_profile: &Path) -> i32 {
    let targets = match Targets::load(targets_path) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    let name = out_profile
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("calibrated")
        .to_string();
    let result = match fit(&targets, &Grid::default(), &name) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    print!("{}", result.achieved.report(&targets));
    if !result.feasible() {
        let residuals: Vec<String> = result
            .achieved
            .residuals(&targets)
            .iter()
            .map(|r| format!("{:.3}", r))
            .collect();
        return fail(
            EXIT_INFEASIBLE,
            format!(
                "InfeasibleCalibration: no grid point meets every tolerance; best residuals [{}]",
                residuals.join(", ")
            ),
        );
    }
    if let Some(parent) = out_profile.parent().filter(|p| !p.as_os_str().is_empty()) {
        if let Err(e) = create_dir(parent) {
            return fail(EXIT_FAILURE, e);
        }
    }
    if let Err(e) = write_file(out_profile, &result.profile.to_text()) {
        return fail(EXIT_FAILURE, e);
    }
    println!("wrote {}", PathBuf::from(out_profile).display());
    EXIT_OK
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::shipped;

    #[test]
    fn single_value_compare_has_zero_delta() {
        let s = shipped::load("single_job").unwrap();
        let r = run_scenario(&s).unwrap();
        let csv = compare_csv(Axis::Mode, &[("coscheduled".into(), r)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].ends_with(",0.000000,0.000000,0.000000,0.000000,0.000000,0.000000"));
    }

    #[test]
    fn variant_rejects_bad_values() {
        let s = shipped::load("single_job").unwrap();
        assert!(variant(&s, Axis::Policy, "binpack").is_err());
        assert!(variant(&s, Axis::ClusterSize, "0").is_err());
        assert_eq!(variant(&s, Axis::ClusterSize, "3").unwrap().cluster.workers, 3);
        assert_eq!(variant(&s, Axis::Mode, "exclusive").unwrap().mode, SchedulingMode::Exclusive);
    }
}
