use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scylla_sim::commands::{cmd_calibrate, cmd_compare, cmd_run, cmd_validate};

#[derive(Parser)]
#[command(name = "scylla-sim", version, about = "Offer-based cluster scheduler simulator for gangs of containerized MPI jobs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write samples.csv, jobs.csv and summary.txt.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a scenario once per axis value and write compare.csv.
    Compare {
        scenario: PathBuf,
        /// policy, mode or cluster_size
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit a calibration profile to target ratios.
    Calibrate {
        targets: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load and check a scenario without running it.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    let code = match cli.command {
        Command::Run { scenario, out } => cmd_run(&scenario, &out),
        Command::Compare {
            scenario,
            axis,
            values,
            out,
        } => cmd_compare(&scenario, &axis, &values, &out),
        Command::Calibrate { targets, out } => cmd_calibrate(&targets, &out),
        Command::Validate { scenario } => cmd_validate(&scenario),
    };
    ExitCode::from(code as u8)
}
