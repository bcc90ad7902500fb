use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pgnmpc::cli::{cmd_compare_iterations, cmd_run, cmd_suite, CliError, ExitStatus, RunManifest};

/// Real-time projected-gradient NMPC for propofol/remifentanil anesthesia.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Patient file (JSON); the shipped nominal patient by default.
    #[arg(long, global = true)]
    patient: Option<PathBuf>,

    /// Scenario file (JSON); built-in defaults when omitted.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Output directory, created if absent.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed for measurement noise; replaces the scenario's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Scenario override as dotted.key=value, e.g. controller.mode.count=1000.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop scenario.
    Run,
    /// Run the scenario once per fixed iteration count.
    CompareIterations {
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        counts: Vec<usize>,
    },
    /// Run the acceptance battery.
    Suite,
}

fn execute(cli: Cli) -> Result<ExitStatus, CliError> {
    let manifest = RunManifest {
        patient_path: cli.patient,
        scenario_path: cli.scenario,
        output_dir: cli.out,
        overrides: cli.overrides,
        seed: cli.seed,
    };
    match cli.command {
        Command::Run => {
            let summary = cmd_run(&manifest)?;
            println!(
                "{} rows written to {}",
                summary.rows,
                manifest.output_dir.join("trace.csv").display()
            );
            if let Some(m) = summary.metrics {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&m).expect("metrics serialize")
                );
            }
            Ok(ExitStatus::Success)
        }
        Command::CompareIterations { counts } => {
            let summary = cmd_compare_iterations(&manifest, &counts)?;
            println!(
                "{:>8} {:>10} {:>10} {:>12} {:>14}",
                "count", "rise_min", "overshoot", "in_band_pct", "terminal_err"
            );
            for run in &summary.runs {
                let Some(m) = &run.metrics else { continue };
                let opt = |v: Option<f64>| v.map_or("n/r".to_string(), |x| format!("{x:.2}"));
                println!(
                    "{:>8} {:>10} {:>10.2} {:>12} {:>14.4}",
                    run.count,
                    opt(m.rise_time_min),
                    m.overshoot_pct,
                    opt(m.time_in_band_pct),
                    m.terminal_error
                );
            }
            Ok(ExitStatus::Success)
        }
        Command::Suite => {
            let report = cmd_suite(&manifest)?;
            println!("{report}");
            Ok(report.exit_status())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                ExitStatus::Usage.code() as u8
            } else {
                0
            });
        }
    };
    match execute(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status.code() as u8)
        }
    }
}
