use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use se3_ekf::harness::{self, scenarios, ScenarioConfig, SweepConfig};
use se3_ekf::linearization::{block_name, write_deviation_report, FULL_MATRIX_TOLERANCE};

#[derive(Parser)]
#[command(name = "se3-ekf", version, about = "Quadrotor geometric control and EKF simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its telemetry.
    Run {
        /// Bundled scenario to start from.
        #[arg(long)]
        scenario: Option<String>,
        /// Configuration file; its `scenario` key wins over --scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Telemetry CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Compare the analytic closed-loop Jacobian with finite differences.
    VerifyJacobian {
        #[arg(long, default_value = "example1")]
        scenario: String,
        #[arg(long, default_value_t = 120)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Deviation report CSV path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// List the bundled scenarios.
    ListScenarios,
}

const EXIT_THRESHOLD: u8 = 1;
const EXIT_DEGENERATE: u8 = 2;
const EXIT_IO: u8 = 3;

fn load(scenario: Option<&str>, config: Option<&PathBuf>) -> se3_ekf::Result<ScenarioConfig> {
    match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            match scenario {
                Some(name) if !text.lines().any(|l| l.trim_start().starts_with("scenario")) => {
                    ScenarioConfig::parse(&format!("scenario = {name}\n{text}"))
                }
                _ => ScenarioConfig::parse(&text),
            }
        }
        None => scenarios::by_name(scenario.unwrap_or("example1")),
    }
}

fn run(
    scenario: Option<String>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    dt: Option<f64>,
    duration: Option<f64>,
) -> ExitCode {
    let mut cfg = match load(scenario.as_deref(), config.as_ref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = dt {
        cfg.dt = d;
    }
    if let Some(d) = duration {
        cfg.duration = d;
    }
    if out.is_some() {
        cfg.output = out;
    }
    let output = match harness::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &cfg.output {
        if let Err(e) = harness::write_csv_file(&output.records, path) {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_IO);
        }
    }
    println!("scenario: {}  seed: {}", cfg.name, cfg.seed);
    println!("{}", output.metrics.summary());
    match output.status(&cfg) {
        harness::RunStatus::Success => ExitCode::SUCCESS,
        harness::RunStatus::ThresholdFailure(f) => {
            for msg in f {
                eprintln!("threshold: {msg}");
            }
            ExitCode::from(EXIT_THRESHOLD)
        }
        harness::RunStatus::Aborted(a) => {
            eprintln!("aborted at t = {}: {}", a.t, a.message);
            ExitCode::from(EXIT_DEGENERATE)
        }
    }
}

fn verify(scenario: &str, samples: usize, seed: u64, report: Option<PathBuf>) -> ExitCode {
    let cfg = match scenarios::by_name(scenario) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    let sweep = SweepConfig {
        samples,
        seed,
        ..Default::default()
    };
    let result = match harness::jacobian_sweep(&cfg, &sweep) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_degenerate() { EXIT_DEGENERATE } else { EXIT_IO });
        }
    };
    println!(
        "{} states, {} skipped, max full-matrix error {:.3e} (tolerance {:.0e})",
        result.samples.len(),
        result.skipped,
        result.max_full_error,
        FULL_MATRIX_TOLERANCE
    );
    for (i, row) in result.max_block_errors.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, e)| format!("{}={e:.1e}", block_name(i, j)))
            .collect();
        println!("  {}", cells.join("  "));
    }
    println!("{} out-of-tolerance blocks", result.deviations.len());
    let write = match &report {
        Some(path) => std::fs::File::create(path)
            .map_err(se3_ekf::Error::from)
            .and_then(|f| write_deviation_report(&result.deviations, f)),
        None => write_deviation_report(&result.deviations, std::io::stdout()),
    };
    if let Err(e) = write {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_IO);
    }
    if result.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_THRESHOLD)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            scenario,
            config,
            out,
            seed,
            dt,
            duration,
        } => run(scenario, config, out, seed, dt, duration),
        Command::VerifyJacobian {
            scenario,
            samples,
            seed,
            report,
        } => verify(&scenario, samples, seed, report),
        Command::ListScenarios => {
            for (name, desc) in scenarios::NAMES.iter().zip(scenarios::DESCRIPTIONS) {
                println!("{name:<20} {desc}");
            }
            ExitCode::SUCCESS
        }
    }
}
