//! Building a run from a config file and checking its thresholds.

use se3_ekf::harness::{self, RunStatus, ScenarioConfig};

const CONFIG: &str = "
scenario = example1
duration = 4
seed = 11
noise.r = 0.5
estimate.position = 1, 1, -1
filter.transition = exact-expm
acceptance.convergence_time_max = 2.0
acceptance.velocity_rmse_max = 0.5
metrics.window_start = 2
metrics.window_end = 4
";

fn main() -> se3_ekf::Result<()> {
    let cfg = ScenarioConfig::parse(CONFIG)?;
    let out = harness::run(&cfg)?;
    println!("{}", out.metrics.summary());
    match out.status(&cfg) {
        RunStatus::Success => println!("all thresholds met"),
        RunStatus::ThresholdFailure(f) => println!("failed: {f:?}"),
        RunStatus::Aborted(a) => println!("aborted: {}", a.message),
    }

    // The full configuration, ready to save and edit.
    let text = cfg.to_text();
    assert_eq!(ScenarioConfig::parse(&text)?, cfg);
    println!("\n{text}");

    if let Err(e) = ScenarioConfig::parse("gains.kx = 4\ngains.kd = 1\n") {
        println!("rejected: {e}");
    }
    Ok(())
}
