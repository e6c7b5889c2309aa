//! Simulated stand-in for the flight test, swept over seeds.

use se3_ekf::harness::{self, scenarios, ScenarioConfig};

fn main() -> se3_ekf::Result<()> {
    let base = scenarios::experiment_replay();
    println!("seed  pos RMSE  vel RMSE  att RMSE  tracking after {} s", base.metrics.settle_time);
    for seed in 1..=5 {
        let m = harness::run(&ScenarioConfig { seed, ..base.clone() })?.metrics;
        println!(
            "{seed:>4}  {:8.4}  {:8.4}  {:8.4}  {:8.4}",
            m.window_rmse.position,
            m.window_rmse.velocity,
            m.window_rmse.attitude,
            m.max_tracking_error_after_settle.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
