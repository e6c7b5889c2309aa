//! Writing telemetry, reading it back and recomputing the metrics from the file.

use se3_ekf::harness::{self, scenarios, Metrics};

fn main() -> se3_ekf::Result<()> {
    let mut cfg = scenarios::experiment_replay();
    cfg.duration = 3.0;
    cfg.metrics.window_start = 1.0;
    cfg.metrics.window_end = 3.0;
    let out = harness::run(&cfg)?;

    let path = std::env::temp_dir().join("se3_ekf_telemetry.csv");
    harness::write_csv_file(&out.records, &path)?;
    let back = harness::read_csv_file(&path)?;
    let again = Metrics::from_records(&back, &cfg.metrics);
    println!("{} rows written to {}", back.len(), path.display());
    println!("metrics identical after the round trip: {}", again == out.metrics);
    println!("first columns: {}", harness::telemetry::header()[..8].join(","));
    std::fs::remove_file(&path)?;
    Ok(())
}
