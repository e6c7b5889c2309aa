//! Velocity estimation from noisy position, attitude and gyro data with a
//! 6.4 m initial estimate error.
//!
//! `cargo run --example ekf_example1 -- [seed] [out.csv]`

use se3_ekf::harness::{self, scenarios};

fn main() -> se3_ekf::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = scenarios::example1();
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse().expect("seed must be an integer");
    }
    let out = harness::run(&cfg)?;
    for r in out.records.iter().step_by(50) {
        println!(
            "t = {:5.2}  |x_est - x| = {:8.4}  |v_est - v| = {:8.4}  NEES = {:9.2}",
            r.t,
            r.position_error().norm(),
            r.velocity_error().norm(),
            r.nees
        );
    }
    println!("{}", out.metrics.summary());
    if let Some(path) = args.next() {
        harness::write_csv_file(&out.records, path.as_ref())?;
        println!("telemetry written to {path}");
    }
    Ok(())
}
