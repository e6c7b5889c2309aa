//! Helix tracking with attitude and angular velocity measurements only.
//! Position and velocity are inferred through the closed-loop coupling.

use se3_ekf::harness::{self, scenarios};

fn main() -> se3_ekf::Result<()> {
    let cfg = scenarios::example2();
    let out = harness::run(&cfg)?;
    for r in out.records.iter().step_by(25).take(12) {
        println!(
            "t = {:5.2}  |x_est - x| = {:.4}  |v_est - v| = {:.4}  NEES = {:.1}",
            r.t,
            r.position_error().norm(),
            r.velocity_error().norm(),
            r.nees
        );
    }
    let m = &out.metrics;
    println!(
        "largest error: position {:.3} m, velocity {:.3} m/s",
        m.max_error.position, m.max_error.velocity
    );
    println!(
        "RMSE over [{}, {}] s: position {:.4} m, velocity {:.4} m/s",
        cfg.metrics.window_start, cfg.metrics.window_end, m.window_rmse.position, m.window_rmse.velocity
    );
    Ok(())
}
