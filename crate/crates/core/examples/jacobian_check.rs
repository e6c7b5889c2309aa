//! Analytic closed-loop Jacobian against central differences, at one state
//! and over a sweep along the `example1` scenario.

use se3_ekf::controller::{Gains, GeometricController};
use se3_ekf::dynamics::QuadrotorParams;
use se3_ekf::harness::{jacobian_sweep, scenarios, SweepConfig};
use se3_ekf::linearization::{block_name, ClosedLoop, FullState, JacobianComparison, DEFAULT_FD_STEP};
use se3_ekf::trajectory::BuiltinTrajectory;
use se3_ekf::{Vec18, Vec3};

fn main() -> se3_ekf::Result<()> {
    let params = QuadrotorParams::reference_vehicle();
    let controller = GeometricController::new(Gains::simulation(), params.clone());
    let trajectory = BuiltinTrajectory::Lissajous { altitude: -0.5 };
    let cl = ClosedLoop::new(&controller, &params, &trajectory);

    let mut s = FullState::default();
    s.quad.position = Vec3::new(1.4, 0.2, -0.4);
    s.quad.velocity = Vec3::new(0.8, 1.5, 0.1);
    let s = s.retract(&Vec18::from_fn(|i, _| 0.02 * (i as f64 * 0.7).sin()));

    let lin = cl.linearize(1.0, &s)?;
    let fd = cl.fd_jacobian(1.0, &s, DEFAULT_FD_STEP)?;
    let cmp = JacobianComparison::new(&lin.a, &fd);
    println!("m21 ={}", lin.m21());
    println!("full relative error {:.2e}", cmp.full_error);
    for (i, row) in cmp.block_errors.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, e)| format!("{:>4} {e:.0e}", block_name(i, j)))
            .collect();
        println!("{}", line.join("  "));
    }

    let sweep = jacobian_sweep(&scenarios::example1(), &SweepConfig::default())?;
    println!(
        "sweep: {} states, worst full error {:.2e}, {} out-of-tolerance blocks, passed = {}",
        sweep.samples.len(),
        sweep.max_full_error,
        sweep.deviations.len(),
        sweep.passed()
    );
    Ok(())
}
