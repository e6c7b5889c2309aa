//! Open-loop integration of the vehicle with a constant input.

use se3_ekf::dynamics::{rk4_step_constant_input, ControlInput, QuadrotorParams, QuadrotorState};
use se3_ekf::Vec3;

fn main() -> se3_ekf::Result<()> {
    let params = QuadrotorParams::reference_vehicle().without_disturbances();
    let hover = ControlInput {
        thrust: params.mass * params.gravity,
        moment: Vec3::zeros(),
    };
    let mut s = QuadrotorState {
        angular_velocity: Vec3::new(0.0, 0.0, 1.0),
        ..Default::default()
    };
    let dt = 0.01;
    for k in 1..=1000 {
        s = rk4_step_constant_input(&s, &hover, &params, dt)?;
        if k % 200 == 0 {
            println!(
                "t = {:5.2}  z = {:+.3e}  yaw rate = {:.6}  |R^T R - I| = {:.1e}",
                k as f64 * dt,
                s.position.z,
                s.angular_velocity.z,
                s.attitude.orthogonality_error()
            );
        }
    }

    // Same vehicle with the constant disturbances switched on.
    let disturbed = QuadrotorParams::reference_vehicle();
    let mut s = QuadrotorState::default();
    for _ in 0..100 {
        s = rk4_step_constant_input(&s, &hover, &disturbed, dt)?;
    }
    println!(
        "after 1 s under disturbances: x = {:?}, Omega = {:?}",
        s.position.as_slice(),
        s.angular_velocity.as_slice()
    );
    Ok(())
}
