//! Geometric tracking of a Lissajous curve with the true state fed back.

use se3_ekf::controller::{Gains, GeometricController};
use se3_ekf::dynamics::{rk4_step, QuadrotorParams};
use se3_ekf::linearization::{ClosedLoop, FullState};
use se3_ekf::trajectory::{BuiltinTrajectory, Trajectory};

fn main() -> se3_ekf::Result<()> {
    let params = QuadrotorParams::reference_vehicle();
    let controller = GeometricController::new(Gains::simulation(), params.clone());
    let trajectory = BuiltinTrajectory::Lissajous { altitude: -0.5 };
    let closed_loop = ClosedLoop::new(&controller, &params, &trajectory);

    let mut s = FullState::default();
    let dt = 0.01;
    for k in 0..=1000 {
        let t = k as f64 * dt;
        if k % 100 == 0 {
            let out = closed_loop.control(t, &s)?;
            println!(
                "t = {t:5.2}  |e_x| = {:.2e}  |e_R| = {:.2e}  f = {:.3} N  Psi = {:.2e}  gate ok = {}",
                (s.quad.position - trajectory.position(t)).norm(),
                out.e_r.norm(),
                out.input.thrust,
                out.psi,
                out.gate.is_ok()
            );
        }
        s = rk4_step(&s, t, dt, |_, ts, x| closed_loop.field(ts, x))?;
    }
    Ok(())
}
