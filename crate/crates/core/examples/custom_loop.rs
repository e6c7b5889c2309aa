//! Driving the filter by hand around a user-defined trajectory, without the
//! harness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use se3_ekf::controller::{Gains, GeometricController};
use se3_ekf::dynamics::{rk4_step, QuadrotorParams};
use se3_ekf::estimator::{block_diagonal, nees, Ekf, Estimate, MeasurementModel};
use se3_ekf::linearization::{ClosedLoop, FullState};
use se3_ekf::trajectory::Trajectory;
use se3_ekf::{Mat18, Vec3};

/// Horizontal unit circle at 1 m altitude, heading along the direction of travel.
struct Circle;

impl Trajectory for Circle {
    fn position(&self, t: f64) -> Vec3 {
        Vec3::new(t.cos(), t.sin(), -1.0)
    }
    fn velocity(&self, t: f64) -> Vec3 {
        Vec3::new(-t.sin(), t.cos(), 0.0)
    }
    fn acceleration(&self, t: f64) -> Vec3 {
        Vec3::new(-t.cos(), -t.sin(), 0.0)
    }
    fn heading(&self, t: f64) -> Vec3 {
        self.velocity(t)
    }
    fn heading_rate(&self, t: f64) -> Vec3 {
        self.acceleration(t)
    }
}

fn main() -> se3_ekf::Result<()> {
    let params = QuadrotorParams::reference_vehicle();
    let controller = GeometricController::new(Gains::simulation(), params.clone());
    let cl = ClosedLoop::new(&controller, &params, &Circle);
    let model = MeasurementModel::pos_att_gyro(0.05);
    let ekf = Ekf::new(Mat18::identity() * 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut truth = FullState::default();
    truth.quad.position = Vec3::new(1.0, 0.0, -1.0);
    let mut guess = truth;
    guess.quad.position += Vec3::new(0.5, -0.5, 0.2);
    let mut est = Estimate::new(guess, block_diagonal(&[1.0, 1.0, 0.1, 0.1, 1e-2, 1e-2]));

    let dt = 0.01;
    for k in 0..600 {
        let t = k as f64 * dt;
        let z = model.sample(&truth, &mut rng);
        est = ekf.update(&est, &z, &model)?.estimate;
        if k % 100 == 0 {
            println!(
                "t = {t:4.1}  |x_est - x| = {:.4}  NEES = {:7.2}",
                (est.mean.quad.position - truth.quad.position).norm(),
                nees(&est, &truth)?
            );
        }
        est = ekf.predict(&est, &cl, t, dt)?.estimate;
        truth = rk4_step(&truth, t, dt, |_, ts, s| cl.field(ts, s))?;
    }
    Ok(())
}
