//! Bundled scenarios.

use crate::controller::{Gains, DEFAULT_H_OMEGA};
use crate::dynamics::{QuadrotorParams, QuadrotorState};
use crate::estimator::{JacobianSource, Transition};
use crate::geom::RotationMatrix;
use crate::harness::config::{Feedback, MetricsConfig, ScenarioConfig, Thresholds};
use crate::linearization::FullState;
use crate::trajectory::BuiltinTrajectory;
use crate::{Error, Result, Vec3};

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 3] = ["example1", "example2", "experiment-replay"];

/// One-line descriptions, in the order of [`NAMES`].
pub const DESCRIPTIONS: [&str; 3] = [
    "Lissajous tracking, position+attitude+gyro measurements, large initial estimate error",
    "elliptic helix, attitude+gyro measurements only",
    "Lissajous at -0.3 m with the flight-test gains, moderate noise",
];

pub fn by_name(name: &str) -> Result<ScenarioConfig> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        "experiment-replay" => Ok(experiment_replay()),
        _ => Err(Error::UnknownName {
            kind: "scenario",
            name: name.to_string(),
        }),
    }
}

fn at_rest() -> FullState {
    FullState::default()
}

fn estimate(position: Vec3, velocity: Vec3) -> FullState {
    FullState {
        quad: QuadrotorState {
            position,
            velocity,
            attitude: RotationMatrix::identity(),
            angular_velocity: Vec3::new(0.1, -0.2, 0.1),
        },
        ..Default::default()
    }
}

fn base(name: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        duration: 10.0,
        dt: 0.01,
        seed: 1,
        gains: Gains::simulation(),
        h_omega: DEFAULT_H_OMEGA,
        params: QuadrotorParams::reference_vehicle(),
        trajectory: BuiltinTrajectory::Lissajous { altitude: -0.5 },
        measurement_model: "pos_att_gyro".into(),
        measurement_variance: 1.0,
        process_noise: 0.01,
        sensor_scale: 1.0,
        truth_process_noise: 0.0,
        initial_truth: at_rest(),
        initial_estimate: at_rest(),
        p0_diag: [10.0, 10.0, 0.1, 0.1, 1e-2, 1e-2],
        feedback: Feedback::Truth,
        jacobian: JacobianSource::Analytic,
        transition: Transition::FirstOrder,
        metrics: MetricsConfig::default(),
        thresholds: Thresholds::default(),
        jacobian_deviation: false,
        output: None,
    }
}

/// Lissajous tracking with a 6.4 m initial position and velocity estimate error.
pub fn example1() -> ScenarioConfig {
    let offset = Vec3::new(4.0, 4.0, -3.0);
    ScenarioConfig {
        initial_estimate: estimate(offset, offset),
        thresholds: Thresholds {
            convergence_time_max: Some(2.0),
            ..Default::default()
        },
        ..base("example1")
    }
}

/// Helix tracking with attitude and angular velocity measurements only.
pub fn example2() -> ScenarioConfig {
    ScenarioConfig {
        trajectory: BuiltinTrajectory::EllipticHelix {
            speed: 0.4,
            a: 0.4,
            b: 0.6,
            w: std::f64::consts::PI,
        },
        measurement_model: "att_gyro".into(),
        measurement_variance: 0.1,
        process_noise: 0.001,
        initial_estimate: estimate(Vec3::new(0.2, -0.5, -0.5), Vec3::new(0.1, -0.1, -0.1)),
        // Sized to the initial estimate error.
        p0_diag: [0.5, 0.05, 0.01, 0.1, 0.01, 0.01],
        metrics: MetricsConfig {
            convergence_threshold: 1.0,
            ..Default::default()
        },
        ..base("example2")
    }
}

/// Simulated stand-in for the flight test.
pub fn experiment_replay() -> ScenarioConfig {
    ScenarioConfig {
        gains: Gains::experiment(),
        trajectory: BuiltinTrajectory::Lissajous { altitude: -0.3 },
        measurement_variance: 0.01,
        process_noise: 0.01,
        initial_estimate: estimate(Vec3::new(0.1, 0.1, -0.1), Vec3::zeros()),
        ..base("experiment-replay")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::MeasurementModel;
    use crate::trajectory::Trajectory;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn example1_values() {
        let c = example1();
        c.validate().unwrap();
        assert_eq!(c.trajectory.position(0.0), Vec3::new(FRAC_PI_2, 0.0, -0.5));
        assert_eq!(c.trajectory.velocity(0.0), Vec3::new(1.0, 2.0, 0.0));
        let err = (c.initial_estimate.quad.position - c.initial_truth.quad.position).norm();
        assert!((err - 41f64.sqrt()).abs() < 1e-12);
        assert!((err - 6.403).abs() < 1e-3);
        assert_eq!(MeasurementModel::by_name(&c.measurement_model, 1.0).unwrap().dimension(), 9);
        assert_eq!(c.params.mass, 0.755);
    }

    #[test]
    fn example2_values() {
        let c = example2();
        c.validate().unwrap();
        assert!((c.trajectory.position(0.0) - Vec3::new(0.0, 0.0, -0.6)).norm() < 1e-15);
        assert!((c.trajectory.heading(0.5) - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
        assert_eq!(MeasurementModel::by_name(&c.measurement_model, 0.1).unwrap().dimension(), 6);
    }

    #[test]
    fn experiment_values() {
        let c = experiment_replay();
        c.validate().unwrap();
        assert_eq!(c.trajectory.position(0.0).z, -0.3);
        assert_eq!((c.gains.kx, c.gains.komega, c.gains.c1, c.gains.c2), (4.0, 0.15, 0.1, 0.1));
    }

    #[test]
    fn lookup() {
        for n in NAMES {
            assert_eq!(by_name(n).unwrap().name, n);
        }
        assert!(matches!(by_name("x"), Err(Error::UnknownName { .. })));
    }
}
