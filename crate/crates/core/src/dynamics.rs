//! Rigid-body equations of motion of a quadrotor and a classical RK4
//! integrator.
//!
//! ```text
//! ẋ = v
//! m v̇ = m g e₃ − f R e₃ + Δ_x
//! Ṙ = R hat(Ω)
//! J Ω̇ + Ω × JΩ = M + Δ_R
//! ```
//!
//! The inertial frame points down (`e₃` along gravity) and thrust acts along
//! `−b₃`.

use std::ops::{Add, Mul};

use crate::geom::{hat, project_so3, RotationMatrix};
use crate::{Error, Mat3, Result, Vec3};

/// Standard gravity used by the bundled scenarios.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Physical parameters, including the fixed disturbances.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrotorParams {
    /// kg
    pub mass: f64,
    /// kg·m², symmetric positive-definite
    pub inertia: Mat3,
    /// m/s²
    pub gravity: f64,
    /// Δ_x, N (inertial frame)
    pub force_disturbance: Vec3,
    /// Δ_R, N·m (body frame)
    pub moment_disturbance: Vec3,
    /// Rotor arm length in m. Not used by the thrust/moment-level model;
    /// zero when not identified.
    pub arm_length: f64,
}

impl QuadrotorParams {
    /// Vehicle used for the numerical examples: m = 0.755 kg,
    /// J = diag(0.557, 0.557, 1.05)·10⁻² kg·m², with the listed disturbances.
    pub fn reference_vehicle() -> Self {
        QuadrotorParams {
            mass: 0.755,
            inertia: Mat3::from_diagonal(&Vec3::new(0.557e-2, 0.557e-2, 1.05e-2)),
            gravity: STANDARD_GRAVITY,
            force_disturbance: Vec3::new(-0.02, 0.01, -0.03),
            moment_disturbance: Vec3::new(0.01, -0.02, 0.01),
            arm_length: 0.0,
        }
    }

    /// Same vehicle with both disturbances set to zero.
    pub fn without_disturbances(&self) -> Self {
        QuadrotorParams {
            force_disturbance: Vec3::zeros(),
            moment_disturbance: Vec3::zeros(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::InvalidArgument(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.gravity > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gravity must be positive, got {}",
                self.gravity
            )));
        }
        if (self.inertia - self.inertia.transpose()).norm() > 1e-12 * self.inertia.norm() {
            return Err(Error::InvalidArgument("inertia matrix is not symmetric".into()));
        }
        let eig = self.inertia.symmetric_eigenvalues();
        if eig.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "inertia matrix must be positive-definite, eigenvalues {:?}",
                eig.as_slice()
            )));
        }
        Ok(())
    }

    pub fn inertia_inverse(&self) -> Mat3 {
        self.inertia
            .try_inverse()
            .expect("validated inertia is invertible")
    }
}

/// Position, velocity, attitude and body angular velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadrotorState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: RotationMatrix,
    pub angular_velocity: Vec3,
}

/// Total thrust magnitude (N) and body moment (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub thrust: f64,
    pub moment: Vec3,
}

/// Time derivative of a [`QuadrotorState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub attitude_rate: Mat3,
    pub angular_acceleration: Vec3,
}

impl StateDerivative {
    pub fn zeros() -> Self {
        StateDerivative {
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
            attitude_rate: Mat3::zeros(),
            angular_acceleration: Vec3::zeros(),
        }
    }
}

impl Add for StateDerivative {
    type Output = StateDerivative;

    fn add(self, o: StateDerivative) -> StateDerivative {
        StateDerivative {
            velocity: self.velocity + o.velocity,
            acceleration: self.acceleration + o.acceleration,
            attitude_rate: self.attitude_rate + o.attitude_rate,
            angular_acceleration: self.angular_acceleration + o.angular_acceleration,
        }
    }
}

impl Mul<f64> for StateDerivative {
    type Output = StateDerivative;

    fn mul(self, k: f64) -> StateDerivative {
        StateDerivative {
            velocity: self.velocity * k,
            acceleration: self.acceleration * k,
            attitude_rate: self.attitude_rate * k,
            angular_acceleration: self.angular_acceleration * k,
        }
    }
}

/// Right-hand side of the equations of motion.
pub fn state_derivative(s: &QuadrotorState, u: &ControlInput, p: &QuadrotorParams) -> StateDerivative {
    let r = s.attitude.matrix();
    let e3 = Vec3::z();
    let acceleration = p.gravity * e3 - (u.thrust / p.mass) * (r * e3) + p.force_disturbance / p.mass;
    let w = &s.angular_velocity;
    let jw = p.inertia * w;
    let angular_acceleration = p.inertia_inverse() * (u.moment + p.moment_disturbance - w.cross(&jw));
    StateDerivative {
        velocity: s.velocity,
        acceleration,
        attitude_rate: r * hat(w),
        angular_acceleration,
    }
}

/// A state that can be advanced by a Runge-Kutta scheme: Euclidean in its
/// components, with the attitude carried as a raw 3×3 matrix between stages.
pub trait Integrable: Sized {
    type Tangent: Copy + Add<Output = Self::Tangent> + Mul<f64, Output = Self::Tangent>;

    /// `self + dt · tangent`, componentwise and without reprojection.
    fn advance(&self, tangent: &Self::Tangent, dt: f64) -> Self;

    /// Restores invariants at the end of a step.
    fn reproject(self) -> Result<Self>;
}

impl Integrable for QuadrotorState {
    type Tangent = StateDerivative;

    fn advance(&self, d: &StateDerivative, dt: f64) -> Self {
        QuadrotorState {
            position: self.position + d.velocity * dt,
            velocity: self.velocity + d.acceleration * dt,
            attitude: RotationMatrix::from_matrix_unchecked(self.attitude.matrix() + d.attitude_rate * dt),
            angular_velocity: self.angular_velocity + d.angular_acceleration * dt,
        }
    }

    fn reproject(mut self) -> Result<Self> {
        self.attitude = project_so3(self.attitude.matrix())?;
        Ok(self)
    }
}

/// One classical four-stage Runge-Kutta step of `field`, followed by
/// reprojection of the attitude.
///
/// `field(stage, t, state)` is called with `stage` in `0..4` at times
/// `t, t + dt/2, t + dt/2, t + dt`.
pub fn rk4_step<S, F>(state: &S, t: f64, dt: f64, mut field: F) -> Result<S>
where
    S: Integrable,
    F: FnMut(usize, f64, &S) -> Result<S::Tangent>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let half = 0.5 * dt;
    let k1 = field(0, t, state)?;
    let k2 = field(1, t + half, &state.advance(&k1, half))?;
    let k3 = field(2, t + half, &state.advance(&k2, half))?;
    let k4 = field(3, t + dt, &state.advance(&k3, dt))?;
    let slope = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (1.0 / 6.0);
    state.advance(&slope, dt).reproject()
}

/// RK4 step of the open-loop plant with the input held constant over the
/// step.
pub fn rk4_step_constant_input(
    state: &QuadrotorState,
    input: &ControlInput,
    params: &QuadrotorParams,
    dt: f64,
) -> Result<QuadrotorState> {
    rk4_step(state, 0.0, dt, |_, _, s| Ok(state_derivative(s, input, params)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{exp_so3, log_so3};

    fn params() -> QuadrotorParams {
        QuadrotorParams::reference_vehicle().without_disturbances()
    }

    #[test]
    fn reference_vehicle_is_valid() {
        QuadrotorParams::reference_vehicle().validate().unwrap();
        let mut p = params();
        p.mass = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.inertia[(0, 1)] = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn free_fall() {
        let p = params();
        let d = state_derivative(&QuadrotorState::default(), &ControlInput::default(), &p);
        assert_eq!(d.acceleration, Vec3::new(0.0, 0.0, 9.81));
        assert_eq!(d.angular_acceleration, Vec3::zeros());
        assert_eq!(d.attitude_rate, Mat3::zeros());
    }

    #[test]
    fn hover_force_balance() {
        let p = params();
        let u = ControlInput {
            thrust: p.mass * p.gravity,
            moment: Vec3::zeros(),
        };
        let d = state_derivative(&QuadrotorState::default(), &u, &p);
        assert!(d.acceleration.norm() < 1e-15);
    }

    #[test]
    fn derivative_matches_term_by_term_evaluation() {
        let p = QuadrotorParams::reference_vehicle();
        let s = QuadrotorState {
            position: Vec3::new(1.0, -2.0, 0.5),
            velocity: Vec3::new(0.3, 0.2, -0.1),
            attitude: exp_so3(&Vec3::new(0.2, -0.4, 1.1)),
            angular_velocity: Vec3::new(0.5, -1.5, 2.0),
        };
        let u = ControlInput {
            thrust: 6.3,
            moment: Vec3::new(0.01, -0.03, 0.002),
        };
        let d = state_derivative(&s, &u, &p);

        // Scalar expansion of each equation.
        let r = s.attitude.matrix();
        let (m, g) = (p.mass, p.gravity);
        for i in 0..3 {
            let expected = (m * g * if i == 2 { 1.0 } else { 0.0 } - u.thrust * r[(i, 2)]
                + p.force_disturbance[i])
                / m;
            assert!((d.acceleration[i] - expected).abs() < 1e-14);
        }
        let w = s.angular_velocity;
        let jd = [0.557e-2, 0.557e-2, 1.05e-2];
        let jw = [jd[0] * w[0], jd[1] * w[1], jd[2] * w[2]];
        let gyro = [
            w[1] * jw[2] - w[2] * jw[1],
            w[2] * jw[0] - w[0] * jw[2],
            w[0] * jw[1] - w[1] * jw[0],
        ];
        for i in 0..3 {
            let expected = (u.moment[i] + p.moment_disturbance[i] - gyro[i]) / jd[i];
            assert!((d.angular_acceleration[i] - expected).abs() < 1e-10);
        }
        let w_hat = Mat3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0);
        assert!((d.attitude_rate - r * w_hat).norm() < 1e-15);
        assert_eq!(d.velocity, s.velocity);
    }

    #[test]
    fn rk4_is_exact_for_constant_acceleration() {
        let p = params();
        let next = rk4_step_constant_input(&QuadrotorState::default(), &ControlInput::default(), &p, 0.01).unwrap();
        assert!((next.velocity.z - 0.0981).abs() < 1e-15);
        assert!((next.position.z - 0.5 * 9.81 * 1e-4).abs() < 1e-15);
    }

    #[test]
    fn hover_stays_at_rest() {
        let p = params();
        let u = ControlInput {
            thrust: p.mass * p.gravity,
            moment: Vec3::zeros(),
        };
        let mut s = QuadrotorState::default();
        for _ in 0..1000 {
            s = rk4_step_constant_input(&s, &u, &p, 0.01).unwrap();
            assert!(s.velocity.norm() <= 1e-12);
        }
    }

    fn spin(dt: f64, steps: usize) -> QuadrotorState {
        let p = params();
        let w = Vec3::z();
        let u = ControlInput {
            thrust: 0.0,
            moment: w.cross(&(p.inertia * w)),
        };
        let mut s = QuadrotorState {
            angular_velocity: w,
            ..Default::default()
        };
        for _ in 0..steps {
            s = rk4_step_constant_input(&s, &u, &p, dt).unwrap();
        }
        s
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn constant_spin_returns_after_full_turn() {
        // 628 steps of 0.01 s is 6.28 s, short of 2π by 3.2e-3 rad.
        let s = spin(0.01, 628);
        let exact = exp_so3(&Vec3::new(0.0, 0.0, 6.28));
        assert!((s.attitude.matrix() - exact.matrix()).norm() < 1e-6);
        assert!((s.attitude.matrix() - Mat3::identity()).norm() < 5e-3);
        assert!(s.attitude.orthogonality_error() <= 1e-9);

        let s = spin(2.0 * std::f64::consts::PI / 628.0, 628);
        assert!((s.attitude.matrix() - Mat3::identity()).norm() < 1e-6);
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let horizon = 1.0;
        let exact = exp_so3(&Vec3::new(0.0, 0.0, horizon));
        let err = |n: usize| {
            let s = spin(horizon / n as f64, n);
            log_so3(&(exact.transpose() * s.attitude)).unwrap().norm()
        };
        let (e1, e2) = (err(10), err(20));
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}, errors {e1:e} {e2:e}");
    }

    #[test]
    fn attitude_stays_on_manifold() {
        let p = params();
        let u = ControlInput {
            thrust: 5.0,
            moment: Vec3::new(1e-3, -2e-3, 5e-4),
        };
        let mut s = QuadrotorState {
            angular_velocity: Vec3::new(3.0, -2.0, 1.0),
            ..Default::default()
        };
        for _ in 0..10_000 {
            s = rk4_step_constant_input(&s, &u, &p, 0.01).unwrap();
            assert!(s.attitude.orthogonality_error() <= 1e-9);
        }
    }

    #[test]
    fn rejects_non_positive_step() {
        let p = params();
        assert!(rk4_step_constant_input(&QuadrotorState::default(), &ControlInput::default(), &p, 0.0).is_err());
    }
}
