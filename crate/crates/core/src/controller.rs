//! Geometric tracking controller in position mode.
//!
//! The position loop produces the thrust-direction numerator
//!
//! ```text
//! A = −k_x e_x − k_v e_v − k_i sat_σ(e_i) − m g e₃ + m ẍ_d
//! ```
//!
//! from which the computed attitude `R_c = [b_1c, b_2c, b_3c]` is built with
//! `b_3c = −A/‖A‖` and `b_2c ∝ b_3c × b_1d`. The thrust is `f = −A · R e₃`
//! and the moment tracks `(R_c, Ω_c, Ω̇_c)` with PID-like feedback plus the
//! feed-forward terms that cancel the desired angular motion.
//!
//! `Ω_c` is evaluated in closed form as `a₁ ζ₃ + a₂`, which needs `Ȧ`.
//! `Ȧ` uses the nominal translational dynamics (without Δ_x) and the jerk of
//! the trajectory. `Ω̇_c` is a central time difference of `Ω_c` with the
//! tracking errors and `ė_v` held fixed.

use crate::dynamics::{ControlInput, QuadrotorParams, QuadrotorState};
use crate::geom::{angular_velocity_error, attitude_error, hat, sat, RotationMatrix};
use crate::trajectory::{Trajectory, TrajectoryCommand};
use crate::{Error, Mat3, Result, Vec3};

/// Default step of the time difference that produces `Ω̇_c`.
pub const DEFAULT_H_OMEGA: f64 = 1e-4;
/// Default lower bound on `‖A‖` in N.
pub const DEFAULT_EPS_THRUST: f64 = 1e-6;
/// Default lower bound on `‖b_3c × b_1d‖`.
pub const DEFAULT_EPS_HEADING: f64 = 1e-6;

/// Controller gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub kx: f64,
    pub kv: f64,
    /// Position integral gain `k_i`.
    pub ki: f64,
    /// Saturation bound of the position integral term.
    pub sigma: f64,
    pub kr: f64,
    pub komega: f64,
    /// Attitude integral gain `k_I`.
    pub ki_att: f64,
    /// Weight of `e_x` in the position integral.
    pub c1: f64,
    /// Weight of `e_R` in the attitude integral.
    pub c2: f64,
    /// Threshold on `Ψ(R, R_c)` below which the position mode is in its
    /// region of guaranteed convergence.
    pub psi1: f64,
}

impl Gains {
    /// Gain set of the numerical examples (k_i taken equal to k_I).
    pub fn simulation() -> Self {
        Gains {
            kx: 13.84,
            kv: 4.84,
            ki: 0.01,
            sigma: 1.0,
            kr: 0.67,
            komega: 0.11,
            ki_att: 0.01,
            c1: 0.1,
            c2: 0.1,
            psi1: 0.9,
        }
    }

    /// Gain set of the flight experiment.
    pub fn experiment() -> Self {
        Gains {
            kx: 4.0,
            kv: 2.0,
            ki: 0.1,
            sigma: 1.0,
            kr: 0.62,
            komega: 0.15,
            ki_att: 0.1,
            c1: 0.1,
            c2: 0.1,
            psi1: 0.9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("kx", self.kx),
            ("kv", self.kv),
            ("ki", self.ki),
            ("sigma", self.sigma),
            ("kr", self.kr),
            ("komega", self.komega),
            ("ki_att", self.ki_att),
            ("c1", self.c1),
            ("c2", self.c2),
            ("psi1", self.psi1),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("gain {name} must be positive, got {v}")));
            }
        }
        if self.psi1 >= 1.0 {
            return Err(Error::InvalidArgument(format!("psi1 must be below 1, got {}", self.psi1)));
        }
        Ok(())
    }
}

/// Integral errors carried by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerState {
    /// `e_i = ∫ e_v + c₁ e_x`
    pub position_integral: Vec3,
    /// `e_I = ∫ e_Ω + c₂ e_R`
    pub attitude_integral: Vec3,
}

/// Computed attitude and its rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComputedAttitude {
    pub attitude: RotationMatrix,
    pub angular_velocity: Vec3,
    pub angular_acceleration: Vec3,
    /// Thrust-direction numerator `A` (N).
    pub thrust_vector: Vec3,
    pub b1c: Vec3,
    pub b2c: Vec3,
    pub b3c: Vec3,
}

/// Outcome of the position-mode precondition check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeGate {
    /// `Ψ(R, R_c) < ψ₁`.
    PositionModeOk,
    /// `Ψ(R, R_c) ≥ ψ₁`; `psi` is the offending value.
    AttitudeErrorLarge { psi: f64 },
}

impl ModeGate {
    pub fn is_ok(&self) -> bool {
        matches!(self, ModeGate::PositionModeOk)
    }
}

/// `(e_x, e_v) = (x − x_d, v − ẋ_d)`.
pub fn tracking_errors(s: &QuadrotorState, cmd: &TrajectoryCommand) -> (Vec3, Vec3) {
    (s.position - cmd.position, s.velocity - cmd.velocity)
}

/// `A = −k_x e_x − k_v e_v − k_i sat_σ(e_i) − m g e₃ + m ẍ_d`.
pub fn compute_a(
    e_x: &Vec3,
    e_v: &Vec3,
    e_i: &Vec3,
    acceleration_d: &Vec3,
    gains: &Gains,
    params: &QuadrotorParams,
) -> Result<Vec3> {
    let m = params.mass;
    Ok(-gains.kx * e_x - gains.kv * e_v - gains.ki * sat(gains.sigma, e_i)? - m * params.gravity * Vec3::z()
        + m * acceleration_d)
}

/// `f = −A · R e₃`.
pub fn thrust(a: &Vec3, r: &RotationMatrix) -> f64 {
    -a.dot(&r.column(2))
}

/// Computed attitude basis from `A` and the desired heading.
pub fn compute_rc(a: &Vec3, b1d: &Vec3, eps_thrust: f64, eps_heading: f64) -> Result<ComputedAttitude> {
    let norm_a = a.norm();
    if !(norm_a >= eps_thrust) {
        return Err(Error::DegenerateThrust {
            norm: norm_a,
            threshold: eps_thrust,
        });
    }
    let b3c = -a / norm_a;
    let cross = b3c.cross(b1d);
    let cross_norm = cross.norm();
    if !(cross_norm >= eps_heading) {
        return Err(Error::HeadingSingularity {
            norm: cross_norm,
            threshold: eps_heading,
        });
    }
    let b2c = cross / cross_norm;
    let b1c = b2c.cross(&b3c);
    Ok(ComputedAttitude {
        attitude: RotationMatrix::from_matrix_unchecked(Mat3::from_columns(&[b1c, b2c, b3c])),
        angular_velocity: Vec3::zeros(),
        angular_acceleration: Vec3::zeros(),
        thrust_vector: *a,
        b1c,
        b2c,
        b3c,
    })
}

/// Attitude control moment.
pub fn attitude_moment(
    s: &QuadrotorState,
    r_c: &RotationMatrix,
    omega_c: &Vec3,
    omega_c_dot: &Vec3,
    e_int: &Vec3,
    gains: &Gains,
    inertia: &Mat3,
) -> Vec3 {
    let (_, e_r) = attitude_error(&s.attitude, r_c);
    let e_w = angular_velocity_error(&s.attitude, &s.angular_velocity, r_c, omega_c);
    let rt_rc = s.attitude.matrix().transpose() * r_c.matrix();
    let w = rt_rc * omega_c;
    let alpha = rt_rc * omega_c_dot;
    -gains.kr * e_r - gains.komega * e_w - gains.ki_att * e_int + hat(&w) * (inertia * w) + inertia * alpha
}

/// `(ė_i, ė_I) = (e_v + c₁ e_x, e_Ω + c₂ e_R)`.
pub fn integral_rates(e_x: &Vec3, e_v: &Vec3, e_r: &Vec3, e_omega: &Vec3, gains: &Gains) -> (Vec3, Vec3) {
    (e_v + gains.c1 * e_x, e_omega + gains.c2 * e_r)
}

/// Strict test `Ψ(R, R_c) < ψ₁`.
pub fn mode_gate(r: &RotationMatrix, r_c: &RotationMatrix, psi1: f64) -> ModeGate {
    let (psi, _) = attitude_error(r, r_c);
    if psi < psi1 {
        ModeGate::PositionModeOk
    } else {
        ModeGate::AttitudeErrorLarge { psi }
    }
}

/// Tracking errors that parameterise the computed attitude together with
/// time and the current attitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingErrors {
    pub position: Vec3,
    pub velocity: Vec3,
    pub integral: Vec3,
}

/// Everything the computed attitude and its first derivative depend on,
/// evaluated at one instant.
#[derive(Debug, Clone, Copy)]
pub struct CommandGeometry {
    pub command: TrajectoryCommand,
    /// `A`
    pub a: Vec3,
    /// `Ȧ`
    pub a_dot: Vec3,
    pub norm_a: f64,
    pub b1c: Vec3,
    pub b2c: Vec3,
    pub b3c: Vec3,
    /// `ḃ_3c = ζ₃ × b_3c`
    pub b3c_dot: Vec3,
    /// `b_3c × b_1d`
    pub heading_cross: Vec3,
    pub heading_cross_norm: f64,
    /// `ζ₃ = −b_3c × Ȧ/‖A‖`
    pub zeta3: Vec3,
    /// Maps `z₃` to `η_c` and `ζ₃` to the first part of `Ω_c`.
    pub a1: Mat3,
    /// Heading-rate part of `Ω_c`.
    pub a2: Vec3,
    /// `Ω_c = a₁ ζ₃ + a₂`
    pub omega_c: Vec3,
    /// `1` where `|e_i| < σ`, `0` where the integral term is saturated.
    pub saturation_mask: Vec3,
    /// Nominal `ė_v` used inside `Ȧ`.
    pub e_v_dot: Vec3,
}

impl CommandGeometry {
    pub fn attitude(&self) -> RotationMatrix {
        RotationMatrix::from_matrix_unchecked(Mat3::from_columns(&[self.b1c, self.b2c, self.b3c]))
    }
}

/// Full controller output for one state.
#[derive(Debug, Clone, Copy)]
pub struct ControlOutput {
    pub input: ControlInput,
    pub computed: ComputedAttitude,
    pub e_x: Vec3,
    pub e_v: Vec3,
    pub e_r: Vec3,
    pub e_omega: Vec3,
    pub psi: f64,
    pub gate: ModeGate,
    /// `ė_i`
    pub position_integral_rate: Vec3,
    /// `ė_I`
    pub attitude_integral_rate: Vec3,
}

/// Position-mode geometric controller.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricController {
    pub gains: Gains,
    /// Nominal model; the disturbances in it are ignored.
    pub params: QuadrotorParams,
    pub h_omega: f64,
    pub eps_thrust: f64,
    pub eps_heading: f64,
}

impl GeometricController {
    pub fn new(gains: Gains, params: QuadrotorParams) -> Self {
        GeometricController {
            gains,
            params,
            h_omega: DEFAULT_H_OMEGA,
            eps_thrust: DEFAULT_EPS_THRUST,
            eps_heading: DEFAULT_EPS_HEADING,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gains.validate()?;
        self.params.validate()?;
        if !(self.h_omega > 0.0) {
            return Err(Error::InvalidArgument(format!("h_omega must be positive, got {}", self.h_omega)));
        }
        Ok(())
    }

    /// `A`, `Ȧ`, the computed basis and `Ω_c` at time `t`.
    pub fn geometry(
        &self,
        t: f64,
        errors: &TrackingErrors,
        attitude: &Mat3,
        trajectory: &dyn Trajectory,
    ) -> Result<CommandGeometry> {
        let e_v_dot = self.velocity_error_rate(t, errors, attitude, trajectory)?;
        self.geometry_with_rate(t, errors, &e_v_dot, trajectory)
    }

    /// Nominal `ė_v = g e₃ − (f/m) R e₃ − ẍ_d` with `f = −A · R e₃`.
    pub fn velocity_error_rate(
        &self,
        t: f64,
        errors: &TrackingErrors,
        attitude: &Mat3,
        trajectory: &dyn Trajectory,
    ) -> Result<Vec3> {
        let p = &self.params;
        let acc = trajectory.acceleration(t);
        let a = compute_a(&errors.position, &errors.velocity, &errors.integral, &acc, &self.gains, p)?;
        let re3 = attitude.column(2).into_owned();
        let f = -a.dot(&re3);
        Ok(p.gravity * Vec3::z() - (f / p.mass) * re3 - acc)
    }

    /// As [`GeometricController::geometry`] with `ė_v` given.
    pub fn geometry_with_rate(
        &self,
        t: f64,
        errors: &TrackingErrors,
        e_v_dot: &Vec3,
        trajectory: &dyn Trajectory,
    ) -> Result<CommandGeometry> {
        let g = &self.gains;
        let p = &self.params;
        let m = p.mass;
        let cmd = trajectory.command(t);
        let e_v_dot = *e_v_dot;

        let a = compute_a(&errors.position, &errors.velocity, &errors.integral, &cmd.acceleration, g, p)?;
        let mask = errors.integral.map(|v| if v.abs() < g.sigma { 1.0 } else { 0.0 });
        let e_i_dot = errors.velocity + g.c1 * errors.position;
        let a_dot = -g.kx * errors.velocity - g.kv * e_v_dot - g.ki * mask.component_mul(&e_i_dot) + m * cmd.jerk;

        let basis = compute_rc(&a, &cmd.heading, self.eps_thrust, self.eps_heading)?;
        let norm_a = a.norm();
        let (b1c, b2c, b3c) = (basis.b1c, basis.b2c, basis.b3c);
        let heading_cross = b3c.cross(&cmd.heading);
        let heading_cross_norm = heading_cross.norm();

        let zeta3 = -b3c.cross(&a_dot) / norm_a;
        let b3c_dot = zeta3.cross(&b3c);
        let b1d = cmd.heading;
        let tilt = b1d.dot(&b3c) / (heading_cross_norm * heading_cross_norm);
        let a1 = Mat3::from_rows(&[b1c.transpose(), b2c.transpose(), (tilt * b1d).transpose()]);
        let a2 = Vec3::new(0.0, 0.0, cmd.heading_rate.dot(&b2c) / heading_cross_norm);
        let omega_c = a1 * zeta3 + a2;

        Ok(CommandGeometry {
            command: cmd,
            a,
            a_dot,
            norm_a,
            b1c,
            b2c,
            b3c,
            b3c_dot,
            heading_cross,
            heading_cross_norm,
            zeta3,
            a1,
            a2,
            omega_c,
            saturation_mask: mask,
            e_v_dot,
        })
    }

    /// `Ω_c`.
    pub fn compute_omega_c(
        &self,
        t: f64,
        errors: &TrackingErrors,
        attitude: &Mat3,
        trajectory: &dyn Trajectory,
    ) -> Result<Vec3> {
        Ok(self.geometry(t, errors, attitude, trajectory)?.omega_c)
    }

    /// `Ω̇_c` by a central difference in time with the tracking errors and
    /// `ė_v` frozen at their values at `t`.
    pub fn compute_omega_c_dot(
        &self,
        t: f64,
        errors: &TrackingErrors,
        attitude: &Mat3,
        trajectory: &dyn Trajectory,
    ) -> Result<Vec3> {
        let h = self.h_omega;
        let e_v_dot = self.velocity_error_rate(t, errors, attitude, trajectory)?;
        let plus = self.geometry_with_rate(t + h, errors, &e_v_dot, trajectory)?.omega_c;
        let minus = self.geometry_with_rate(t - h, errors, &e_v_dot, trajectory)?.omega_c;
        Ok((plus - minus) / (2.0 * h))
    }

    /// Computed attitude with `Ω_c` and `Ω̇_c`.
    pub fn computed_attitude(
        &self,
        t: f64,
        errors: &TrackingErrors,
        attitude: &Mat3,
        trajectory: &dyn Trajectory,
    ) -> Result<ComputedAttitude> {
        let geo = self.geometry(t, errors, attitude, trajectory)?;
        let omega_c_dot = self.compute_omega_c_dot(t, errors, attitude, trajectory)?;
        Ok(ComputedAttitude {
            attitude: geo.attitude(),
            angular_velocity: geo.omega_c,
            angular_acceleration: omega_c_dot,
            thrust_vector: geo.a,
            b1c: geo.b1c,
            b2c: geo.b2c,
            b3c: geo.b3c,
        })
    }

    /// Thrust, moment and every intermediate error for the given state.
    pub fn compute(
        &self,
        t: f64,
        state: &QuadrotorState,
        integrals: &ControllerState,
        trajectory: &dyn Trajectory,
    ) -> Result<ControlOutput> {
        let cmd = trajectory.command(t);
        let (e_x, e_v) = tracking_errors(state, &cmd);
        let errors = TrackingErrors {
            position: e_x,
            velocity: e_v,
            integral: integrals.position_integral,
        };
        let computed = self.computed_attitude(t, &errors, state.attitude.matrix(), trajectory)?;
        let f = thrust(&computed.thrust_vector, &state.attitude);
        let moment = attitude_moment(
            state,
            &computed.attitude,
            &computed.angular_velocity,
            &computed.angular_acceleration,
            &integrals.attitude_integral,
            &self.gains,
            &self.params.inertia,
        );
        let (psi, e_r) = attitude_error(&state.attitude, &computed.attitude);
        let e_omega =
            angular_velocity_error(&state.attitude, &state.angular_velocity, &computed.attitude, &computed.angular_velocity);
        let (ei_rate, eint_rate) = integral_rates(&e_x, &e_v, &e_r, &e_omega, &self.gains);
        Ok(ControlOutput {
            input: ControlInput { thrust: f, moment },
            computed,
            e_x,
            e_v,
            e_r,
            e_omega,
            psi,
            gate: mode_gate(&state.attitude, &computed.attitude, self.gains.psi1),
            position_integral_rate: ei_rate,
            attitude_integral_rate: eint_rate,
        })
    }
}
