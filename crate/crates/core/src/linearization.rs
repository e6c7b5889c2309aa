//! Closed-loop state, its 18-dimensional error coordinates and the Jacobian
//! of the closed-loop vector field in those coordinates.
//!
//! Error coordinates are ordered `[δx, δv, η, δΩ, δe_i, δe_I]`. A state is
//! perturbed by `s ⊕ δ`, which adds every block except the attitude, where
//! `R ← R exp(η)`.
//!
//! [`ClosedLoop::linearize`] evaluates the Jacobian analytically through the
//! chain `A → (b_3c, ḃ_3c) → (b_2c, ḃ_2c) → (b_1c, ḃ_1c) → (η_c, Ω_c)`.
//! The `Ω̇_c` column is the Jacobian of the same time difference the
//! controller uses. [`fd_jacobian`] is an independent central-difference
//! oracle on the manifold.

use std::ops::{Add, Mul};

use nalgebra::SMatrix;

use crate::controller::{
    compute_a, CommandGeometry, ControlOutput, ControllerState, GeometricController, TrackingErrors,
};
use crate::dynamics::{state_derivative, Integrable, QuadrotorParams, QuadrotorState, StateDerivative};
use crate::geom::{hat, log_so3, vee_skew_part};
use crate::trajectory::Trajectory;
use crate::{Error, Mat18, Mat3, Result, Vec18, Vec3};

/// Default step of [`fd_jacobian`].
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Block of a 3×18 Jacobian row.
type Row = SMatrix<f64, 3, 18>;

/// Position of each 3-block in the error coordinates.
pub mod block {
    pub const POSITION: usize = 0;
    pub const VELOCITY: usize = 1;
    pub const ATTITUDE: usize = 2;
    pub const ANGULAR_VELOCITY: usize = 3;
    pub const POSITION_INTEGRAL: usize = 4;
    pub const ATTITUDE_INTEGRAL: usize = 5;
}

/// Plant state together with the controller integrals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FullState {
    pub quad: QuadrotorState,
    pub position_integral: Vec3,
    pub attitude_integral: Vec3,
}

impl FullState {
    pub fn new(quad: QuadrotorState, integrals: ControllerState) -> Self {
        FullState {
            quad,
            position_integral: integrals.position_integral,
            attitude_integral: integrals.attitude_integral,
        }
    }

    pub fn integrals(&self) -> ControllerState {
        ControllerState {
            position_integral: self.position_integral,
            attitude_integral: self.attitude_integral,
        }
    }

    /// `self ⊕ δ`.
    pub fn retract(&self, delta: &Vec18) -> FullState {
        let b = |k: usize| delta.fixed_rows::<3>(3 * k).into_owned();
        FullState {
            quad: QuadrotorState {
                position: self.quad.position + b(block::POSITION),
                velocity: self.quad.velocity + b(block::VELOCITY),
                attitude: self.quad.attitude.retract(&b(block::ATTITUDE)),
                angular_velocity: self.quad.angular_velocity + b(block::ANGULAR_VELOCITY),
            },
            position_integral: self.position_integral + b(block::POSITION_INTEGRAL),
            attitude_integral: self.attitude_integral + b(block::ATTITUDE_INTEGRAL),
        }
    }

    /// `self ⊖ base`, the error coordinates of `self` around `base`.
    pub fn difference(&self, base: &FullState) -> Result<Vec18> {
        let eta = log_so3(&(base.quad.attitude.transpose() * self.quad.attitude))?;
        let mut out = Vec18::zeros();
        let blocks = [
            self.quad.position - base.quad.position,
            self.quad.velocity - base.quad.velocity,
            eta,
            self.quad.angular_velocity - base.quad.angular_velocity,
            self.position_integral - base.position_integral,
            self.attitude_integral - base.attitude_integral,
        ];
        for (k, v) in blocks.iter().enumerate() {
            out.fixed_rows_mut::<3>(3 * k).copy_from(v);
        }
        Ok(out)
    }
}

/// Time derivative of a [`FullState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullTangent {
    pub quad: StateDerivative,
    pub position_integral: Vec3,
    pub attitude_integral: Vec3,
}

impl FullTangent {
    pub fn zeros() -> Self {
        FullTangent {
            quad: StateDerivative::zeros(),
            position_integral: Vec3::zeros(),
            attitude_integral: Vec3::zeros(),
        }
    }

    /// Expresses the tangent in error coordinates around `base`.
    ///
    /// The attitude block is `vee(skew(Rᵀ Ṙ' − Ω̂ Rᵀ R'))`, the rate of `η`
    /// for a trajectory through `s'` when `base` moves with its own `Ω`.
    pub fn to_error_rates(&self, at: &FullState, base: &FullState) -> Vec18 {
        let rt = base.quad.attitude.matrix().transpose();
        let e = rt * at.quad.attitude.matrix();
        let eta_dot = vee_skew_part(&(rt * self.quad.attitude_rate - hat(&base.quad.angular_velocity) * e));
        let mut out = Vec18::zeros();
        let blocks = [
            self.quad.velocity,
            self.quad.acceleration,
            eta_dot,
            self.quad.angular_acceleration,
            self.position_integral,
            self.attitude_integral,
        ];
        for (k, v) in blocks.iter().enumerate() {
            out.fixed_rows_mut::<3>(3 * k).copy_from(v);
        }
        out
    }
}

impl Add for FullTangent {
    type Output = FullTangent;

    fn add(self, o: FullTangent) -> FullTangent {
        FullTangent {
            quad: self.quad + o.quad,
            position_integral: self.position_integral + o.position_integral,
            attitude_integral: self.attitude_integral + o.attitude_integral,
        }
    }
}

impl Mul<f64> for FullTangent {
    type Output = FullTangent;

    fn mul(self, k: f64) -> FullTangent {
        FullTangent {
            quad: self.quad * k,
            position_integral: self.position_integral * k,
            attitude_integral: self.attitude_integral * k,
        }
    }
}

impl Integrable for FullState {
    type Tangent = FullTangent;

    fn advance(&self, d: &FullTangent, dt: f64) -> Self {
        FullState {
            quad: self.quad.advance(&d.quad, dt),
            position_integral: self.position_integral + d.position_integral * dt,
            attitude_integral: self.attitude_integral + d.attitude_integral * dt,
        }
    }

    fn reproject(self) -> Result<Self> {
        Ok(FullState {
            quad: self.quad.reproject()?,
            ..self
        })
    }
}

/// 18×18 Jacobian of the closed loop in error coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedSystem {
    pub a: Mat18,
}

/// Names of the 3×3 blocks; `None` for blocks that have no name of their
/// own. Rows and columns are zero-based.
const BLOCK_NAMES: [[Option<&str>; 6]; 6] = [
    [None; 6],
    [Some("m21"), Some("m22"), Some("m23"), None, Some("m24"), None],
    [None; 6],
    [Some("m41"), Some("m42"), Some("m43"), Some("m44"), Some("m45"), None],
    [None; 6],
    [Some("m61"), Some("m62"), Some("m63"), Some("m64"), Some("m65"), None],
];

/// Name used for block `(row, col)` (zero-based) in deviation reports.
pub fn block_name(row: usize, col: usize) -> String {
    match BLOCK_NAMES[row][col] {
        Some(n) => n.to_string(),
        None => format!("r{}c{}", row + 1, col + 1),
    }
}

impl LinearizedSystem {
    /// 3×3 block at zero-based block indices.
    pub fn block(&self, row: usize, col: usize) -> Mat3 {
        self.a.fixed_view::<3, 3>(3 * row, 3 * col).into_owned()
    }

    pub fn m21(&self) -> Mat3 {
        self.block(1, 0)
    }
    pub fn m22(&self) -> Mat3 {
        self.block(1, 1)
    }
    pub fn m23(&self) -> Mat3 {
        self.block(1, 2)
    }
    pub fn m24(&self) -> Mat3 {
        self.block(1, 4)
    }
    pub fn m41(&self) -> Mat3 {
        self.block(3, 0)
    }
    pub fn m42(&self) -> Mat3 {
        self.block(3, 1)
    }
    pub fn m43(&self) -> Mat3 {
        self.block(3, 2)
    }
    pub fn m44(&self) -> Mat3 {
        self.block(3, 3)
    }
    pub fn m45(&self) -> Mat3 {
        self.block(3, 4)
    }
    pub fn m61(&self) -> Mat3 {
        self.block(5, 0)
    }
    pub fn m62(&self) -> Mat3 {
        self.block(5, 1)
    }
    pub fn m63(&self) -> Mat3 {
        self.block(5, 2)
    }
    pub fn m64(&self) -> Mat3 {
        self.block(5, 3)
    }
    pub fn m65(&self) -> Mat3 {
        self.block(5, 4)
    }
}

/// Selector of block `k` as a 3×18 matrix.
fn selector(k: usize) -> Row {
    let mut e = Row::zeros();
    e.fixed_view_mut::<3, 3>(0, 3 * k).fill_with_identity();
    e
}

/// Jacobians of `A`, `η_c` and `Ω_c` at one instant, with the tracking
/// errors and the attitude as the free variables.
struct CommandJacobian {
    geo: CommandGeometry,
    j_a: Row,
    j_eta_c: Row,
    j_omega_c: Row,
}

/// Nominal `ė_v` and its Jacobian.
fn velocity_error_rate(
    c: &GeometricController,
    t: f64,
    errors: &TrackingErrors,
    r: &Mat3,
    trajectory: &dyn Trajectory,
) -> Result<(Vec3, Row)> {
    let value = c.velocity_error_rate(t, errors, r, trajectory)?;
    let acc = trajectory.acceleration(t);
    let a = compute_a(&errors.position, &errors.velocity, &errors.integral, &acc, &c.gains, &c.params)?;
    let re3 = r.column(2).into_owned();
    let j_re3 = -r * hat(&Vec3::z()) * selector(block::ATTITUDE);
    let j_a = thrust_numerator_jacobian(c, errors);
    let jac = (re3 * re3.transpose() * j_a + (re3 * a.transpose() + a.dot(&re3) * Mat3::identity()) * j_re3)
        / c.params.mass;
    Ok((value, jac))
}

fn saturation_mask(c: &GeometricController, errors: &TrackingErrors) -> Mat3 {
    Mat3::from_diagonal(&errors.integral.map(|v| if v.abs() < c.gains.sigma { 1.0 } else { 0.0 }))
}

fn thrust_numerator_jacobian(c: &GeometricController, errors: &TrackingErrors) -> Row {
    use block::*;
    let g = &c.gains;
    -g.kx * selector(POSITION) - g.kv * selector(VELOCITY)
        - g.ki * saturation_mask(c, errors) * selector(POSITION_INTEGRAL)
}

/// Jacobians at time `t` with `ė_v` and its Jacobian supplied, so that the
/// same frozen rate can be used on both sides of the time difference.
fn command_jacobian(
    c: &GeometricController,
    t: f64,
    errors: &TrackingErrors,
    rate: &(Vec3, Row),
    trajectory: &dyn Trajectory,
) -> Result<CommandJacobian> {
    use block::*;
    let geo = c.geometry_with_rate(t, errors, &rate.0, trajectory)?;
    let g = &c.gains;
    let ex = selector(POSITION);
    let ev = selector(VELOCITY);
    let d = saturation_mask(c, errors);
    let j_a = thrust_numerator_jacobian(c, errors);
    let j_a_dot = -g.kx * ev - g.kv * rate.1 - g.ki * d * (g.c1 * ex + ev);

    let n = geo.norm_a;
    let i3 = Mat3::identity();
    let (b1, b2, b3) = (geo.b1c, geo.b2c, geo.b3c);
    let a_dot = geo.a_dot;

    // b₃ = −A/‖A‖, ḃ₃ = −P₃ Ȧ/‖A‖.
    let p3 = i3 - b3 * b3.transpose();
    let b3_dot = geo.b3c_dot;
    let j_b3 = -p3 * j_a / n;
    let j_b3_dot = ((b3.dot(&a_dot) * i3 + b3 * a_dot.transpose()) * j_b3
        - p3 * j_a_dot
        - p3 * a_dot * b3.transpose() * j_a / n)
        / n;

    // u = b₃ × b_1d, b₂ = u/‖u‖.
    let b1d = geo.command.heading;
    let b1d_dot = geo.command.heading_rate;
    let nu = geo.heading_cross_norm;
    let u_dot = b3_dot.cross(&b1d) + b3.cross(&b1d_dot);
    let j_u = -hat(&b1d) * j_b3;
    let j_u_dot = -hat(&b1d) * j_b3_dot - hat(&b1d_dot) * j_b3;
    let p2 = i3 - b2 * b2.transpose();
    let b2_dot = p2 * u_dot / nu;
    let j_b2 = p2 * j_u / nu;
    let j_b2_dot =
        (-(b2.dot(&u_dot) * i3 + b2 * u_dot.transpose()) * j_b2 + p2 * j_u_dot - p2 * u_dot * b2.transpose() * j_u / nu)
            / nu;

    // b₁ = b₂ × b₃.
    let b1_dot = b2_dot.cross(&b3) + b2.cross(&b3_dot);
    let j_b1 = -hat(&b3) * j_b2 + hat(&b2) * j_b3;
    let j_b1_dot = -hat(&b3) * j_b2_dot + hat(&b2_dot) * j_b3 - hat(&b3_dot) * j_b2 + hat(&b2) * j_b3_dot;

    // Ω_c = [b₃·ḃ₂, b₁·ḃ₃, b₂·ḃ₁].
    let mut j_omega_c = Row::zeros();
    j_omega_c.set_row(0, &(b2_dot.transpose() * j_b3 + b3.transpose() * j_b2_dot));
    j_omega_c.set_row(1, &(b3_dot.transpose() * j_b1 + b1.transpose() * j_b3_dot));
    j_omega_c.set_row(2, &(b1_dot.transpose() * j_b2 + b2.transpose() * j_b1_dot));

    let j_eta_c = geo.a1 * (-hat(&b3) * j_a / n);

    Ok(CommandJacobian {
        geo,
        j_a,
        j_eta_c,
        j_omega_c,
    })
}

/// Controller and plant closed around a trajectory.
#[derive(Clone, Copy)]
pub struct ClosedLoop<'a> {
    pub controller: &'a GeometricController,
    /// Plant parameters, disturbances included.
    pub plant: &'a QuadrotorParams,
    pub trajectory: &'a dyn Trajectory,
}

impl<'a> ClosedLoop<'a> {
    pub fn new(controller: &'a GeometricController, plant: &'a QuadrotorParams, trajectory: &'a dyn Trajectory) -> Self {
        ClosedLoop {
            controller,
            plant,
            trajectory,
        }
    }

    /// Controller output at `s`.
    pub fn control(&self, t: f64, s: &FullState) -> Result<ControlOutput> {
        self.controller.compute(t, &s.quad, &s.integrals(), self.trajectory)
    }

    /// Closed-loop vector field and the control that produced it.
    pub fn field_with_control(&self, t: f64, s: &FullState) -> Result<(FullTangent, ControlOutput)> {
        let out = self.control(t, s)?;
        let tangent = FullTangent {
            quad: state_derivative(&s.quad, &out.input, self.plant),
            position_integral: out.position_integral_rate,
            attitude_integral: out.attitude_integral_rate,
        };
        Ok((tangent, out))
    }

    pub fn field(&self, t: f64, s: &FullState) -> Result<FullTangent> {
        Ok(self.field_with_control(t, s)?.0)
    }

    /// Analytic Jacobian of [`ClosedLoop::field`] at `(t, s)`.
    pub fn linearize(&self, t: f64, s: &FullState) -> Result<LinearizedSystem> {
        use block::*;
        let c = self.controller;
        let g = &c.gains;
        let cmd = self.trajectory.command(t);
        let errors = TrackingErrors {
            position: s.quad.position - cmd.position,
            velocity: s.quad.velocity - cmd.velocity,
            integral: s.position_integral,
        };
        let r = s.quad.attitude.matrix();

        let rate = velocity_error_rate(c, t, &errors, r, self.trajectory)?;
        let now = command_jacobian(c, t, &errors, &rate, self.trajectory)?;
        let h = c.h_omega;
        let ahead = command_jacobian(c, t + h, &errors, &rate, self.trajectory)?;
        let behind = command_jacobian(c, t - h, &errors, &rate, self.trajectory)?;
        let omega_c = now.geo.omega_c;
        let omega_c_dot = (ahead.geo.omega_c - behind.geo.omega_c) / (2.0 * h);
        let j_omega_c_dot = (ahead.j_omega_c - behind.j_omega_c) / (2.0 * h);

        let ex = selector(POSITION);
        let ev = selector(VELOCITY);
        let eeta = selector(ATTITUDE);
        let eomega = selector(ANGULAR_VELOCITY);
        let eint = selector(ATTITUDE_INTEGRAL);
        let i3 = Mat3::identity();

        let rc = now.geo.attitude().into_inner();
        let g3 = r.transpose() * rc;
        let w = g3 * omega_c;
        let alpha = g3 * omega_c_dot;
        let g1 = hat(&w);
        let g2 = g3 * hat(&omega_c);
        let g4 = 0.5 * (g3.trace() * i3 - g3);
        let g5 = 0.5 * (g3.trace() * i3 - g3.transpose());
        let jc = &c.params.inertia;
        let jp = &self.plant.inertia;
        let gyro = g1 * jc - hat(&(jc * w));

        let j_w = g1 * eeta - g2 * now.j_eta_c + g3 * now.j_omega_c;
        let j_alpha = hat(&alpha) * eeta - g3 * hat(&omega_c_dot) * now.j_eta_c + g3 * j_omega_c_dot;
        let j_er = g4 * eeta - g5 * now.j_eta_c;
        let j_m = -g.kr * j_er - g.komega * (eomega - j_w) - g.ki_att * eint + gyro * j_w + jc * j_alpha;

        let omega = s.quad.angular_velocity;
        let row4 = self.plant.inertia_inverse() * (j_m + (-hat(&omega) * jp + hat(&(jp * omega))) * eomega);

        let a = now.geo.a;
        let re3 = r.column(2).into_owned();
        let j_re3 = -r * hat(&Vec3::z()) * eeta;
        let row2 = (re3 * re3.transpose() * now.j_a + (re3 * a.transpose() + a.dot(&re3) * i3) * j_re3) / self.plant.mass;

        let row3 = -hat(&omega) * eeta + eomega;
        let row5 = g.c1 * ex + ev;
        let row6 = eomega - j_w + g.c2 * j_er;

        let mut out = Mat18::zeros();
        for (k, rows) in [ev, row2, row3, row4, row5, row6].iter().enumerate() {
            out.fixed_rows_mut::<3>(3 * k).copy_from(rows);
        }
        Ok(LinearizedSystem { a: out })
    }

    /// Central-difference Jacobian of [`ClosedLoop::field`].
    pub fn fd_jacobian(&self, t: f64, s: &FullState, h: f64) -> Result<Mat18> {
        fd_jacobian(s, h, |p| self.field(t, p))
    }
}

/// Central-difference Jacobian of `field` in error coordinates around `s`.
///
/// Column `j` is `[g(s ⊕ h e_j) − g(s ⊖ h e_j)]/2h`, where `g` expresses the
/// field at the perturbed state as error-coordinate rates around `s`.
pub fn fd_jacobian<F>(s: &FullState, h: f64, mut field: F) -> Result<Mat18>
where
    F: FnMut(&FullState) -> Result<FullTangent>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let mut out = Mat18::zeros();
    for j in 0..18 {
        let mut delta = Vec18::zeros();
        delta[j] = h;
        let plus = s.retract(&delta);
        let minus = s.retract(&-delta);
        let gp = field(&plus)?.to_error_rates(&plus, s);
        let gm = field(&minus)?.to_error_rates(&minus, s);
        out.set_column(j, &((gp - gm) / (2.0 * h)));
    }
    Ok(out)
}

/// Blockwise comparison of an analytic Jacobian against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianComparison {
    /// `‖Δ_blk‖_F / max(‖ref_blk‖_F, floor)` for each block.
    pub block_errors: [[f64; 6]; 6],
    /// `‖Δ‖_F / ‖ref‖_F` over the whole matrix.
    pub full_error: f64,
}

/// Smallest block norm used as denominator, relative to the norm of the
/// whole reference matrix.
pub const BLOCK_FLOOR: f64 = 1e-6;

impl JacobianComparison {
    pub fn new(analytic: &Mat18, reference: &Mat18) -> Self {
        let full_ref = reference.norm();
        let floor = (BLOCK_FLOOR * full_ref).max(f64::MIN_POSITIVE);
        let mut block_errors = [[0.0; 6]; 6];
        for (i, row) in block_errors.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                let a = analytic.fixed_view::<3, 3>(3 * i, 3 * j);
                let r = reference.fixed_view::<3, 3>(3 * i, 3 * j);
                *e = (a - r).norm() / r.norm().max(floor);
            }
        }
        JacobianComparison {
            block_errors,
            full_error: (analytic - reference).norm() / full_ref.max(f64::MIN_POSITIVE),
        }
    }

    /// Blocks whose error exceeds `tolerance(row, col)`.
    pub fn deviations(&self, state_id: usize, tolerance: impl Fn(usize, usize) -> f64) -> Vec<DeviationRecord> {
        let mut out = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                let e = self.block_errors[i][j];
                if !(e <= tolerance(i, j)) {
                    out.push(DeviationRecord {
                        block: block_name(i, j),
                        state_id,
                        relative_error: e,
                    });
                }
            }
        }
        out
    }
}

/// Tolerance per block: tight on the kinematic rows, the integral row of the
/// position loop and the translational row; looser on the rotational rows.
pub fn default_block_tolerance(row: usize, _col: usize) -> f64 {
    match row {
        0 | 1 | 2 | 4 => 1e-4,
        _ => 1e-3,
    }
}

/// Tolerance on the full-matrix relative Frobenius error.
pub const FULL_MATRIX_TOLERANCE: f64 = 1e-3;

/// One out-of-tolerance block.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationRecord {
    pub block: String,
    pub state_id: usize,
    pub relative_error: f64,
}

/// Writes deviation records as CSV with columns `block,state_id,relative_error`.
pub fn write_deviation_report<W: std::io::Write>(records: &[DeviationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["block", "state_id", "relative_error"])?;
    for r in records {
        w.write_record([r.block.clone(), r.state_id.to_string(), format!("{:?}", r.relative_error)])?;
    }
    w.flush()?;
    Ok(())
}

/// True when some `|e_i|` component is within `margin` of the saturation
/// bound, where the field is not differentiable.
pub fn near_saturation_boundary(s: &FullState, sigma: f64, margin: f64) -> bool {
    s.position_integral.iter().any(|v| (v.abs() - sigma).abs() <= margin)
}
