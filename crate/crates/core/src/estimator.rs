//! Error-state extended Kalman filter on the closed-loop state.
//!
//! The mean is a [`FullState`] propagated with RK4 through the closed loop,
//! the control being computed from the estimate itself. The covariance lives
//! in the 18-dimensional error coordinates and is propagated with the
//! closed-loop Jacobian. Attitude residuals are taken with the logarithm
//! map and corrections are applied with `R ← R exp(η)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{rk4_step, ControlInput};
use crate::geom::{exp_so3, log_so3, RotationMatrix};
use crate::linearization::{ClosedLoop, FullState, FullTangent, DEFAULT_FD_STEP};
use crate::{Error, Mat18, Result, Vec18, Vec3};

/// Smallest eigenvalue a covariance may show after round-off.
pub const MIN_EIGENVALUE: f64 = -1e-10;

/// Mean and covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: FullState,
    pub covariance: Mat18,
}

impl Estimate {
    pub fn new(mean: FullState, covariance: Mat18) -> Self {
        Estimate { mean, covariance }
    }

    /// Smallest eigenvalue of the covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance.symmetric_eigenvalues().min()
    }

    /// Largest absolute entry of `P − Pᵀ`.
    pub fn asymmetry(&self) -> f64 {
        (self.covariance - self.covariance.transpose()).amax()
    }
}

/// Default initial covariance: 10 m², 10 (m/s)², 0.1 rad², 0.1 (rad/s)²,
/// 1e-2 for both integrals.
pub fn default_initial_covariance() -> Mat18 {
    block_diagonal(&[10.0, 10.0, 0.1, 0.1, 1e-2, 1e-2])
}

/// 18×18 diagonal matrix with one value per 3-block.
pub fn block_diagonal(values: &[f64; 6]) -> Mat18 {
    Mat18::from_diagonal(&Vec18::from_fn(|i, _| values[i / 3]))
}

fn symmetrize(p: &Mat18) -> Mat18 {
    (p + p.transpose()) * 0.5
}

/// Measured quantity; each one is three-dimensional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Position,
    Velocity,
    Attitude,
    AngularVelocity,
    PositionIntegral,
    AttitudeIntegral,
}

impl Component {
    /// Index of the matching 3-block in the error coordinates.
    pub fn block(self) -> usize {
        match self {
            Component::Position => 0,
            Component::Velocity => 1,
            Component::Attitude => 2,
            Component::AngularVelocity => 3,
            Component::PositionIntegral => 4,
            Component::AttitudeIntegral => 5,
        }
    }

    fn read(self, s: &FullState) -> MeasuredValue {
        match self {
            Component::Position => MeasuredValue::Vector(s.quad.position),
            Component::Velocity => MeasuredValue::Vector(s.quad.velocity),
            Component::Attitude => MeasuredValue::Rotation(s.quad.attitude),
            Component::AngularVelocity => MeasuredValue::Vector(s.quad.angular_velocity),
            Component::PositionIntegral => MeasuredValue::Vector(s.position_integral),
            Component::AttitudeIntegral => MeasuredValue::Vector(s.attitude_integral),
        }
    }
}

/// One measured component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasuredValue {
    Vector(Vec3),
    Rotation(RotationMatrix),
}

/// A measurement, one value per component of its model.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub values: Vec<(Component, MeasuredValue)>,
}

impl Measurement {
    pub fn get(&self, c: Component) -> Option<&MeasuredValue> {
        self.values.iter().find(|(k, _)| *k == c).map(|(_, v)| v)
    }
}

/// Which parts of the state are measured, and with what noise.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub name: String,
    pub components: Vec<Component>,
    /// `p × p` noise covariance.
    pub covariance: DMatrix<f64>,
}

impl MeasurementModel {
    /// Model with isotropic noise `variance · I`.
    pub fn isotropic(name: &str, components: Vec<Component>, variance: f64) -> Self {
        let p = 3 * components.len();
        MeasurementModel {
            name: name.to_string(),
            components,
            covariance: DMatrix::identity(p, p) * variance,
        }
    }

    /// Position, attitude and angular velocity (p = 9).
    pub fn pos_att_gyro(variance: f64) -> Self {
        Self::isotropic(
            "pos_att_gyro",
            vec![Component::Position, Component::Attitude, Component::AngularVelocity],
            variance,
        )
    }

    /// Attitude and angular velocity only (p = 6).
    pub fn att_gyro(variance: f64) -> Self {
        Self::isotropic("att_gyro", vec![Component::Attitude, Component::AngularVelocity], variance)
    }

    /// The whole state (p = 18).
    pub fn full(variance: f64) -> Self {
        Self::isotropic(
            "full",
            vec![
                Component::Position,
                Component::Velocity,
                Component::Attitude,
                Component::AngularVelocity,
                Component::PositionIntegral,
                Component::AttitudeIntegral,
            ],
            variance,
        )
    }

    /// Built-in model by name.
    pub fn by_name(name: &str, variance: f64) -> Result<Self> {
        match name {
            "pos_att_gyro" => Ok(Self::pos_att_gyro(variance)),
            "att_gyro" => Ok(Self::att_gyro(variance)),
            "full" => Ok(Self::full(variance)),
            _ => Err(Error::UnknownName {
                kind: "measurement model",
                name: name.to_string(),
            }),
        }
    }

    pub const BUILTIN: [&'static str; 3] = ["pos_att_gyro", "att_gyro", "full"];

    pub fn dimension(&self) -> usize {
        3 * self.components.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.dimension();
        if self.covariance.nrows() != p || self.covariance.ncols() != p {
            return Err(Error::InvalidArgument(format!(
                "measurement covariance must be {p}×{p}, got {}×{}",
                self.covariance.nrows(),
                self.covariance.ncols()
            )));
        }
        if (&self.covariance - self.covariance.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidArgument("measurement covariance is not symmetric".into()));
        }
        Ok(())
    }

    /// `h(χ)`.
    pub fn predict(&self, s: &FullState) -> Measurement {
        Measurement {
            values: self.components.iter().map(|c| (*c, c.read(s))).collect(),
        }
    }

    /// `p × 18` observation matrix.
    pub fn jacobian(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dimension(), 18);
        for (i, c) in self.components.iter().enumerate() {
            h.view_mut((3 * i, 3 * c.block()), (3, 3)).fill_with_identity();
        }
        h
    }

    /// `z ⊖ h(χ̄)`: differences for vectors, `log(R̄ᵀ R_z)` for the attitude.
    pub fn residual(&self, z: &Measurement, mean: &FullState) -> Result<DVector<f64>> {
        let mut r = DVector::zeros(self.dimension());
        for (i, c) in self.components.iter().enumerate() {
            let measured = z
                .get(*c)
                .ok_or_else(|| Error::InvalidArgument(format!("measurement lacks component {c:?}")))?;
            let d = match (measured, c.read(mean)) {
                (MeasuredValue::Vector(a), MeasuredValue::Vector(b)) => a - b,
                (MeasuredValue::Rotation(a), MeasuredValue::Rotation(b)) => log_so3(&(b.transpose() * *a))?,
                _ => return Err(Error::InvalidArgument(format!("measurement value of wrong kind for {c:?}"))),
            };
            r.rows_mut(3 * i, 3).copy_from(&d);
        }
        Ok(r)
    }

    /// Draws `z = h(truth) ⊕ v` with `v ~ N(0, covariance)`.
    pub fn sample<R: Rng + ?Sized>(&self, truth: &FullState, rng: &mut R) -> Measurement {
        let p = self.dimension();
        let xi = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let noise = covariance_sqrt(&self.covariance) * xi;
        let mut z = self.predict(truth);
        for (i, (_, v)) in z.values.iter_mut().enumerate() {
            let n = Vec3::new(noise[3 * i], noise[3 * i + 1], noise[3 * i + 2]);
            *v = match *v {
                MeasuredValue::Vector(x) => MeasuredValue::Vector(x + n),
                MeasuredValue::Rotation(r) => MeasuredValue::Rotation(r * exp_so3(&n)),
            };
        }
        z
    }
}

/// Symmetric square root through the eigendecomposition. Negative
/// eigenvalues from round-off are clipped, so a zero covariance is allowed.
fn covariance_sqrt(c: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = c.clone().symmetric_eigen();
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Discretisation of the covariance transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    /// `Φ = I + A dt`
    FirstOrder,
    /// `Φ = exp(A dt)`
    ExactExpm,
}

/// How the closed-loop Jacobian is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianSource {
    Analytic,
    FiniteDifference,
}

/// `P⁻ = Φ P Φᵀ + Q dt`, symmetrised.
pub fn propagate_covariance(p: &Mat18, a: &Mat18, q: &Mat18, dt: f64, transition: Transition) -> Mat18 {
    let phi = match transition {
        Transition::FirstOrder => Mat18::identity() + a * dt,
        Transition::ExactExpm => (a * dt).exp(),
    };
    symmetrize(&(phi * p * phi.transpose() + q * dt))
}

/// Result of [`Ekf::predict`].
#[derive(Debug, Clone, Copy)]
pub struct Prediction {
    pub estimate: Estimate,
    /// Control applied at each RK4 stage, computed from the estimate.
    pub stage_controls: [ControlInput; 4],
    /// Jacobian used for the covariance.
    pub jacobian: Mat18,
}

/// Result of [`Ekf::update`].
#[derive(Debug, Clone)]
pub struct Update {
    pub estimate: Estimate,
    pub innovation: DVector<f64>,
    /// Correction applied to the mean, in error coordinates.
    pub correction: Vec18,
}

/// Filter settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Ekf {
    /// Process noise density; `Q dt` is added per step.
    pub process_noise: Mat18,
    pub transition: Transition,
    pub jacobian: JacobianSource,
}

impl Ekf {
    pub fn new(process_noise: Mat18) -> Self {
        Ekf {
            process_noise,
            transition: Transition::FirstOrder,
            jacobian: JacobianSource::Analytic,
        }
    }

    /// Propagates the estimate over `[t, t + dt]`.
    pub fn predict(&self, est: &Estimate, closed_loop: &ClosedLoop, t: f64, dt: f64) -> Result<Prediction> {
        let a = match self.jacobian {
            JacobianSource::Analytic => closed_loop.linearize(t, &est.mean)?.a,
            JacobianSource::FiniteDifference => closed_loop.fd_jacobian(t, &est.mean, DEFAULT_FD_STEP)?,
        };
        let mut stage_controls = [ControlInput::default(); 4];
        let mean = rk4_step(&est.mean, t, dt, |stage, ts, s| -> Result<FullTangent> {
            let (tangent, out) = closed_loop.field_with_control(ts, s)?;
            stage_controls[stage] = out.input;
            Ok(tangent)
        })?;
        let covariance = propagate_covariance(&est.covariance, &a, &self.process_noise, dt, self.transition);
        Ok(Prediction {
            estimate: Estimate { mean, covariance },
            stage_controls,
            jacobian: a,
        })
    }

    /// Measurement update with `z`.
    pub fn update(&self, est: &Estimate, z: &Measurement, model: &MeasurementModel) -> Result<Update> {
        update(est, z, model)
    }
}

/// `K = P Hᵀ (H P Hᵀ + 𝓡)⁻¹`, `P⁺ = (I − K H) P`, mean retracted by `K r`.
pub fn update(est: &Estimate, z: &Measurement, model: &MeasurementModel) -> Result<Update> {
    let h = model.jacobian();
    let p = DMatrix::from_column_slice(18, 18, est.covariance.as_slice());
    let innovation = model.residual(z, &est.mean)?;
    let s = &h * &p * h.transpose() + &model.covariance;
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("innovation covariance is not positive definite".into()))?;
    // K = P Hᵀ S⁻¹ = (S⁻¹ H P)ᵀ since S and P are symmetric.
    let k = chol.solve(&(&h * &p)).transpose();
    let correction = Vec18::from_column_slice((&k * &innovation).as_slice());
    let i_kh = DMatrix::identity(18, 18) - &k * &h;
    let p_post = Mat18::from_column_slice((i_kh * p).as_slice());
    Ok(Update {
        estimate: Estimate {
            mean: est.mean.retract(&correction),
            covariance: symmetrize(&p_post),
        },
        innovation,
        correction,
    })
}

/// Kalman gain for the given prior, exposed for consistency checks.
pub fn kalman_gain(p: &Mat18, model: &MeasurementModel) -> Result<DMatrix<f64>> {
    let h = model.jacobian();
    let p = DMatrix::from_column_slice(18, 18, p.as_slice());
    let s = &h * &p * h.transpose() + &model.covariance;
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("innovation covariance is not positive definite".into()))?;
    Ok(chol.solve(&(&h * &p)).transpose())
}

/// Normalised estimation error squared `eᵀ P⁻¹ e`, `e = truth ⊖ mean`.
pub fn nees(est: &Estimate, truth: &FullState) -> Result<f64> {
    let e = truth.difference(&est.mean)?;
    let chol = est
        .covariance
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("covariance is not positive definite".into()))?;
    Ok(e.dot(&chol.solve(&e)))
}
