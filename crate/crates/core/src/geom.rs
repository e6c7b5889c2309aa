//! SO(3) primitives.
//!
//! Attitudes are direction-cosine matrices mapping body-frame vectors to the
//! inertial frame. Perturbations are expressed in body-fixed exponential
//! coordinates, `R' = R exp(hat(eta))`.

use std::ops::Mul;

use nalgebra::SVector;

use crate::{Error, Mat3, Result, Vec3};

/// Below this angle the exponential/logarithm switch to their series forms.
pub const SMALL_ANGLE: f64 = 1e-8;

/// `log_so3` refuses rotations whose angle is closer than this to π.
pub const LOG_PI_MARGIN: f64 = 1e-6;

/// Tolerance on `|S + S^T|` accepted by [`vee`].
pub const SKEW_TOLERANCE: f64 = 1e-9;

/// Exponential coordinates of an attitude perturbation (radians).
pub type AxisCoordinates = Vec3;

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Mat3::identity())
    }

    /// Nearest rotation to `m` (see [`project_so3`]).
    pub fn from_matrix(m: &Mat3) -> Result<Self> {
        project_so3(m)
    }

    /// Wraps a matrix without projecting it.
    ///
    /// Used for the intermediate Runge-Kutta stages, which leave the manifold
    /// by O(dt²) before the step is reprojected.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        RotationMatrix(m)
    }

    /// Builds `[c1 c2 c3]` from three columns and projects the result.
    pub fn from_columns(c1: &Vec3, c2: &Vec3, c3: &Vec3) -> Result<Self> {
        project_so3(&Mat3::from_columns(&[*c1, *c2, *c3]))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_inner(self) -> Mat3 {
        self.0
    }

    pub fn transpose(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    pub fn column(&self, i: usize) -> Vec3 {
        self.0.column(i).into_owned()
    }

    /// `‖RᵀR − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).norm()
    }

    /// Rotation applied on the right in body coordinates, `R exp(hat(eta))`.
    pub fn retract(&self, eta: &AxisCoordinates) -> Self {
        *self * exp_so3(eta)
    }

    /// Row-major flattening `[R11, R12, ..., R33]`.
    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    /// Inverse of [`RotationMatrix::to_row_major`]; the result is projected.
    pub fn from_row_major(v: &[f64; 9]) -> Result<Self> {
        project_so3(&Mat3::from_row_slice(v))
    }
}

impl Default for RotationMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for RotationMatrix {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &RotationMatrix {
    type Output = Vec3;

    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// Skew-symmetric matrix with `hat(v) w = v × w`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Rejects matrices that are not skew-symmetric to
/// within [`SKEW_TOLERANCE`].
pub fn vee(s: &Mat3) -> Result<Vec3> {
    let asym = (s + s.transpose()).norm();
    if asym > SKEW_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "vee of a non-skew matrix (|S + S^T| = {asym:e})"
        )));
    }
    Ok(Vec3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)]))
}

/// `vee` of the skew-symmetric part, `(½(M − Mᵀ))∨`. Never fails.
pub fn vee_skew_part(m: &Mat3) -> Vec3 {
    0.5 * Vec3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    )
}

/// Rodrigues' formula.
pub fn exp_so3(eta: &AxisCoordinates) -> RotationMatrix {
    let theta = eta.norm();
    let k = hat(eta);
    let k2 = k * k;
    let m = if theta < SMALL_ANGLE {
        Mat3::identity() + k + 0.5 * k2
    } else {
        Mat3::identity() + (theta.sin() / theta) * k + ((1.0 - theta.cos()) / (theta * theta)) * k2
    };
    RotationMatrix(m)
}

/// Principal logarithm. Fails within [`LOG_PI_MARGIN`] of a half turn.
pub fn log_so3(r: &RotationMatrix) -> Result<AxisCoordinates> {
    let m = r.matrix();
    let w = vee_skew_part(m);
    let s = w.norm();
    let c = 0.5 * (m.trace() - 1.0);
    let theta = s.atan2(c);
    if theta > std::f64::consts::PI - LOG_PI_MARGIN {
        return Err(Error::NearSingularRotation {
            angle: theta,
            margin: LOG_PI_MARGIN,
        });
    }
    if theta < SMALL_ANGLE {
        // sin θ ≈ θ, so w is already the rotation vector to second order.
        return Ok(w);
    }
    Ok(w * (theta / s))
}

/// Configuration error `Ψ = ½ tr(I − R_dᵀR)` and attitude error vector
/// `e_R = ½ (R_dᵀR − RᵀR_d)∨`.
pub fn attitude_error(r: &RotationMatrix, r_d: &RotationMatrix) -> (f64, Vec3) {
    let rd_t_r = r_d.matrix().transpose() * r.matrix();
    let psi = 0.5 * (3.0 - rd_t_r.trace());
    let e_r = vee_skew_part(&rd_t_r);
    (psi, e_r)
}

/// `e_Ω = Ω − RᵀR_d Ω_d`.
pub fn angular_velocity_error(
    r: &RotationMatrix,
    omega: &Vec3,
    r_d: &RotationMatrix,
    omega_d: &Vec3,
) -> Vec3 {
    omega - r.matrix().transpose() * (r_d.matrix() * omega_d)
}

/// Element-wise saturation to `[-sigma, sigma]`.
pub fn sat<const N: usize>(sigma: f64, y: &SVector<f64, N>) -> Result<SVector<f64, N>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "saturation bound must be positive, got {sigma}"
        )));
    }
    Ok(y.map(|v| v.clamp(-sigma, sigma)))
}

/// Nearest rotation in the Frobenius norm: the orthogonal polar factor
/// `U Vᵀ` of the SVD. Requires `det(M) > 0`.
pub fn project_so3(m: &Mat3) -> Result<RotationMatrix> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite matrix".into()));
    }
    let det = m.determinant();
    let scale = m.norm().powi(3).max(f64::MIN_POSITIVE);
    if !(det > 1e-12 * scale) {
        return Err(Error::InvalidArgument(format!(
            "cannot project a matrix with det = {det:e} onto SO(3)"
        )));
    }
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::NumericalFailure("SVD did not converge".into())),
    };
    // det(M) > 0 makes U Vᵀ proper; no reflection fix-up is needed.
    Ok(RotationMatrix(u * v_t))
}
