//! Quadrotor flight on SE(3): rigid-body dynamics, a geometric tracking
//! controller with integral action, the analytic linearization of the closed
//! loop, and an extended Kalman filter whose covariance is propagated with
//! that linearization.
//!
//! The crate is organised bottom-up:
//!
//! - [`geom`]: SO(3) primitives (hat/vee, exponential and logarithm maps,
//!   attitude error functions, saturation, projection onto SO(3)).
//! - [`dynamics`]: equations of motion and a fixed-step RK4 integrator.
//! - [`trajectory`]: desired position/heading commands.
//! - [`controller`]: position-mode geometric controller.
//! - [`linearization`]: the 24-dimensional closed-loop state, its
//!   18-dimensional error coordinates, the analytic Jacobian and a
//!   finite-difference oracle.
//! - [`estimator`]: error-state EKF on SE(3).
//! - [`harness`]: bundled scenarios, configuration files, the simulation
//!   loop, telemetry and metrics.

// NaN must fail the validation checks, which `!(x > 0.0)` does.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod dynamics;
mod error;
pub mod estimator;
pub mod geom;
pub mod harness;
pub mod linearization;
pub mod trajectory;

pub use error::{Error, Result};

/// 3-vector of reals.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 real matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;
/// Vector in the 18-dimensional error coordinates.
pub type Vec18 = nalgebra::SVector<f64, 18>;
/// 18×18 matrix (Jacobians, covariances).
pub type Mat18 = nalgebra::SMatrix<f64, 18, 18>;
