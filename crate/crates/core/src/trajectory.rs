//! Desired position and heading commands.

use std::f64::consts::FRAC_PI_2;

use crate::Vec3;

/// Step used when a trajectory does not supply its jerk.
pub const JERK_FD_STEP: f64 = 1e-4;

/// Position command and its derivatives, and the desired heading direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryCommand {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub jerk: Vec3,
    /// Unit vector `b_1d`.
    pub heading: Vec3,
    pub heading_rate: Vec3,
}

/// A smooth desired trajectory `x_d(t)` with heading `b_1d(t)`.
pub trait Trajectory: Send + Sync {
    fn position(&self, t: f64) -> Vec3;
    fn velocity(&self, t: f64) -> Vec3;
    fn acceleration(&self, t: f64) -> Vec3;

    /// Third derivative of the position. The default differentiates
    /// [`Trajectory::acceleration`] numerically.
    fn jerk(&self, t: f64) -> Vec3 {
        let h = JERK_FD_STEP;
        (self.acceleration(t + h) - self.acceleration(t - h)) / (2.0 * h)
    }

    fn heading(&self, t: f64) -> Vec3;
    fn heading_rate(&self, t: f64) -> Vec3;

    fn command(&self, t: f64) -> TrajectoryCommand {
        TrajectoryCommand {
            position: self.position(t),
            velocity: self.velocity(t),
            acceleration: self.acceleration(t),
            jerk: self.jerk(t),
            heading: self.heading(t),
            heading_rate: self.heading_rate(t),
        }
    }
}

/// The trajectories used by the bundled scenarios.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinTrajectory {
    /// Fixed point, heading along `e₁`.
    Hover { position: Vec3 },
    /// `[sin t + π/2, sin 2t, altitude]`, heading along `e₁`.
    Lissajous { altitude: f64 },
    /// `[speed·t, a sin wt, −b cos wt]` with heading `[cos wt, sin wt, 0]`.
    EllipticHelix { speed: f64, a: f64, b: f64, w: f64 },
}

impl BuiltinTrajectory {
    pub fn kind(&self) -> &'static str {
        match self {
            BuiltinTrajectory::Hover { .. } => "hover",
            BuiltinTrajectory::Lissajous { .. } => "lissajous",
            BuiltinTrajectory::EllipticHelix { .. } => "helix",
        }
    }
}

impl Trajectory for BuiltinTrajectory {
    fn position(&self, t: f64) -> Vec3 {
        match *self {
            BuiltinTrajectory::Hover { position } => position,
            BuiltinTrajectory::Lissajous { altitude } => {
                Vec3::new(t.sin() + FRAC_PI_2, (2.0 * t).sin(), altitude)
            }
            BuiltinTrajectory::EllipticHelix { speed, a, b, w } => {
                Vec3::new(speed * t, a * (w * t).sin(), -b * (w * t).cos())
            }
        }
    }

    fn velocity(&self, t: f64) -> Vec3 {
        match *self {
            BuiltinTrajectory::Hover { .. } => Vec3::zeros(),
            BuiltinTrajectory::Lissajous { .. } => Vec3::new(t.cos(), 2.0 * (2.0 * t).cos(), 0.0),
            BuiltinTrajectory::EllipticHelix { speed, a, b, w } => {
                Vec3::new(speed, a * w * (w * t).cos(), b * w * (w * t).sin())
            }
        }
    }

    fn acceleration(&self, t: f64) -> Vec3 {
        match *self {
            BuiltinTrajectory::Hover { .. } => Vec3::zeros(),
            BuiltinTrajectory::Lissajous { .. } => Vec3::new(-t.sin(), -4.0 * (2.0 * t).sin(), 0.0),
            BuiltinTrajectory::EllipticHelix { a, b, w, .. } => {
                let w2 = w * w;
                Vec3::new(0.0, -a * w2 * (w * t).sin(), b * w2 * (w * t).cos())
            }
        }
    }

    fn jerk(&self, t: f64) -> Vec3 {
        match *self {
            BuiltinTrajectory::Hover { .. } => Vec3::zeros(),
            BuiltinTrajectory::Lissajous { .. } => Vec3::new(-t.cos(), -8.0 * (2.0 * t).cos(), 0.0),
            BuiltinTrajectory::EllipticHelix { a, b, w, .. } => {
                let w3 = w * w * w;
                Vec3::new(0.0, -a * w3 * (w * t).cos(), -b * w3 * (w * t).sin())
            }
        }
    }

    fn heading(&self, t: f64) -> Vec3 {
        match *self {
            BuiltinTrajectory::EllipticHelix { w, .. } => Vec3::new((w * t).cos(), (w * t).sin(), 0.0),
            _ => Vec3::x(),
        }
    }

    fn heading_rate(&self, t: f64) -> Vec3 {
        match *self {
            BuiltinTrajectory::EllipticHelix { w, .. } => {
                Vec3::new(-w * (w * t).sin(), w * (w * t).cos(), 0.0)
            }
            _ => Vec3::zeros(),
        }
    }
}
