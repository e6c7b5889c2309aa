//! Run summaries computed from telemetry alone.

use crate::estimator::{Component, MeasuredValue};
use crate::harness::config::{MetricsConfig, Thresholds};
use crate::harness::telemetry::TelemetryRecord;
use crate::Vec3;

/// One number per estimated block.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockErrors {
    pub position: f64,
    pub velocity: f64,
    pub attitude: f64,
    pub angular_velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub records: usize,
    pub final_time: f64,
    /// RMSE of the estimation error over the metrics window.
    pub window_rmse: BlockErrors,
    /// Largest estimation error over the whole run.
    pub max_error: BlockErrors,
    /// Largest estimation error over the metrics window.
    pub window_max_error: BlockErrors,
    /// First time the position estimation error drops below the threshold.
    pub convergence_time: Option<f64>,
    /// RMSE of the backward difference of measured positions against the
    /// true velocity, over the window. Needs position measurements.
    pub fd_velocity_rmse: Option<f64>,
    /// Largest `‖x − x_d‖` after the settle time.
    pub max_tracking_error_after_settle: Option<f64>,
    /// Largest coordinate-wise difference between estimate and truth.
    pub max_state_error: f64,
    pub min_covariance_eigenvalue: f64,
    pub max_covariance_asymmetry: f64,
    pub max_jacobian_error: Option<f64>,
    /// Steps where the controller's attitude gate was not satisfied.
    pub gate_violations: usize,
}

fn in_window(t: f64, cfg: &MetricsConfig) -> bool {
    t >= cfg.window_start && t <= cfg.window_end
}

impl Metrics {
    pub fn from_records(records: &[TelemetryRecord], cfg: &MetricsConfig) -> Self {
        let mut sq = BlockErrors::default();
        let mut max = BlockErrors::default();
        let mut wmax = BlockErrors::default();
        let mut n = 0usize;
        let mut fd_sq = 0.0;
        let mut fd_n = 0usize;
        let mut convergence_time = None;
        let mut max_tracking: Option<f64> = None;
        let mut max_state_error = 0.0f64;
        let mut min_eig = f64::INFINITY;
        let mut max_asym = 0.0f64;
        let mut max_jac: Option<f64> = None;
        let mut gate_violations = 0;
        let mut prev_pos: Option<(f64, Vec3, Vec3)> = None;
        for r in records {
            let e = BlockErrors {
                position: r.position_error().norm(),
                velocity: r.velocity_error().norm(),
                attitude: r.attitude_error(),
                angular_velocity: r.angular_velocity_error().norm(),
            };
            for (m, v) in [
                (&mut max.position, e.position),
                (&mut max.velocity, e.velocity),
                (&mut max.attitude, e.attitude),
                (&mut max.angular_velocity, e.angular_velocity),
            ] {
                *m = m.max(v);
            }
            if convergence_time.is_none() && e.position < cfg.convergence_threshold {
                convergence_time = Some(r.t);
            }
            let measured = r.measurement.as_ref().and_then(|m| match m.get(Component::Position) {
                Some(MeasuredValue::Vector(p)) => Some(*p),
                _ => None,
            });
            if in_window(r.t, cfg) {
                n += 1;
                sq.position += e.position.powi(2);
                sq.velocity += e.velocity.powi(2);
                sq.attitude += e.attitude.powi(2);
                sq.angular_velocity += e.angular_velocity.powi(2);
                for (m, v) in [
                    (&mut wmax.position, e.position),
                    (&mut wmax.velocity, e.velocity),
                    (&mut wmax.attitude, e.attitude),
                    (&mut wmax.angular_velocity, e.angular_velocity),
                ] {
                    *m = m.max(v);
                }
                if let (Some((t0, p0, v0)), Some(p1)) = (prev_pos, measured) {
                    let dt = r.t - t0;
                    // Backward difference, compared at the interval midpoint.
                    let v_mid = (r.truth.quad.velocity + v0) * 0.5;
                    fd_sq += ((p1 - p0) / dt - v_mid).norm_squared();
                    fd_n += 1;
                }
            }
            prev_pos = measured.map(|p| (r.t, p, r.truth.quad.velocity));
            if r.t >= cfg.settle_time {
                let e = (r.truth.quad.position - r.desired_position).norm();
                max_tracking = Some(max_tracking.map_or(e, |m| m.max(e)));
            }
            max_state_error = max_state_error.max(r.max_state_error());
            min_eig = min_eig.min(r.p_min_eig);
            max_asym = max_asym.max(r.p_asym);
            if let Some(j) = r.jacobian {
                max_jac = Some(max_jac.map_or(j.full_error, |m: f64| m.max(j.full_error)));
            }
            if !r.mode_ok {
                gate_violations += 1;
            }
        }
        let rms = |s: f64| if n == 0 { f64::NAN } else { (s / n as f64).sqrt() };
        Metrics {
            records: records.len(),
            final_time: records.last().map_or(0.0, |r| r.t),
            window_rmse: BlockErrors {
                position: rms(sq.position),
                velocity: rms(sq.velocity),
                attitude: rms(sq.attitude),
                angular_velocity: rms(sq.angular_velocity),
            },
            max_error: max,
            window_max_error: wmax,
            convergence_time,
            fd_velocity_rmse: (fd_n > 0).then(|| (fd_sq / fd_n as f64).sqrt()),
            max_tracking_error_after_settle: max_tracking,
            max_state_error,
            min_covariance_eigenvalue: min_eig,
            max_covariance_asymmetry: max_asym,
            max_jacobian_error: max_jac,
            gate_violations,
        }
    }

    /// Descriptions of the thresholds that were not met.
    pub fn check(&self, t: &Thresholds) -> Vec<String> {
        let mut failures = Vec::new();
        if let Some(max) = t.convergence_time_max {
            match self.convergence_time {
                Some(c) if c <= max => {}
                Some(c) => failures.push(format!("convergence time {c} s exceeds {max} s")),
                None => failures.push("position estimate never converged".to_string()),
            }
        }
        for (name, value, max) in [
            ("position RMSE", self.window_rmse.position, t.position_rmse_max),
            ("velocity RMSE", self.window_rmse.velocity, t.velocity_rmse_max),
            (
                "tracking error",
                self.max_tracking_error_after_settle.unwrap_or(f64::NAN),
                t.tracking_error_max,
            ),
        ] {
            if let Some(max) = max {
                if !(value <= max) {
                    failures.push(format!("{name} {value} exceeds {max}"));
                }
            }
        }
        failures
    }

    /// Human-readable multi-line summary.
    pub fn summary(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        format!(
            "records: {}\nfinal time: {:.3} s\nconvergence time: {}\n\
             window RMSE  x {:.6}  v {:.6}  R {:.6}  Omega {:.6}\n\
             max error    x {:.6}  v {:.6}  R {:.6}  Omega {:.6}\n\
             finite-difference velocity RMSE: {}\ntracking error after settle: {}\n\
             min eig(P): {:.3e}  max asym(P): {:.3e}\ngate violations: {}",
            self.records,
            self.final_time,
            opt(self.convergence_time),
            self.window_rmse.position,
            self.window_rmse.velocity,
            self.window_rmse.attitude,
            self.window_rmse.angular_velocity,
            self.max_error.position,
            self.max_error.velocity,
            self.max_error.attitude,
            self.max_error.angular_velocity,
            opt(self.fd_velocity_rmse),
            opt(self.max_tracking_error_after_settle),
            self.min_covariance_eigenvalue,
            self.max_covariance_asymmetry,
            self.gate_violations,
        )
    }
}
