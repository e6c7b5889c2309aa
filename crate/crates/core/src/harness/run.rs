//! The closed-loop simulation with the filter in the loop.
//!
//! Each step: draw a measurement of the truth, update the filter, evaluate the
//! controller at the estimate and record telemetry, then propagate the
//! estimate and the truth over one step.
//!
//! With [`Feedback::Truth`] the truth runs under the controller evaluated at
//! the true state and the filter only observes; this is the setting the
//! closed-loop linearization describes. With [`Feedback::Estimate`] the truth
//! is integrated with the controls the filter's own RK4 stages computed from
//! the estimate, so both see the same input.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::controller::GeometricController;
use crate::dynamics::{rk4_step, state_derivative};
use crate::estimator::{block_diagonal, nees, Ekf, Estimate, MeasurementModel};
use crate::harness::config::{Feedback, ScenarioConfig};
use crate::harness::metrics::Metrics;
use crate::harness::telemetry::{JacobianDeviation, TelemetryRecord};
use crate::linearization::{ClosedLoop, FullState, FullTangent, JacobianComparison, DEFAULT_FD_STEP};
use crate::trajectory::Trajectory;
use crate::{Error, Mat18, Result, Vec18};

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Abort {
    pub t: f64,
    pub message: String,
    /// Controller degeneracy rather than a numerical failure elsewhere.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TelemetryRecord>,
    pub metrics: Metrics,
    pub abort: Option<Abort>,
    pub warnings: Vec<String>,
}

/// Outcome mapped onto the CLI exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Success,
    ThresholdFailure(Vec<String>),
    Aborted(Abort),
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::ThresholdFailure(_) => 1,
            RunStatus::Aborted(_) => 2,
        }
    }
}

impl RunOutput {
    pub fn status(&self, cfg: &ScenarioConfig) -> RunStatus {
        if let Some(a) = &self.abort {
            return RunStatus::Aborted(a.clone());
        }
        let failures = self.metrics.check(&cfg.thresholds);
        if failures.is_empty() {
            RunStatus::Success
        } else {
            RunStatus::ThresholdFailure(failures)
        }
    }
}

fn controller(cfg: &ScenarioConfig) -> GeometricController {
    let mut c = GeometricController::new(cfg.gains, cfg.params.clone());
    c.h_omega = cfg.h_omega;
    c
}

/// Runs `cfg`. Only an invalid configuration is an `Err`; failures during
/// the run end it early and are reported in [`RunOutput::abort`].
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let controller = controller(cfg);
    let closed_loop = ClosedLoop::new(&controller, &cfg.params, &cfg.trajectory);
    let model = MeasurementModel::by_name(&cfg.measurement_model, cfg.measurement_variance)?;
    let sensor = MeasurementModel::by_name(
        &cfg.measurement_model,
        cfg.measurement_variance * cfg.sensor_scale * cfg.sensor_scale,
    )?;
    let mut ekf = Ekf::new(Mat18::identity() * cfg.process_noise);
    ekf.transition = cfg.transition;
    ekf.jacobian = cfg.jacobian;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut truth = cfg.initial_truth;
    let mut est = Estimate::new(cfg.initial_estimate, block_diagonal(&cfg.p0_diag));
    let mut records = Vec::with_capacity(cfg.steps() + 1);
    let mut warnings = Vec::new();
    let mut abort = None;
    let steps = cfg.steps();

    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let step = (|| -> Result<(TelemetryRecord, Option<(Estimate, FullState)>)> {
            let z = sensor.sample(&truth, &mut rng);
            let posterior = ekf.update(&est, &z, &model)?.estimate;
            let out = closed_loop.control(t, &posterior.mean)?;
            if !out.gate.is_ok() && warnings.is_empty() {
                warnings.push(format!(
                    "t = {t:.3} s: attitude error Psi = {:.3} is outside the position-control region",
                    out.psi
                ));
            }
            let jacobian = if cfg.jacobian_deviation {
                let a = closed_loop.linearize(t, &posterior.mean)?.a;
                let fd = closed_loop.fd_jacobian(t, &posterior.mean, DEFAULT_FD_STEP)?;
                let c = JacobianComparison::new(&a, &fd);
                Some(JacobianDeviation {
                    full_error: c.full_error,
                    max_block_error: c.block_errors.iter().flatten().fold(0.0, |m: f64, v| m.max(*v)),
                })
            } else {
                None
            };
            let command = cfg.trajectory.command(t);
            let record = TelemetryRecord {
                t,
                truth,
                estimate: posterior.mean,
                desired_position: command.position,
                desired_velocity: command.velocity,
                desired_attitude: *out.computed.attitude.matrix(),
                measurement: Some(z),
                ebar_x: posterior.mean.quad.position - command.position,
                ebar_v: posterior.mean.quad.velocity - command.velocity,
                psi: out.psi,
                norm_e_r: out.e_r.norm(),
                norm_e_omega: out.e_omega.norm(),
                nees: nees(&posterior, &truth).unwrap_or(f64::NAN),
                p_min_eig: posterior.min_eigenvalue(),
                p_asym: posterior.asymmetry(),
                mode_ok: out.gate.is_ok(),
                jacobian,
            };
            if k == steps {
                return Ok((record, None));
            }
            let prediction = ekf.predict(&posterior, &closed_loop, t, cfg.dt)?;
            let mut next = match cfg.feedback {
                Feedback::Truth => rk4_step(&truth, t, cfg.dt, |_, ts, s| closed_loop.field(ts, s))?,
                Feedback::Estimate => rk4_step(&truth, t, cfg.dt, |stage, ts, s| -> Result<FullTangent> {
                    // Integrator states of the truth follow its own errors.
                    let own = closed_loop.control(ts, s)?;
                    Ok(FullTangent {
                        quad: state_derivative(&s.quad, &prediction.stage_controls[stage], &cfg.params),
                        position_integral: own.position_integral_rate,
                        attitude_integral: own.attitude_integral_rate,
                    })
                })?,
            };
            if cfg.truth_process_noise > 0.0 {
                let scale = (cfg.truth_process_noise * cfg.dt).sqrt();
                let w = Vec18::from_fn(|_, _| StandardNormal.sample(&mut rng));
                next = next.retract(&(w * scale));
            }
            Ok((record, Some((prediction.estimate, next))))
        })();
        match step {
            Ok((record, next)) => {
                records.push(record);
                if let Some((e, tr)) = next {
                    est = e;
                    truth = tr;
                }
            }
            Err(e) => {
                abort = Some(Abort {
                    t,
                    degenerate: e.is_degenerate(),
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    let metrics = Metrics::from_records(&records, &cfg.metrics);
    Ok(RunOutput {
        records,
        metrics,
        abort,
        warnings,
    })
}

/// Noise-free simulation of the truth under its own feedback; returns the
/// state at every step, starting with the initial one.
pub fn truth_trajectory(cfg: &ScenarioConfig) -> Result<Vec<(f64, FullState)>> {
    cfg.validate()?;
    let controller = controller(cfg);
    let closed_loop = ClosedLoop::new(&controller, &cfg.params, &cfg.trajectory);
    let mut s = cfg.initial_truth;
    let mut out = vec![(0.0, s)];
    for k in 0..cfg.steps() {
        let t = k as f64 * cfg.dt;
        s = rk4_step(&s, t, cfg.dt, |_, ts, x| closed_loop.field(ts, x))?;
        out.push((t + cfg.dt, s));
    }
    Ok(out)
}

impl From<&Abort> for Error {
    fn from(a: &Abort) -> Self {
        Error::NumericalFailure(format!("run aborted at t = {}: {}", a.t, a.message))
    }
}
