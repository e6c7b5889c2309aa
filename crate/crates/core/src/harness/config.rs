//! Scenario configuration and its flat `dotted.key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! scenario = example1
//! gains.kx = 13.84
//! truth.position = 0, 0, 0
//! ```
//!
//! `scenario` selects the base configuration; every other line overrides one
//! field of it. Unknown keys and malformed values are rejected with the line
//! number. Absent thresholds are written as `none` and an absent output path
//! as an empty value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::controller::Gains;
use crate::dynamics::QuadrotorParams;
use crate::estimator::{JacobianSource, Transition};
use crate::geom::RotationMatrix;
use crate::harness::scenarios;
use crate::linearization::FullState;
use crate::trajectory::BuiltinTrajectory;
use crate::{Error, Mat3, Result, Vec3};

/// Which state the controller acting on the truth is fed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    /// Control computed from the estimate, as in flight.
    Estimate,
    /// Control computed from the true state; the filter only observes.
    Truth,
}

/// Window and thresholds used to summarise a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsConfig {
    pub window_start: f64,
    pub window_end: f64,
    /// Position estimation error below which the filter counts as converged.
    pub convergence_threshold: f64,
    /// Time after which the tracking error is assessed.
    pub settle_time: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            window_start: 5.0,
            window_end: 10.0,
            convergence_threshold: 0.2,
            settle_time: 5.0,
        }
    }
}

/// Optional pass/fail thresholds checked at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Thresholds {
    pub convergence_time_max: Option<f64>,
    pub position_rmse_max: Option<f64>,
    pub velocity_rmse_max: Option<f64>,
    pub tracking_error_max: Option<f64>,
}

/// Everything needed to run one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub gains: Gains,
    /// Step of the time difference behind `Ω̇_c`.
    pub h_omega: f64,
    pub params: QuadrotorParams,
    pub trajectory: BuiltinTrajectory,
    pub measurement_model: String,
    /// Isotropic measurement variance assumed by the filter.
    pub measurement_variance: f64,
    /// Isotropic process noise density assumed by the filter.
    pub process_noise: f64,
    /// Multiplies the standard deviation of the noise actually drawn.
    pub sensor_scale: f64,
    /// Process noise density injected into the truth.
    pub truth_process_noise: f64,
    pub initial_truth: FullState,
    pub initial_estimate: FullState,
    /// Initial covariance, one value per 3-block.
    pub p0_diag: [f64; 6],
    pub feedback: Feedback,
    pub jacobian: JacobianSource,
    pub transition: Transition,
    pub metrics: MetricsConfig,
    pub thresholds: Thresholds,
    /// Records the analytic-vs-FD Jacobian error at every step when set.
    pub jacobian_deviation: bool,
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::InvalidArgument(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        for (name, v) in [
            ("noise.r", self.measurement_variance),
            ("noise.q", self.process_noise),
            ("noise.sensor_scale", self.sensor_scale),
            ("noise.truth_q", self.truth_process_noise),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.p0_diag.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument("estimate.p0 entries must be positive".into()));
        }
        self.gains.validate()?;
        self.params.validate()?;
        crate::estimator::MeasurementModel::by_name(&self.measurement_model, self.measurement_variance)?;
        Ok(())
    }

    /// Number of steps in the run.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Reads a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses the text format.
    pub fn parse(text: &str) -> Result<Self> {
        let lines = split_lines(text)?;
        let base = lines
            .iter()
            .find(|(_, k, _)| k == "scenario")
            .map(|(line, _, v)| scenarios::by_name(v).map_err(|e| Error::Config {
                line: *line,
                message: e.to_string(),
            }))
            .transpose()?
            .unwrap_or_else(scenarios::example1);
        let mut cfg = base;
        // The trajectory kind decides which parameters apply, so it goes first.
        for (line, _, value) in lines.iter().filter(|(_, k, _)| k == "trajectory.kind") {
            set_trajectory_kind(&mut cfg, value).map_err(|m| Error::Config { line: *line, message: m })?;
        }
        for (line, key, value) in &lines {
            if key == "scenario" || key == "trajectory.kind" {
                continue;
            }
            apply(&mut cfg, key, value).map_err(|message| Error::Config { line: *line, message })?;
        }
        Ok(cfg)
    }

    /// Serialises every field; `parse(to_text())` restores the configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("name", self.name.clone());
        put("duration", f(self.duration));
        put("dt", f(self.dt));
        put("seed", self.seed.to_string());
        let g = &self.gains;
        for (k, v) in [
            ("kx", g.kx),
            ("kv", g.kv),
            ("ki", g.ki),
            ("sigma", g.sigma),
            ("kr", g.kr),
            ("komega", g.komega),
            ("ki_att", g.ki_att),
            ("c1", g.c1),
            ("c2", g.c2),
            ("psi1", g.psi1),
        ] {
            put(&format!("gains.{k}"), f(v));
        }
        put("controller.h_omega", f(self.h_omega));
        let p = &self.params;
        put("params.mass", f(p.mass));
        put("params.inertia", list(p.inertia.transpose().as_slice()));
        put("params.gravity", f(p.gravity));
        put("params.force_disturbance", vec3(&p.force_disturbance));
        put("params.moment_disturbance", vec3(&p.moment_disturbance));
        put("params.arm_length", f(p.arm_length));
        put("trajectory.kind", self.trajectory.kind().to_string());
        match &self.trajectory {
            BuiltinTrajectory::Hover { position } => put("trajectory.position", vec3(position)),
            BuiltinTrajectory::Lissajous { altitude } => put("trajectory.altitude", f(*altitude)),
            BuiltinTrajectory::EllipticHelix { speed, a, b, w } => {
                put("trajectory.speed", f(*speed));
                put("trajectory.a", f(*a));
                put("trajectory.b", f(*b));
                put("trajectory.w", f(*w));
            }
        }
        put("measurement.model", self.measurement_model.clone());
        put("noise.r", f(self.measurement_variance));
        put("noise.q", f(self.process_noise));
        put("noise.sensor_scale", f(self.sensor_scale));
        put("noise.truth_q", f(self.truth_process_noise));
        for (prefix, st) in [("truth", &self.initial_truth), ("estimate", &self.initial_estimate)] {
            put(&format!("{prefix}.position"), vec3(&st.quad.position));
            put(&format!("{prefix}.velocity"), vec3(&st.quad.velocity));
            put(&format!("{prefix}.attitude"), list(&st.quad.attitude.to_row_major()));
            put(&format!("{prefix}.angular_velocity"), vec3(&st.quad.angular_velocity));
            put(&format!("{prefix}.position_integral"), vec3(&st.position_integral));
            put(&format!("{prefix}.attitude_integral"), vec3(&st.attitude_integral));
        }
        put("estimate.p0", list(&self.p0_diag));
        put(
            "filter.feedback",
            match self.feedback {
                Feedback::Estimate => "estimate",
                Feedback::Truth => "truth",
            }
            .into(),
        );
        put(
            "filter.jacobian",
            match self.jacobian {
                JacobianSource::Analytic => "analytic",
                JacobianSource::FiniteDifference => "finite-difference",
            }
            .into(),
        );
        put(
            "filter.transition",
            match self.transition {
                Transition::FirstOrder => "first-order",
                Transition::ExactExpm => "exact-expm",
            }
            .into(),
        );
        let m = &self.metrics;
        put("metrics.window_start", f(m.window_start));
        put("metrics.window_end", f(m.window_end));
        put("metrics.convergence_threshold", f(m.convergence_threshold));
        put("metrics.settle_time", f(m.settle_time));
        let t = &self.thresholds;
        for (k, v) in [
            ("convergence_time_max", t.convergence_time_max),
            ("position_rmse_max", t.position_rmse_max),
            ("velocity_rmse_max", t.velocity_rmse_max),
            ("tracking_error_max", t.tracking_error_max),
        ] {
            put(&format!("acceptance.{k}"), v.map_or("none".to_string(), f));
        }
        put("output.jacobian_deviation", self.jacobian_deviation.to_string());
        put(
            "output.path",
            self.output.as_ref().map_or(String::new(), |p| p.display().to_string()),
        );
        s
    }
}

fn f(v: f64) -> String {
    format!("{v:?}")
}

fn vec3(v: &Vec3) -> String {
    list(v.as_slice())
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(", ")
}

/// `(line, key, value)` for every non-empty, non-comment line.
fn split_lines(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = k.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
            return Err(Error::Config {
                line,
                message: format!("malformed key `{key}`"),
            });
        }
        out.push((line, key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

type Apply = std::result::Result<(), String>;

fn num(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("expected a number, got `{v}`"))
}

fn nums<const N: usize>(v: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got {}", parts.len()));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = num(p)?;
    }
    Ok(out)
}

fn v3(v: &str) -> std::result::Result<Vec3, String> {
    Ok(Vec3::from(nums::<3>(v)?))
}

fn rotation(v: &str) -> std::result::Result<RotationMatrix, String> {
    RotationMatrix::from_row_major(&nums::<9>(v)?).map_err(|e| e.to_string())
}

fn set_trajectory_kind(cfg: &mut ScenarioConfig, kind: &str) -> Apply {
    if kind == cfg.trajectory.kind() {
        return Ok(());
    }
    cfg.trajectory = match kind {
        "hover" => BuiltinTrajectory::Hover { position: Vec3::zeros() },
        "lissajous" => BuiltinTrajectory::Lissajous { altitude: -0.5 },
        "helix" => BuiltinTrajectory::EllipticHelix {
            speed: 0.4,
            a: 0.4,
            b: 0.6,
            w: std::f64::consts::PI,
        },
        other => return Err(format!("unknown trajectory kind `{other}`")),
    };
    Ok(())
}

fn state_field(st: &mut FullState, field: &str, value: &str) -> Option<Apply> {
    let r = (|| -> Apply {
        match field {
            "position" => st.quad.position = v3(value)?,
            "velocity" => st.quad.velocity = v3(value)?,
            "attitude" => st.quad.attitude = rotation(value)?,
            "angular_velocity" => st.quad.angular_velocity = v3(value)?,
            "position_integral" => st.position_integral = v3(value)?,
            "attitude_integral" => st.attitude_integral = v3(value)?,
            _ => return Err(String::new()),
        }
        Ok(())
    })();
    match r {
        Err(e) if e.is_empty() => None,
        other => Some(other),
    }
}

fn apply(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Apply {
    let unknown = || format!("unknown key `{key}`");
    let (section, field) = key.split_once('.').unwrap_or(("", key));
    match (section, field) {
        ("", "name") => cfg.name = value.to_string(),
        ("", "duration") => cfg.duration = num(value)?,
        ("", "dt") => cfg.dt = num(value)?,
        ("", "seed") => cfg.seed = value.parse().map_err(|_| format!("expected an integer, got `{value}`"))?,
        ("gains", k) => {
            let g = &mut cfg.gains;
            let slot = match k {
                "kx" => &mut g.kx,
                "kv" => &mut g.kv,
                "ki" => &mut g.ki,
                "sigma" => &mut g.sigma,
                "kr" => &mut g.kr,
                "komega" => &mut g.komega,
                "ki_att" => &mut g.ki_att,
                "c1" => &mut g.c1,
                "c2" => &mut g.c2,
                "psi1" => &mut g.psi1,
                _ => return Err(unknown()),
            };
            *slot = num(value)?;
        }
        ("controller", "h_omega") => cfg.h_omega = num(value)?,
        ("params", k) => {
            let p = &mut cfg.params;
            match k {
                "mass" => p.mass = num(value)?,
                "gravity" => p.gravity = num(value)?,
                "arm_length" => p.arm_length = num(value)?,
                "force_disturbance" => p.force_disturbance = v3(value)?,
                "moment_disturbance" => p.moment_disturbance = v3(value)?,
                "inertia" => {
                    p.inertia = match value.split(',').count() {
                        3 => Mat3::from_diagonal(&v3(value)?),
                        _ => Mat3::from_row_slice(&nums::<9>(value)?),
                    }
                }
                _ => return Err(unknown()),
            }
        }
        ("trajectory", k) => match (&mut cfg.trajectory, k) {
            (BuiltinTrajectory::Hover { position }, "position") => *position = v3(value)?,
            (BuiltinTrajectory::Lissajous { altitude }, "altitude") => *altitude = num(value)?,
            (BuiltinTrajectory::EllipticHelix { speed, .. }, "speed") => *speed = num(value)?,
            (BuiltinTrajectory::EllipticHelix { a, .. }, "a") => *a = num(value)?,
            (BuiltinTrajectory::EllipticHelix { b, .. }, "b") => *b = num(value)?,
            (BuiltinTrajectory::EllipticHelix { w, .. }, "w") => *w = num(value)?,
            _ => return Err(format!("key `{key}` does not apply to trajectory kind `{}`", cfg.trajectory.kind())),
        },
        ("measurement", "model") => cfg.measurement_model = value.to_string(),
        ("noise", k) => {
            let slot = match k {
                "r" => &mut cfg.measurement_variance,
                "q" => &mut cfg.process_noise,
                "sensor_scale" => &mut cfg.sensor_scale,
                "truth_q" => &mut cfg.truth_process_noise,
                _ => return Err(unknown()),
            };
            *slot = num(value)?;
        }
        ("truth", k) => return state_field(&mut cfg.initial_truth, k, value).unwrap_or_else(|| Err(unknown())),
        ("estimate", "p0") => cfg.p0_diag = nums::<6>(value)?,
        ("estimate", k) => return state_field(&mut cfg.initial_estimate, k, value).unwrap_or_else(|| Err(unknown())),
        ("filter", "feedback") => {
            cfg.feedback = match value {
                "estimate" => Feedback::Estimate,
                "truth" => Feedback::Truth,
                _ => return Err(format!("filter.feedback must be `estimate` or `truth`, got `{value}`")),
            }
        }
        ("filter", "jacobian") => {
            cfg.jacobian = match value {
                "analytic" => JacobianSource::Analytic,
                "finite-difference" => JacobianSource::FiniteDifference,
                _ => return Err(format!("filter.jacobian must be `analytic` or `finite-difference`, got `{value}`")),
            }
        }
        ("filter", "transition") => {
            cfg.transition = match value {
                "first-order" => Transition::FirstOrder,
                "exact-expm" => Transition::ExactExpm,
                _ => return Err(format!("filter.transition must be `first-order` or `exact-expm`, got `{value}`")),
            }
        }
        ("metrics", k) => {
            let m = &mut cfg.metrics;
            let slot = match k {
                "window_start" => &mut m.window_start,
                "window_end" => &mut m.window_end,
                "convergence_threshold" => &mut m.convergence_threshold,
                "settle_time" => &mut m.settle_time,
                _ => return Err(unknown()),
            };
            *slot = num(value)?;
        }
        ("acceptance", k) => {
            let t = &mut cfg.thresholds;
            let slot = match k {
                "convergence_time_max" => &mut t.convergence_time_max,
                "position_rmse_max" => &mut t.position_rmse_max,
                "velocity_rmse_max" => &mut t.velocity_rmse_max,
                "tracking_error_max" => &mut t.tracking_error_max,
                _ => return Err(unknown()),
            };
            *slot = if value == "none" { None } else { Some(num(value)?) };
        }
        ("output", "path") => cfg.output = (!value.is_empty()).then(|| PathBuf::from(value)),
        ("output", "jacobian_deviation") => {
            cfg.jacobian_deviation = value.parse().map_err(|_| format!("expected true or false, got `{value}`"))?
        }
        _ => return Err(unknown()),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_of_every_scenario() {
        for name in scenarios::NAMES {
            let cfg = scenarios::by_name(name).unwrap();
            assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg, "{name}");
        }
    }

    #[test]
    fn round_trip_with_optional_fields() {
        let mut cfg = scenarios::example2();
        cfg.thresholds.velocity_rmse_max = Some(0.25);
        cfg.output = Some(PathBuf::from("/tmp/out.csv"));
        cfg.trajectory = BuiltinTrajectory::Hover {
            position: Vec3::new(0.1, 0.2, -1.0 / 3.0),
        };
        cfg.feedback = Feedback::Truth;
        cfg.transition = Transition::ExactExpm;
        assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn overrides_apply_on_top_of_scenario() {
        let cfg = ScenarioConfig::parse(
            "# comment\nscenario = example2\n\ngains.kx = 5.5   # trailing\nparams.inertia = 1, 2, 3\n",
        )
        .unwrap();
        assert_eq!(cfg.name, "example2");
        assert_eq!(cfg.gains.kx, 5.5);
        assert_eq!(cfg.params.inertia, Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 3.0)));
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ScenarioConfig::parse("dt = 0.01\ngains.kq = 3\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("gains.kq"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(ScenarioConfig::parse("dt 0.01"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(ScenarioConfig::parse("dt = fast"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(
            ScenarioConfig::parse("truth.position = 1, 2"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(ScenarioConfig::parse("scenario = nowhere"), Err(Error::Config { .. })));
        assert!(matches!(
            ScenarioConfig::parse("trajectory.kind = lissajous\ntrajectory.w = 2"),
            Err(Error::Config { line: 2, .. })
        ));
    }

    #[test]
    fn validation() {
        let mut cfg = scenarios::example1();
        cfg.validate().unwrap();
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
        cfg = scenarios::example1();
        cfg.measurement_model = "sonar".into();
        assert!(cfg.validate().is_err());
    }
}
