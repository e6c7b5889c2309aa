//! Scenarios, configuration, simulation loop, telemetry and metrics.

pub mod config;
pub mod metrics;
pub mod run;
pub mod scenarios;
pub mod telemetry;
pub mod verify;

pub use config::{Feedback, MetricsConfig, ScenarioConfig, Thresholds};
pub use metrics::{BlockErrors, Metrics};
pub use run::{run, truth_trajectory, Abort, RunOutput, RunStatus};
pub use telemetry::{read_csv, read_csv_file, write_csv, write_csv_file, TelemetryRecord};
pub use verify::{jacobian_sweep, JacobianSweep, SweepConfig};
