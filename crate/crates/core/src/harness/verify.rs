//! Analytic-vs-finite-difference Jacobian sweep along a closed-loop
//! trajectory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controller::GeometricController;
use crate::harness::config::ScenarioConfig;
use crate::harness::run::truth_trajectory;
use crate::linearization::{
    default_block_tolerance, near_saturation_boundary, ClosedLoop, DeviationRecord, JacobianComparison,
    DEFAULT_FD_STEP, FULL_MATRIX_TOLERANCE,
};
use crate::{Result, Vec18};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub samples: usize,
    pub seed: u64,
    /// Half-width of the uniform perturbation applied to each trajectory state.
    pub perturbation: f64,
    pub fd_step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            samples: 120,
            seed: 7,
            perturbation: 0.05,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSample {
    pub state_id: usize,
    pub t: f64,
    pub comparison: JacobianComparison,
}

#[derive(Debug, Clone)]
pub struct JacobianSweep {
    pub samples: Vec<SweepSample>,
    pub deviations: Vec<DeviationRecord>,
    pub max_full_error: f64,
    /// Largest block error per block over all samples.
    pub max_block_errors: [[f64; 6]; 6],
    /// Candidates dropped for sitting on the saturation boundary or being
    /// degenerate.
    pub skipped: usize,
}

impl JacobianSweep {
    pub fn passed(&self) -> bool {
        self.deviations.is_empty() && self.max_full_error <= FULL_MATRIX_TOLERANCE
    }
}

/// Compares the analytic and FD Jacobians at `sweep.samples` perturbed states
/// taken evenly along the noise-free, truth-feedback run of `cfg`.
pub fn jacobian_sweep(cfg: &ScenarioConfig, sweep: &SweepConfig) -> Result<JacobianSweep> {
    let path = truth_trajectory(cfg)?;
    let mut controller = GeometricController::new(cfg.gains, cfg.params.clone());
    controller.h_omega = cfg.h_omega;
    let closed_loop = ClosedLoop::new(&controller, &cfg.params, &cfg.trajectory);
    let mut rng = ChaCha8Rng::seed_from_u64(sweep.seed);
    let stride = (path.len() / sweep.samples.max(1)).max(1);
    let mut out = JacobianSweep {
        samples: Vec::new(),
        deviations: Vec::new(),
        max_full_error: 0.0,
        max_block_errors: [[0.0; 6]; 6],
        skipped: 0,
    };
    let mut k = 0;
    while out.samples.len() < sweep.samples {
        let (t, base) = path[(k * stride) % path.len()];
        k += 1;
        let delta = Vec18::from_fn(|_, _| rng.random_range(-sweep.perturbation..=sweep.perturbation));
        let s = base.retract(&delta);
        if near_saturation_boundary(&s, cfg.gains.sigma, 10.0 * sweep.fd_step) {
            out.skipped += 1;
            continue;
        }
        let (a, fd) = match (closed_loop.linearize(t, &s), closed_loop.fd_jacobian(t, &s, sweep.fd_step)) {
            (Ok(a), Ok(fd)) => (a.a, fd),
            _ => {
                out.skipped += 1;
                continue;
            }
        };
        let comparison = JacobianComparison::new(&a, &fd);
        let state_id = out.samples.len();
        out.deviations.extend(comparison.deviations(state_id, default_block_tolerance));
        out.max_full_error = out.max_full_error.max(comparison.full_error);
        for i in 0..6 {
            for j in 0..6 {
                out.max_block_errors[i][j] = out.max_block_errors[i][j].max(comparison.block_errors[i][j]);
            }
        }
        out.samples.push(SweepSample { state_id, t, comparison });
    }
    Ok(out)
}
