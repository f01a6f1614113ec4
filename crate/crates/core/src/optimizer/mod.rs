//! Outer loop with the adaptive penalty, SQP on the digital beamformer and the
//! joint projected-gradient loop on phases and amplitudes.

mod joint;
mod projection;
mod sqp;

pub use joint::{optimize_joint, JointOutcome, StepSizes};
pub use projection::{project_amplitude, project_unit_modulus, project_unit_modulus_or};
pub use sqp::{optimize_digital, optimize_digital_warm, sqp_direction, DigitalOutcome, SqpState};

use crate::error::Result;
use crate::metrics::Problem;
use crate::model::{
    OptimizationResult, OptimizerParams, PenaltyState, Scenario, SystemConfig, TraceRecord,
    TriHybridBeamformer,
};

/// Which blocks the optimizer may move. The default optimizes everything
/// with the adaptive penalty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Variant {
    pub freeze_phases: bool,
    pub freeze_amplitudes: bool,
    pub fixed_mu: bool,
}

pub fn update_penalty(state: PenaltyState, min_rate: f64, rate_threshold: f64) -> PenaltyState {
    let mu = if min_rate < rate_threshold {
        (state.rho * state.mu).min(state.mu_max)
    } else {
        (state.mu / state.rho).max(state.mu_min)
    };
    PenaltyState { mu, ..state }
}

/// Full tri-hybrid optimization from `init`.
pub fn run(
    scn: &Scenario,
    cfg: &SystemConfig,
    params: &OptimizerParams,
    init: &TriHybridBeamformer,
) -> Result<OptimizationResult> {
    let problem = Problem::new(cfg, scn)?;
    run_problem(&problem, params, init, &Variant::default())
}

pub fn run_problem(
    problem: &Problem,
    params: &OptimizerParams,
    init: &TriHybridBeamformer,
    variant: &Variant,
) -> Result<OptimizationResult> {
    params.validate()?;
    let target = problem.rate_threshold;
    let shifted = Problem { rate_threshold: target * (1.0 + params.rate_margin), ..problem.clone() };
    let problem = &shifted;
    let mut bf = init.clone();
    bf.repair_power(problem.power_budget);
    let mut penalty = params.penalty;
    let mut steps = StepSizes::from_params(params);
    let mut sqp_state = None;
    let mut eval = problem.evaluate(&bf);
    let mut prev_sense = eval.sensing_error();
    let mut prev_obj = eval.objective(penalty.mu);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut failures = 0;
    let mut iterations = 0;

    for t in 0..params.max_outer {
        iterations = t + 1;
        if !variant.fixed_mu {
            penalty = update_penalty(penalty, eval.min_rate(), target);
        }
        let mu = penalty.mu;
        let digital = optimize_digital_warm(problem, &mut bf, mu, params, &mut sqp_state)?;
        if digital.line_search_failed {
            failures += 1;
            log::debug!("outer {t}: line search failed");
        }
        optimize_joint(problem, &mut bf, mu, params, &mut steps, variant);
        eval = problem.evaluate(&bf);
        let sense = eval.sensing_error();
        let record = TraceRecord {
            sensing_error: sense,
            min_rate: eval.min_rate(),
            mu,
            objective: eval.objective(mu),
        };
        log::trace!("outer {t}: {record:?}");
        // the penalized objective must have settled too, otherwise a stall
        // of J_sense while rates are still being repaired ends the run
        let settled = (record.objective - prev_obj).abs() <= params.sense_tol * prev_obj.abs();
        if eval.min_rate() > target && (sense - prev_sense).abs() < params.sense_tol && settled {
            converged = true;
            trace.push(record);
            break;
        }
        prev_sense = sense;
        prev_obj = record.objective;
        trace.push(record);
    }
    Ok(OptimizationResult {
        beamformer: bf,
        trace,
        converged,
        iterations,
        line_search_failures: failures,
    })
}
