//! Alternating projected-gradient updates of the RHS amplitudes and the
//! analog phases with adaptive step sizes.
//!
//! Steps are taken along the gradient divided by its largest entry, so `ε`
//! is the largest amplitude change and `γ` roughly the largest phase change
//! (radians) of a trial point, independent of the objective's scale.

use crate::gradients::{grad_amp_with, grad_fa_with};
use crate::metrics::{Evaluation, Problem};
use crate::model::{OptimizerParams, TriHybridBeamformer};
use crate::linalg::{RMatrix, C64};

use super::projection::{project_amplitude, project_unit_modulus_or};
use super::Variant;

/// Step sizes `ε` (amplitudes) and `γ` (phases), carried across calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub amplitude: f64,
    pub phase: f64,
}

impl StepSizes {
    pub fn from_params(params: &OptimizerParams) -> Self {
        Self { amplitude: params.step_init_fe, phase: params.step_init_fa }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct JointOutcome {
    pub amplitude_steps: usize,
    pub phase_steps: usize,
}

/// Backtracks on `step` until `propose(step)` does not increase the
/// objective. Doubles the step on first-try success, leaves the iterate
/// alone on underflow.
fn adaptive<F>(step: &mut f64, f0: f64, params: &OptimizerParams, mut propose: F) -> Option<TriHybridBeamformer>
where
    F: FnMut(f64) -> (TriHybridBeamformer, f64),
{
    let mut first = true;
    let mut s = *step;
    while s >= params.step_min {
        let (cand, f) = propose(s);
        if f <= f0 {
            *step = if first { (2.0 * s).min(params.step_max) } else { s };
            return Some(cand);
        }
        first = false;
        s *= 0.5;
    }
    *step = params.step_min;
    None
}

pub fn optimize_joint(
    problem: &Problem,
    bf: &mut TriHybridBeamformer,
    mu: f64,
    params: &OptimizerParams,
    steps: &mut StepSizes,
    variant: &Variant,
) -> JointOutcome {
    let mut out = JointOutcome::default();
    for _ in 0..params.joint_inner {
        let mut moved = false;
        if !variant.freeze_amplitudes {
            let proj = problem.projections(bf);
            let eval = Evaluation::new(problem, &proj, bf);
            let f0 = eval.objective(mu);
            let mut g = grad_amp_with(problem, bf, &eval, mu);
            // feed attenuation makes raw gradients decay along the RHS;
            // step in units of radiated field amplitude instead
            for (v, c) in g.data.iter_mut().zip(&bf.rhs_phase_coeffs.data) {
                let r = c.norm();
                *v = if r > 0.0 { *v / r } else { 0.0 };
            }
            let scale = g.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                let base = bf.rhs_amplitudes.clone();
                let accepted = adaptive(&mut steps.amplitude, f0, params, |eps| {
                    let raw = RMatrix {
                        rows: base.rows,
                        cols: base.cols,
                        data: base.data.iter().zip(&g.data).map(|(a, d)| a - eps * d / scale).collect(),
                    };
                    let mut cand = bf.clone();
                    cand.rhs_amplitudes = project_amplitude(&raw);
                    let f = problem.objective(&cand, mu);
                    (cand, f)
                });
                if let Some(c) = accepted {
                    moved |= c.rhs_amplitudes != bf.rhs_amplitudes;
                    *bf = c;
                    out.amplitude_steps += 1;
                }
            }
        }
        if !variant.freeze_phases {
            let proj = problem.projections(bf);
            let eval = Evaluation::new(problem, &proj, bf);
            let f0 = eval.objective(mu);
            let grad = grad_fa_with(problem, bf, &proj, &eval, mu);
            let k = bf.num_subarrays();
            let g: Vec<C64> = (0..k).map(|i| grad[(i, bf.chain_of(i))]).collect();
            let scale = g.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            if scale > 0.0 {
                let phi: Vec<C64> = (0..k).map(|i| bf.analog_entry(i)).collect();
                let accepted = adaptive(&mut steps.phase, f0, params, |gamma| {
                    let raw: Vec<C64> = phi.iter().zip(&g).map(|(p, d)| p - gamma * d / scale).collect();
                    let projected = project_unit_modulus_or(&raw, &phi);
                    let mut cand = bf.clone();
                    cand.analog_phases = projected.iter().map(|z| z.arg()).collect();
                    let f = Evaluation::new(problem, &proj, &cand).objective(mu);
                    (cand, f)
                });
                if let Some(c) = accepted {
                    moved |= c.analog_phases != bf.analog_phases;
                    *bf = c;
                    out.phase_steps += 1;
                }
            }
        }
        if !moved {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ChannelParams;
    use crate::model::SystemConfig;
    use crate::scenario::random_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy(seed: u64) -> (Problem, TriHybridBeamformer) {
        let cfg = SystemConfig {
            num_users: 2,
            ps_per_chain: 2,
            elements_per_rhs: 4,
            num_sense_dirs: 2,
            rate_threshold: 2.0,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (scn, mut bf) = random_instance(&cfg, &ChannelParams::default(), &mut rng);
        bf.rhs_amplitudes.data.iter_mut().for_each(|a| *a = 0.5);
        (Problem::new(&cfg, &scn).unwrap(), bf)
    }

    #[test]
    fn objective_never_increases_and_iterates_stay_feasible() {
        let mut params = OptimizerParams::default();
        params.joint_inner = 1;
        for seed in 0..20 {
            let (problem, mut bf) = toy(seed);
            let mut steps = StepSizes::from_params(&params);
            let mut prev = problem.objective(&bf, 10.0);
            for _ in 0..10 {
                optimize_joint(&problem, &mut bf, 10.0, &params, &mut steps, &Variant::default());
                let f = problem.objective(&bf, 10.0);
                assert!(f <= prev, "seed {seed}: {f} > {prev}");
                prev = f;
                assert!(bf.rhs_amplitudes.data.iter().all(|a| (0.0..=1.0).contains(a)));
                for i in 0..bf.num_subarrays() {
                    assert!((bf.analog_entry(i).norm() - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_gradient_leaves_iterates_unchanged() {
        let (mut problem, bf) = toy(1);
        problem.rate_threshold = 0.0;
        problem.desired_gains = problem.evaluate(&bf).gains;
        let mut moved = bf.clone();
        let params = OptimizerParams::default();
        let mut steps = StepSizes::from_params(&params);
        optimize_joint(&problem, &mut moved, 10.0, &params, &mut steps, &Variant::default());
        assert_eq!(moved, bf);
    }

    #[test]
    fn frozen_blocks_do_not_move() {
        let (problem, bf) = toy(2);
        let params = OptimizerParams::default();
        let mut steps = StepSizes::from_params(&params);
        let mut a = bf.clone();
        let v = Variant { freeze_phases: true, ..Variant::default() };
        optimize_joint(&problem, &mut a, 10.0, &params, &mut steps, &v);
        assert_eq!(a.analog_phases, bf.analog_phases);
        let mut b = bf.clone();
        let v = Variant { freeze_amplitudes: true, ..Variant::default() };
        optimize_joint(&problem, &mut b, 10.0, &params, &mut steps, &v);
        assert_eq!(b.rhs_amplitudes, bf.rhs_amplitudes);
    }
}
