//! SQP update of the digital beamformer: closed-form KKT step of the
//! power-constrained QP, Armijo backtracking and damped BFGS.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gradients::{grad_fd_with, pack_digital, real_gradient, unpack_digital};
use crate::metrics::{Evaluation, Problem};
use crate::model::{OptimizerParams, TriHybridBeamformer};

#[derive(Debug, Clone)]
pub struct SqpState {
    pub x: Vec<f64>,
    /// Hessian approximation, symmetric positive definite.
    pub b: DMatrix<f64>,
    /// Last accepted step length.
    pub alpha: f64,
    updates: usize,
}

impl SqpState {
    pub fn new(x: Vec<f64>, scale: f64) -> Self {
        let n = x.len();
        Self { x, b: DMatrix::identity(n, n) * scale, alpha: 1.0, updates: 0 }
    }

    /// Powell-damped BFGS update; skipped when the pair carries no
    /// curvature information.
    pub fn bfgs_update(&mut self, s: &[f64], y: &[f64]) {
        let s = DVector::from_column_slice(s);
        let mut y = DVector::from_column_slice(y);
        let bs = &self.b * &s;
        let sbs = s.dot(&bs);
        if sbs <= 1e-300 {
            return;
        }
        let sy = s.dot(&y);
        if sy < 0.2 * sbs {
            let theta = 0.8 * sbs / (sbs - sy);
            y = &y * theta + &bs * (1.0 - theta);
        }
        let sy = s.dot(&y);
        if sy <= 1e-10 * s.norm() * y.norm() {
            return;
        }
        if self.updates == 0 {
            // rescale the initial guess to the observed curvature first
            let n = self.b.nrows();
            self.b = DMatrix::identity(n, n) * (y.norm_squared() / sy);
            self.updates = 1;
            let bs = &self.b * &s;
            let sbs = s.dot(&bs);
            self.b += &y * y.transpose() / sy - &bs * bs.transpose() / sbs;
            return;
        }
        self.updates += 1;
        self.b += &y * y.transpose() / sy - &bs * bs.transpose() / sbs;
        self.b = (&self.b + self.b.transpose()) * 0.5;
    }
}

/// Solve the QP `min ½dᵀBd + ∇Fᵀd  s.t.  P + ∇Pᵀd ≤ 0`.
///
/// With the constraint active the KKT system gives
/// `λ* = (P − ∇PᵀB⁻¹∇F) / (∇PᵀB⁻¹∇P)`; a nonpositive value means the
/// unconstrained step already satisfies the linearised constraint, so
/// `λ* = 0`. Returns `(d, λ*)` with `d = −B⁻¹(∇F + λ*∇P)`.
pub fn sqp_direction(
    state: &SqpState,
    grad_f: &[f64],
    grad_p: &[f64],
    p_val: f64,
) -> Result<(Vec<f64>, f64)> {
    let chol = state.b.clone().cholesky().ok_or(Error::SingularHessian)?;
    let gf = DVector::from_column_slice(grad_f);
    let gp = DVector::from_column_slice(grad_p);
    let u = chol.solve(&gf);
    let v = chol.solve(&gp);
    let curv = gp.dot(&v);
    if !u.iter().all(|x| x.is_finite()) {
        return Err(Error::SingularHessian);
    }
    let mut lambda = 0.0;
    if curv > 1e-14 * (1.0 + gp.norm_squared()) {
        lambda = ((p_val - gp.dot(&u)) / curv).max(0.0);
    }
    let d = -(u + v * lambda);
    Ok((d.iter().copied().collect(), lambda))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DigitalOutcome {
    pub iterations: usize,
    pub accepted: usize,
    pub line_search_failed: bool,
}

fn power_value(x: &[f64], n: f64, p_max: f64) -> f64 {
    n * x.iter().map(|v| v * v).sum::<f64>() - p_max
}

/// Runs at most `params.sqp_inner` SQP iterations on `F_D` with the
/// analog phases and amplitudes held fixed.
pub fn optimize_digital(
    problem: &Problem,
    bf: &mut TriHybridBeamformer,
    mu: f64,
    params: &OptimizerParams,
) -> Result<DigitalOutcome> {
    optimize_digital_warm(problem, bf, mu, params, &mut None)
}

/// As [`optimize_digital`], reusing the Hessian approximation in `warm`
/// from a previous call and leaving the final one there.
pub fn optimize_digital_warm(
    problem: &Problem,
    bf: &mut TriHybridBeamformer,
    mu: f64,
    params: &OptimizerParams,
    warm: &mut Option<SqpState>,
) -> Result<DigitalOutcome> {
    let m = bf.num_chains();
    let n = bf.ps_per_chain as f64;
    let p_max = problem.power_budget;
    bf.repair_power(p_max);

    let proj = problem.projections(bf);
    let mut out = DigitalOutcome::default();
    let eval = Evaluation::new(problem, &proj, bf);
    let mut f = eval.objective(mu);
    let mut g = real_gradient(&grad_fd_with(problem, bf, &proj, &eval, mu));
    let x0 = pack_digital(&bf.digital);
    let gnorm = norm(&g);
    let xnorm = norm(&x0).max(1e-3);
    let mut state = match warm.take() {
        Some(mut st) if st.x.len() == x0.len() => {
            st.x = x0;
            st
        }
        _ => SqpState::new(x0, (gnorm / (0.1 * xnorm)).max(1e-12)),
    };

    for _ in 0..params.sqp_inner {
        if norm(&g) == 0.0 {
            break;
        }
        out.iterations += 1;
        let grad_p: Vec<f64> = state.x.iter().map(|v| 2.0 * n * v).collect();
        let p_val = power_value(&state.x, n, p_max);
        let (mut d, mut lambda) = match sqp_direction(&state, &g, &grad_p, p_val) {
            Ok(v) => v,
            Err(Error::SingularHessian) => {
                // rounding drift in the accumulated updates; restart
                let scale = (norm(&g) / (0.1 * norm(&state.x).max(1e-3))).max(1e-12);
                state = SqpState::new(std::mem::take(&mut state.x), scale);
                sqp_direction(&state, &g, &grad_p, p_val)?
            }
            Err(e) => return Err(e),
        };
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            // the multiplier can tilt d uphill; repair handles feasibility
            let (d0, _) = sqp_direction(&state, &g, &vec![0.0; g.len()], 0.0)?;
            d = d0;
            lambda = 0.0;
            slope = dot(&g, &d);
            if slope >= 0.0 {
                break;
            }
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=params.max_backtracks {
            let trial_x: Vec<f64> = state.x.iter().zip(&d).map(|(x, di)| x + alpha * di).collect();
            let mut trial = bf.clone();
            trial.digital = unpack_digital(&trial_x, m);
            trial.repair_power(p_max);
            let te = Evaluation::new(problem, &proj, &trial);
            let tf = te.objective(mu);
            if tf <= f + params.armijo_c1 * alpha * slope {
                accepted = Some((trial, te, tf));
                break;
            }
            alpha *= params.backtrack_ratio;
        }
        let Some((trial, te, tf)) = accepted else {
            out.line_search_failed = true;
            break;
        };

        let new_x = pack_digital(&trial.digital);
        let new_g = real_gradient(&grad_fd_with(problem, &trial, &proj, &te, mu));
        let new_gp: Vec<f64> = new_x.iter().map(|v| 2.0 * n * v).collect();
        let s: Vec<f64> = new_x.iter().zip(&state.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = (0..s.len())
            .map(|i| (new_g[i] + lambda * new_gp[i]) - (g[i] + lambda * grad_p[i]))
            .collect();
        state.bfgs_update(&s, &y);
        state.x = new_x;
        state.alpha = alpha;
        *bf = trial;
        f = tf;
        g = new_g;
        out.accepted += 1;
    }
    bf.repair_power(p_max);
    *warm = Some(state);
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
