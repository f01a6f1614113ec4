//! Closed-form Wirtinger gradients of the penalized objective with respect
//! to the digital beamformer, the analog phase shifters and the RHS
//! amplitudes, plus a central-difference referee.
//!
//! Conventions: complex gradients are `∂F/∂X*`. The gradient with respect
//! to the real coordinates `[Re X; Im X]` is `2·[Re; Im]` of it.

use crate::linalg::{CMatrix, RMatrix, C64};
use crate::metrics::{rate_weights, Evaluation, Problem, Projections};
use crate::model::TriHybridBeamformer;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub grad_fd: CMatrix,
    pub grad_fa: CMatrix,
    pub grad_fe_amp: RMatrix,
}

struct Weights {
    /// `2(G_p - b_p)`
    sense: Vec<f64>,
    /// see [`rate_weights`]
    rate: Vec<Vec<f64>>,
}

fn weights(problem: &Problem, eval: &Evaluation, mu: f64) -> Weights {
    Weights {
        sense: eval
            .gains
            .iter()
            .zip(&problem.desired_gains)
            .map(|(g, b)| 2.0 * (g - b))
            .collect(),
        rate: rate_weights(eval, mu),
    }
}

/// `Σ_{i ∈ chain r} e[i] φ_i` for every chain `r`.
fn chain_sums(e: &[C64], bf: &TriHybridBeamformer) -> Vec<C64> {
    let mut t = vec![C64::new(0.0, 0.0); bf.num_chains()];
    for (i, ei) in e.iter().enumerate() {
        t[bf.chain_of(i)] += ei * bf.analog_entry(i);
    }
    t
}

fn digital_from(
    bf: &TriHybridBeamformer,
    proj: &Projections,
    eval: &Evaluation,
    w: &Weights,
) -> CMatrix {
    let m = bf.num_chains();
    let mut grad = CMatrix::zeros(m, m);
    for (p, e) in proj.sense.iter().enumerate() {
        if w.sense[p] == 0.0 {
            continue;
        }
        let t = chain_sums(e, bf);
        let coef = w.sense[p] * eval.sense_response[p];
        for r in 0..m {
            let v = coef * t[r].conj();
            for c in 0..m {
                grad[(r, c)] += v;
            }
        }
    }
    for (k, e) in proj.user.iter().enumerate() {
        if w.rate[k].iter().all(|&b| b == 0.0) {
            continue;
        }
        let t = chain_sums(e, bf);
        for c in 0..m {
            let coef = w.rate[k][c] * eval.user_response[k][c];
            for r in 0..m {
                grad[(r, c)] += coef * t[r].conj();
            }
        }
    }
    grad
}

fn analog_from(
    bf: &TriHybridBeamformer,
    proj: &Projections,
    eval: &Evaluation,
    w: &Weights,
) -> CMatrix {
    let m = bf.num_chains();
    let k = bf.num_subarrays();
    let mut grad = CMatrix::zeros(k, m);
    for i in 0..k {
        let r = bf.chain_of(i);
        let fd_row_sum: C64 = (0..m).map(|c| bf.digital[(r, c)]).sum();
        let mut acc = C64::new(0.0, 0.0);
        for (p, e) in proj.sense.iter().enumerate() {
            acc += w.sense[p] * eval.sense_response[p] * (e[i] * fd_row_sum).conj();
        }
        for (kk, e) in proj.user.iter().enumerate() {
            for c in 0..m {
                let b = w.rate[kk][c];
                if b != 0.0 {
                    acc += b * eval.user_response[kk][c] * (e[i] * bf.digital[(r, c)]).conj();
                }
            }
        }
        // entries outside the block-diagonal support stay exactly zero
        grad[(i, r)] = acc;
    }
    grad
}

fn amplitude_from(
    problem: &Problem,
    bf: &TriHybridBeamformer,
    eval: &Evaluation,
    w: &Weights,
) -> RMatrix {
    let k = bf.num_subarrays();
    let l = bf.elements_per_subarray();
    let m = bf.num_chains();
    let mut grad = RMatrix::zeros(k, l);
    for i in 0..k {
        let u = eval.ps_output[i];
        let sense_coef: Vec<C64> = eval
            .sense_response
            .iter()
            .zip(&w.sense)
            .map(|(y, a)| a * y.conj() * u)
            .collect();
        let user_coef: Vec<C64> = (0..problem.num_users())
            .map(|kk| {
                (0..m)
                    .map(|c| w.rate[kk][c] * eval.user_response[kk][c].conj() * eval.ps_streams[i][c])
                    .sum()
            })
            .collect();
        for e in 0..l {
            let idx = i * l + e;
            let mut acc = C64::new(0.0, 0.0);
            for (p, a) in problem.sense_steering.iter().enumerate() {
                acc += sense_coef[p] * a[idx].conj();
            }
            for (kk, h) in problem.channels.iter().enumerate() {
                acc += user_coef[kk] * h[idx].conj();
            }
            grad[(i, e)] = 2.0 * (bf.rhs_phase_coeffs[(i, e)] * acc).re;
        }
    }
    grad
}

/// `∂F/∂F_D*`, shape `M × M`.
pub fn grad_fd(problem: &Problem, bf: &TriHybridBeamformer, mu: f64) -> CMatrix {
    let proj = problem.projections(bf);
    let eval = Evaluation::new(problem, &proj, bf);
    digital_from(bf, &proj, &eval, &weights(problem, &eval, mu))
}

/// `∂F/∂F_A*` masked to the block-diagonal support, shape `NM × M`.
pub fn grad_fa(problem: &Problem, bf: &TriHybridBeamformer, mu: f64) -> CMatrix {
    let proj = problem.projections(bf);
    let eval = Evaluation::new(problem, &proj, bf);
    analog_from(bf, &proj, &eval, &weights(problem, &eval, mu))
}

/// `∂F/∂a_l^n`, shape `NM × L`.
pub fn grad_fe_amp(problem: &Problem, bf: &TriHybridBeamformer, mu: f64) -> RMatrix {
    let proj = problem.projections(bf);
    let eval = Evaluation::new(problem, &proj, bf);
    amplitude_from(problem, bf, &eval, &weights(problem, &eval, mu))
}

pub fn bundle(problem: &Problem, bf: &TriHybridBeamformer, mu: f64) -> GradientBundle {
    let proj = problem.projections(bf);
    let eval = Evaluation::new(problem, &proj, bf);
    let w = weights(problem, &eval, mu);
    GradientBundle {
        grad_fd: digital_from(bf, &proj, &eval, &w),
        grad_fa: analog_from(bf, &proj, &eval, &w),
        grad_fe_amp: amplitude_from(problem, bf, &eval, &w),
    }
}

/// Digital gradient reusing precomputed projections and evaluation.
pub(crate) fn grad_fd_with(
    problem: &Problem,
    bf: &TriHybridBeamformer,
    proj: &Projections,
    eval: &Evaluation,
    mu: f64,
) -> CMatrix {
    digital_from(bf, proj, eval, &weights(problem, eval, mu))
}

pub(crate) fn grad_fa_with(
    problem: &Problem,
    bf: &TriHybridBeamformer,
    proj: &Projections,
    eval: &Evaluation,
    mu: f64,
) -> CMatrix {
    analog_from(bf, proj, eval, &weights(problem, eval, mu))
}

pub(crate) fn grad_amp_with(
    problem: &Problem,
    bf: &TriHybridBeamformer,
    eval: &Evaluation,
    mu: f64,
) -> RMatrix {
    amplitude_from(problem, bf, eval, &weights(problem, eval, mu))
}

/// `dF/dψ_i = 2 Re{ j e^{jψ_i} conj(∂F/∂F_A*[i]) }`.
pub fn phase_gradient(bf: &TriHybridBeamformer, grad_fa: &CMatrix) -> Vec<f64> {
    (0..bf.num_subarrays())
        .map(|i| {
            let g = grad_fa[(i, bf.chain_of(i))];
            2.0 * (C64::new(0.0, 1.0) * bf.analog_entry(i) * g.conj()).re
        })
        .collect()
}

/// `x = [vec(Re F_D); vec(Im F_D)]` with column-major `vec`.
pub fn pack_digital(fd: &CMatrix) -> Vec<f64> {
    let n = fd.rows * fd.cols;
    let mut x = vec![0.0; 2 * n];
    for c in 0..fd.cols {
        for r in 0..fd.rows {
            let z = fd[(r, c)];
            x[c * fd.rows + r] = z.re;
            x[n + c * fd.rows + r] = z.im;
        }
    }
    x
}

pub fn unpack_digital(x: &[f64], m: usize) -> CMatrix {
    let n = m * m;
    CMatrix::from_fn(m, m, |r, c| C64::new(x[c * m + r], x[n + c * m + r]))
}

/// Real-coordinate gradient `2·[Re; Im]` of a Wirtinger gradient.
pub fn real_gradient(wirtinger: &CMatrix) -> Vec<f64> {
    pack_digital(wirtinger).into_iter().map(|v| 2.0 * v).collect()
}

/// Central-difference comparison. Coordinate `i` uses step
/// `step·(1 + |x_i|)`; the return value is
/// `max_i |analytic_i - fd_i| / (1 + |fd_i|)`.
pub fn finite_difference_check<F>(f: F, point: &[f64], analytic: &[f64], step: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert!(step > 0.0);
    assert_eq!(point.len(), analytic.len());
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let h = step * (1.0 + point[i].abs());
        x[i] = point[i] + h;
        let fp = f(&x);
        x[i] = point[i] - h;
        let fm = f(&x);
        x[i] = point[i];
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((analytic[i] - fd).abs() / (1.0 + fd.abs()));
    }
    worst
}

/// Central-difference gradients of the objective on each parameter block;
/// the independent referee for the closed forms above.
pub mod oracle {
    use super::*;

    pub fn digital(problem: &Problem, bf: &TriHybridBeamformer, mu: f64, step: f64) -> Vec<f64> {
        let m = bf.num_chains();
        let x0 = pack_digital(&bf.digital);
        let mut probe = bf.clone();
        central(&x0, step, |x| {
            probe.digital = unpack_digital(x, m);
            problem.objective(&probe, mu)
        })
    }

    pub fn phases(problem: &Problem, bf: &TriHybridBeamformer, mu: f64, step: f64) -> Vec<f64> {
        let mut probe = bf.clone();
        central(&bf.analog_phases, step, |x| {
            probe.analog_phases.copy_from_slice(x);
            problem.objective(&probe, mu)
        })
    }

    pub fn amplitudes(problem: &Problem, bf: &TriHybridBeamformer, mu: f64, step: f64) -> Vec<f64> {
        let mut probe = bf.clone();
        central(&bf.rhs_amplitudes.data, step, |x| {
            probe.rhs_amplitudes.data.copy_from_slice(x);
            problem.objective(&probe, mu)
        })
    }

    fn central(x0: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        let mut x = x0.to_vec();
        (0..x.len())
            .map(|i| {
                let h = step * (1.0 + x0[i].abs());
                x[i] = x0[i] + h;
                let fp = f(&x);
                x[i] = x0[i] - h;
                let fm = f(&x);
                x[i] = x0[i];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }
}

pub fn max_relative_error(analytic: &[f64], fd: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(fd)
        .map(|(a, f)| (a - f).abs() / (1.0 + f.abs()))
        .fold(0.0, f64::max)
}

/// Worst relative error of each analytic gradient against central
/// differences over a batch of random instances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GradientReport {
    pub instances: usize,
    pub digital: f64,
    pub phases: f64,
    pub amplitudes: f64,
}

impl GradientReport {
    pub fn worst(&self) -> f64 {
        self.digital.max(self.phases).max(self.amplitudes)
    }
}

/// Random feasible points of `cfg` with the rate threshold set just above
/// the best user, so every penalty term is active.
pub fn gradient_check(cfg: &crate::model::SystemConfig, seeds: &[u64], mu: f64) -> crate::error::Result<GradientReport> {
    use crate::array::ChannelParams;
    use crate::scenario::{random_instance, sub_rng};
    let mut report = GradientReport { instances: 0, digital: 0.0, phases: 0.0, amplitudes: 0.0 };
    for &seed in seeds {
        let mut c = cfg.clone();
        let (scn, bf) = random_instance(&c, &ChannelParams::default(), &mut sub_rng(seed, 0x67));
        let top = Problem::new(&c, &scn)?.evaluate(&bf).rates.iter().cloned().fold(0.0, f64::max);
        c.rate_threshold = top + 0.5;
        let problem = Problem::new(&c, &scn)?;
        let b = bundle(&problem, &bf, mu);
        let d = max_relative_error(&real_gradient(&b.grad_fd), &oracle::digital(&problem, &bf, mu, 1e-6));
        let p = max_relative_error(&phase_gradient(&bf, &b.grad_fa), &oracle::phases(&problem, &bf, mu, 1e-6));
        let a = max_relative_error(&b.grad_fe_amp.data, &oracle::amplitudes(&problem, &bf, mu, 1e-6));
        report.instances += 1;
        report.digital = report.digital.max(d);
        report.phases = report.phases.max(p);
        report.amplitudes = report.amplitudes.max(a);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ChannelParams;
    use crate::model::SystemConfig;
    use crate::scenario::random_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SystemConfig {
        SystemConfig {
            num_users: 2,
            ps_per_chain: 2,
            elements_per_rhs: 4,
            num_sense_dirs: 2,
            ..SystemConfig::default()
        }
    }

    /// Threshold just above the best user so every rate term is active.
    fn instance(seed: u64, active: bool) -> (Problem, TriHybridBeamformer) {
        let mut c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (scn, bf) = random_instance(&c, &ChannelParams::default(), &mut rng);
        let eval = Problem::new(&c, &scn).unwrap().evaluate(&bf);
        let top = eval.rates.iter().cloned().fold(0.0, f64::max);
        c.rate_threshold = if active { top + 0.5 } else { 0.0 };
        (Problem::new(&c, &scn).unwrap(), bf)
    }

    #[test]
    fn batch_check_passes_on_small_dims() {
        let r = gradient_check(&cfg(), &[0, 1, 2], 4.0).unwrap();
        assert_eq!(r.instances, 3);
        assert!(r.worst() <= 1e-6, "{r:?}");
    }

    #[test]
    fn quadratic_field_check_is_exact() {
        let x = [0.3, -1.2, 4.0, 2.5];
        let grad: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let err = finite_difference_check(|v| v.iter().map(|a| a * a).sum(), &x, &grad, 1e-6);
        assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn digital_gradient_matches_central_differences() {
        for seed in 0..5 {
            for active in [true, false] {
                let (problem, bf) = instance(seed, active);
                let mu = 7.0;
                let g = real_gradient(&grad_fd(&problem, &bf, mu));
                let fd = oracle::digital(&problem, &bf, mu, 1e-6);
                let err = max_relative_error(&g, &fd);
                assert!(err <= 1e-6, "seed {seed}: {err}");
            }
        }
    }

    #[test]
    fn phase_gradient_matches_central_differences() {
        for seed in 0..5 {
            let (problem, bf) = instance(seed, true);
            let g = phase_gradient(&bf, &grad_fa(&problem, &bf, 3.0));
            let fd = oracle::phases(&problem, &bf, 3.0, 1e-6);
            assert!(max_relative_error(&g, &fd) <= 1e-6);
        }
    }

    #[test]
    fn amplitude_gradient_matches_central_differences() {
        for seed in 0..5 {
            let (problem, bf) = instance(seed, true);
            let g = grad_fe_amp(&problem, &bf, 3.0);
            let fd = oracle::amplitudes(&problem, &bf, 3.0, 1e-6);
            assert!(max_relative_error(&g.data, &fd) <= 1e-6);
        }
    }

    #[test]
    fn analog_gradient_is_block_masked() {
        let (problem, bf) = instance(1, true);
        let g = grad_fa(&problem, &bf, 2.0);
        for i in 0..g.rows {
            for c in 0..g.cols {
                if c != bf.chain_of(i) {
                    assert_eq!(g[(i, c)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn zero_amplitudes_give_zero_analog_gradient() {
        let (problem, mut bf) = instance(2, true);
        bf.rhs_amplitudes.data.iter_mut().for_each(|a| *a = 0.0);
        let g = grad_fa(&problem, &bf, 2.0);
        assert!(g.data.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn zero_gradient_at_matched_targets_with_rates_met() {
        let (mut problem, bf) = instance(3, false);
        problem.desired_gains = problem.evaluate(&bf).gains;
        let b = bundle(&problem, &bf, 10.0);
        assert!(b.grad_fd.data.iter().all(|z| z.norm() == 0.0));
        assert!(b.grad_fa.data.iter().all(|z| z.norm() == 0.0));
        assert!(b.grad_fe_amp.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rate_part_does_not_depend_on_targets() {
        let (mut problem, bf) = instance(4, true);
        let total = grad_fd(&problem, &bf, 5.0);
        let sense = grad_fd(&problem, &bf, 0.0);
        problem.desired_gains.iter_mut().for_each(|b| *b *= 3.0);
        let total2 = grad_fd(&problem, &bf, 5.0);
        let sense2 = grad_fd(&problem, &bf, 0.0);
        for i in 0..total.data.len() {
            let r1 = total.data[i] - sense.data[i];
            let r2 = total2.data[i] - sense2.data[i];
            assert!((r1 - r2).norm() <= 1e-9 * (1.0 + r1.norm()));
        }
    }

    #[test]
    fn satisfied_users_contribute_nothing() {
        let (problem, bf) = instance(5, false);
        let with_mu = grad_fd(&problem, &bf, 100.0);
        let without = grad_fd(&problem, &bf, 0.0);
        assert_eq!(with_mu, without);
    }

    #[test]
    fn sensing_gradient_is_symmetric_under_direction_permutation() {
        let (problem, bf) = instance(6, false);
        let mut swapped = problem.clone();
        swapped.sense_steering.reverse();
        swapped.desired_gains.reverse();
        let a = grad_fd(&problem, &bf, 0.0);
        let b = grad_fd(&swapped, &bf, 0.0);
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x - y).norm() <= 1e-12 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn coarse_step_is_less_accurate() {
        let (problem, bf) = instance(7, true);
        let g = real_gradient(&grad_fd(&problem, &bf, 3.0));
        let x0 = pack_digital(&bf.digital);
        let f = |x: &[f64]| {
            let mut probe = bf.clone();
            probe.digital = unpack_digital(x, 2);
            problem.objective(&probe, 3.0)
        };
        let fine = finite_difference_check(f, &x0, &g, 1e-6);
        let coarse = finite_difference_check(f, &x0, &g, 1e-2);
        assert!(coarse > fine, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn pack_roundtrip() {
        let m = CMatrix::from_fn(3, 3, |r, c| C64::new(r as f64, c as f64 - 1.0));
        assert_eq!(unpack_digital(&pack_digital(&m), 3), m);
    }
}
