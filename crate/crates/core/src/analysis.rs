//! Structural properties of the tri-hybrid design: coherent phase
//! alignment, the per-element gain increment, the quadratic amplitude model
//! behind boundary clustering, 1-bit quantization and a timing probe.

use std::f64::consts::LN_2;
use std::ops::RangeInclusive;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array::{complex_gaussian, energy_coefficient, rhs_coefficient_matrix, Geometry};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix, C64};
use crate::metrics::{rate_from_powers, Evaluation, Problem, Projections};
use crate::model::{Direction, OptimizerParams, SystemConfig, TriHybridBeamformer};
use crate::scenario::{initial_for, random_scenario, sub_rng, ScenarioTemplate};

/// Phase-shifter outputs `U_r e^{jψ_i}` with `U_r = Σ_m [F_D]_{r,m}`.
fn ps_outputs(bf: &TriHybridBeamformer) -> Vec<C64> {
    let sums = bf.digital.row_sums();
    (0..bf.num_subarrays())
        .map(|i| bf.analog_entry(i) * sums[bf.chain_of(i)])
        .collect()
}

/// `Σ_l conj(v[i,l]) a_il c_il` for every subarray.
fn em_projection(v: &[C64], bf: &TriHybridBeamformer) -> Vec<C64> {
    let l = bf.elements_per_subarray();
    (0..bf.num_subarrays())
        .map(|i| {
            (0..l)
                .map(|e| v[i * l + e].conj() * bf.rhs_phase_coeffs[(i, e)] * bf.rhs_amplitudes[(i, e)])
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainAnalysis {
    /// `ρ_i = e_i |u_i|`, the subarray response with the phase of `u_i`
    /// factored out.
    pub rho: Vec<C64>,
    pub fixed_phases: Vec<f64>,
    pub optimal_phases: Vec<f64>,
    pub fixed_gain: f64,
    pub aligned_gain: f64,
    pub slack: f64,
}

impl GainAnalysis {
    /// Lower bound `2ζ√Ḡ` on `G* - Ḡ`.
    pub fn gain_bound(&self) -> f64 {
        2.0 * self.slack * self.fixed_gain.sqrt()
    }
}

pub fn phase_alignment(bf: &TriHybridBeamformer, dir: &Direction, cfg: &SystemConfig) -> GainAnalysis {
    phase_alignment_on(bf, &Geometry::tri_hybrid(cfg).steering(dir))
}

pub fn phase_alignment_on(bf: &TriHybridBeamformer, steering: &[C64]) -> GainAnalysis {
    let e = em_projection(steering, bf);
    let u = ps_outputs(bf);
    let rho: Vec<C64> = e.iter().zip(&u).map(|(e, u)| e * u.norm()).collect();
    let fixed_phases: Vec<f64> = u.iter().map(|u| u.arg()).collect();
    let optimal_phases: Vec<f64> = rho.iter().map(|r| -r.arg()).collect();
    let coherent: C64 = rho
        .iter()
        .zip(&fixed_phases)
        .map(|(r, t)| r * C64::from_polar(1.0, *t))
        .sum();
    let total: f64 = rho.iter().map(|r| r.norm()).sum();
    GainAnalysis {
        fixed_gain: coherent.norm_sqr(),
        aligned_gain: total * total,
        slack: (total - coherent.norm()).max(0.0),
        rho,
        fixed_phases,
        optimal_phases,
    }
}

/// Writes `ψ_i = θ*_i - arg U_r` so that `u_i` takes the phase `θ*_i`.
pub fn install_optimal_phases(bf: &TriHybridBeamformer, analysis: &GainAnalysis) -> TriHybridBeamformer {
    let sums = bf.digital.row_sums();
    let mut out = bf.clone();
    for (i, psi) in out.analog_phases.iter_mut().enumerate() {
        let t = analysis.optimal_phases[i] - sums[bf.chain_of(i)].arg();
        *psi = crate::model::wrap_phase(t);
    }
    out
}

/// How the amplitudes of an increment study are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmplitudeRule {
    /// Binary hologram: an element is on when its contribution has positive
    /// projection on the first row's response.
    Aligned,
    Random,
}

/// A beamformer on the largest array of an increment study. Rows `0..L` of
/// `amplitudes` are the `L`-element beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSetup {
    pub digital: CMatrix,
    pub analog_phases: Vec<f64>,
    pub amplitudes: RMatrix,
    pub direction: Direction,
}

impl IncrementSetup {
    pub fn capacity(&self) -> usize {
        self.amplitudes.cols
    }
}

/// Element `(i, l)` coefficient and steering entry, both independent of the
/// array length. Steering is normalized to the full capacity.
fn increment_terms(cfg: &SystemConfig, setup: &IncrementSetup) -> (Vec<C64>, Vec<Vec<C64>>) {
    let cap = setup.capacity();
    let k = cfg.num_subarrays();
    let k0 = cfg.free_space_wavenumber();
    let st = setup.direction.elevation.sin();
    let ux = st * setup.direction.azimuth.cos();
    let uy = st * setup.direction.azimuth.sin();
    let norm = 1.0 / ((k * cap) as f64).sqrt();
    let sums = setup.digital.row_sums();
    let u: Vec<C64> = (0..k)
        .map(|i| C64::from_polar(1.0, setup.analog_phases[i]) * sums[i / cfg.ps_per_chain])
        .collect();
    // t[l][i] = conj(a[i,l]) c_il u_i without the energy coefficient w_l
    let t = (0..cap)
        .map(|l| {
            (0..k)
                .map(|i| {
                    let a = C64::from_polar(norm, k0 * (i as f64 * cfg.spacing_x * ux + l as f64 * cfg.spacing_y * uy));
                    let c = C64::from_polar(1.0, -cfg.surface_wavenumber * l as f64 * cfg.spacing_y);
                    a.conj() * c * u[i]
                })
                .collect()
        })
        .collect();
    (u, t)
}

pub fn increment_setup(
    cfg: &SystemConfig,
    template: &ScenarioTemplate,
    seed: u64,
    capacity: usize,
    rule: AmplitudeRule,
) -> IncrementSetup {
    let init = initial_for(cfg, seed);
    let direction = random_scenario(cfg, template, seed).sense_dirs[0];
    let k = cfg.num_subarrays();
    let mut setup = IncrementSetup {
        digital: init.digital,
        analog_phases: init.analog_phases,
        amplitudes: RMatrix::zeros(k, capacity),
        direction,
    };
    match rule {
        AmplitudeRule::Random => {
            let mut rng = sub_rng(seed, 77);
            for a in &mut setup.amplitudes.data {
                *a = rng.random::<f64>();
            }
        }
        AmplitudeRule::Aligned => {
            let (_, t) = increment_terms(cfg, &setup);
            let r0: C64 = t[0].iter().sum();
            let reference = if r0.norm() > 0.0 { r0 / r0.norm() } else { C64::new(1.0, 0.0) };
            for (l, row) in t.iter().enumerate() {
                for (i, z) in row.iter().enumerate() {
                    if (reference.conj() * z).re > 0.0 {
                        setup.amplitudes[(i, l)] = 1.0;
                    }
                }
            }
        }
    }
    setup
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainIncrement {
    pub elements: usize,
    pub gain: f64,
    /// `G(L+1) - G(L)` from the two gains.
    pub increment: f64,
    /// `2 w Re{ξ* Γ} + w² |Γ|²`.
    pub closed_form: f64,
    /// `ξ(L) = a^H w_sense(L)`, so `|ξ|² = G(L)`.
    pub xi: C64,
    pub gamma: C64,
    pub w_next: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementProfile {
    pub entries: Vec<GainIncrement>,
    pub reference_gain: f64,
    pub tolerance: f64,
    /// First `L` from which every later increment in range stays below the
    /// tolerance.
    pub saturation: Option<usize>,
}

pub const SATURATION_REFERENCE: usize = 8;
pub const SATURATION_TOLERANCE: f64 = 1e-6;

/// Gain and increment for every `L` in `range`. Requires
/// `range.end() < setup.capacity()`.
pub fn gain_increment_profile(
    cfg: &SystemConfig,
    setup: &IncrementSetup,
    range: RangeInclusive<usize>,
) -> Result<IncrementProfile> {
    let cap = setup.capacity();
    let (&lo, &hi) = (range.start(), range.end());
    if lo == 0 || hi + 1 > cap || SATURATION_REFERENCE > cap {
        return Err(Error::RangeError {
            what: "element range".into(),
            value: hi as f64,
        });
    }
    let (_, t) = increment_terms(cfg, setup);
    let w: Vec<f64> = (0..cap).map(|l| energy_coefficient(l, cfg)).collect();
    let layer: Vec<C64> = (0..cap)
        .map(|l| (0..t[l].len()).map(|i| setup.amplitudes[(i, l)] * t[l][i]).sum())
        .collect();
    // independent direct sum over all elements of the first `n` rows
    let direct = |n: usize| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (l, row) in t.iter().enumerate().take(n) {
            for (i, z) in row.iter().enumerate() {
                acc += w[l] * setup.amplitudes[(i, l)] * z;
            }
        }
        acc
    };
    let reference_gain = direct(SATURATION_REFERENCE).norm_sqr();
    let tolerance = SATURATION_TOLERANCE * reference_gain;
    let mut entries = Vec::with_capacity(hi - lo + 1);
    let mut xi = direct(lo);
    for l in lo..=hi {
        let next = direct(l + 1);
        let gamma = layer[l];
        let wn = w[l];
        let closed_form = 2.0 * wn * (xi.conj() * gamma).re + wn * wn * gamma.norm_sqr();
        entries.push(GainIncrement {
            elements: l,
            gain: xi.norm_sqr(),
            increment: next.norm_sqr() - xi.norm_sqr(),
            closed_form,
            xi,
            gamma,
            w_next: wn,
        });
        xi = next;
    }
    let saturation = entries
        .iter()
        .rposition(|e| e.increment.abs() >= tolerance)
        .map_or(Some(lo), |last| entries.get(last + 1).map(|e| e.elements));
    Ok(IncrementProfile {
        entries,
        reference_gain,
        tolerance,
        saturation,
    })
}

/// `F(a) ≈ F0 + F1 a + F2 a²` along amplitude `(i, l)` with all other
/// variables fixed; `F1 = F'(0)` and `F2 = F''(0)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticModel {
    pub element: (usize, usize),
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    /// Coefficients `[A, B, C]` of each gain `G_p(a) = A + B a + C a²`.
    pub gain_coeffs: Vec<[f64; 3]>,
    /// Same for each desired-signal power `|p_m + a Δ_m|²`.
    pub signal_coeffs: Vec<[f64; 3]>,
}

impl QuadraticModel {
    pub fn stationary(&self) -> f64 {
        -self.f1 / (2.0 * self.f2)
    }

    pub fn boundary(&self) -> bool {
        let s = self.stationary();
        self.f2 <= 0.0 || !(s > 0.0 && s < 1.0)
    }

    pub fn value(&self, a: f64) -> f64 {
        self.f0 + self.f1 * a + self.f2 * a * a
    }
}

pub const LEAKAGE_TOLERANCE: f64 = 1e-8;

/// Largest cross-user response `|h_k^H G f_{D,m}|`, `k ≠ m`.
pub fn interference_leakage(eval: &Evaluation) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, row) in eval.user_response.iter().enumerate() {
        for (m, g) in row.iter().enumerate() {
            if m != k {
                worst = worst.max(g.norm());
            }
        }
    }
    worst
}

/// Expansion of `[A, B, C]` for `|z + a q|²`.
fn quadratic_power(z: C64, q: C64) -> [f64; 3] {
    [z.norm_sqr(), 2.0 * (z.conj() * q).re, q.norm_sqr()]
}

pub fn quadratic_coeffs(
    bf: &TriHybridBeamformer,
    problem: &Problem,
    mu: f64,
    i: usize,
    l: usize,
) -> Result<QuadraticModel> {
    let big_l = bf.elements_per_subarray();
    if i >= bf.num_subarrays() || l >= big_l {
        return Err(Error::RangeError {
            what: "element index".into(),
            value: (i * big_l + l) as f64,
        });
    }
    let eval = problem.evaluate(bf);
    let leakage = interference_leakage(&eval);
    if leakage > LEAKAGE_TOLERANCE {
        return Err(Error::AssumptionViolated { leakage });
    }
    let a0 = bf.rhs_amplitudes[(i, l)];
    let c = bf.rhs_phase_coeffs[(i, l)];
    let r = i * big_l + l;
    let u = eval.ps_output[i];

    let gain_coeffs: Vec<[f64; 3]> = problem
        .sense_steering
        .iter()
        .zip(&eval.sense_response)
        .map(|(a, y)| {
            let q = a[r].conj() * c * u;
            quadratic_power(y - a0 * q, q)
        })
        .collect();
    let (mut f0, mut f1, mut f2) = (0.0, 0.0, 0.0);
    for ([g0, g1, g2], b) in gain_coeffs.iter().zip(&problem.desired_gains) {
        let d = g0 - b;
        f0 += d * d;
        f1 += 2.0 * d * g1;
        f2 += g1 * g1 + 2.0 * d * g2;
    }

    let sigma2 = problem.noise_power;
    let signal_coeffs: Vec<[f64; 3]> = problem
        .channels
        .iter()
        .enumerate()
        .map(|(m, h)| {
            let delta = h[r].conj() * c * eval.ps_streams[i][m];
            quadratic_power(eval.user_response[m][m] - a0 * delta, delta)
        })
        .collect();
    for [s0, s1, s2] in &signal_coeffs {
        let v = problem.rate_threshold - rate_from_powers(*s0, sigma2);
        if v <= 0.0 {
            continue;
        }
        let den = LN_2 * (sigma2 + s0);
        let r1 = s1 / den;
        let r2 = 2.0 * s2 / den - s1 * s1 / (LN_2 * (sigma2 + s0).powi(2));
        f0 += mu * v * v;
        f1 += -2.0 * mu * v * r1;
        f2 += mu * (r1 * r1 - v * r2);
    }
    Ok(QuadraticModel {
        element: (i, l),
        f0,
        f1,
        f2,
        gain_coeffs,
        signal_coeffs,
    })
}

/// Minimizer of the quadratic model over `[0, 1]`: the interior stationary
/// point when it exists, otherwise the better end (ties go to 0).
pub fn boundary_decision(model: &QuadraticModel) -> f64 {
    if !model.boundary() {
        return model.stationary();
    }
    if model.value(1.0) < model.value(0.0) {
        1.0
    } else {
        0.0
    }
}

/// Fraction of amplitudes within `δ` of 0 or 1.
pub fn boundary_proportion(amplitudes: &[f64], delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::RangeError {
            what: "boundary band".into(),
            value: delta,
        });
    }
    if amplitudes.is_empty() {
        return Ok(0.0);
    }
    let near = amplitudes
        .iter()
        .filter(|&&a| a <= delta || a >= 1.0 - delta)
        .count();
    Ok(near as f64 / amplitudes.len() as f64)
}

/// Running responses for cheap single-amplitude changes. Changing `a_il`
/// by `δ` shifts every response linearly, so each trial costs `O(P + M²)`.
struct CoordinateState<'a> {
    problem: &'a Problem,
    bf: TriHybridBeamformer,
    ps_output: Vec<C64>,
    ps_streams: Vec<Vec<C64>>,
    sense: Vec<C64>,
    users: Vec<Vec<C64>>,
}

impl<'a> CoordinateState<'a> {
    fn new(problem: &'a Problem, bf: TriHybridBeamformer) -> Self {
        let eval = Evaluation::new(problem, &Projections::new(problem, &bf), &bf);
        Self {
            problem,
            bf,
            ps_output: eval.ps_output,
            ps_streams: eval.ps_streams,
            sense: eval.sense_response,
            users: eval.user_response,
        }
    }

    fn shifted(&self, i: usize, l: usize, delta: f64) -> (Vec<C64>, Vec<Vec<C64>>) {
        let r = i * self.bf.elements_per_subarray() + l;
        let c = delta * self.bf.rhs_phase_coeffs[(i, l)];
        let sense = self
            .problem
            .sense_steering
            .iter()
            .zip(&self.sense)
            .map(|(a, y)| y + a[r].conj() * c * self.ps_output[i])
            .collect();
        let users = self
            .problem
            .channels
            .iter()
            .zip(&self.users)
            .map(|(h, row)| {
                let e = h[r].conj() * c;
                row.iter()
                    .zip(&self.ps_streams[i])
                    .map(|(g, s)| g + e * s)
                    .collect()
            })
            .collect();
        (sense, users)
    }

    fn objective_of(&self, sense: &[C64], users: &[Vec<C64>], mu: f64) -> f64 {
        let p = self.problem;
        let cost: f64 = sense
            .iter()
            .zip(&p.desired_gains)
            .map(|(y, b)| (y.norm_sqr() - b).powi(2))
            .sum();
        let penalty: f64 = users
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let leak: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|(m, _)| *m != k)
                    .map(|(_, g)| g.norm_sqr())
                    .sum();
                let rate = rate_from_powers(row[k].norm_sqr(), leak + p.noise_power);
                (p.rate_threshold - rate).max(0.0).powi(2)
            })
            .sum();
        cost + mu * penalty
    }

    fn set(&mut self, i: usize, l: usize, value: f64) {
        let delta = value - self.bf.rhs_amplitudes[(i, l)];
        if delta != 0.0 {
            let (sense, users) = self.shifted(i, l, delta);
            self.sense = sense;
            self.users = users;
            self.bf.rhs_amplitudes[(i, l)] = value;
        }
    }

    /// One sweep; returns whether any amplitude changed.
    fn sweep(&mut self, mu: f64) -> bool {
        let mut changed = false;
        for i in 0..self.bf.num_subarrays() {
            for l in 0..self.bf.elements_per_subarray() {
                let a = self.bf.rhs_amplitudes[(i, l)];
                let (s0, u0) = self.shifted(i, l, -a);
                let (s1, u1) = self.shifted(i, l, 1.0 - a);
                let v = if self.objective_of(&s1, &u1, mu) < self.objective_of(&s0, &u0, mu) {
                    1.0
                } else {
                    0.0
                };
                if v != a {
                    changed |= a == 0.0 || a == 1.0;
                    self.set(i, l, v);
                }
            }
        }
        changed
    }
}

const MAX_SWEEPS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizeOutcome {
    pub beamformer: TriHybridBeamformer,
    pub objective: f64,
    pub rounded_objective: f64,
}

pub fn round_amplitudes(bf: &TriHybridBeamformer) -> TriHybridBeamformer {
    let mut out = bf.clone();
    for a in &mut out.rhs_amplitudes.data {
        *a = if *a >= 0.5 { 1.0 } else { 0.0 };
    }
    out
}

fn coordinate_descent(problem: &Problem, bf: TriHybridBeamformer, mu: f64) -> TriHybridBeamformer {
    let mut state = CoordinateState::new(problem, bf);
    for _ in 0..MAX_SWEEPS {
        if !state.sweep(mu) {
            break;
        }
    }
    state.bf
}

/// Binary amplitudes by exact coordinate descent, once from the continuous
/// point and once from plain rounding; the better result is kept, so the
/// objective never exceeds that of plain rounding.
pub fn quantize_1bit(bf: &TriHybridBeamformer, problem: &Problem, mu: f64) -> QuantizeOutcome {
    let rounded = round_amplitudes(bf);
    let rounded_objective = problem.objective(&rounded, mu);
    let from_rounded = coordinate_descent(problem, rounded, mu);
    let from_continuous = coordinate_descent(problem, bf.clone(), mu);
    let fr = problem.objective(&from_rounded, mu);
    let fc = problem.objective(&from_continuous, mu);
    let (beamformer, objective) = if fc < fr {
        (from_continuous, fc)
    } else {
        (from_rounded, fr)
    };
    QuantizeOutcome {
        beamformer,
        objective,
        rounded_objective,
    }
}

/// Orthogonal toy instance: user `k` only sees the subarrays of chain `k`
/// and `F_D` is diagonal, so no user leaks into another for any amplitude.
pub fn zero_interference_instance<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    rng: &mut R,
) -> (Problem, TriHybridBeamformer) {
    let geometry = Geometry::tri_hybrid(cfg);
    let l = cfg.elements_per_rhs;
    let per_chain = cfg.ps_per_chain * l;
    let channels: Vec<Vec<C64>> = (0..cfg.num_users)
        .map(|k| {
            (0..cfg.num_elements())
                .map(|r| {
                    if r / per_chain == k {
                        complex_gaussian(rng) / (cfg.num_elements() as f64).sqrt() * 4.0
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    let dirs: Vec<Direction> = (0..cfg.num_sense_dirs)
        .map(|_| crate::array::random_direction(rng))
        .collect();
    let desired = (0..cfg.num_sense_dirs).map(|_| 0.1 + rng.random::<f64>()).collect();
    let problem = Problem::from_parts(geometry, channels, &dirs, desired, cfg);
    let m = cfg.num_users;
    let mut digital = CMatrix::zeros(m, m);
    for k in 0..m {
        digital[(k, k)] = complex_gaussian(rng);
    }
    let phases = (0..cfg.num_subarrays())
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect();
    let mut amps = RMatrix::zeros(cfg.num_subarrays(), l);
    for a in &mut amps.data {
        *a = rng.random::<f64>();
    }
    let mut bf = TriHybridBeamformer::new(digital, phases, amps, rhs_coefficient_matrix(cfg), cfg.ps_per_chain)
        .expect("consistent dimensions");
    let p = bf.transmit_power();
    bf.digital.scale((cfg.power_budget / p).sqrt());
    (problem, bf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub elements: usize,
    pub runs: usize,
    pub iterations: usize,
    pub seconds_per_iteration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub num_users: usize,
    pub ps_per_chain: usize,
    pub num_sense_dirs: usize,
    pub rows: Vec<ComplexityRow>,
    /// Least-squares slope of log time against log `L`.
    pub exponent: f64,
}

/// Mean wall time per outer iteration for each `L`, with every run forced
/// to the full iteration budget. Runs are sequential so timings do not
/// compete for cores.
pub fn complexity_probe(
    cfg: &SystemConfig,
    template: &ScenarioTemplate,
    element_counts: &[usize],
    seeds: &[u64],
    params: &OptimizerParams,
) -> Result<ComplexityReport> {
    let mut params = params.clone();
    params.sense_tol = f64::MIN_POSITIVE;
    let mut rows = Vec::with_capacity(element_counts.len());
    for &l in element_counts {
        let c = cfg.clone().with_elements(l);
        let mut seconds = 0.0;
        let mut iterations = 0;
        for &seed in seeds {
            let scn = random_scenario(&c, template, seed);
            let init = initial_for(&c, seed);
            let problem = Problem::new(&c, &scn)?;
            let start = Instant::now();
            let res = crate::optimizer::run_problem(&problem, &params, &init, &Default::default())?;
            seconds += start.elapsed().as_secs_f64();
            iterations += res.iterations;
        }
        rows.push(ComplexityRow {
            elements: l,
            runs: seeds.len(),
            iterations,
            seconds_per_iteration: seconds / iterations.max(1) as f64,
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.elements as f64).ln(), r.seconds_per_iteration.max(1e-12).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(ComplexityReport {
        num_users: cfg.num_users,
        ps_per_chain: cfg.ps_per_chain,
        num_sense_dirs: cfg.num_sense_dirs,
        rows,
        exponent: if sxx > 0.0 { sxy / sxx } else { f64::NAN },
    })
}
