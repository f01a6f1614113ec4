//! Effective beamformers, sensing gains, user rates and the penalized
//! objective.
//!
//! The sensing term of the objective is the squared waveform error
//! `Σ_p (G_p - b_p)²`; [`sensing_error`] reports its square root. All
//! gradient expressions in [`crate::gradients`] differentiate exactly this
//! objective.

use std::f64::consts::LN_2;

use crate::array::{steering_vector, Geometry};
use crate::error::{Error, Result};
use crate::linalg::{vdot, CMatrix, C64};
use crate::model::{Direction, Scenario, SystemConfig, TriHybridBeamformer};

/// `G = F_E F_A` and the per-user / sensing beamformers it produces.
///
/// `G` has a single nonzero per row (element `r` is driven only by the
/// chain of its phase shifter), so it is stored as that one value plus the
/// column index.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveBeamformer {
    pub element_weights: Vec<C64>,
    pub element_chain: Vec<usize>,
    pub num_chains: usize,
    pub per_user: Vec<Vec<C64>>,
    pub sense_vector: Vec<C64>,
}

impl EffectiveBeamformer {
    /// Dense `(NML) × M` matrix, for checks only.
    pub fn g_matrix(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.element_weights.len(), self.num_chains);
        for (r, (&w, &c)) in self.element_weights.iter().zip(&self.element_chain).enumerate() {
            g[(r, c)] = w;
        }
        g
    }
}

pub fn compose(bf: &TriHybridBeamformer) -> EffectiveBeamformer {
    let k = bf.num_subarrays();
    let l = bf.elements_per_subarray();
    let m = bf.num_chains();
    let mut element_weights = Vec::with_capacity(k * l);
    let mut element_chain = Vec::with_capacity(k * l);
    for i in 0..k {
        let phi = bf.analog_entry(i);
        for e in 0..l {
            element_weights.push(bf.rhs_amplitudes[(i, e)] * bf.rhs_phase_coeffs[(i, e)] * phi);
            element_chain.push(bf.chain_of(i));
        }
    }
    let per_user: Vec<Vec<C64>> = (0..m)
        .map(|user| {
            element_weights
                .iter()
                .zip(&element_chain)
                .map(|(w, &c)| w * bf.digital[(c, user)])
                .collect()
        })
        .collect();
    let mut sense_vector = vec![C64::new(0.0, 0.0); k * l];
    for w in &per_user {
        for (s, x) in sense_vector.iter_mut().zip(w) {
            *s += x;
        }
    }
    EffectiveBeamformer {
        element_weights,
        element_chain,
        num_chains: m,
        per_user,
        sense_vector,
    }
}

/// `|a(θ, φ)^H w_sense|²`.
pub fn sensing_gain(eb: &EffectiveBeamformer, dir: &Direction, cfg: &SystemConfig) -> f64 {
    vdot(&steering_vector(dir, cfg), &eb.sense_vector).norm_sqr()
}

pub fn sensing_gain_on(eb: &EffectiveBeamformer, steering: &[C64]) -> f64 {
    vdot(steering, &eb.sense_vector).norm_sqr()
}

pub fn rate_from_powers(signal: f64, interference_plus_noise: f64) -> f64 {
    (1.0 + signal / interference_plus_noise).log2()
}

/// Achievable rate of user `m` (zero-based) in bit/s/Hz.
pub fn user_rate(eb: &EffectiveBeamformer, m: usize, scn: &Scenario, cfg: &SystemConfig) -> f64 {
    let h = &scn.channels[m];
    let signal = vdot(h, &eb.per_user[m]).norm_sqr();
    let interference: f64 = (0..eb.per_user.len())
        .filter(|&j| j != m)
        .map(|j| vdot(h, &eb.per_user[j]).norm_sqr())
        .sum();
    rate_from_powers(signal, interference + cfg.noise_power)
}

/// `‖g - b‖₂`.
pub fn sensing_error(gains: &[f64], desired: &[f64]) -> Result<f64> {
    if gains.len() != desired.len() {
        return Err(Error::DimensionMismatch {
            what: "gain vector".into(),
            expected: desired.len(),
            got: gains.len(),
        });
    }
    Ok(gains
        .iter()
        .zip(desired)
        .map(|(g, b)| (g - b).powi(2))
        .sum::<f64>()
        .sqrt())
}

pub fn rate_penalty(rates: &[f64], threshold: f64) -> f64 {
    rates
        .iter()
        .map(|r| (threshold - r).max(0.0).powi(2))
        .sum()
}

/// `‖g - b‖₂² + μ Σ_m max(0, R_th - R_m)²` from the public helpers.
pub fn objective(bf: &TriHybridBeamformer, scn: &Scenario, cfg: &SystemConfig, mu: f64) -> f64 {
    let eb = compose(bf);
    let gains: Vec<f64> = scn
        .sense_dirs
        .iter()
        .map(|d| sensing_gain(&eb, d, cfg))
        .collect();
    let rates: Vec<f64> = (0..cfg.num_users)
        .map(|m| user_rate(&eb, m, scn, cfg))
        .collect();
    let err = sensing_error(&gains, &scn.desired_gains).expect("gain length");
    err * err + mu * rate_penalty(&rates, cfg.rate_threshold)
}

/// Everything the optimizer needs about one problem instance, with
/// steering vectors precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub geometry: Geometry,
    pub sense_steering: Vec<Vec<C64>>,
    pub channels: Vec<Vec<C64>>,
    pub desired_gains: Vec<f64>,
    pub noise_power: f64,
    pub power_budget: f64,
    pub rate_threshold: f64,
}

impl Problem {
    pub fn new(cfg: &SystemConfig, scn: &Scenario) -> Result<Self> {
        crate::model::validate(cfg, scn)?;
        Ok(Self::from_parts(
            Geometry::tri_hybrid(cfg),
            scn.channels.clone(),
            &scn.sense_dirs,
            scn.desired_gains.clone(),
            cfg,
        ))
    }

    pub fn from_parts(
        geometry: Geometry,
        channels: Vec<Vec<C64>>,
        sense_dirs: &[Direction],
        desired_gains: Vec<f64>,
        cfg: &SystemConfig,
    ) -> Self {
        let sense_steering = sense_dirs.iter().map(|d| geometry.steering(d)).collect();
        Self {
            geometry,
            sense_steering,
            channels,
            desired_gains,
            noise_power: cfg.noise_power,
            power_budget: cfg.power_budget,
            rate_threshold: cfg.rate_threshold,
        }
    }

    pub fn num_users(&self) -> usize {
        self.channels.len()
    }

    pub fn num_dirs(&self) -> usize {
        self.sense_steering.len()
    }

    pub fn projections(&self, bf: &TriHybridBeamformer) -> Projections {
        Projections::new(self, bf)
    }

    pub fn evaluate(&self, bf: &TriHybridBeamformer) -> Evaluation {
        Evaluation::new(self, &self.projections(bf), bf)
    }

    pub fn objective(&self, bf: &TriHybridBeamformer, mu: f64) -> f64 {
        self.evaluate(bf).objective(mu)
    }
}

/// Per-subarray responses of the EM layer toward each sensing direction and
/// user channel: `e[p][i] = Σ_l conj(a_p[i,l]) a_il c_il`. They depend on
/// the amplitudes only, so digital and analog updates can reuse them.
#[derive(Debug, Clone, PartialEq)]
pub struct Projections {
    pub sense: Vec<Vec<C64>>,
    pub user: Vec<Vec<C64>>,
}

fn project(v: &[C64], bf: &TriHybridBeamformer) -> Vec<C64> {
    let l = bf.elements_per_subarray();
    (0..bf.num_subarrays())
        .map(|i| {
            let amps = bf.rhs_amplitudes.row(i);
            (0..l)
                .map(|e| v[i * l + e].conj() * bf.rhs_phase_coeffs[(i, e)] * amps[e])
                .sum()
        })
        .collect()
}

impl Projections {
    pub fn new(problem: &Problem, bf: &TriHybridBeamformer) -> Self {
        Self {
            sense: problem.sense_steering.iter().map(|a| project(a, bf)).collect(),
            user: problem.channels.iter().map(|h| project(h, bf)).collect(),
        }
    }
}

/// Objective intermediates at one beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `u_i = [F_A F_D 1]_i`, the signal leaving phase shifter `i`.
    pub ps_output: Vec<C64>,
    /// `s[i][m] = [F_A F_D]_{i,m}`.
    pub ps_streams: Vec<Vec<C64>>,
    /// `a_p^H w_sense`.
    pub sense_response: Vec<C64>,
    /// `g[k][m] = h_k^H G f_{D,m}`.
    pub user_response: Vec<Vec<C64>>,
    pub gains: Vec<f64>,
    pub signal: Vec<f64>,
    pub interference: Vec<f64>,
    pub rates: Vec<f64>,
    pub sensing_cost: f64,
    pub penalty: f64,
    pub rate_threshold: f64,
}

impl Evaluation {
    pub fn new(problem: &Problem, proj: &Projections, bf: &TriHybridBeamformer) -> Self {
        let k = bf.num_subarrays();
        let m = bf.num_chains();
        let ps_streams: Vec<Vec<C64>> = (0..k)
            .map(|i| {
                let phi = bf.analog_entry(i);
                let r = bf.chain_of(i);
                (0..m).map(|c| phi * bf.digital[(r, c)]).collect()
            })
            .collect();
        let ps_output: Vec<C64> = ps_streams.iter().map(|s| s.iter().sum()).collect();
        let sense_response: Vec<C64> = proj
            .sense
            .iter()
            .map(|e| e.iter().zip(&ps_output).map(|(a, b)| a * b).sum())
            .collect();
        let user_response: Vec<Vec<C64>> = proj
            .user
            .iter()
            .map(|e| {
                (0..m)
                    .map(|c| (0..k).map(|i| e[i] * ps_streams[i][c]).sum())
                    .collect()
            })
            .collect();
        let gains: Vec<f64> = sense_response.iter().map(|y| y.norm_sqr()).collect();
        let users = problem.num_users();
        let mut signal = Vec::with_capacity(users);
        let mut interference = Vec::with_capacity(users);
        for (kk, row) in user_response.iter().enumerate() {
            signal.push(row[kk].norm_sqr());
            let leak: f64 = row
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != kk)
                .map(|(_, z)| z.norm_sqr())
                .sum();
            interference.push(leak + problem.noise_power);
        }
        let rates: Vec<f64> = signal
            .iter()
            .zip(&interference)
            .map(|(s, i)| rate_from_powers(*s, *i))
            .collect();
        let sensing_cost = gains
            .iter()
            .zip(&problem.desired_gains)
            .map(|(g, b)| (g - b).powi(2))
            .sum();
        let penalty = rate_penalty(&rates, problem.rate_threshold);
        Self {
            ps_output,
            ps_streams,
            sense_response,
            user_response,
            gains,
            signal,
            interference,
            rates,
            sensing_cost,
            penalty,
            rate_threshold: problem.rate_threshold,
        }
    }

    pub fn objective(&self, mu: f64) -> f64 {
        self.sensing_cost + mu * self.penalty
    }

    pub fn sensing_error(&self) -> f64 {
        self.sensing_cost.sqrt()
    }

    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `v_m = max(0, R_th - R_m)`.
    pub fn rate_deficits(&self) -> Vec<f64> {
        self.rates
            .iter()
            .map(|r| (self.rate_threshold - r).max(0.0))
            .collect()
    }
}

/// `dF/dR_k` scaled into weights on `|g_{k,m}|²`: the objective's rate term
/// changes by `Σ_{k,m} β[k][m] d|g_{k,m}|²` to first order.
pub(crate) fn rate_weights(eval: &Evaluation, mu: f64) -> Vec<Vec<f64>> {
    let deficits = eval.rate_deficits();
    eval.user_response
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let coef = -2.0 * mu * deficits[k];
            let s = eval.signal[k];
            let i = eval.interference[k];
            (0..row.len())
                .map(|m| {
                    if coef == 0.0 {
                        0.0
                    } else if m == k {
                        coef / (LN_2 * (s + i))
                    } else {
                        -coef * s / (LN_2 * i * (s + i))
                    }
                })
                .collect()
        })
        .collect()
}
