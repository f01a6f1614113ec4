//! Scenario synthesis and optimizer initialization.
//!
//! Every random draw goes through `ChaCha8Rng`; per-user and per-purpose
//! streams are derived from the scenario seed with SplitMix64 so that runs
//! are reproducible across machines and thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::{
    channel_from_paths, energy_coefficient, random_direction, random_paths, rhs_coefficient_matrix,
    ChannelParams,
    Geometry,
};
use crate::linalg::{CMatrix, RMatrix};
use crate::model::{Scenario, SystemConfig, TriHybridBeamformer};

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for stream `tag` of `seed`.
pub fn sub_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(tag)))
}

const TAG_TARGETS: u64 = 1;
pub(crate) const TAG_INIT: u64 = 2;
const TAG_USER: u64 = 1000;

/// How sensing targets and desired gains are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioTemplate {
    pub num_detect: usize,
    pub num_suppress: usize,
    /// Fraction of the per-target share `G_max/P` requested by each
    /// detection target, where `G_max = M·P_max·Σ_l w_l²` bounds the gain
    /// of any direction (see [`ScenarioTemplate::detection_gain`]).
    pub kappa: f64,
    pub num_paths: usize,
}

impl Default for ScenarioTemplate {
    fn default() -> Self {
        Self {
            num_detect: 3,
            num_suppress: 2,
            kappa: 0.5,
            num_paths: 3,
        }
    }
}

impl ScenarioTemplate {
    pub fn num_targets(&self) -> usize {
        self.num_detect + self.num_suppress
    }

    /// `κ·G_max/P`. With unit-norm steering, `G_p ≤ ‖w_sense‖²` and
    /// `‖w_sense‖² ≤ Σ_i |u_i|²·Σ_l w_l² ≤ M·P_max·Σ_l w_l²`.
    pub fn detection_gain(&self, cfg: &SystemConfig) -> f64 {
        let feed: f64 = (0..cfg.elements_per_rhs)
            .map(|l| energy_coefficient(l, cfg).powi(2))
            .sum();
        let g_max = cfg.num_users as f64 * cfg.power_budget * feed;
        self.kappa * g_max / self.num_targets() as f64
    }
}

/// Random users and targets for `seed`. Detection targets come first in
/// `sense_dirs`, followed by the suppression targets (`b_p = 0`).
pub fn random_scenario(cfg: &SystemConfig, template: &ScenarioTemplate, seed: u64) -> Scenario {
    let params = ChannelParams {
        num_paths: template.num_paths,
    };
    let geometry = Geometry::tri_hybrid(cfg);
    let user_paths: Vec<_> = (0..cfg.num_users)
        .map(|m| random_paths(&params, &mut sub_rng(seed, TAG_USER + m as u64)))
        .collect();
    let channels = user_paths
        .iter()
        .map(|p| channel_from_paths(p, &geometry))
        .collect();
    let mut rng = sub_rng(seed, TAG_TARGETS);
    let sense_dirs = (0..template.num_targets())
        .map(|_| random_direction(&mut rng))
        .collect();
    let b = template.detection_gain(cfg);
    let desired_gains = (0..template.num_targets())
        .map(|p| if p < template.num_detect { b } else { 0.0 })
        .collect();
    Scenario {
        channels,
        sense_dirs,
        desired_gains,
        seed,
        user_paths,
    }
}

/// The standard starting point: Gaussian `F_D` scaled to meet the power
/// budget with equality, uniform analog phases and all amplitudes at 0.5.
pub fn initial_beamformer<R: Rng + ?Sized>(
    num_chains: usize,
    ps_per_chain: usize,
    coeffs: CMatrix,
    power_budget: f64,
    rng: &mut R,
) -> TriHybridBeamformer {
    let k = num_chains * ps_per_chain;
    let digital = CMatrix::from_fn(num_chains, num_chains, |_, _| {
        crate::array::complex_gaussian(rng)
    });
    let phases = (0..k)
        .map(|_| rng.random::<f64>() * 2.0 * std::f64::consts::PI)
        .collect();
    let amps = RMatrix::filled(k, coeffs.cols, 0.5);
    let mut bf = TriHybridBeamformer::new(digital, phases, amps, coeffs, ps_per_chain)
        .expect("consistent dimensions");
    let p = bf.transmit_power();
    bf.digital.scale((power_budget / p).sqrt());
    bf
}

pub fn initial_for(cfg: &SystemConfig, seed: u64) -> TriHybridBeamformer {
    initial_beamformer(
        cfg.num_users,
        cfg.ps_per_chain,
        rhs_coefficient_matrix(cfg),
        cfg.power_budget,
        &mut sub_rng(seed, TAG_INIT),
    )
}

/// A random scenario and a random feasible beamformer with amplitudes drawn
/// uniformly from `[0, 1]`; desired gains are uniform in `[0, 2]`.
pub fn random_instance<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    params: &ChannelParams,
    rng: &mut R,
) -> (Scenario, TriHybridBeamformer) {
    let geometry = Geometry::tri_hybrid(cfg);
    let user_paths: Vec<_> = (0..cfg.num_users)
        .map(|_| random_paths(params, rng))
        .collect();
    let channels = user_paths
        .iter()
        .map(|p| channel_from_paths(p, &geometry))
        .collect();
    let sense_dirs = (0..cfg.num_sense_dirs)
        .map(|_| random_direction(rng))
        .collect();
    let desired_gains = (0..cfg.num_sense_dirs)
        .map(|_| 0.05 + 2.0 * rng.random::<f64>())
        .collect();
    let scn = Scenario {
        channels,
        sense_dirs,
        desired_gains,
        seed: 0,
        user_paths,
    };
    let mut bf = initial_beamformer(
        cfg.num_users,
        cfg.ps_per_chain,
        rhs_coefficient_matrix(cfg),
        cfg.power_budget,
        rng,
    );
    for a in &mut bf.rhs_amplitudes.data {
        *a = rng.random::<f64>();
    }
    (scn, bf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn random_scenario_is_valid_and_reproducible() {
        let cfg = SystemConfig::default().with_elements(24);
        let t = ScenarioTemplate::default();
        let a = random_scenario(&cfg, &t, 7);
        validate(&cfg, &a).unwrap();
        assert_eq!(a, random_scenario(&cfg, &t, 7));
        assert_ne!(a.channels, random_scenario(&cfg, &t, 8).channels);
        assert_eq!(a.desired_gains[3..], [0.0, 0.0]);
        // geometric feed sum 0.8·(1 - 0.6^24)/0.4
        let g_max = 4.0 * 2.0 * (1.0 - 0.6f64.powi(24));
        assert!((a.desired_gains[0] - 0.5 * g_max / 5.0).abs() < 1e-12);
    }

    #[test]
    fn initial_beamformer_meets_budget_with_equality() {
        let cfg = SystemConfig::default().with_elements(8);
        let bf = initial_for(&cfg, 3);
        assert!((bf.transmit_power() - cfg.power_budget).abs() < 1e-12);
        assert!(bf.rhs_amplitudes.data.iter().all(|&a| a == 0.5));
    }
}
