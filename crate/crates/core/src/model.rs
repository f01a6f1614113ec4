//! Domain types shared by every other module: system configuration,
//! scenarios, the tri-hybrid beamformer and optimizer controls.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical and dimensional parameters of the tri-hybrid transmitter.
///
/// `num_users` doubles as the number of RF chains. Each chain drives
/// `ps_per_chain` phase shifters and every phase shifter feeds one RHS of
/// `elements_per_rhs` elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub carrier_freq: f64,
    pub num_users: usize,
    pub ps_per_chain: usize,
    pub elements_per_rhs: usize,
    pub num_sense_dirs: usize,
    pub spacing_x: f64,
    pub spacing_y: f64,
    pub surface_wavenumber: f64,
    pub radiation_efficiency: f64,
    pub radiation_prob: f64,
    pub noise_power: f64,
    pub power_budget: f64,
    pub rate_threshold: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let carrier_freq = 30e9;
        let lambda = SPEED_OF_LIGHT / carrier_freq;
        Self {
            carrier_freq,
            num_users: 4,
            ps_per_chain: 4,
            elements_per_rhs: 48,
            num_sense_dirs: 5,
            spacing_x: lambda / 2.0,
            spacing_y: lambda / 4.0,
            surface_wavenumber: 2.0 * 3f64.sqrt() * PI / lambda,
            radiation_efficiency: 0.8,
            radiation_prob: 0.5,
            noise_power: 0.1,
            power_budget: 1.0,
            rate_threshold: 4.0,
        }
    }
}

impl SystemConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    pub fn free_space_wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Total number of phase shifters (= number of RHS subarrays), `N·M`.
    pub fn num_subarrays(&self) -> usize {
        self.num_users * self.ps_per_chain
    }

    /// Total number of radiating elements, `N·M·L`.
    pub fn num_elements(&self) -> usize {
        self.num_subarrays() * self.elements_per_rhs
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.power_budget / self.noise_power).log10()
    }

    /// Sets `σ² = P_max / 10^(snr/10)` keeping the power budget fixed.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.noise_power = self.power_budget / 10f64.powf(snr_db / 10.0);
        self
    }

    pub fn with_elements(mut self, l: usize) -> Self {
        self.elements_per_rhs = l;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("num_users", self.num_users),
            ("ps_per_chain", self.ps_per_chain),
            ("elements_per_rhs", self.elements_per_rhs),
            ("num_sense_dirs", self.num_sense_dirs),
        ] {
            if v < 1 {
                return Err(Error::RangeError {
                    what: what.into(),
                    value: v as f64,
                });
            }
        }
        let positive = [
            ("carrier_freq", self.carrier_freq),
            ("spacing_x", self.spacing_x),
            ("spacing_y", self.spacing_y),
            ("noise_power", self.noise_power),
            ("power_budget", self.power_budget),
        ];
        for (what, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::RangeError {
                    what: what.into(),
                    value: v,
                });
            }
        }
        if !(self.rate_threshold >= 0.0) {
            return Err(Error::RangeError {
                what: "rate_threshold".into(),
                value: self.rate_threshold,
            });
        }
        for (what, v) in [
            ("radiation_efficiency", self.radiation_efficiency),
            ("radiation_prob", self.radiation_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::RangeError {
                    what: what.into(),
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// Elevation/azimuth pair in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub elevation: f64,
    pub azimuth: f64,
}

impl Direction {
    pub fn new(elevation: f64, azimuth: f64) -> Self {
        Self { elevation, azimuth }
    }

    pub fn from_degrees(elevation_deg: f64, azimuth_deg: f64) -> Self {
        Self::new(elevation_deg.to_radians(), azimuth_deg.to_radians())
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI / 2.0 + 1e-12).contains(&self.elevation) {
            return Err(Error::RangeError {
                what: "elevation".into(),
                value: self.elevation,
            });
        }
        if !(0.0..2.0 * PI).contains(&self.azimuth) {
            return Err(Error::RangeError {
                what: "azimuth".into(),
                value: self.azimuth,
            });
        }
        Ok(())
    }
}

/// One propagation path of a user channel; kept so the same channel can be
/// re-synthesized on a different array geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub gain: C64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub channels: Vec<Vec<C64>>,
    pub sense_dirs: Vec<Direction>,
    pub desired_gains: Vec<f64>,
    pub seed: u64,
    /// Multipath description behind `channels`, when they were synthesized.
    #[serde(default)]
    pub user_paths: Vec<Vec<PathComponent>>,
}

/// Digital, analog and RHS (EM-layer) beamformers.
///
/// The analog layer is stored as one phase per phase shifter, so the unit
/// modulus constraint holds by construction. Phase shifter `i` belongs to RF
/// chain `i / ps_per_chain` and drives row `i` of the amplitude and
/// coefficient matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriHybridBeamformer {
    pub digital: CMatrix,
    pub analog_phases: Vec<f64>,
    pub rhs_amplitudes: RMatrix,
    pub rhs_phase_coeffs: CMatrix,
    pub ps_per_chain: usize,
}

pub fn wrap_phase(x: f64) -> f64 {
    let w = x.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

impl TriHybridBeamformer {
    pub fn new(
        digital: CMatrix,
        analog_phases: Vec<f64>,
        rhs_amplitudes: RMatrix,
        rhs_phase_coeffs: CMatrix,
        ps_per_chain: usize,
    ) -> Result<Self> {
        let m = digital.rows;
        if digital.cols != m {
            return Err(Error::DimensionMismatch {
                what: "digital beamformer columns".into(),
                expected: m,
                got: digital.cols,
            });
        }
        let k = m * ps_per_chain;
        if analog_phases.len() != k {
            return Err(Error::DimensionMismatch {
                what: "analog phases".into(),
                expected: k,
                got: analog_phases.len(),
            });
        }
        if rhs_amplitudes.rows != k {
            return Err(Error::DimensionMismatch {
                what: "amplitude rows".into(),
                expected: k,
                got: rhs_amplitudes.rows,
            });
        }
        if rhs_phase_coeffs.rows != k || rhs_phase_coeffs.cols != rhs_amplitudes.cols {
            return Err(Error::DimensionMismatch {
                what: "coefficient matrix".into(),
                expected: k * rhs_amplitudes.cols,
                got: rhs_phase_coeffs.rows * rhs_phase_coeffs.cols,
            });
        }
        if let Some(&a) = rhs_amplitudes
            .data
            .iter()
            .find(|a| !(0.0..=1.0).contains(*a))
        {
            return Err(Error::RangeError {
                what: "rhs amplitude".into(),
                value: a,
            });
        }
        Ok(Self {
            digital,
            analog_phases: analog_phases.into_iter().map(wrap_phase).collect(),
            rhs_amplitudes,
            rhs_phase_coeffs,
            ps_per_chain,
        })
    }

    pub fn num_chains(&self) -> usize {
        self.digital.rows
    }

    pub fn num_subarrays(&self) -> usize {
        self.analog_phases.len()
    }

    pub fn elements_per_subarray(&self) -> usize {
        self.rhs_amplitudes.cols
    }

    pub fn chain_of(&self, i: usize) -> usize {
        i / self.ps_per_chain
    }

    pub fn analog_entry(&self, i: usize) -> C64 {
        C64::from_polar(1.0, self.analog_phases[i])
    }

    /// Dense block-diagonal `F_A` of shape `NM × M`.
    pub fn analog_matrix(&self) -> CMatrix {
        let mut fa = CMatrix::zeros(self.num_subarrays(), self.num_chains());
        for i in 0..self.num_subarrays() {
            fa[(i, self.chain_of(i))] = self.analog_entry(i);
        }
        fa
    }

    /// Dense block-diagonal `F_E` of shape `NML × NM`.
    pub fn em_matrix(&self) -> CMatrix {
        let (k, l) = (self.num_subarrays(), self.elements_per_subarray());
        let mut fe = CMatrix::zeros(k * l, k);
        for i in 0..k {
            for e in 0..l {
                fe[(i * l + e, i)] = self.rhs_amplitudes[(i, e)] * self.rhs_phase_coeffs[(i, e)];
            }
        }
        fe
    }

    /// `‖F_A F_D‖_F²`.
    pub fn transmit_power(&self) -> f64 {
        (0..self.num_subarrays())
            .map(|i| {
                let r = self.chain_of(i);
                (0..self.num_chains())
                    .map(|m| self.digital[(r, m)].norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    /// Rescales `F_D` so that the power budget holds; returns whether a
    /// rescale happened.
    pub fn repair_power(&mut self, p_max: f64) -> bool {
        let p = self.transmit_power();
        if p > p_max {
            self.digital.scale((p_max / p).sqrt());
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyState {
    pub mu: f64,
    pub rho: f64,
    pub mu_min: f64,
    pub mu_max: f64,
}

impl Default for PenaltyState {
    fn default() -> Self {
        Self {
            mu: 1.0,
            rho: 1.5,
            mu_min: 1.0,
            mu_max: 1000.0,
        }
    }
}

impl PenaltyState {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 1.0) {
            return Err(Error::RangeError {
                what: "penalty rho".into(),
                value: self.rho,
            });
        }
        if !(self.mu_min <= self.mu && self.mu <= self.mu_max) {
            return Err(Error::RangeError {
                what: "penalty mu".into(),
                value: self.mu,
            });
        }
        Ok(())
    }
}

/// Loop controls of the alternating optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerParams {
    pub max_outer: usize,
    pub sqp_inner: usize,
    pub joint_inner: usize,
    pub sense_tol: f64,
    pub penalty: PenaltyState,
    pub armijo_c1: f64,
    pub backtrack_ratio: f64,
    pub max_backtracks: usize,
    pub step_init_fe: f64,
    pub step_init_fa: f64,
    pub step_min: f64,
    pub step_max: f64,
    /// The penalty targets `R_th·(1 + rate_margin)` so iterates settle
    /// strictly above `R_th` instead of approaching it from below.
    pub rate_margin: f64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            max_outer: 30,
            sqp_inner: 10,
            joint_inner: 60,
            sense_tol: 0.001,
            penalty: PenaltyState::default(),
            armijo_c1: 1e-4,
            backtrack_ratio: 0.5,
            max_backtracks: 30,
            step_init_fe: 1e-2,
            step_init_fa: 1e-2,
            step_min: 1e-8,
            step_max: 1.0,
            rate_margin: 0.0125,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("max_outer", self.max_outer),
            ("sqp_inner", self.sqp_inner),
            ("joint_inner", self.joint_inner),
        ] {
            if v < 1 {
                return Err(Error::RangeError {
                    what: what.into(),
                    value: v as f64,
                });
            }
        }
        if !(self.rate_margin >= 0.0) {
            return Err(Error::RangeError {
                what: "rate_margin".into(),
                value: self.rate_margin,
            });
        }
        if !(self.step_min > 0.0 && self.step_min <= self.step_max) {
            return Err(Error::RangeError {
                what: "step_min".into(),
                value: self.step_min,
            });
        }
        if !(self.sense_tol > 0.0) {
            return Err(Error::RangeError {
                what: "sense_tol".into(),
                value: self.sense_tol,
            });
        }
        for (what, v) in [
            ("armijo_c1", self.armijo_c1),
            ("backtrack_ratio", self.backtrack_ratio),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::RangeError {
                    what: what.into(),
                    value: v,
                });
            }
        }
        self.penalty.validate()
    }
}

/// One record per outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sensing_error: f64,
    pub min_rate: f64,
    pub mu: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub beamformer: TriHybridBeamformer,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    pub iterations: usize,
    pub line_search_failures: usize,
}

impl OptimizationResult {
    pub fn final_record(&self) -> Option<&TraceRecord> {
        self.trace.last()
    }
}

/// Checks every invariant of `cfg` and `scn` together.
pub fn validate(cfg: &SystemConfig, scn: &Scenario) -> Result<()> {
    cfg.validate()?;
    let nml = cfg.num_elements();
    if scn.channels.len() != cfg.num_users {
        return Err(Error::DimensionMismatch {
            what: "number of user channels".into(),
            expected: cfg.num_users,
            got: scn.channels.len(),
        });
    }
    for h in &scn.channels {
        if h.len() != nml {
            return Err(Error::DimensionMismatch {
                what: "channel length".into(),
                expected: nml,
                got: h.len(),
            });
        }
    }
    if scn.sense_dirs.len() != scn.desired_gains.len() {
        return Err(Error::DimensionMismatch {
            what: "desired gains".into(),
            expected: scn.sense_dirs.len(),
            got: scn.desired_gains.len(),
        });
    }
    if scn.sense_dirs.len() != cfg.num_sense_dirs {
        return Err(Error::DimensionMismatch {
            what: "sensing directions".into(),
            expected: cfg.num_sense_dirs,
            got: scn.sense_dirs.len(),
        });
    }
    for d in &scn.sense_dirs {
        d.validate()?;
    }
    if let Some(&b) = scn.desired_gains.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::RangeError {
            what: "desired gain".into(),
            value: b,
        });
    }
    if !scn.desired_gains.iter().any(|&b| b > 0.0) {
        return Err(Error::Invalid(
            "at least one desired gain must be positive".into(),
        ));
    }
    Ok(())
}

/// JSON form of [`SystemConfig`]. Spacings are in wavelengths and the
/// surface wavenumber is given relative to the free-space wavenumber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfigFile {
    pub carrier_freq_hz: f64,
    pub num_users: usize,
    pub ps_per_chain: usize,
    pub elements_per_rhs: usize,
    pub num_sense_dirs: usize,
    pub spacing_x_wavelengths: f64,
    pub spacing_y_wavelengths: f64,
    pub surface_wavenumber_ratio: f64,
    pub radiation_efficiency: f64,
    pub radiation_prob: f64,
    pub power_budget_w: f64,
    pub snr_db: f64,
    pub rate_threshold: f64,
}

impl Default for SystemConfigFile {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 30e9,
            num_users: 4,
            ps_per_chain: 4,
            elements_per_rhs: 48,
            num_sense_dirs: 5,
            spacing_x_wavelengths: 0.5,
            spacing_y_wavelengths: 0.25,
            surface_wavenumber_ratio: 3f64.sqrt(),
            radiation_efficiency: 0.8,
            radiation_prob: 0.5,
            power_budget_w: 1.0,
            snr_db: 10.0,
            rate_threshold: 4.0,
        }
    }
}

impl SystemConfigFile {
    pub fn to_config(&self) -> Result<SystemConfig> {
        let lambda = SPEED_OF_LIGHT / self.carrier_freq_hz;
        let cfg = SystemConfig {
            carrier_freq: self.carrier_freq_hz,
            num_users: self.num_users,
            ps_per_chain: self.ps_per_chain,
            elements_per_rhs: self.elements_per_rhs,
            num_sense_dirs: self.num_sense_dirs,
            spacing_x: self.spacing_x_wavelengths * lambda,
            spacing_y: self.spacing_y_wavelengths * lambda,
            surface_wavenumber: self.surface_wavenumber_ratio * 2.0 * PI / lambda,
            radiation_efficiency: self.radiation_efficiency,
            radiation_prob: self.radiation_prob,
            noise_power: 1.0,
            power_budget: self.power_budget_w,
            rate_threshold: self.rate_threshold,
        }
        .with_snr_db(self.snr_db);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A sensing direction in file form (degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetFile {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub desired_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    /// `[re, im]`
    pub gain: [f64; 2],
}

/// Explicit scenario document: per-user multipath and sensing targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub users: Vec<Vec<PathFile>>,
    pub targets: Vec<TargetFile>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioFile {
    pub fn to_scenario(&self, cfg: &SystemConfig) -> Result<Scenario> {
        let user_paths: Vec<Vec<PathComponent>> = self
            .users
            .iter()
            .map(|paths| {
                paths
                    .iter()
                    .map(|p| PathComponent {
                        gain: C64::new(p.gain[0], p.gain[1]),
                        direction: Direction::from_degrees(p.elevation_deg, p.azimuth_deg),
                    })
                    .collect()
            })
            .collect();
        for d in user_paths.iter().flatten() {
            d.direction.validate()?;
        }
        let geometry = crate::array::Geometry::tri_hybrid(cfg);
        let channels = user_paths
            .iter()
            .map(|paths| crate::array::channel_from_paths(paths, &geometry))
            .collect();
        let scn = Scenario {
            channels,
            sense_dirs: self
                .targets
                .iter()
                .map(|t| Direction::from_degrees(t.elevation_deg, t.azimuth_deg))
                .collect(),
            desired_gains: self.targets.iter().map(|t| t.desired_gain).collect(),
            seed: self.seed,
            user_paths,
        };
        validate(cfg, &scn)?;
        Ok(scn)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{generate_channel, ChannelParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(cfg: &SystemConfig, len: usize) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut channels: Vec<Vec<C64>> = (0..cfg.num_users)
            .map(|_| generate_channel(&ChannelParams::default(), cfg, &mut rng).0)
            .collect();
        channels[0].resize(len, C64::new(0.0, 0.0));
        Scenario {
            channels,
            sense_dirs: vec![Direction::from_degrees(30.0, 40.0); cfg.num_sense_dirs],
            desired_gains: vec![1.0; cfg.num_sense_dirs],
            seed: 1,
            user_paths: vec![],
        }
    }

    #[test]
    fn default_config_matches_published_setup() {
        let cfg = SystemConfig::default();
        let lambda = cfg.wavelength();
        assert!((lambda - 0.00999308193).abs() < 1e-9);
        assert!((cfg.spacing_x - lambda / 2.0).abs() < 1e-15);
        assert!((cfg.spacing_y - lambda / 4.0).abs() < 1e-15);
        assert!((cfg.surface_wavenumber * lambda - 2.0 * 3f64.sqrt() * PI).abs() < 1e-9);
        assert_eq!((cfg.num_users, cfg.ps_per_chain, cfg.num_sense_dirs), (4, 4, 5));
        assert!((cfg.snr_db() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn validate_accepts_matching_channel_length() {
        let cfg = SystemConfig::default().with_elements(48);
        assert_eq!(cfg.num_elements(), 768);
        validate(&cfg, &scenario(&cfg, 768)).unwrap();
    }

    #[test]
    fn validate_rejects_short_channel() {
        let cfg = SystemConfig::default().with_elements(48);
        let err = validate(&cfg, &scenario(&cfg, 767)).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 768,
                got: 767,
                ..
            }
        ));
    }

    #[test]
    fn validate_rejects_efficiency_above_one() {
        let mut cfg = SystemConfig::default().with_elements(4);
        let scn = scenario(&cfg, cfg.num_elements());
        cfg.radiation_efficiency = 1.2;
        assert!(matches!(
            validate(&cfg, &scn),
            Err(Error::RangeError { .. })
        ));
    }

    #[test]
    fn validate_rejects_bad_angles_and_gains() {
        let cfg = SystemConfig::default().with_elements(4);
        let mut scn = scenario(&cfg, cfg.num_elements());
        scn.sense_dirs[0] = Direction::new(2.0, 0.0);
        assert!(matches!(validate(&cfg, &scn), Err(Error::RangeError { .. })));
        let mut scn = scenario(&cfg, cfg.num_elements());
        scn.desired_gains = vec![0.0; cfg.num_sense_dirs];
        assert!(validate(&cfg, &scn).is_err());
        scn.desired_gains[1] = -1.0;
        assert!(matches!(validate(&cfg, &scn), Err(Error::RangeError { .. })));
    }

    #[test]
    fn analog_entries_are_unit_modulus() {
        let bf = TriHybridBeamformer::new(
            CMatrix::identity(2),
            vec![0.3, -1.0, 7.5, 2.0],
            RMatrix::filled(4, 3, 0.5),
            CMatrix::from_fn(4, 3, |_, _| C64::new(1.0, 0.0)),
            2,
        )
        .unwrap();
        let fa = bf.analog_matrix();
        for i in 0..4 {
            for m in 0..2 {
                let z = fa[(i, m)];
                if m == bf.chain_of(i) {
                    assert!((z.norm() - 1.0).abs() <= 1e-12);
                } else {
                    assert_eq!(z, C64::new(0.0, 0.0));
                }
            }
        }
        assert!(bf.analog_phases.iter().all(|p| (0.0..2.0 * PI).contains(p)));
    }

    #[test]
    fn amplitude_out_of_range_is_rejected() {
        let err = TriHybridBeamformer::new(
            CMatrix::identity(1),
            vec![0.0],
            RMatrix::filled(1, 2, 1.5),
            CMatrix::zeros(1, 2),
            1,
        );
        assert!(matches!(err, Err(Error::RangeError { .. })));
    }

    #[test]
    fn power_repair_meets_budget() {
        let mut bf = TriHybridBeamformer::new(
            CMatrix::from_fn(2, 2, |r, c| C64::new(1.0 + r as f64, c as f64)),
            vec![0.0; 6],
            RMatrix::filled(6, 2, 0.5),
            CMatrix::zeros(6, 2),
            3,
        )
        .unwrap();
        let fa_fd = bf.analog_matrix().matmul(&bf.digital);
        assert!((fa_fd.frobenius_sq() - bf.transmit_power()).abs() < 1e-12);
        assert!(bf.repair_power(2.0));
        assert!((bf.transmit_power() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn config_file_converts_degrees_and_snr() {
        let file: SystemConfigFile =
            serde_json::from_str(r#"{"elements_per_rhs": 24, "snr_db": 20}"#).unwrap();
        let cfg = file.to_config().unwrap();
        assert_eq!(cfg.elements_per_rhs, 24);
        assert!((cfg.noise_power - 0.01).abs() < 1e-15);
        let err = serde_json::from_str::<SystemConfigFile>(r#"{"bogus": 1}"#);
        assert!(err.unwrap_err().to_string().contains("bogus"));
    }
}
