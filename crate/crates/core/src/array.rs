//! Array and propagation physics: steering vectors, RHS element
//! coefficients and Saleh-Valenzuela channel synthesis.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::model::{Direction, PathComponent, SystemConfig};

/// Element layout of a partially-connected transmitter: `num_chains` RF
/// chains, `ps_per_chain` phase shifters per chain and `elements_per_ps`
/// radiating elements behind each phase shifter. Element `e` of phase
/// shifter `i` sits at `positions[i * elements_per_ps + e]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub num_chains: usize,
    pub ps_per_chain: usize,
    pub elements_per_ps: usize,
    pub wavenumber: f64,
    pub positions: Vec<[f64; 2]>,
}

impl Geometry {
    /// UPA with `NM` columns spaced `d_x` and `L` rows spaced `d_y`.
    pub fn tri_hybrid(cfg: &SystemConfig) -> Self {
        let k = cfg.num_subarrays();
        let l = cfg.elements_per_rhs;
        let mut positions = Vec::with_capacity(k * l);
        for i in 0..k {
            for e in 0..l {
                positions.push([i as f64 * cfg.spacing_x, e as f64 * cfg.spacing_y]);
            }
        }
        Self {
            num_chains: cfg.num_users,
            ps_per_chain: cfg.ps_per_chain,
            elements_per_ps: l,
            wavenumber: cfg.free_space_wavenumber(),
            positions,
        }
    }

    /// Half-wavelength `rows × cols` phased array with one phase shifter per
    /// element. Elements are numbered column-major so contiguous index
    /// blocks map to contiguous column blocks of the grid.
    pub fn phased_array(rows: usize, cols: usize, num_chains: usize, wavelength: f64) -> Result<Self> {
        let total = rows * cols;
        if num_chains == 0 || total == 0 || total % num_chains != 0 {
            return Err(Error::PartitionError {
                elements: total,
                chains: num_chains,
            });
        }
        let d = wavelength / 2.0;
        let positions = (0..total)
            .map(|e| [(e / rows) as f64 * d, (e % rows) as f64 * d])
            .collect();
        Ok(Self {
            num_chains,
            ps_per_chain: total / num_chains,
            elements_per_ps: 1,
            wavenumber: 2.0 * std::f64::consts::PI / wavelength,
            positions,
        })
    }

    pub fn num_subarrays(&self) -> usize {
        self.num_chains * self.ps_per_chain
    }

    pub fn num_elements(&self) -> usize {
        self.positions.len()
    }

    /// Unit-norm steering vector.
    pub fn steering(&self, dir: &Direction) -> Vec<C64> {
        let st = dir.elevation.sin();
        let ux = st * dir.azimuth.cos();
        let uy = st * dir.azimuth.sin();
        let norm = 1.0 / (self.positions.len() as f64).sqrt();
        self.positions
            .iter()
            .map(|[x, y]| C64::from_polar(norm, self.wavenumber * (x * ux + y * uy)))
            .collect()
    }
}

/// `a(θ, φ) = a_h ⊗ a_v` for the tri-hybrid UPA, unit norm.
pub fn steering_vector(dir: &Direction, cfg: &SystemConfig) -> Vec<C64> {
    let k0 = cfg.free_space_wavenumber();
    let nm = cfg.num_subarrays();
    let l = cfg.elements_per_rhs;
    let st = dir.elevation.sin();
    let ph = k0 * cfg.spacing_x * st * dir.azimuth.cos();
    let pv = k0 * cfg.spacing_y * st * dir.azimuth.sin();
    let a_h: Vec<C64> = (0..nm)
        .map(|i| C64::from_polar(1.0 / (nm as f64).sqrt(), ph * i as f64))
        .collect();
    let a_v: Vec<C64> = (0..l)
        .map(|e| C64::from_polar(1.0 / (l as f64).sqrt(), pv * e as f64))
        .collect();
    a_h.iter()
        .flat_map(|h| a_v.iter().map(move |v| h * v))
        .collect()
}

/// Energy coefficient `w_l = sqrt(η (1 - p_on η)^l)` for zero-based `l`.
pub fn energy_coefficient(l: usize, cfg: &SystemConfig) -> f64 {
    let eta = cfg.radiation_efficiency;
    (eta * (1.0 - cfg.radiation_prob * eta).powi(l as i32)).sqrt()
}

/// Coefficient vector `c_n` of subarray `n` (zero-based): entry `l` is
/// `w_l exp(-j k_s r_l)` with the feed on the subarray edge, `r_l = l d_y`.
///
/// The geometry is identical for every subarray so `n` only has to be in
/// range.
pub fn rhs_coefficients(n: usize, cfg: &SystemConfig) -> Vec<C64> {
    assert!(n < cfg.num_subarrays(), "subarray index out of range");
    (0..cfg.elements_per_rhs)
        .map(|l| {
            let r = l as f64 * cfg.spacing_y;
            C64::from_polar(energy_coefficient(l, cfg), -cfg.surface_wavenumber * r)
        })
        .collect()
}

/// All `c_n` stacked as rows, shape `NM × L`.
pub fn rhs_coefficient_matrix(cfg: &SystemConfig) -> CMatrix {
    let k = cfg.num_subarrays();
    let rows: Vec<Vec<C64>> = (0..k).map(|n| rhs_coefficients(n, cfg)).collect();
    CMatrix::from_fn(k, cfg.elements_per_rhs, |r, c| rows[r][c])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub num_paths: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self { num_paths: 3 }
    }
}

pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    Direction::new(
        rng.random::<f64>() * std::f64::consts::FRAC_PI_2,
        rng.random::<f64>() * 2.0 * std::f64::consts::PI,
    )
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

pub fn random_paths<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> Vec<PathComponent> {
    (0..params.num_paths.max(1))
        .map(|_| {
            let gain = complex_gaussian(rng);
            PathComponent {
                gain,
                direction: random_direction(rng),
            }
        })
        .collect()
}

/// `h = sqrt(n / Z) Σ_z β_z a(θ_z, φ_z)` on an arbitrary geometry.
pub fn channel_from_paths(paths: &[PathComponent], geometry: &Geometry) -> Vec<C64> {
    let n = geometry.num_elements();
    let scale = (n as f64 / paths.len().max(1) as f64).sqrt();
    let mut h = vec![C64::new(0.0, 0.0); n];
    for p in paths {
        for (hi, ai) in h.iter_mut().zip(geometry.steering(&p.direction)) {
            *hi += p.gain * ai * scale;
        }
    }
    h
}

/// Draws one user channel on the tri-hybrid array; also returns the paths.
pub fn generate_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    cfg: &SystemConfig,
    rng: &mut R,
) -> (Vec<C64>, Vec<PathComponent>) {
    let paths = random_paths(params, rng);
    (channel_from_paths(&paths, &Geometry::tri_hybrid(cfg)), paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn small_cfg() -> SystemConfig {
        SystemConfig {
            num_users: 2,
            ps_per_chain: 2,
            elements_per_rhs: 2,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn broadside_steering_is_flat() {
        let cfg = SystemConfig::default().with_elements(6);
        let a = steering_vector(&Direction::new(0.0, 1.234), &cfg);
        let v = 1.0 / (cfg.num_elements() as f64).sqrt();
        for z in a {
            assert!((z - C64::new(v, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn steering_entry_matches_closed_form() {
        let cfg = small_cfg();
        let a = steering_vector(&Direction::from_degrees(30.0, 45.0), &cfg);
        // h-index 1, v-index 1 -> flat index 1 * L + 1
        let s30 = 0.5_f64;
        let c45 = (PI / 4.0).cos();
        let s45 = (PI / 4.0).sin();
        let expected = C64::from_polar(1.0 / 8f64.sqrt(), PI * s30 * c45)
            * C64::from_polar(1.0, PI / 2.0 * s30 * s45);
        assert!((a[3] - expected).norm() < 1e-14);
    }

    #[test]
    fn kronecker_and_position_forms_agree() {
        let cfg = SystemConfig::default().with_elements(5);
        let geo = Geometry::tri_hybrid(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let d = random_direction(&mut rng);
            let a = steering_vector(&d, &cfg);
            let b = geo.steering(&d);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn steering_is_unit_norm_and_periodic_in_azimuth() {
        let cfg = SystemConfig::default().with_elements(7);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let d = random_direction(&mut rng);
            let a = steering_vector(&d, &cfg);
            assert!((norm(&a) - 1.0).abs() < 1e-12);
            let b = steering_vector(&Direction::new(d.elevation, d.azimuth + 2.0 * PI), &cfg);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn first_coefficient_has_sqrt_eta_magnitude() {
        let cfg = SystemConfig::default().with_elements(8);
        let c = rhs_coefficients(0, &cfg);
        assert!((c[0] - C64::new(0.8f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((c[1].norm() - 0.48f64.sqrt()).abs() < 1e-15);
        for w in c.windows(2) {
            assert!(w[1].norm() < w[0].norm());
        }
    }

    #[test]
    fn coefficients_identical_across_subarrays() {
        let cfg = SystemConfig::default().with_elements(8);
        let c = rhs_coefficient_matrix(&cfg);
        for r in 1..c.rows {
            for l in 0..c.cols {
                assert_eq!(c[(r, l)], c[(0, l)]);
            }
        }
    }

    #[test]
    fn single_path_channel_norm() {
        let cfg = small_cfg();
        let geo = Geometry::tri_hybrid(&cfg);
        let d = Direction::from_degrees(20.0, 100.0);
        let h = channel_from_paths(
            &[PathComponent {
                gain: C64::new(1.0, 0.0),
                direction: d,
            }],
            &geo,
        );
        assert_eq!(h.len(), 8);
        assert!((norm(&h) - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn channel_generation_is_deterministic() {
        let cfg = small_cfg();
        let p = ChannelParams::default();
        let a = generate_channel(&p, &cfg, &mut ChaCha8Rng::seed_from_u64(77)).0;
        let b = generate_channel(&p, &cfg, &mut ChaCha8Rng::seed_from_u64(77)).0;
        assert_eq!(a, b);
    }

    #[test]
    fn mean_channel_energy_is_element_count() {
        let cfg = small_cfg();
        let p = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 10_000;
        let mean = (0..draws)
            .map(|_| {
                let h = generate_channel(&p, &cfg, &mut rng).0;
                assert_eq!(h.len(), cfg.num_elements());
                norm(&h).powi(2)
            })
            .sum::<f64>()
            / draws as f64;
        let nml = cfg.num_elements() as f64;
        assert!((mean - nml).abs() / nml <= 0.05, "mean {mean}");
    }

    #[test]
    fn phased_array_partitions() {
        let lambda = 0.01;
        let g = Geometry::phased_array(14, 14, 4, lambda).unwrap();
        assert_eq!((g.num_subarrays(), g.ps_per_chain), (196, 49));
        let g = Geometry::phased_array(18, 18, 4, lambda).unwrap();
        assert_eq!(g.num_subarrays(), 324);
        assert!(matches!(
            Geometry::phased_array(3, 3, 4, lambda),
            Err(Error::PartitionError { .. })
        ));
    }
}
