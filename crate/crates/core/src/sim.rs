//! Synthetic fringe spectra for a configured measurement.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{InterferometerConfig, WorldTruth};
use crate::error::{Error, Result};
use crate::fringe::FringeModel;
use crate::io;

/// Doppler part of the fringe center: 2N recoils of the lattice photons,
/// measured with the Raman pair, in Hz (signed by N).
pub fn recoil_doppler(h_over_m: f64, config: &InterferometerConfig) -> f64 {
    h_over_m * 2.0 * config.n_bloch as f64 * config.k_bloch * (config.k1 + config.k2)
        / (4.0 * PI * PI)
}

/// Doppler shift of the velocity g·T gained between selection and measurement (Hz).
pub fn free_fall_doppler(g: f64, config: &InterferometerConfig) -> f64 {
    (config.k1 + config.k2) * g * config.t_sel_meas / (2.0 * PI)
}

/// δ_sel − δ_meas at which the final fringe is centered.
///
/// `raman · (doppler(N) + fall) + bias_common + raman · bias_sel_meas`.
/// Positive `n_bloch` is taken along the free-fall direction, so the
/// (+N) spectra carry the larger magnitude. The elevator contributes nothing.
pub fn true_center(world: &WorldTruth, config: &InterferometerConfig) -> Result<f64> {
    config.validate()?;
    world.validate()?;
    let r = config.raman_direction as f64;
    let kinematic = recoil_doppler(world.h_over_m_true, config) + free_fall_doppler(world.g, config);
    Ok(r * kinematic + world.bias_direction_independent + r * world.bias_sel_meas_asymmetry)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub delta_hz: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub points: Vec<SpectrumPoint>,
    pub config: InterferometerConfig,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    config: InterferometerConfig,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

impl Spectrum {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.points.len() != self.config.points_per_spectrum {
            return Err(Error::InvalidSpectrum(format!(
                "{} points, config says {}",
                self.points.len(),
                self.config.points_per_spectrum
            )));
        }
        for w in self.points.windows(2) {
            if !(w[1].delta_hz > w[0].delta_hz) {
                return Err(Error::InvalidSpectrum(format!(
                    "detunings not strictly increasing at {} Hz",
                    w[1].delta_hz
                )));
            }
        }
        if let Some(p) = self.points.iter().find(|p| !(0.0..=1.0).contains(&p.ratio)) {
            return Err(Error::InvalidSpectrum(format!("ratio {} outside [0, 1]", p.ratio)));
        }
        Ok(())
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta_hz).collect()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ratio).collect()
    }

    /// Writes the `delta_hz,ratio` table and a JSON sidecar with config and meta.
    pub fn write(&self, csv_path: &Path, sidecar_path: &Path) -> Result<()> {
        io::write_csv(csv_path, &self.points)?;
        io::write_json(sidecar_path, &Sidecar { config: self.config.clone(), meta: self.meta.clone() })
    }

    pub fn read(csv_path: &Path, sidecar_path: &Path) -> Result<Spectrum> {
        let points: Vec<SpectrumPoint> = io::read_csv(csv_path)?;
        let Sidecar { config, meta } = io::read_json(sidecar_path)?;
        let s = Spectrum { points, config, meta };
        s.validate()?;
        Ok(s)
    }
}

/// Deterministic per-run seed from a master seed and a run index (SplitMix64).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Samples `points_per_spectrum` ratios uniformly over `span` around a scan
/// center offset from the true fringe center by up to one fringe period.
pub fn simulate_spectrum(world: &WorldTruth, config: &InterferometerConfig, span: f64) -> Result<Spectrum> {
    let center = true_center(world, config)?;
    let period = config.fringe_period();
    if !(span >= 3.0 * period) {
        return Err(Error::SpanTooSmall { span_hz: span, period_hz: period });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(world.rng_seed);
    let scan_center = center + rng.random_range(-1.0..1.0) * period;
    let lo = scan_center - 0.5 * span;
    let n = config.points_per_spectrum;
    let step = span / (n - 1) as f64;
    let model = FringeModel::from_config(config);
    let noise = (world.noise_amplitude > 0.0)
        .then(|| Normal::new(0.0, world.noise_amplitude).expect("validated noise amplitude"));

    let mut clipped = 0usize;
    let points = (0..n)
        .map(|i| {
            let delta_hz = lo + i as f64 * step;
            let mut ratio = model.at_offset(delta_hz - center);
            if let Some(dist) = &noise {
                ratio += dist.sample(&mut rng);
            }
            if !(0.0..=1.0).contains(&ratio) {
                clipped += 1;
                ratio = ratio.clamp(0.0, 1.0);
            }
            SpectrumPoint { delta_hz, ratio }
        })
        .collect();

    let mut meta = BTreeMap::new();
    meta.insert("true_center_hz".into(), center.to_string());
    meta.insert("scan_center_hz".into(), scan_center.to_string());
    meta.insert("span_hz".into(), span.to_string());
    meta.insert("noise_amplitude".into(), world.noise_amplitude.to_string());
    meta.insert("rng_seed".into(), world.rng_seed.to_string());
    meta.insert("clipped_points".into(), clipped.to_string());
    Ok(Spectrum { points, config: config.clone(), meta })
}
