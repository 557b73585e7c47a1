//! Four-spectrum reduction to h/m.
//!
//! Each spectrum of a set is labelled by (sign N, Raman direction). With
//! `c = s·r·D + r·G + b` for recoil shift D, free-fall term G and common
//! level shift b, the per-spectrum magnitudes average to D exactly, which is
//! what removes gravity and direction-independent shifts.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::InterferometerConfig;
use crate::error::{Error, Result};
use crate::fit::{fit_central_fringe, FringeFit};
use crate::io;
use crate::quantity::Quantity;
use crate::sim::Spectrum;

const SIGN_PATTERN: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEntry {
    pub config: InterferometerConfig,
    pub fit: FringeFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSet {
    pub entries: Vec<SetEntry>,
    pub label: String,
    #[serde(default)]
    pub timestamp: String,
}

impl SpectrumSet {
    pub fn new(label: impl Into<String>, timestamp: impl Into<String>, entries: Vec<SetEntry>) -> Result<Self> {
        let set = SpectrumSet { entries, label: label.into(), timestamp: timestamp.into() };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.len() != 4 {
            return Err(Error::InvalidSet(format!("need exactly 4 spectra, got {}", self.entries.len())));
        }
        let mut seen: Vec<(i8, i8)> = Vec::with_capacity(4);
        for e in &self.entries {
            e.config.validate()?;
            let key = (e.config.sign_n(), e.config.raman_direction);
            if key.0 == 0 {
                return Err(Error::InvalidSet("N = 0 in a measurement spectrum".into()));
            }
            if seen.contains(&key) {
                return Err(Error::InvalidSet(format!("sign pattern {key:?} appears twice")));
            }
            seen.push(key);
        }
        if !SIGN_PATTERN.iter().all(|k| seen.contains(k)) {
            return Err(Error::InvalidSet(format!("sign patterns {seen:?} do not cover all four columns")));
        }
        let c0 = &self.entries[0].config;
        for e in &self.entries[1..] {
            let c = &e.config;
            let same = c.t_ramsey == c0.t_ramsey
                && c.tau_pulse == c0.tau_pulse
                && c.k1 == c0.k1
                && c.k2 == c0.k2
                && c.k_bloch == c0.k_bloch
                && c.n_bloch.abs() == c0.n_bloch.abs();
            if !same {
                return Err(Error::InvalidSet(
                    "entries differ in T_R, τ, k₁, k₂, k_B or |N|".into(),
                ));
            }
        }
        Ok(())
    }

    /// 2·N·k_B·(k₁+k₂), the recoil scale of the set.
    fn recoil_scale(&self) -> f64 {
        let c = &self.entries[0].config;
        2.0 * c.n_bloch.unsigned_abs() as f64 * c.k_bloch * (c.k1 + c.k2)
    }

    fn checked_centers(&self) -> Result<Vec<&Quantity>> {
        self.validate()?;
        self.entries
            .iter()
            .enumerate()
            .map(|(index, e)| {
                if !e.fit.converged {
                    return Err(Error::UnconvergedFit { index });
                }
                let c = &e.fit.center;
                c.ensure_unit("Hz")?;
                if c.value.abs() < 10.0 * c.sigma {
                    return Err(Error::SuspiciousFit { index, center_hz: c.value, sigma_hz: c.sigma });
                }
                Ok(c)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HOverMResult {
    pub h_over_m: Quantity,
    pub hbar_over_m: Quantity,
    pub inputs: SpectrumSet,
}

/// ħ/m = ¼ Σ 2π|δ_sel − δ_meas| / (2 N k_B (k₁ + k₂)), with N = |n_bloch|.
pub fn reduce_set(set: &SpectrumSet) -> Result<HOverMResult> {
    let centers = set.checked_centers()?;
    let scale = set.recoil_scale();
    let sum_abs: f64 = centers.iter().map(|c| 2.0 * PI * c.value.abs()).sum();
    let var: f64 = centers.iter().map(|c| c.sigma * c.sigma).sum();
    let hbar = Quantity::with_unit(0.25 * sum_abs / scale, 0.25 * 2.0 * PI * var.sqrt() / scale, "m^2 s^-1");
    let h = hbar.scale(2.0 * PI);
    Ok(HOverMResult { h_over_m: h, hbar_over_m: hbar, inputs: set.clone() })
}

/// The four centers solved for each term of the sign scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    /// Σ s·r·c / 4: the recoil shift D.
    pub recoil_shift: Quantity,
    /// Σ r·c / 4: the free-fall Doppler term (includes any selection/measurement asymmetry,
    /// which enters with the same signature).
    pub gravity_term: Quantity,
    /// Σ c / 4: shift common to both Raman directions.
    pub common_bias: Quantity,
    /// Σ s·c / 4: zero for a set consistent with the sign scheme.
    pub closure: Quantity,
}

pub fn cancellation_report(set: &SpectrumSet) -> Result<CancellationReport> {
    let centers = set.checked_centers()?;
    let sigma = centers.iter().map(|c| c.sigma * c.sigma).sum::<f64>().sqrt() / 4.0;
    let combo = |w: &dyn Fn(f64, f64) -> f64| -> Quantity {
        let v: f64 = set
            .entries
            .iter()
            .zip(&centers)
            .map(|(e, c)| w(e.config.sign_n() as f64, e.config.raman_direction as f64) * c.value)
            .sum();
        Quantity::with_unit(v / 4.0, sigma, "Hz")
    };
    Ok(CancellationReport {
        recoil_shift: combo(&|s, r| s * r),
        gravity_term: combo(&|_, r| r),
        common_bias: combo(&|_, _| 1.0),
        closure: combo(&|s, _| s),
    })
}

/// One entry of a set manifest: a spectrum to fit, or a center given directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestEntry {
    Spectrum { spectrum_csv: PathBuf, sidecar: PathBuf },
    Center { config: InterferometerConfig, center_hz: f64, sigma_hz: f64 },
}

/// JSON listing the four spectra (or centers) of one determination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetManifest {
    pub label: String,
    #[serde(default)]
    pub timestamp: String,
    pub entries: Vec<ManifestEntry>,
}

impl SetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    /// Reads and fits each listed spectrum; paths are relative to `manifest_path`.
    pub fn resolve(&self, manifest_path: &Path) -> Result<SpectrumSet> {
        let entries = self
            .entries
            .iter()
            .map(|e| match e {
                ManifestEntry::Spectrum { spectrum_csv, sidecar } => {
                    let s = Spectrum::read(&io::resolve(manifest_path, spectrum_csv), &io::resolve(manifest_path, sidecar))?;
                    let fit = fit_central_fringe(&s, None)?;
                    Ok(SetEntry { config: s.config, fit })
                }
                ManifestEntry::Center { config, center_hz, sigma_hz } => Ok(SetEntry {
                    config: config.clone(),
                    fit: FringeFit::from_center(*center_hz, *sigma_hz, config),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        SpectrumSet::new(self.label.clone(), self.timestamp.clone(), entries)
    }
}

impl FringeFit {
    /// A fit record for a center measured elsewhere.
    pub fn from_center(center_hz: f64, sigma_hz: f64, config: &InterferometerConfig) -> FringeFit {
        FringeFit {
            center: Quantity::with_unit(center_hz, sigma_hz, "Hz"),
            contrast: config.contrast,
            offset: 0.5,
            envelope_tau: config.envelope_tau(),
            residual_rms: 0.0,
            n_points: 0,
            iterations: 0,
            converged: sigma_hz >= 0.0 && sigma_hz.is_finite(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::wavevector;
    use approx::assert_relative_eq;

    /// Published four-spectrum set: centers (Hz) and fit uncertainties.
    pub(crate) const TABLE_CENTERS: [(f64, f64); 4] =
        [(15567824.42, 0.15), (-15567822.07, 0.16), (-14612062.24, 0.13), (14612067.77, 0.16)];

    fn cfg780() -> InterferometerConfig {
        let k = wavevector(780.241e-9);
        InterferometerConfig { k1: k, k2: k, k_bloch: k, ..InterferometerConfig::default_config() }
    }

    fn set_from(centers: &[(f64, f64); 4], cfg: &InterferometerConfig) -> SpectrumSet {
        let entries = cfg
            .four_spectrum_set()
            .into_iter()
            .zip(centers)
            .map(|(c, &(v, s))| SetEntry { fit: FringeFit::from_center(v, s, &c), config: c })
            .collect();
        SpectrumSet::new("table", "", entries).unwrap()
    }

    #[test]
    fn published_centers_give_h_over_m() {
        let r = reduce_set(&set_from(&TABLE_CENTERS, &cfg780())).unwrap();
        assert!((r.h_over_m.value / 4.59141e-9 - 1.0).abs() < 0.01, "{}", r.h_over_m);
        assert_eq!(r.h_over_m.value, 2.0 * PI * r.hbar_over_m.value);
        assert_eq!(r.h_over_m.unit.to_string(), "m^2 s^-1");
        // ¼·sqrt(Σσ²) on the mean magnitude: about 5e-9 relative
        let rel = r.h_over_m.relative_sigma();
        assert!(rel > 3e-9 && rel < 7e-9, "{rel}");
    }

    #[test]
    fn symmetric_set_equals_single_inversion() {
        let cfg = cfg780();
        let d = 15_089_944.125;
        let centers = [(d, 0.1), (-d, 0.1), (-d, 0.1), (d, 0.1)];
        let r = reduce_set(&set_from(&centers, &cfg)).unwrap();
        let single = 2.0 * PI * d / (2.0 * 500.0 * cfg.k_bloch * (cfg.k1 + cfg.k2));
        assert_relative_eq!(r.hbar_over_m.value, single, max_relative = 1e-15);
    }

    #[test]
    fn gravity_split_of_published_set() {
        let rep = cancellation_report(&set_from(&TABLE_CENTERS, &cfg780())).unwrap();
        let expected = (15567823.245 - 14612065.005) / 2.0;
        assert!((rep.gravity_term.value - expected).abs() < 0.01, "{}", rep.gravity_term.value);
        assert_relative_eq!(rep.recoil_shift.value, 15_089_944.125, max_relative = 1e-15);
        assert_relative_eq!(rep.common_bias.value, 7.88 / 4.0, max_relative = 1e-6);
    }

    #[test]
    fn magnitude_scaling_is_linear() {
        let cfg = cfg780();
        let base = reduce_set(&set_from(&TABLE_CENTERS, &cfg)).unwrap();
        let s = 1.0173;
        let scaled = TABLE_CENTERS.map(|(v, e)| (v * s, e));
        let r = reduce_set(&set_from(&scaled, &cfg)).unwrap();
        assert_relative_eq!(r.h_over_m.value, base.h_over_m.value * s, max_relative = 1e-15);
    }

    #[test]
    fn rejects_bad_sets() {
        let cfg = cfg780();
        let mut set = set_from(&TABLE_CENTERS, &cfg);
        set.entries[3].config.raman_direction = 1;
        assert!(matches!(reduce_set(&set), Err(Error::InvalidSet(_))));

        let mut set = set_from(&TABLE_CENTERS, &cfg);
        set.entries.pop();
        assert!(matches!(reduce_set(&set), Err(Error::InvalidSet(_))));

        let mut set = set_from(&TABLE_CENTERS, &cfg);
        set.entries[1].config.k_bloch *= 1.0 + 1e-9;
        assert!(matches!(reduce_set(&set), Err(Error::InvalidSet(_))));

        let mut set = set_from(&TABLE_CENTERS, &cfg);
        set.entries[2].fit.converged = false;
        assert!(matches!(reduce_set(&set), Err(Error::UnconvergedFit { index: 2 })));

        let mut set = set_from(&TABLE_CENTERS, &cfg);
        set.entries[0].fit.center = Quantity::with_unit(1.0, 0.2, "Hz");
        assert!(matches!(reduce_set(&set), Err(Error::SuspiciousFit { index: 0, .. })));
    }

    #[test]
    fn manifest_parses_both_entry_kinds() {
        let cfg = cfg780();
        let text = serde_json::json!({
            "label": "x",
            "entries": [
                { "spectrum_csv": "a.csv", "sidecar": "a.json" },
                { "config": cfg, "center_hz": 1.0, "sigma_hz": 0.1 }
            ]
        });
        let m: SetManifest = serde_json::from_value(text).unwrap();
        assert!(matches!(m.entries[0], ManifestEntry::Spectrum { .. }));
        assert!(matches!(m.entries[1], ManifestEntry::Center { .. }));
    }
}
