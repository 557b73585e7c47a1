//! Measurement parameters and simulated ground truth.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CONFIG_JSON: &str = include_str!("../data/config.json");
pub const DEFAULT_WORLD_JSON: &str = include_str!("../data/world.json");

/// Wave-vector of light at vacuum wavelength `lambda` (m).
pub fn wavevector(lambda: f64) -> f64 {
    2.0 * PI / lambda
}

/// Timing and optical parameters of one spectrum.
///
/// Signs follow the columns of a four-spectrum set: `n_bloch` carries the
/// acceleration direction and `raman_direction` the orientation of the
/// Raman beam pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    pub n_bloch: i64,
    pub n_elev_1: i64,
    pub n_elev_2: i64,
    pub raman_direction: i8,
    /// Spacing of the two π/2 pulses of a pair (s).
    pub t_ramsey: f64,
    /// π/2 pulse length (s).
    pub tau_pulse: f64,
    /// Free-fall time between selection and measurement (s).
    pub t_sel_meas: f64,
    pub k1: f64,
    pub k2: f64,
    pub k_bloch: f64,
    pub points_per_spectrum: usize,
    /// Fringe contrast C in (0, 1].
    #[serde(default = "default_contrast")]
    pub contrast: f64,
    /// Pulse length setting the width of the sinc² envelope; `None` uses `tau_pulse`.
    #[serde(default)]
    pub envelope_tau: Option<f64>,
    /// Width of the frequency scan (Hz).
    #[serde(default = "default_span")]
    pub scan_span_hz: f64,
}

fn default_contrast() -> f64 {
    0.6
}

fn default_span() -> f64 {
    2000.0
}

impl InterferometerConfig {
    pub fn default_config() -> Self {
        serde_json::from_str(DEFAULT_CONFIG_JSON).expect("bundled config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_elev_1.abs() != self.n_elev_2.abs() || (self.n_elev_1 != 0 && self.n_elev_1.signum() == self.n_elev_2.signum()) {
            return bad(format!(
                "elevator oscillations must cancel, got {} then {}",
                self.n_elev_1, self.n_elev_2
            ));
        }
        if self.raman_direction != 1 && self.raman_direction != -1 {
            return bad(format!("raman_direction must be ±1, got {}", self.raman_direction));
        }
        for (name, v) in [("k1", self.k1), ("k2", self.k2), ("k_bloch", self.k_bloch), ("t_ramsey", self.t_ramsey), ("tau_pulse", self.tau_pulse)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.t_sel_meas >= 0.0 && self.t_sel_meas.is_finite()) {
            return bad(format!("t_sel_meas must be non-negative, got {}", self.t_sel_meas));
        }
        if self.points_per_spectrum < 10 {
            return bad(format!("points_per_spectrum must be ≥ 10, got {}", self.points_per_spectrum));
        }
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return bad(format!("contrast must be in (0, 1], got {}", self.contrast));
        }
        if let Some(t) = self.envelope_tau {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("envelope_tau must be positive, got {t}"));
            }
        }
        if !(self.scan_span_hz > 0.0 && self.scan_span_hz.is_finite()) {
            return bad(format!("scan_span_hz must be positive, got {}", self.scan_span_hz));
        }
        Ok(())
    }

    pub fn envelope_tau(&self) -> f64 {
        self.envelope_tau.unwrap_or(self.tau_pulse)
    }

    /// Fringe period 1/T_R in Hz.
    pub fn fringe_period(&self) -> f64 {
        1.0 / self.t_ramsey
    }

    pub fn sign_n(&self) -> i8 {
        self.n_bloch.signum() as i8
    }

    /// Copy with the sign pattern of one column of the four-spectrum set.
    pub fn with_signs(&self, sign_n: i8, raman_direction: i8) -> Self {
        let n = self.n_bloch.abs() * sign_n as i64;
        let elev = self.n_elev_1.abs();
        // the elevator moves opposite to the measurement acceleration
        let (e1, e2) = if sign_n > 0 { (-elev, elev) } else { (elev, -elev) };
        InterferometerConfig {
            n_bloch: n,
            n_elev_1: e1,
            n_elev_2: e2,
            raman_direction,
            ..self.clone()
        }
    }

    /// The four configurations of one determination, in table-column order:
    /// (+,+), (+,−), (−,+), (−,−).
    pub fn four_spectrum_set(&self) -> [InterferometerConfig; 4] {
        [
            self.with_signs(1, 1),
            self.with_signs(1, -1),
            self.with_signs(-1, 1),
            self.with_signs(-1, -1),
        ]
    }
}

/// Ground truth for the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldTruth {
    /// h/m of the simulated atom (m² s⁻¹).
    pub h_over_m_true: f64,
    /// Free-fall acceleration along the lattice axis (m s⁻²).
    pub g: f64,
    /// Level shift common to both Raman directions (Hz).
    pub bias_direction_independent: f64,
    /// Level shift that differs between selection and measurement pulses (Hz).
    pub bias_sel_meas_asymmetry: f64,
    /// Standard deviation of the additive population-ratio noise.
    pub noise_amplitude: f64,
    pub rng_seed: u64,
}

impl WorldTruth {
    pub fn default_world() -> Self {
        serde_json::from_str(DEFAULT_WORLD_JSON).expect("bundled world is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_over_m_true > 0.0 && self.h_over_m_true.is_finite()) {
            return Err(Error::InvalidConfig(format!("h_over_m_true must be positive, got {}", self.h_over_m_true)));
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise_amplitude must be ≥ 0, got {}", self.noise_amplitude)));
        }
        for (name, v) in [("g", self.g), ("bias_direction_independent", self.bias_direction_independent), ("bias_sel_meas_asymmetry", self.bias_sel_meas_asymmetry)] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = InterferometerConfig::default_config();
        cfg.validate().unwrap();
        WorldTruth::default_world().validate().unwrap();
        assert_eq!(cfg.n_bloch, 500);
        assert_eq!(cfg.t_ramsey, 10e-3);
        assert_eq!(cfg.tau_pulse, 600e-6);
        assert_eq!(cfg.points_per_spectrum, 100);
    }

    #[test]
    fn elevator_must_cancel() {
        let mut cfg = InterferometerConfig::default_config();
        cfg.n_elev_2 = cfg.n_elev_1;
        assert!(cfg.validate().is_err());
        cfg.n_elev_2 = -cfg.n_elev_1 + 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let base = InterferometerConfig::default_config();
        let mut c = base.clone();
        c.points_per_spectrum = 9;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.k_bloch = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.raman_direction = 0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.t_ramsey = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn four_set_matches_table_columns() {
        let set = InterferometerConfig::default_config().four_spectrum_set();
        let signs: Vec<_> = set.iter().map(|c| (c.sign_n(), c.raman_direction)).collect();
        assert_eq!(signs, vec![(1, 1), (1, -1), (-1, 1), (-1, -1)]);
        assert_eq!((set[0].n_elev_1, set[0].n_elev_2), (-300, 300));
        assert_eq!((set[2].n_elev_1, set[2].n_elev_2), (300, -300));
        for c in &set {
            c.validate().unwrap();
        }
    }
}
