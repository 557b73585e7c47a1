//! Closed-form Ramsey fringe under a pulse envelope.
//!
//! `P(δ) = level · E(δ − c) · [1 − C cos(2π (δ − c) T_R)]` with
//! `E(u) = sinc²(π u τ)`, so `E(0) = 1`. The simulator uses `level = 0.5`.

use std::f64::consts::PI;

use crate::config::InterferometerConfig;

/// sin(z)/z and its derivative, with series near zero.
pub(crate) fn sinc_and_derivative(z: f64) -> (f64, f64) {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        (1.0 - z2 / 6.0 + z2 * z2 / 120.0, -z / 3.0 + z * z2 / 30.0)
    } else {
        let (s, c) = z.sin_cos();
        (s / z, (z * c - s) / (z * z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeModel {
    pub t_ramsey: f64,
    pub envelope_tau: f64,
    pub contrast: f64,
    pub level: f64,
}

/// Model value and partial derivatives at one detuning.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FringeEval {
    pub value: f64,
    pub d_center: f64,
    pub d_contrast: f64,
    pub d_level: f64,
    pub d_tau: f64,
}

impl FringeModel {
    pub fn from_config(config: &InterferometerConfig) -> Self {
        FringeModel {
            t_ramsey: config.t_ramsey,
            envelope_tau: config.envelope_tau(),
            contrast: config.contrast,
            level: 0.5,
        }
    }

    pub fn envelope(&self, u: f64) -> f64 {
        let (s, _) = sinc_and_derivative(PI * u * self.envelope_tau);
        s * s
    }

    /// Probability at offset `u = δ − center`.
    pub fn at_offset(&self, u: f64) -> f64 {
        let phase = 2.0 * PI * u * self.t_ramsey;
        self.level * self.envelope(u) * (1.0 - self.contrast * phase.cos())
    }

    pub(crate) fn eval(&self, u: f64) -> FringeEval {
        let z = PI * u * self.envelope_tau;
        let (s, ds) = sinc_and_derivative(z);
        let env = s * s;
        let d_env_du = 2.0 * s * ds * PI * self.envelope_tau;
        let d_env_dtau = 2.0 * s * ds * PI * u;
        let w = 2.0 * PI * self.t_ramsey;
        let (sin_p, cos_p) = (w * u).sin_cos();
        let fringe = 1.0 - self.contrast * cos_p;
        let d_fringe_du = self.contrast * w * sin_p;
        FringeEval {
            value: self.level * env * fringe,
            // u = δ − c, so ∂/∂c = −∂/∂u
            d_center: -self.level * (d_env_du * fringe + env * d_fringe_du),
            d_contrast: -self.level * env * cos_p,
            d_level: env * fringe,
            d_tau: self.level * d_env_dtau * fringe,
        }
    }
}

/// Ratio N₂/(N₁+N₂) expected at detuning `delta` for a fringe centered at `center`.
pub fn fringe_probability(delta: f64, center: f64, config: &InterferometerConfig) -> f64 {
    FringeModel::from_config(config).at_offset(delta - center)
}
