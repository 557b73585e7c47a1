//! Statistics of a series of determinations: weighted mean, reduced χ² and
//! the sample autocorrelation with its white-noise bands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantity::Quantity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcfPoint {
    pub lag: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    /// Inverse-variance weighted mean.
    pub mean: Quantity,
    /// χ² about the weighted mean over n − 1.
    pub chi2_per_dof: f64,
    /// Lags 0..=max_lag; `None` when the series has zero variance.
    pub acf: Option<Vec<AcfPoint>>,
    pub n: usize,
    /// (1/√n, 2/√n)
    pub sigma_bands: (f64, f64),
}

impl SeriesStats {
    /// Fraction of lags ≥ 1 whose |acf| lies within the two-sigma band.
    pub fn fraction_within_two_sigma(&self) -> Option<f64> {
        let acf = self.acf.as_ref()?;
        let lags: Vec<_> = acf.iter().filter(|p| p.lag > 0).collect();
        if lags.is_empty() {
            return None;
        }
        let inside = lags.iter().filter(|p| p.value.abs() <= self.sigma_bands.1).count();
        Some(inside as f64 / lags.len() as f64)
    }
}

/// Sample autocorrelation of the mean-subtracted series at lags 0..=max_lag.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Option<Vec<AcfPoint>> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = dev.iter().map(|d| d * d).sum();
    if !(c0 > 0.0) {
        return None;
    }
    Some(
        (0..=max_lag.min(n.saturating_sub(1)))
            .map(|lag| {
                let value = if lag == 0 {
                    1.0
                } else {
                    dev.iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum::<f64>() / c0
                };
                AcfPoint { lag, value }
            })
            .collect(),
    )
}

pub fn series_stats(values: &[Quantity], max_lag: usize) -> Result<SeriesStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidSeries(format!("need at least 2 values, got {n}")));
    }
    if max_lag >= n {
        return Err(Error::InvalidSeries(format!("max_lag {max_lag} must be below n = {n}")));
    }
    let unit = &values[0].unit;
    if let Some(q) = values.iter().find(|q| &q.unit != unit) {
        return Err(Error::UnitMismatch { op: "average", left: unit.to_string(), right: q.unit.to_string() });
    }

    let x: Vec<f64> = values.iter().map(|q| q.value).collect();
    let (mean, chi2_per_dof) = if values.iter().any(|q| q.sigma == 0.0) {
        if x.iter().any(|&v| v != x[0]) {
            return Err(Error::InvalidSeries(
                "zero uncertainties with dispersed values: χ² undefined".into(),
            ));
        }
        (Quantity { value: x[0], sigma: 0.0, unit: unit.clone() }, 0.0)
    } else {
        let w: Vec<f64> = values.iter().map(|q| 1.0 / (q.sigma * q.sigma)).collect();
        let wsum: f64 = w.iter().sum();
        let m = w.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / wsum;
        let chi2: f64 = w.iter().zip(&x).map(|(w, x)| w * (x - m).powi(2)).sum();
        (Quantity { value: m, sigma: wsum.sqrt().recip(), unit: unit.clone() }, chi2 / (n - 1) as f64)
    };

    let root_n = (n as f64).sqrt();
    Ok(SeriesStats {
        mean,
        chi2_per_dof,
        acf: autocorrelation(&x, max_lag),
        n,
        sigma_bands: (1.0 / root_n, 2.0 / root_n),
    })
}
