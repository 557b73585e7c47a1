//! Monte-Carlo runs over simulated determinations.
//!
//! Every run draws its seeds from the master seed and its index, so results
//! do not depend on how the runs are scheduled across threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{InterferometerConfig, WorldTruth};
use crate::error::Result;
use crate::fit::fit_central_fringe;
use crate::quantity::Quantity;
use crate::reduction::{reduce_set, SetEntry, SpectrumSet};
use crate::sim::{derive_seed, simulate_spectrum, true_center};

/// Simulates and fits the four spectra of run `index`.
pub fn simulate_set(world: &WorldTruth, config: &InterferometerConfig, master_seed: u64, index: u64) -> Result<SpectrumSet> {
    let run_seed = derive_seed(master_seed, index);
    let entries = config
        .four_spectrum_set()
        .into_iter()
        .enumerate()
        .map(|(j, cfg)| {
            let w = WorldTruth { rng_seed: derive_seed(run_seed, j as u64), ..world.clone() };
            let s = simulate_spectrum(&w, &cfg, cfg.scan_span_hz)?;
            let fit = fit_central_fringe(&s, None)?;
            Ok(SetEntry { config: cfg, fit })
        })
        .collect::<Result<Vec<_>>>()?;
    SpectrumSet::new(format!("run-{index}"), String::new(), entries)
}

/// h/m from run `index`.
pub fn simulate_determination(world: &WorldTruth, config: &InterferometerConfig, master_seed: u64, index: u64) -> Result<Quantity> {
    Ok(reduce_set(&simulate_set(world, config, master_seed, index)?)?.h_over_m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRun {
    pub index: u64,
    pub value: f64,
    pub sigma: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub truth: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Fraction of runs with |value − truth| ≤ sigma.
    pub within_one_sigma: f64,
    /// Sample standard deviation of value − truth.
    pub scatter: f64,
    /// RMS of the reported sigmas.
    pub rms_sigma: f64,
}

impl CoverageSummary {
    /// Empirical scatter over reported sigma; 1 for honest uncertainties.
    pub fn ratio(&self) -> f64 {
        self.scatter / self.rms_sigma
    }

    fn from_runs(truth: f64, runs: &[McRun]) -> Self {
        let ok: Vec<&McRun> = runs.iter().filter(|r| r.error.is_none()).collect();
        let n = ok.len();
        let dev: Vec<f64> = ok.iter().map(|r| r.value - truth).collect();
        let mean = dev.iter().sum::<f64>() / n.max(1) as f64;
        let scatter = (dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64).sqrt();
        let rms_sigma = (ok.iter().map(|r| r.sigma * r.sigma).sum::<f64>() / n.max(1) as f64).sqrt();
        let inside = ok.iter().filter(|r| (r.value - truth).abs() <= r.sigma).count();
        CoverageSummary {
            truth,
            n_ok: n,
            n_failed: runs.len() - n,
            within_one_sigma: inside as f64 / n.max(1) as f64,
            scatter,
            rms_sigma,
        }
    }
}

fn collect_runs<F>(n: u64, f: F) -> Vec<McRun>
where
    F: Fn(u64) -> Result<Quantity> + Sync,
{
    let mut runs: Vec<McRun> = (0..n)
        .into_par_iter()
        .map(|index| match f(index) {
            Ok(q) => McRun { index, value: q.value, sigma: q.sigma, error: None },
            Err(e) => McRun { index, value: f64::NAN, sigma: f64::NAN, error: Some(e.to_string()) },
        })
        .collect();
    runs.sort_by_key(|r| r.index);
    runs
}

/// `n` full determinations of h/m.
pub fn determination_runs(world: &WorldTruth, config: &InterferometerConfig, master_seed: u64, n: u64) -> Vec<McRun> {
    collect_runs(n, |i| simulate_determination(world, config, master_seed, i))
}

pub fn determination_coverage(world: &WorldTruth, config: &InterferometerConfig, master_seed: u64, n: u64) -> (Vec<McRun>, CoverageSummary) {
    let runs = determination_runs(world, config, master_seed, n);
    let summary = CoverageSummary::from_runs(world.h_over_m_true, &runs);
    (runs, summary)
}

/// `n` single-spectrum fits of `config`, each center compared to the truth.
pub fn fit_runs(world: &WorldTruth, config: &InterferometerConfig, master_seed: u64, n: u64) -> Result<(Vec<McRun>, f64)> {
    let truth = true_center(world, config)?;
    let runs = collect_runs(n, |i| {
        let w = WorldTruth { rng_seed: derive_seed(master_seed, i), ..world.clone() };
        Ok(fit_central_fringe(&simulate_spectrum(&w, config, config.scan_span_hz)?, None)?.center)
    });
    Ok((runs, truth))
}

pub fn fit_coverage(world: &WorldTruth, config: &InterferometerConfig, master_seed: u64, n: u64) -> Result<CoverageSummary> {
    let (runs, truth) = fit_runs(world, config, master_seed, n)?;
    Ok(CoverageSummary::from_runs(truth, &runs))
}

/// Mean fitted center uncertainty over `n` spectra (Hz).
pub fn mean_center_sigma(world: &WorldTruth, config: &InterferometerConfig, master_seed: u64, n: u64) -> Result<f64> {
    let (runs, _) = fit_runs(world, config, master_seed, n)?;
    let ok: Vec<f64> = runs.iter().filter(|r| r.error.is_none()).map(|r| r.sigma).collect();
    Ok(ok.iter().sum::<f64>() / ok.len().max(1) as f64)
}

/// Noise amplitude giving a mean center uncertainty of `target_sigma_hz`.
///
/// The fit uncertainty is linear in the noise as long as clipping is rare,
/// so one probe run at the current amplitude fixes the scale.
pub fn calibrate_noise(world: &WorldTruth, config: &InterferometerConfig, target_sigma_hz: f64, master_seed: u64, n: u64) -> Result<f64> {
    let probe = if world.noise_amplitude > 0.0 { world.noise_amplitude } else { 0.01 };
    let w = WorldTruth { noise_amplitude: probe, ..world.clone() };
    let measured = mean_center_sigma(&w, config, master_seed, n)?;
    Ok(probe * target_sigma_hz / measured)
}
