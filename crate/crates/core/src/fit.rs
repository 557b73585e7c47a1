//! Central-fringe fitting.
//!
//! The fit runs in detunings relative to the middle of the scan so that
//! spectra near 15 MHz keep full precision. The 1/T_R ambiguity is settled by
//! the envelope: each candidate fringe minimum is scored with the full model
//! (level and contrast solved linearly) and the lowest residual wins.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fringe::FringeModel;
use crate::quantity::Quantity;
use crate::sim::Spectrum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub center: Quantity,
    pub contrast: f64,
    /// Ratio level at the envelope peak, mid-fringe (0.5 for the simulator).
    pub offset: f64,
    pub envelope_tau: f64,
    pub residual_rms: f64,
    pub n_points: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Also fit the envelope width instead of fixing it at the pulse length.
    pub fit_envelope: bool,
    pub max_iterations: usize,
    /// Stop when every step is below this fraction of its parameter scale.
    pub step_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { fit_envelope: false, max_iterations: 200, step_tolerance: 1e-6 }
    }
}

/// Detunings relative to the scan midpoint, with ratios.
struct Centered {
    reference: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Centered {
    fn new(spectrum: &Spectrum) -> Self {
        let first = spectrum.points.first().map_or(0.0, |p| p.delta_hz);
        let last = spectrum.points.last().map_or(0.0, |p| p.delta_hz);
        let reference = 0.5 * (first + last);
        Centered {
            reference,
            x: spectrum.points.iter().map(|p| p.delta_hz - reference).collect(),
            y: spectrum.ratios(),
        }
    }

    fn lo(&self) -> f64 {
        self.x[0]
    }

    fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }
}

/// Level and contrast by linear least squares at a fixed center.
struct LinearScore {
    level: f64,
    contrast: f64,
    rss: f64,
    /// |level · contrast| over its standard error.
    contrast_snr: f64,
}

fn linear_score(data: &Centered, center: f64, t_ramsey: f64, tau: f64) -> Option<LinearScore> {
    let env_model = FringeModel { t_ramsey, envelope_tau: tau, contrast: 0.0, level: 1.0 };
    let w = 2.0 * std::f64::consts::PI * t_ramsey;
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let cols: Vec<(f64, f64)> = data
        .x
        .iter()
        .map(|&x| {
            let u = x - center;
            let e = env_model.envelope(u);
            (e, e * (w * u).cos())
        })
        .collect();
    for (&(e, ec), &y) in cols.iter().zip(&data.y) {
        s11 += e * e;
        s12 += e * ec;
        s22 += ec * ec;
        t1 += e * y;
        t2 += ec * y;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det > 0.0) {
        return None;
    }
    let a = (s22 * t1 - s12 * t2) / det;
    let b = (s11 * t2 - s12 * t1) / det;
    let rss: f64 = cols
        .iter()
        .zip(&data.y)
        .map(|(&(e, ec), &y)| (y - a * e - b * ec).powi(2))
        .sum();
    let dof = data.x.len().saturating_sub(2).max(1) as f64;
    let se_b = (rss / dof * s11 / det).sqrt();
    let contrast_snr = if se_b > 0.0 { b.abs() / se_b } else { f64::INFINITY };
    Some(LinearScore { level: a, contrast: if a != 0.0 { -b / a } else { 0.0 }, rss, contrast_snr })
}

/// Phase of the fringe: one minimum position (relative to the scan midpoint).
fn fringe_phase(data: &Centered, t_ramsey: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * t_ramsey;
    let mean = data.y.iter().sum::<f64>() / data.y.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (&x, &y) in data.x.iter().zip(&data.y) {
        re += (y - mean) * (w * x).cos();
        im -= (y - mean) * (w * x).sin();
    }
    // Σ y e^{-iωx} ∝ −e^{-iωc} at a fringe minimum c
    (-im).atan2(-re) / -w
}

/// Envelope centroid, the coarse center of the pattern.
fn envelope_centroid(data: &Centered) -> f64 {
    let floor = data.y.iter().cloned().fold(f64::INFINITY, f64::min);
    let (num, den) = data
        .x
        .iter()
        .zip(&data.y)
        .fold((0.0, 0.0), |(n, d), (&x, &y)| (n + x * (y - floor), d + (y - floor)));
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn check_span(data: &Centered, period: f64) -> Result<()> {
    let span = data.hi() - data.lo();
    if !(span >= 3.0 * period) {
        return Err(Error::SpanTooSmall { span_hz: span, period_hz: period });
    }
    Ok(())
}

/// Picks the central-fringe minimum in centered coordinates.
fn guess_centered(data: &Centered, t_ramsey: f64, tau: f64) -> Result<f64> {
    let period = 1.0 / t_ramsey;
    check_span(data, period)?;
    let mean = data.y.iter().sum::<f64>() / data.y.len() as f64;
    if data.y.iter().all(|&y| (y - mean).abs() == 0.0) {
        return Err(Error::FlatSpectrum { snr: 0.0 });
    }

    let phase = fringe_phase(data, t_ramsey);
    let centroid = envelope_centroid(data);
    // candidate minima over the scan plus two periods either side, so that an
    // envelope peaking outside the scan is recognised rather than clamped
    let k_lo = ((data.lo() - 2.0 * period - phase) / period).ceil() as i64;
    let k_hi = ((data.hi() + 2.0 * period - phase) / period).floor() as i64;
    let mut best: Option<(f64, LinearScore)> = None;
    for k in k_lo..=k_hi {
        let c = phase + k as f64 * period;
        let Some(score) = linear_score(data, c, t_ramsey, tau) else { continue };
        if score.level <= 0.0 {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bc, b)) => {
                score.rss < b.rss || (score.rss == b.rss && (c - centroid).abs() < (bc - centroid).abs())
            }
        };
        if better {
            best = Some((c, score));
        }
    }
    let (center, score) = best.ok_or(Error::FlatSpectrum { snr: 0.0 })?;
    if score.contrast_snr < 5.0 {
        return Err(Error::FlatSpectrum { snr: score.contrast_snr });
    }
    let margin = 0.25 * period;
    if center < data.lo() + margin || center > data.hi() - margin {
        return Err(Error::CenterAtEdge {
            center_hz: center + data.reference,
            lo_hz: data.lo() + data.reference,
            hi_hz: data.hi() + data.reference,
        });
    }
    Ok(center)
}

/// Coarse position of the central fringe (Hz).
///
/// Errors if the scan spans fewer than three fringes, if the contrast is not
/// resolved above noise, or if the envelope peak sits at the scan edge.
pub fn initial_guess(spectrum: &Spectrum) -> Result<f64> {
    let data = Centered::new(spectrum);
    let c = guess_centered(&data, spectrum.config.t_ramsey, spectrum.config.envelope_tau())?;
    Ok(c + data.reference)
}

struct LmOutcome {
    params: Vec<f64>,
    rss: f64,
    jtj: DMatrix<f64>,
    iterations: usize,
    converged: bool,
}

fn model_for(params: &[f64], t_ramsey: f64, fixed_tau: f64) -> FringeModel {
    FringeModel {
        t_ramsey,
        envelope_tau: params.get(3).copied().unwrap_or(fixed_tau),
        contrast: params[1],
        level: params[2],
    }
}

fn residuals_and_jacobian(data: &Centered, params: &[f64], t_ramsey: f64, fixed_tau: f64) -> (DVector<f64>, DMatrix<f64>) {
    let m = model_for(params, t_ramsey, fixed_tau);
    let n = data.x.len();
    let p = params.len();
    let mut r = DVector::zeros(n);
    let mut j = DMatrix::zeros(n, p);
    for (i, (&x, &y)) in data.x.iter().zip(&data.y).enumerate() {
        let e = m.eval(x - params[0]);
        r[i] = y - e.value;
        j[(i, 0)] = e.d_center;
        j[(i, 1)] = e.d_contrast;
        j[(i, 2)] = e.d_level;
        if p == 4 {
            j[(i, 3)] = e.d_tau;
        }
    }
    (r, j)
}

fn rss_at(data: &Centered, params: &[f64], t_ramsey: f64, fixed_tau: f64) -> f64 {
    let m = model_for(params, t_ramsey, fixed_tau);
    data.x.iter().zip(&data.y).map(|(&x, &y)| (y - m.at_offset(x - params[0])).powi(2)).sum()
}

fn levenberg_marquardt(data: &Centered, start: Vec<f64>, t_ramsey: f64, fixed_tau: f64, opts: &FitOptions) -> LmOutcome {
    let scales = [1.0 / t_ramsey, 1.0, 1.0, fixed_tau];
    let mut params = start;
    let p = params.len();
    let mut lambda = 1e-3;
    let mut rss = rss_at(data, &params, t_ramsey, fixed_tau);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let (r, j) = residuals_and_jacobian(data, &params, t_ramsey, fixed_tau);
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * &r;
        let mut accepted = None;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..p {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            let trial_rss = rss_at(data, &trial, t_ramsey, fixed_tau);
            if trial_rss.is_finite() && trial_rss <= rss {
                accepted = Some((trial, trial_rss, step));
                lambda = (lambda * 0.1).max(1e-12);
                break;
            }
            lambda *= 10.0;
        }
        let Some((trial, trial_rss, step)) = accepted else {
            // no downhill step at any damping: we are at the minimum to working precision
            converged = true;
            break;
        };
        params = trial;
        rss = trial_rss;
        let small = step.iter().zip(&scales).all(|(d, s)| d.abs() < opts.step_tolerance * s);
        if small {
            converged = true;
            break;
        }
    }

    if converged {
        // a few undamped steps to settle well below the stopping tolerance
        for _ in 0..3 {
            let (r, j) = residuals_and_jacobian(data, &params, t_ramsey, fixed_tau);
            let Some(step) = (j.transpose() * &j).cholesky().map(|c| c.solve(&(j.transpose() * &r))) else { break };
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            let trial_rss = rss_at(data, &trial, t_ramsey, fixed_tau);
            if !(trial_rss <= rss) {
                break;
            }
            params = trial;
            rss = trial_rss;
        }
    }

    let (_, j) = residuals_and_jacobian(data, &params, t_ramsey, fixed_tau);
    LmOutcome { jtj: j.transpose() * &j, params, rss, iterations, converged }
}

/// Fits the central fringe with default options.
pub fn fit_central_fringe(spectrum: &Spectrum, initial: Option<f64>) -> Result<FringeFit> {
    fit_central_fringe_with(spectrum, initial, &FitOptions::default())
}

pub fn fit_central_fringe_with(spectrum: &Spectrum, initial: Option<f64>, opts: &FitOptions) -> Result<FringeFit> {
    spectrum.validate()?;
    let cfg = &spectrum.config;
    let n_params = if opts.fit_envelope { 4 } else { 3 };
    if spectrum.points.len() <= n_params {
        return Err(Error::TooFewPoints { points: spectrum.points.len(), params: n_params });
    }
    let data = Centered::new(spectrum);
    let t_ramsey = cfg.t_ramsey;
    let tau = cfg.envelope_tau();
    let period = cfg.fringe_period();

    let start_center = match initial {
        Some(g) => g - data.reference,
        None => guess_centered(&data, t_ramsey, tau)?,
    };

    let start = |c: f64| -> Vec<f64> {
        let (level, contrast) = linear_score(&data, c, t_ramsey, tau)
            .map(|s| (s.level, s.contrast))
            .unwrap_or((0.5, 0.5));
        let mut p = vec![c, contrast, level];
        if opts.fit_envelope {
            p.push(tau);
        }
        p
    };

    let mut out = levenberg_marquardt(&data, start(start_center), t_ramsey, tau, opts);
    // neighbouring fringes: move if the envelope prefers one of them
    for _ in 0..4 {
        let c = out.params[0];
        let fit_tau = out.params.get(3).copied().unwrap_or(tau);
        let better = [c - period, c + period]
            .into_iter()
            .filter_map(|alt| linear_score(&data, alt, t_ramsey, fit_tau).map(|s| (alt, s.rss)))
            .filter(|&(_, rss)| rss < out.rss)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match better {
            Some((alt, _)) => out = levenberg_marquardt(&data, start(alt), t_ramsey, tau, opts),
            None => break,
        }
    }

    let n = data.x.len();
    let dof = (n - n_params) as f64;
    let s2 = out.rss / dof;
    let center_var = out.jtj.clone().try_inverse().map(|inv| inv[(0, 0)] * s2);
    let center_sigma = center_var.filter(|v| v.is_finite() && *v >= 0.0).map(f64::sqrt);
    let contrast = out.params[1];
    let residual_rms = (out.rss / n as f64).sqrt();

    let converged = out.converged
        && center_sigma.is_some()
        && residual_rms.is_finite()
        && (0.0..=1.5).contains(&contrast)
        && out.params[2] > 0.0;

    let center_value = out.params[0] + data.reference;
    Ok(FringeFit {
        center: Quantity::with_unit(center_value, center_sigma.unwrap_or(0.0), "Hz"),
        contrast,
        offset: out.params[2],
        envelope_tau: out.params.get(3).copied().unwrap_or(tau),
        residual_rms,
        n_points: n,
        iterations: out.iterations,
        converged,
    })
}
