//! From h/m to α, h/m_u, N_A·h and the electron anomaly, and comparisons of
//! determinations from different laboratories.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::quantity::Quantity;
use crate::registry::ConstantsRegistry;

pub const DEFAULT_QED_JSON: &str = include_str!("../data/qed.json");
pub const DEFAULT_DETERMINATIONS_JSON: &str = include_str!("../data/determinations.json");

const H_OVER_M_UNIT: &str = "m^2 s^-1";

fn ensure_positive(q: &Quantity, what: &'static str) -> Result<()> {
    if q.value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositive(what))
    }
}

/// α⁻¹ from h/m_X: α² = (2R∞/c)·(A_r(X)/A_r(e))·(h/m_X).
pub fn alpha_from_h_over_m(h_over_m_x: &Quantity, ar_x: &Quantity, reg: &ConstantsRegistry) -> Result<Quantity> {
    ensure_positive(h_over_m_x, "h/m")?;
    ensure_positive(ar_x, "relative atomic mass")?;
    h_over_m_x.ensure_unit(H_OVER_M_UNIT)?;
    ar_x.ensure_unit("1")?;
    let alpha2 = reg
        .r_infinity
        .scale(2.0)
        .div(&reg.c)?
        .mul(ar_x)?
        .div(&reg.ar_e)?
        .mul(h_over_m_x)?;
    alpha2.powr(-1, 2)
}

/// h/m_u = α²·c·A_r(e)/(2R∞).
pub fn h_over_mu_from_alpha(alpha_inv: &Quantity, reg: &ConstantsRegistry) -> Result<Quantity> {
    ensure_positive(alpha_inv, "alpha_inv")?;
    alpha_inv.ensure_unit("1")?;
    alpha_inv
        .powr(-2, 1)?
        .mul(&reg.c)?
        .mul(&reg.ar_e)?
        .div(&reg.r_infinity.scale(2.0))
}

/// h/m_X = A_r(X)⁻¹ · h/m_u.
pub fn h_over_mx_from_h_over_mu(h_over_mu: &Quantity, ar_x: &Quantity) -> Result<Quantity> {
    ensure_positive(h_over_mu, "h/m_u")?;
    ensure_positive(ar_x, "relative atomic mass")?;
    h_over_mu.div(ar_x)
}

/// N_A·h = (h/m_u)·M(¹²C)/12, in J s mol⁻¹.
pub fn na_h(h_over_mu: &Quantity, reg: &ConstantsRegistry) -> Result<Quantity> {
    ensure_positive(h_over_mu, "h/m_u")?;
    h_over_mu.ensure_unit(H_OVER_M_UNIT)?;
    h_over_mu.mul(&reg.m_12c.scale(1.0 / 12.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Determination {
    pub label: String,
    pub alpha_inv: Quantity,
    pub h_over_mu: Quantity,
    pub provenance: String,
}

impl Determination {
    /// Builds the record from α⁻¹, deriving h/m_u with the registry.
    pub fn from_alpha_inv(label: &str, alpha_inv: Quantity, provenance: &str, reg: &ConstantsRegistry) -> Result<Self> {
        let h_over_mu = h_over_mu_from_alpha(&alpha_inv, reg)?;
        Ok(Determination { label: label.into(), alpha_inv, h_over_mu, provenance: provenance.into() })
    }

    /// Relative mismatch between the stored h/m_u and the one implied by α⁻¹.
    pub fn consistency(&self, reg: &ConstantsRegistry) -> Result<f64> {
        let implied = h_over_mu_from_alpha(&self.alpha_inv, reg)?;
        Ok((self.h_over_mu.value / implied.value - 1.0).abs())
    }

    pub fn validate(&self, reg: &ConstantsRegistry, tolerance: f64) -> Result<()> {
        self.alpha_inv.ensure_unit("1")?;
        self.h_over_mu.ensure_unit(H_OVER_M_UNIT)?;
        let r = self.consistency(reg)?;
        if r > tolerance {
            return Err(Error::InvalidQuantity(format!(
                "{}: α⁻¹ and h/m_u disagree by {r:.2e} relative (tolerance {tolerance:.0e})",
                self.label
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminationsFile {
    pub label: String,
    pub determinations: Vec<Determination>,
}

impl DeterminationsFile {
    pub fn default_file() -> Self {
        serde_json::from_str(DEFAULT_DETERMINATIONS_JSON).expect("bundled determinations are valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QedCoefficient {
    pub order: u32,
    pub a: Quantity,
}

/// Contribution beyond the mass-independent series. With an `order` it is
/// `a·(α/π)^order`; without one, `a` is the contribution itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraTerm {
    pub name: String,
    pub order: Option<u32>,
    pub a: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalValue {
    pub value: f64,
    pub sigma: f64,
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QedSeries {
    pub source: String,
    pub coefficients: Vec<QedCoefficient>,
    #[serde(default)]
    pub extra_terms: Vec<ExtraTerm>,
    #[serde(default)]
    pub a_e_experiment: Option<ExperimentalValue>,
}

impl QedSeries {
    pub fn default_series() -> Self {
        let s: QedSeries = serde_json::from_str(DEFAULT_QED_JSON).expect("bundled QED file is valid");
        s.validate().expect("bundled QED file is valid");
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s: QedSeries = io::read_json(path)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.is_empty() {
            return Err(Error::InvalidQed("empty series".into()));
        }
        if self.source.trim().is_empty() {
            return Err(Error::InvalidQed("missing source label".into()));
        }
        for (i, c) in self.coefficients.iter().enumerate() {
            if c.order as usize != i + 1 {
                return Err(Error::InvalidQed(format!(
                    "orders must be unique and consecutive from 1; found {} at position {}",
                    c.order,
                    i + 1
                )));
            }
            c.a.ensure_unit("1")?;
        }
        let mut names = BTreeSet::new();
        for t in &self.extra_terms {
            if !names.insert(t.name.as_str()) {
                return Err(Error::InvalidQed(format!("duplicate extra term `{}`", t.name)));
            }
            if t.order == Some(0) {
                return Err(Error::InvalidQed(format!("extra term `{}` has order 0", t.name)));
            }
            t.a.ensure_unit("1")?;
        }
        Ok(())
    }

    /// The series with every extra term dropped.
    pub fn without_extra_terms(&self) -> QedSeries {
        QedSeries { extra_terms: Vec::new(), ..self.clone() }
    }

    /// Only the leading `n` mass-independent coefficients.
    pub fn truncated(&self, n: usize) -> QedSeries {
        QedSeries { coefficients: self.coefficients.iter().take(n).cloned().collect(), extra_terms: Vec::new(), ..self.clone() }
    }

    fn terms(&self) -> impl Iterator<Item = (Option<u32>, &Quantity)> {
        self.coefficients
            .iter()
            .map(|c| (Some(c.order), &c.a))
            .chain(self.extra_terms.iter().map(|t| (t.order, &t.a)))
    }
}

/// Value and uncertainty split of a theoretical electron anomaly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeTheory {
    pub value: f64,
    /// From α alone.
    pub sigma_alpha: f64,
    /// From the mass-independent coefficients.
    pub sigma_coefficients: f64,
    /// From the extra terms.
    pub sigma_extra: f64,
    /// Σ of the extra terms at this α.
    pub extra: f64,
}

impl AeTheory {
    pub fn sigma(&self) -> f64 {
        (self.sigma_alpha.powi(2) + self.sigma_coefficients.powi(2) + self.sigma_extra.powi(2)).sqrt()
    }

    pub fn quantity(&self) -> Quantity {
        Quantity::dimensionless(self.value, self.sigma())
    }
}

/// d a_e / dα at α = 1/alpha_inv: Σ i·Aᵢ·(α/π)^i/α over all α-dependent terms.
pub fn a_e_derivative(alpha_inv: f64, series: &QedSeries) -> f64 {
    let alpha = 1.0 / alpha_inv;
    let x = alpha / PI;
    series
        .terms()
        .filter_map(|(order, a)| order.map(|i| i as f64 * a.value * x.powi(i as i32) / alpha))
        .sum()
}

pub fn a_e_theory_detail(alpha_inv: &Quantity, series: &QedSeries) -> Result<AeTheory> {
    series.validate()?;
    ensure_positive(alpha_inv, "alpha_inv")?;
    alpha_inv.ensure_unit("1")?;
    let x = 1.0 / (alpha_inv.value * PI);
    let term = |order: Option<u32>, a: f64| order.map_or(a, |i| a * x.powi(i as i32));

    let value = series.terms().map(|(o, a)| term(o, a.value)).sum();
    let extra = series.extra_terms.iter().map(|t| term(t.order, t.a.value)).sum();
    let sigma_coefficients = series
        .coefficients
        .iter()
        .map(|c| term(Some(c.order), c.a.sigma).powi(2))
        .sum::<f64>()
        .sqrt();
    let sigma_extra = series.extra_terms.iter().map(|t| term(t.order, t.a.sigma).powi(2)).sum::<f64>().sqrt();
    // σ_α = σ(α⁻¹)/α⁻¹²
    let sigma_alpha_abs = alpha_inv.sigma / (alpha_inv.value * alpha_inv.value);
    let sigma_alpha = (a_e_derivative(alpha_inv.value, series) * sigma_alpha_abs).abs();
    Ok(AeTheory { value, sigma_alpha, sigma_coefficients, sigma_extra, extra })
}

/// a_e = Σ Aᵢ·(α/π)^i + extra, uncertainties from α, Aᵢ and extra in quadrature.
pub fn a_e_theory(alpha_inv: &Quantity, series: &QedSeries) -> Result<Quantity> {
    Ok(a_e_theory_detail(alpha_inv, series)?.quantity())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeComparison {
    pub alpha_inv: Quantity,
    pub experiment: Quantity,
    pub theory: AeTheory,
    /// a_e(Exp) − a_e(Theory).
    pub difference: f64,
    /// Theory and experiment in quadrature.
    pub sigma: f64,
    /// The part of `sigma` due to α alone.
    pub sigma_alpha_only: f64,
    /// Shift of the theory when the extra terms are dropped.
    pub extra_contribution: f64,
}

impl AeComparison {
    pub fn n_sigma(&self) -> f64 {
        self.difference / self.sigma
    }
}

pub fn compare_a_e(alpha_inv: &Quantity, series: &QedSeries) -> Result<AeComparison> {
    let exp = series
        .a_e_experiment
        .as_ref()
        .ok_or_else(|| Error::InvalidQed("series file has no experimental a_e".into()))?;
    let experiment = Quantity::new(exp.value, exp.sigma, crate::quantity::Unit::dimensionless())?;
    let theory = a_e_theory_detail(alpha_inv, series)?;
    let bare = a_e_theory_detail(alpha_inv, &series.without_extra_terms())?;
    let sigma = theory.sigma().hypot(experiment.sigma);
    Ok(AeComparison {
        alpha_inv: alpha_inv.clone(),
        difference: experiment.value - theory.value,
        sigma,
        sigma_alpha_only: theory.sigma_alpha,
        extra_contribution: theory.value - bare.value,
        experiment,
        theory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDifference {
    pub a: String,
    pub b: String,
    pub quantity: String,
    /// a − b.
    pub difference: f64,
    pub combined_sigma: f64,
    pub n_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub label: String,
    pub quantity: String,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub pairs: Vec<PairDifference>,
    pub rows: Vec<PlotRow>,
}

/// Pairwise differences in units of the combined σ, for α⁻¹ and h/m_u.
pub fn compare_determinations(dets: &[Determination]) -> Result<ComparisonReport> {
    if dets.len() < 2 {
        return Err(Error::InvalidSeries(format!("need at least 2 determinations, got {}", dets.len())));
    }
    let axes: [(&str, fn(&Determination) -> &Quantity); 2] =
        [("alpha_inv", |d| &d.alpha_inv), ("h_over_mu", |d| &d.h_over_mu)];
    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    for (name, get) in axes {
        for d in dets {
            let q = get(d);
            rows.push(PlotRow { label: d.label.clone(), quantity: name.into(), value: q.value, sigma: q.sigma });
        }
        for (i, a) in dets.iter().enumerate() {
            for b in &dets[i + 1..] {
                let diff = get(a).sub(get(b))?;
                let n_sigma = if diff.sigma > 0.0 {
                    diff.value / diff.sigma
                } else if diff.value == 0.0 {
                    0.0
                } else {
                    f64::INFINITY.copysign(diff.value)
                };
                pairs.push(PairDifference {
                    a: a.label.clone(),
                    b: b.label.clone(),
                    quantity: name.into(),
                    difference: diff.value,
                    combined_sigma: diff.sigma,
                    n_sigma,
                });
            }
        }
    }
    Ok(ComparisonReport { pairs, rows })
}
