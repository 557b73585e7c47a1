//! Effective wave-vector of a Gaussian beam and the systematic error budget.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::quantity::Quantity;

pub const DEFAULT_BUDGET_JSON: &str = include_str!("../data/budget.json");

/// Budget entries are in parts per 10¹⁰ of α⁻¹.
pub const BUDGET_UNIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    /// Wave-vector (m⁻¹).
    pub k: f64,
    /// Waist (m); `f64::INFINITY` for a plane wave.
    pub waist: f64,
    /// Radius of the atomic cloud (m).
    pub cloud_radius: f64,
    /// Wavefront curvature radius (m); `None` for a flat wavefront.
    pub curvature_radius: Option<f64>,
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidConfig(format!("beam k must be positive, got {}", self.k)));
        }
        if !(self.waist > 0.0) {
            return Err(Error::InvalidConfig(format!("beam waist must be positive, got {}", self.waist)));
        }
        if !(self.cloud_radius >= 0.0 && self.cloud_radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("cloud radius must be ≥ 0, got {}", self.cloud_radius)));
        }
        if let Some(r) = self.curvature_radius {
            if r == 0.0 || r.is_nan() {
                return Err(Error::InvalidConfig("curvature radius must be nonzero".into()));
            }
        }
        Ok(())
    }
}

/// Gradient of the laser phase along the axis, Gouy phase and curvature included:
/// `k − (2/k)·[1/w² − r²/w⁴ + k²r²/(4R²)]`.
pub fn k_effective(geom: &BeamGeometry) -> Result<f64> {
    geom.validate()?;
    let BeamGeometry { k, waist: w, cloud_radius: r, .. } = *geom;
    let w2 = w * w;
    let r2 = r * r;
    let curvature = match geom.curvature_radius {
        Some(big_r) if big_r.is_finite() => k * k * r2 / (4.0 * big_r * big_r),
        _ => 0.0,
    };
    let bracket = 1.0 / w2 - r2 / (w2 * w2) + curvature;
    Ok(k - 2.0 / k * bracket)
}

/// `k_effective` projected on the measurement axis for a beam tilted by `theta` (rad).
pub fn k_effective_misaligned(geom: &BeamGeometry, theta: f64) -> Result<f64> {
    Ok(k_effective(geom)? * theta.cos())
}

/// Relative correction to α⁻¹ (parts per 10¹⁰) when the atoms see the
/// effective wave-vectors instead of the nominal ones.
///
/// The reduction divides by k_B·(k₁+k₂), and α ∝ (h/m)^½, so α⁻¹ scales as
/// the square root of the ratio of the effective to the nominal product.
pub fn alpha_inv_correction(nominal: [f64; 3], effective: [f64; 3]) -> f64 {
    let [k1, k2, kb] = nominal;
    let [e1, e2, eb] = effective;
    let hm_ratio = (eb * (e1 + e2)) / (kb * (k1 + k2));
    (hm_ratio.sqrt() - 1.0) / BUDGET_UNIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLine {
    pub name: String,
    /// Relative correction; `None` where only an uncertainty is quoted.
    #[serde(default)]
    pub correction: Option<f64>,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalLine {
    pub correction: f64,
    pub uncertainty: f64,
}

/// Direction in which the budget corrections move an uncorrected value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionSign {
    /// corrected = raw · (1 + Σc·10⁻¹⁰)
    #[default]
    Add,
    /// corrected = raw · (1 − Σc·10⁻¹⁰)
    Subtract,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub lines: Vec<BudgetLine>,
    /// Combined systematic line as quoted; recomputed by quadrature when absent.
    #[serde(default)]
    pub global: Option<GlobalLine>,
    #[serde(default)]
    pub statistical: Option<f64>,
    /// Rydberg constant and mass ratios.
    #[serde(default)]
    pub external: Option<f64>,
    #[serde(default)]
    pub correction_sign: CorrectionSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub correction_sum: f64,
    pub systematic_quadrature: f64,
    pub systematic_used: f64,
    /// Quoted global uncertainty minus the quadrature of the lines.
    pub global_discrepancy: Option<f64>,
    pub statistical: f64,
    pub external: f64,
    pub total: f64,
}

impl ErrorBudget {
    pub fn default_budget() -> Self {
        serde_json::from_str(DEFAULT_BUDGET_JSON).expect("bundled budget is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let b: ErrorBudget = io::read_json(path)?;
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for l in &self.lines {
            if !names.insert(l.name.as_str()) {
                return Err(Error::InvalidBudget(format!("duplicate line `{}`", l.name)));
            }
            if !(l.uncertainty >= 0.0) {
                return Err(Error::InvalidBudget(format!("negative uncertainty on `{}`", l.name)));
            }
        }
        for (what, v) in [("statistical", self.statistical), ("external", self.external)] {
            if let Some(v) = v {
                if !(v >= 0.0) {
                    return Err(Error::InvalidBudget(format!("negative {what} uncertainty")));
                }
            }
        }
        if let Some(g) = self.global {
            if !(g.uncertainty >= 0.0) {
                return Err(Error::InvalidBudget("negative global uncertainty".into()));
            }
        }
        Ok(())
    }

    pub fn correction_sum(&self) -> f64 {
        self.lines.iter().filter_map(|l| l.correction).sum()
    }

    pub fn systematic_quadrature(&self) -> f64 {
        self.lines.iter().map(|l| l.uncertainty * l.uncertainty).sum::<f64>().sqrt()
    }

    pub fn summary(&self) -> Result<BudgetSummary> {
        self.validate()?;
        let statistical = self.statistical.ok_or_else(|| Error::InvalidBudget("missing statistical entry".into()))?;
        let external = self.external.ok_or_else(|| Error::InvalidBudget("missing external entry".into()))?;
        let quad = self.systematic_quadrature();
        let used = self.global.map_or(quad, |g| g.uncertainty);
        Ok(BudgetSummary {
            correction_sum: self.correction_sum(),
            systematic_quadrature: quad,
            systematic_used: used,
            global_discrepancy: self.global.map(|g| g.uncertainty - quad),
            statistical,
            external,
            total: (used * used + statistical * statistical + external * external).sqrt(),
        })
    }

    /// Aligned text table: lines, global, statistical, external, total.
    pub fn to_table(&self) -> Result<String> {
        let s = self.summary()?;
        let width = self.lines.iter().map(|l| l.name.chars().count()).max().unwrap_or(0).max(32);
        let fmt_opt = |v: Option<f64>| v.map(table_number).unwrap_or_default();
        let mut out = String::new();
        let rule = "-".repeat(width + 24);
        let _ = writeln!(out, "{:<width$} {:>10} {:>12}", "Effect (parts per 10^10 of 1/alpha)", "correction", "uncertainty");
        let _ = writeln!(out, "{rule}");
        for l in &self.lines {
            let _ = writeln!(out, "{:<width$} {:>10} {:>12}", l.name, fmt_opt(l.correction), table_number(l.uncertainty));
        }
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(out, "{:<width$} {:>10.1} {:>12.1}", "Global systematic effects", s.correction_sum, s.systematic_used);
        if let Some(d) = s.global_discrepancy {
            let _ = writeln!(out, "{:<width$} {:>10} {:>12.2}", "  (quadrature of lines)", "", s.systematic_quadrature);
            if d.abs() >= 0.05 {
                let _ = writeln!(out, "{:<width$} {:>10} {:>12.2}", "  (quoted minus quadrature)", "", d);
            }
        }
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(out, "{:<width$} {:>10} {:>12}", "Statistical uncertainty", "", table_number(s.statistical));
        let _ = writeln!(out, "{:<width$} {:>10} {:>12}", "Rydberg constant and mass ratio", "", table_number(s.external));
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(out, "{:<width$} {:>10} {:>12.1}", "Total uncertainty", "", s.total);
        Ok(out)
    }
}

/// Shortest form with at least one decimal: 3 → "3.0", 0.01 → "0.01".
fn table_number(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || !v.is_finite() {
        s
    } else {
        format!("{v:.1}")
    }
}

/// Applies the corrections to an uncorrected α⁻¹ and replaces its uncertainty
/// with the budget total.
pub fn apply_budget(raw_alpha_inv: &Quantity, budget: &ErrorBudget) -> Result<Quantity> {
    if !(raw_alpha_inv.value > 0.0) {
        return Err(Error::NonPositive("apply_budget"));
    }
    let s = budget.summary()?;
    let sign = match budget.correction_sign {
        CorrectionSign::Add => 1.0,
        CorrectionSign::Subtract => -1.0,
    };
    let value = raw_alpha_inv.value * (1.0 + sign * s.correction_sum * BUDGET_UNIT);
    Quantity::new(value, value * s.total * BUDGET_UNIT, raw_alpha_inv.unit.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn plane_wave_limit() {
        let k = 8.055e6;
        let g = BeamGeometry { k, waist: f64::INFINITY, cloud_radius: 2e-3, curvature_radius: None };
        assert_eq!(k_effective(&g).unwrap(), k);
    }

    #[test]
    fn on_axis_gouy_term() {
        let k = 8.055e6;
        let w = 4e-3;
        let g = BeamGeometry { k, waist: w, cloud_radius: 0.0, curvature_radius: None };
        assert_eq!(k_effective(&g).unwrap(), k - 2.0 / k * (1.0 / (w * w)));
    }

    #[test]
    fn typical_correction_is_ppb_scale() {
        let g = BeamGeometry { k: 8.055e6, waist: 4e-3, cloud_radius: 2e-3, curvature_radius: Some(100.0) };
        let ke = k_effective(&g).unwrap();
        let rel = ke / g.k - 1.0;
        assert!(rel < 0.0 && rel.abs() > 1e-10 && rel.abs() < 1e-8, "{rel}");
        // all three beams shifted alike: α⁻¹ moves by the relative k shift
        let corr = alpha_inv_correction([g.k; 3], [ke; 3]);
        assert_relative_eq!(corr, rel / BUDGET_UNIT, max_relative = 1e-6);
    }

    #[test]
    fn monotone_in_inverse_waist_squared() {
        let mut last = f64::INFINITY;
        for w in [1e-1, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3] {
            let ke = k_effective(&BeamGeometry { k: 8e6, waist: w, cloud_radius: 0.0, curvature_radius: None }).unwrap();
            assert!(ke < last);
            last = ke;
        }
    }

    #[test]
    fn invalid_geometry() {
        let base = BeamGeometry { k: 8e6, waist: 1e-3, cloud_radius: 0.0, curvature_radius: None };
        assert!(k_effective(&BeamGeometry { curvature_radius: Some(0.0), ..base }).is_err());
        assert!(k_effective(&BeamGeometry { waist: 0.0, ..base }).is_err());
        assert!(k_effective(&BeamGeometry { k: -1.0, ..base }).is_err());
        assert!(k_effective(&BeamGeometry { cloud_radius: -1e-3, ..base }).is_err());
    }

    #[test]
    fn misalignment_reduces_projection() {
        let g = BeamGeometry { k: 8e6, waist: f64::INFINITY, cloud_radius: 0.0, curvature_radius: None };
        let theta = 40e-6;
        assert_relative_eq!(k_effective_misaligned(&g, theta).unwrap(), 8e6 * theta.cos());
    }

    #[test]
    fn published_budget_arithmetic() {
        let b = ErrorBudget::default_budget();
        let s = b.summary().unwrap();
        assert!((s.correction_sum - (-26.4)).abs() < 1e-9);
        assert_eq!(s.systematic_used, 5.9);
        // the quoted 5.9 is the quadrature of the lines, rounded
        assert!((s.systematic_quadrature - 5.906).abs() < 0.001, "{}", s.systematic_quadrature);
        assert!(s.global_discrepancy.unwrap().abs() < 0.05);
        assert!((s.total - 6.61).abs() < 0.005);
        assert_eq!(format!("{:.1}", s.total), "6.6");
    }

    #[test]
    fn empty_budget_keeps_value() {
        let b = ErrorBudget { lines: vec![], global: None, statistical: Some(2.0), external: Some(0.0), correction_sign: CorrectionSign::Add };
        let raw = Quantity::dimensionless(137.036, 0.0);
        let out = apply_budget(&raw, &b).unwrap();
        assert_eq!(out.value, raw.value);
        assert_relative_eq!(out.sigma, 2.0e-10 * raw.value);
    }

    #[test]
    fn zero_budget_is_identity() {
        let b = ErrorBudget {
            lines: vec![BudgetLine { name: "a".into(), correction: Some(0.0), uncertainty: 0.0 }],
            global: None,
            statistical: Some(0.0),
            external: Some(0.0),
            correction_sign: CorrectionSign::Add,
        };
        let raw = Quantity::dimensionless(137.036, 0.0);
        assert_eq!(apply_budget(&raw, &b).unwrap(), raw);
    }

    #[test]
    fn sign_convention_switch() {
        let mut b = ErrorBudget::default_budget();
        let raw = Quantity::dimensionless(137.036, 0.0);
        let add = apply_budget(&raw, &b).unwrap();
        b.correction_sign = CorrectionSign::Subtract;
        let sub = apply_budget(&raw, &b).unwrap();
        assert!(add.value < raw.value && sub.value > raw.value);
        assert_relative_eq!(add.value - raw.value, raw.value - sub.value, max_relative = 1e-6);
    }

    #[test]
    fn missing_entries_and_duplicates() {
        let mut b = ErrorBudget::default_budget();
        b.statistical = None;
        assert!(apply_budget(&Quantity::dimensionless(1.0, 0.0), &b).is_err());
        let mut b = ErrorBudget::default_budget();
        b.external = None;
        assert!(b.summary().is_err());
        let mut b = ErrorBudget::default_budget();
        let dup = b.lines[0].clone();
        b.lines.push(dup);
        assert!(b.validate().is_err());
        assert!(apply_budget(&Quantity::dimensionless(-1.0, 0.0), &ErrorBudget::default_budget()).is_err());
    }

    #[test]
    fn table_has_every_line() {
        let b = ErrorBudget::default_budget();
        let t = b.to_table().unwrap();
        for l in &b.lines {
            assert!(t.contains(&l.name));
        }
        assert!(t.contains("Total uncertainty"));
        assert!(t.lines().any(|l| l.starts_with("Total uncertainty") && l.trim_end().ends_with("6.6")));
        assert!(t.lines().any(|l| l.starts_with("2nd order Zeeman effect") && l.trim_end().ends_with("3.0")));
        assert!(t.lines().any(|l| l.starts_with("Light shift (two photon") && l.trim_end().ends_with("0.01")));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn budget(unc: Vec<f64>) -> ErrorBudget {
            ErrorBudget {
                lines: unc.iter().enumerate().map(|(i, &u)| BudgetLine { name: format!("l{i}"), correction: None, uncertainty: u }).collect(),
                global: None,
                statistical: Some(1.0),
                external: Some(1.0),
                correction_sign: CorrectionSign::Add,
            }
        }

        proptest! {
            #[test]
            fn quadrature_permutation_invariant_and_monotone(
                unc in prop::collection::vec(0.0f64..10.0, 1..12),
                idx in any::<prop::sample::Index>(),
                bump in 0.0f64..5.0,
            ) {
                let total = budget(unc.clone()).summary().unwrap().total;
                let mut rev = unc.clone();
                rev.reverse();
                let total_rev = budget(rev).summary().unwrap().total;
                prop_assert!((total - total_rev).abs() <= 1e-12 * total.max(1.0));
                let mut bumped = unc.clone();
                let i = idx.index(bumped.len());
                bumped[i] += bump;
                prop_assert!(budget(bumped).summary().unwrap().total >= total - 1e-12);
            }
        }
    }
}
