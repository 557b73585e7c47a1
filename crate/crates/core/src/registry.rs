//! Externally sourced physical constants, loaded from a JSON data file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_json;
use crate::quantity::Quantity;

/// The registry shipped with the crate.
pub const DEFAULT_REGISTRY_JSON: &str = include_str!("../data/constants.json");

/// One record of the constants file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConstantRecord {
    pub name: String,
    pub value: f64,
    pub sigma: f64,
    pub unit: String,
    pub source: String,
}

impl ConstantRecord {
    fn quantity(&self) -> Result<Quantity> {
        Quantity::new(self.value, self.sigma, self.unit.parse()?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RegistryFile {
    pub label: String,
    pub constants: Vec<ConstantRecord>,
}

/// Which published Rb-87 relative atomic mass to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbMass {
    Bradley1999,
    Mount2010,
    /// Mean of the two; the entry used for the published 2013 value.
    #[default]
    Mean,
}

impl RbMass {
    pub fn record_name(self) -> &'static str {
        match self {
            RbMass::Bradley1999 => "Ar_Rb87_Bradley1999",
            RbMass::Mount2010 => "Ar_Rb87_Mount2010",
            RbMass::Mean => "Ar_Rb87_mean",
        }
    }
}

impl std::str::FromStr for RbMass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bradley1999" => Ok(RbMass::Bradley1999),
            "mount2010" => Ok(RbMass::Mount2010),
            "mean" => Ok(RbMass::Mean),
            other => Err(Error::InvalidRegistry(format!("unknown Rb mass choice `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsRegistry {
    pub r_infinity: Quantity,
    pub c: Quantity,
    pub ar_e: Quantity,
    pub ar_rb: Quantity,
    pub ar_cs: Quantity,
    pub m_12c: Quantity,
    pub g_local: Quantity,
    pub rb_mass: RbMass,
    pub source_label: String,
    pub records: Vec<ConstantRecord>,
}

impl ConstantsRegistry {
    pub fn from_file_data(file: RegistryFile, rb_mass: RbMass) -> Result<Self> {
        let find = |name: &str, unit: &str| -> Result<Quantity> {
            let rec = file
                .constants
                .iter()
                .find(|r| r.name == name)
                .ok_or_else(|| Error::MissingConstant(name.to_string()))?;
            if rec.source.trim().is_empty() {
                return Err(Error::InvalidRegistry(format!("`{name}` has no source label")));
            }
            let q = rec.quantity()?;
            q.ensure_unit(unit)?;
            Ok(q)
        };

        let c = find("c", "m s^-1")?;
        if c.sigma != 0.0 {
            return Err(Error::InvalidRegistry("speed of light must be exact".into()));
        }
        let reg = ConstantsRegistry {
            r_infinity: find("R_infinity", "m^-1")?,
            c,
            ar_e: find("Ar_e", "1")?,
            ar_rb: find(rb_mass.record_name(), "1")?,
            ar_cs: find("Ar_Cs133", "1")?,
            m_12c: find("M_12C", "kg mol^-1")?,
            g_local: find("g_local", "m s^-2")?,
            rb_mass,
            source_label: file.label.clone(),
            records: file.constants,
        };
        for q in [&reg.r_infinity, &reg.ar_e, &reg.ar_rb, &reg.ar_cs, &reg.m_12c] {
            if q.value <= 0.0 {
                return Err(Error::InvalidRegistry(format!("non-positive constant {q}")));
            }
        }
        Ok(reg)
    }

    pub fn from_json_str(s: &str, rb_mass: RbMass) -> Result<Self> {
        let file: RegistryFile = serde_json::from_str(s)
            .map_err(|source| Error::Json { path: "<registry>".into(), source })?;
        Self::from_file_data(file, rb_mass)
    }

    pub fn load(path: &Path, rb_mass: RbMass) -> Result<Self> {
        let file: RegistryFile = read_json(path)?;
        Self::from_file_data(file, rb_mass)
    }

    pub fn default_registry() -> Self {
        Self::from_json_str(DEFAULT_REGISTRY_JSON, RbMass::default())
            .expect("bundled constants file is valid")
    }

    pub fn record(&self, name: &str) -> Option<&ConstantRecord> {
        self.records.iter().find(|r| r.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_loads() {
        let reg = ConstantsRegistry::default_registry();
        assert_eq!(reg.c.sigma, 0.0);
        assert_eq!(reg.rb_mass, RbMass::Mean);
        for name in ["Ar_Rb87_Bradley1999", "Ar_Rb87_Mount2010", "Ar_Rb87_mean"] {
            assert!(reg.record(name).is_some(), "{name}");
        }
        let b = reg.record("Ar_Rb87_Bradley1999").unwrap().value;
        let m = reg.record("Ar_Rb87_Mount2010").unwrap().value;
        assert!((reg.ar_rb.value - 0.5 * (b + m)).abs() < 1e-12);
    }

    #[test]
    fn rb_choice_selects_record() {
        let reg = ConstantsRegistry::from_json_str(DEFAULT_REGISTRY_JSON, RbMass::Mount2010).unwrap();
        assert_eq!(reg.ar_rb.value, reg.record("Ar_Rb87_Mount2010").unwrap().value);
    }

    #[test]
    fn inexact_c_rejected() {
        let mut file: RegistryFile = serde_json::from_str(DEFAULT_REGISTRY_JSON).unwrap();
        file.constants.iter_mut().find(|r| r.name == "c").unwrap().sigma = 1.0;
        assert!(ConstantsRegistry::from_file_data(file, RbMass::Mean).is_err());
    }

    #[test]
    fn missing_source_rejected() {
        let mut file: RegistryFile = serde_json::from_str(DEFAULT_REGISTRY_JSON).unwrap();
        file.constants.iter_mut().find(|r| r.name == "Ar_e").unwrap().source.clear();
        assert!(ConstantsRegistry::from_file_data(file, RbMass::Mean).is_err());
    }

    #[test]
    fn wrong_unit_rejected() {
        let mut file: RegistryFile = serde_json::from_str(DEFAULT_REGISTRY_JSON).unwrap();
        file.constants.iter_mut().find(|r| r.name == "R_infinity").unwrap().unit = "m".into();
        assert!(matches!(
            ConstantsRegistry::from_file_data(file, RbMass::Mean),
            Err(Error::UnitMismatch { .. })
        ));
    }
}
