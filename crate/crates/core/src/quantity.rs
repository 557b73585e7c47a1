//! Values with a standard uncertainty and a runtime-checked unit tag.
//!
//! Uncertainties propagate to first order with uncorrelated inputs. Unit tags
//! are products of symbols raised to integer powers (`"m^2 s^-1"`, `"Hz"`,
//! `"1"`); multiplication and division combine exponents, addition and
//! subtraction require identical tags. Named units are never expanded, so `J`
//! and `kg m^2 s^-2` are different tags.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dimension tag: symbol -> nonzero integer exponent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Unit(BTreeMap<String, i32>);

impl Unit {
    pub fn dimensionless() -> Self {
        Unit(BTreeMap::new())
    }

    pub fn is_dimensionless(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Unit) -> Unit {
        let mut out = self.0.clone();
        for (sym, exp) in &other.0 {
            *out.entry(sym.clone()).or_insert(0) += exp;
        }
        out.retain(|_, e| *e != 0);
        Unit(out)
    }

    pub fn inv(&self) -> Unit {
        Unit(self.0.iter().map(|(s, e)| (s.clone(), -e)).collect())
    }

    pub fn div(&self, other: &Unit) -> Unit {
        self.mul(&other.inv())
    }

    /// Integer power; `None` if a rational power would not leave integer exponents.
    pub fn pow_ratio(&self, num: i32, den: i32) -> Option<Unit> {
        let mut out = BTreeMap::new();
        for (s, e) in &self.0 {
            let scaled = e * num;
            if scaled % den != 0 {
                return None;
            }
            out.insert(s.clone(), scaled / den);
        }
        out.retain(|_, e| *e != 0);
        Some(Unit(out))
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut map = BTreeMap::new();
        if s.is_empty() || s == "1" {
            return Ok(Unit(map));
        }
        for token in s.split_whitespace() {
            let (sym, exp) = match token.split_once('^') {
                Some((sym, exp)) => {
                    let exp: i32 = exp.parse().map_err(|_| Error::InvalidUnit(s.to_string()))?;
                    (sym, exp)
                }
                None => (token, 1),
            };
            if sym.is_empty() || !sym.chars().all(|c| c.is_ascii_alphabetic() || c == '_') {
                return Err(Error::InvalidUnit(s.to_string()));
            }
            *map.entry(sym.to_string()).or_insert(0) += exp;
        }
        map.retain(|_, e| *e != 0);
        Ok(Unit(map))
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let mut first = true;
        for (sym, exp) in &self.0 {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            if *exp == 1 {
                write!(f, "{sym}")?;
            } else {
                write!(f, "{sym}^{exp}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for Unit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Unit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

/// `value ± sigma [unit]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuantity")]
pub struct Quantity {
    pub value: f64,
    pub sigma: f64,
    pub unit: Unit,
}

#[derive(Deserialize)]
struct RawQuantity {
    value: f64,
    #[serde(default)]
    sigma: f64,
    #[serde(default)]
    unit: Option<Unit>,
}

impl TryFrom<RawQuantity> for Quantity {
    type Error = Error;

    fn try_from(raw: RawQuantity) -> Result<Self> {
        Quantity::new(raw.value, raw.sigma, raw.unit.unwrap_or_default())
    }
}

impl Quantity {
    pub fn new(value: f64, sigma: f64, unit: Unit) -> Result<Self> {
        if !value.is_finite() || !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidQuantity(format!("{value} ± {sigma}")));
        }
        Ok(Quantity { value, sigma, unit })
    }

    /// Parses the unit tag; panics on a malformed tag, so only use with literals.
    pub fn with_unit(value: f64, sigma: f64, unit: &str) -> Self {
        let unit = unit.parse().expect("malformed unit literal");
        Quantity::new(value, sigma, unit).expect("invalid quantity literal")
    }

    pub fn exact(value: f64, unit: &str) -> Self {
        Self::with_unit(value, 0.0, unit)
    }

    pub fn dimensionless(value: f64, sigma: f64) -> Self {
        Quantity { value, sigma, unit: Unit::dimensionless() }
    }

    pub fn relative_sigma(&self) -> f64 {
        self.sigma / self.value.abs()
    }

    pub fn combine(&self, other: &Quantity, op: Op) -> Result<Quantity> {
        let (a, sa, b, sb) = (self.value, self.sigma, other.value, other.sigma);
        let (value, sigma, unit) = match op {
            Op::Add | Op::Sub => {
                if self.unit != other.unit {
                    return Err(Error::UnitMismatch {
                        op: if op == Op::Add { "add" } else { "subtract" },
                        left: self.unit.to_string(),
                        right: other.unit.to_string(),
                    });
                }
                let v = if op == Op::Add { a + b } else { a - b };
                (v, sa.hypot(sb), self.unit.clone())
            }
            Op::Mul => (a * b, (sa * b).hypot(a * sb), self.unit.mul(&other.unit)),
            Op::Div => {
                if b == 0.0 {
                    return Err(Error::DivisionByZero);
                }
                let v = a / b;
                (v, (sa / b).hypot(v * sb / b), self.unit.div(&other.unit))
            }
        };
        Ok(Quantity { value, sigma: sigma.abs(), unit })
    }

    pub fn add(&self, other: &Quantity) -> Result<Quantity> {
        self.combine(other, Op::Add)
    }

    pub fn sub(&self, other: &Quantity) -> Result<Quantity> {
        self.combine(other, Op::Sub)
    }

    pub fn mul(&self, other: &Quantity) -> Result<Quantity> {
        self.combine(other, Op::Mul)
    }

    pub fn div(&self, other: &Quantity) -> Result<Quantity> {
        self.combine(other, Op::Div)
    }

    /// Multiply by an exact dimensionless factor.
    pub fn scale(&self, k: f64) -> Quantity {
        Quantity { value: self.value * k, sigma: (self.sigma * k).abs(), unit: self.unit.clone() }
    }

    /// `self^(num/den)`; the value must be positive for non-integer powers.
    pub fn powr(&self, num: i32, den: i32) -> Result<Quantity> {
        let p = num as f64 / den as f64;
        if den != 1 && self.value <= 0.0 {
            return Err(Error::NonPositive("fractional power"));
        }
        let unit = self
            .unit
            .pow_ratio(num, den)
            .ok_or_else(|| Error::InvalidUnit(format!("({})^({num}/{den})", self.unit)))?;
        let value = self.value.powf(p);
        let sigma = (p * value / self.value * self.sigma).abs();
        Ok(Quantity { value, sigma, unit })
    }

    pub fn ensure_unit(&self, unit: &str) -> Result<()> {
        let want: Unit = unit.parse()?;
        if self.unit != want {
            return Err(Error::UnitMismatch {
                op: "use as",
                left: self.unit.to_string(),
                right: want.to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {} [{}]", self.value, self.sigma, self.unit)
    }
}

/// Formats `value(uncertainty)` the way constants are usually quoted, with
/// `digits` significant digits in the uncertainty.
pub fn concise(value: f64, sigma: f64, digits: i32) -> String {
    if sigma <= 0.0 || !sigma.is_finite() {
        return format!("{value}");
    }
    let mag = value.abs();
    if mag != 0.0 && !(1e-3..1e9).contains(&mag) {
        // scientific: mantissa(unc)e<power>
        let power = mag.log10().floor() as i32;
        let scale = 10f64.powi(power);
        return format!("{}e{power}", concise(value / scale, sigma / scale, digits));
    }
    let exp = sigma.log10().floor() as i32 - (digits - 1);
    let decimals = (-exp).max(0) as usize;
    let unc = (sigma / 10f64.powi(exp)).round() as i64;
    format!("{value:.decimals$}({unc})")
}
