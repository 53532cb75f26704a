//! Physical constants and conversions between laboratory units and the
//! eV-based natural units (ħ = c = 1, G = 1/m_P²) used everywhere else.
//!
//! Energies and masses are carried in eV, lengths and times in eV⁻¹.
//! Conversion happens only at the boundaries (CLI, text estimates).

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{require, Error, Result};

/// Fermi constant, eV⁻².
pub const FERMI_CONSTANT: f64 = 1.1664e-23;
/// Planck mass, eV.
pub const PLANCK_MASS: f64 = 1.2209e28;
/// ħc, eV·m.
pub const HBAR_C: f64 = 1.9733e-7;
/// Planck length, m. Taken as ħc / m_P so the table is self-consistent.
pub const PLANCK_LENGTH: f64 = HBAR_C / PLANCK_MASS;
/// ħ, eV·s: the duration of one natural time unit (1 eV⁻¹).
pub const HBAR: f64 = 6.582_119_569e-16;
/// One light-year, m.
pub const METERS_PER_LIGHTYEAR: f64 = 9.4607e15;
/// Rest energy of one gram, eV.
pub const EV_PER_GRAM: f64 = 5.609_588_603_804_451e32;

const CONSISTENCY_TOL: f64 = 1e-6;

/// The constant table. Immutable once built; defaults are compiled in and
/// individual entries may be overridden from a key-value config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// G_F, eV⁻².
    pub fermi_constant: f64,
    /// m_P, eV.
    pub planck_mass: f64,
    /// l_P, m.
    pub planck_length: f64,
    /// ħc, eV·m.
    pub hbar_c: f64,
    /// ħ, eV·s.
    pub seconds_per_inverse_ev: f64,
    pub meters_per_lightyear: f64,
    pub ev_per_gram: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            fermi_constant: FERMI_CONSTANT,
            planck_mass: PLANCK_MASS,
            planck_length: PLANCK_LENGTH,
            hbar_c: HBAR_C,
            seconds_per_inverse_ev: HBAR,
            meters_per_lightyear: METERS_PER_LIGHTYEAR,
            ev_per_gram: EV_PER_GRAM,
        }
    }
}

impl PhysicalConstants {
    /// Config keys understood by [`PhysicalConstants::with_overrides`].
    pub const KEYS: [&'static str; 7] = [
        "gf_ev2",
        "mp_ev",
        "lp_m",
        "hbar_c_ev_m",
        "hbar_ev_s",
        "ly_m",
        "ev_per_gram",
    ];

    /// Applies overrides keyed by [`Self::KEYS`]. When `mp_ev` or
    /// `hbar_c_ev_m` change and `lp_m` is not given, l_P is re-derived.
    pub fn with_overrides(&self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut c = *self;
        let mut lp_given = false;
        for (key, &value) in overrides {
            match key.as_str() {
                "gf_ev2" => c.fermi_constant = value,
                "mp_ev" => c.planck_mass = value,
                "lp_m" => {
                    c.planck_length = value;
                    lp_given = true;
                }
                "hbar_c_ev_m" => c.hbar_c = value,
                "hbar_ev_s" => c.seconds_per_inverse_ev = value,
                "ly_m" => c.meters_per_lightyear = value,
                "ev_per_gram" => c.ev_per_gram = value,
                other => return Err(Error::Config(format!("unknown constant key `{other}`"))),
            }
        }
        if !lp_given {
            c.planck_length = c.hbar_c / c.planck_mass;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gf_ev2", self.fermi_constant),
            ("mp_ev", self.planck_mass),
            ("lp_m", self.planck_length),
            ("hbar_c_ev_m", self.hbar_c),
            ("hbar_ev_s", self.seconds_per_inverse_ev),
            ("ly_m", self.meters_per_lightyear),
            ("ev_per_gram", self.ev_per_gram),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "constant `{name}` must be positive, got {v}"
                )));
            }
        }
        let residual = (self.planck_length * self.planck_mass / self.hbar_c - 1.0).abs();
        if residual > CONSISTENCY_TOL {
            return Err(Error::Config(format!(
                "l_P·m_P differs from ħc by {residual:e} (relative)"
            )));
        }
        Ok(())
    }

    /// G = 1/m_P², eV⁻².
    pub fn gravitational_coupling(&self) -> f64 {
        self.planck_mass.powi(-2)
    }

    /// Planck time in seconds.
    pub fn planck_time_seconds(&self) -> f64 {
        self.natural_time_to_seconds_unchecked(self.planck_length / self.hbar_c)
    }

    pub fn lightyears_to_natural(&self, lightyears: f64) -> Result<f64> {
        non_negative("baseline (ly)", lightyears)?;
        Ok(lightyears * self.meters_per_lightyear / self.hbar_c)
    }

    pub fn natural_to_lightyears(&self, length: f64) -> f64 {
        length * self.hbar_c / self.meters_per_lightyear
    }

    pub fn meters_to_natural(&self, meters: f64) -> Result<f64> {
        non_negative("length (m)", meters)?;
        Ok(meters / self.hbar_c)
    }

    pub fn natural_to_meters(&self, length: f64) -> f64 {
        length * self.hbar_c
    }

    pub fn natural_time_to_seconds(&self, time: f64) -> Result<f64> {
        non_negative("time (eV⁻¹)", time)?;
        Ok(self.natural_time_to_seconds_unchecked(time))
    }

    fn natural_time_to_seconds_unchecked(&self, time: f64) -> f64 {
        time * self.seconds_per_inverse_ev
    }

    pub fn seconds_to_natural(&self, seconds: f64) -> Result<f64> {
        non_negative("time (s)", seconds)?;
        Ok(seconds / self.seconds_per_inverse_ev)
    }

    pub fn grams_to_ev(&self, grams: f64) -> Result<f64> {
        non_negative("mass (g)", grams)?;
        Ok(grams * self.ev_per_gram)
    }

    pub fn ev_to_grams(&self, mass: f64) -> f64 {
        mass / self.ev_per_gram
    }
}

fn non_negative(what: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v >= 0.0, || {
        format!("{what} must be finite and ≥ 0, got {v}")
    })
}

/// Dimensions the library distinguishes. Length and time are both eV⁻¹ in
/// natural units but are kept apart so they cannot be mixed by accident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dimension {
    Energy,
    Length,
    Time,
    Mass,
    Dimensionless,
    EnergySquared,
    InverseEnergySquared,
}

/// A natural-unit value tagged with its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub dimension: Dimension,
}

impl Quantity {
    pub fn new(value: f64, dimension: Dimension) -> Self {
        Self { value, dimension }
    }

    fn check(&self, other: &Quantity, op: &str) -> Result<()> {
        if self.dimension == other.dimension {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "cannot {op} {:?} and {:?}",
                self.dimension, other.dimension
            )))
        }
    }

    pub fn try_add(self, other: Quantity) -> Result<Quantity> {
        self.check(&other, "add")?;
        Ok(Quantity::new(self.value + other.value, self.dimension))
    }

    pub fn try_sub(self, other: Quantity) -> Result<Quantity> {
        self.check(&other, "subtract")?;
        Ok(Quantity::new(self.value - other.value, self.dimension))
    }

    /// Ratio of two like quantities.
    pub fn ratio(self, other: Quantity) -> Result<f64> {
        self.check(&other, "divide")?;
        Ok(self.value / other.value)
    }

    pub fn scale(self, factor: f64) -> Quantity {
        Quantity::new(self.value * factor, self.dimension)
    }

    /// Converts to a laboratory unit: m for lengths, s for times, g for
    /// masses. Other dimensions are returned unchanged.
    pub fn to_lab(self, c: &PhysicalConstants) -> f64 {
        match self.dimension {
            Dimension::Length => c.natural_to_meters(self.value),
            Dimension::Time => self.value * c.seconds_per_inverse_ev,
            Dimension::Mass => c.ev_to_grams(self.value),
            _ => self.value,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = match self.dimension {
            Dimension::Energy | Dimension::Mass => "eV",
            Dimension::Length | Dimension::Time => "eV^-1",
            Dimension::Dimensionless => "",
            Dimension::EnergySquared => "eV^2",
            Dimension::InverseEnergySquared => "eV^-2",
        };
        write!(f, "{:e} {unit}", self.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn default_table_is_consistent() {
        let c = PhysicalConstants::default();
        c.validate().unwrap();
        assert!(rel(c.planck_length, 1.6163e-35) < 5e-5);
    }

    #[test]
    fn lightyear_conversions() {
        let c = PhysicalConstants::default();
        assert_eq!(c.lightyears_to_natural(0.0).unwrap(), 0.0);
        let one = c.lightyears_to_natural(1.0).unwrap();
        assert!(rel(one, 4.794e22) < 1e-3, "{one:e}");
        let far = c.lightyears_to_natural(15e9).unwrap();
        assert!(rel(far, 7.19e32) < 1e-3, "{far:e}");
        assert!(matches!(
            c.lightyears_to_natural(-1.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn time_conversions() {
        let c = PhysicalConstants::default();
        assert_eq!(c.natural_time_to_seconds(0.0).unwrap(), 0.0);
        assert!(rel(c.natural_time_to_seconds(1.0).unwrap(), 6.582e-16) < 1e-3);
        let tp = c
            .natural_time_to_seconds(c.planck_length / c.hbar_c)
            .unwrap();
        assert!(rel(tp, 5.39e-44) < 1e-3, "{tp:e}");
        assert!(rel(c.planck_time_seconds(), tp) < 1e-15);
        assert!(c.natural_time_to_seconds(-1e-3).is_err());
    }

    #[test]
    fn overrides_rederive_planck_length() {
        let mut o = BTreeMap::new();
        o.insert("mp_ev".to_string(), 1.22e28);
        let c = PhysicalConstants::default().with_overrides(&o).unwrap();
        assert_eq!(c.planck_mass, 1.22e28);
        assert!(rel(c.planck_length * c.planck_mass, c.hbar_c) < 1e-12);

        o.insert("lp_m".to_string(), 2e-35);
        assert!(matches!(
            PhysicalConstants::default().with_overrides(&o),
            Err(Error::Config(_))
        ));

        let mut bad = BTreeMap::new();
        bad.insert("gf_ev2".to_string(), -1.0);
        assert!(PhysicalConstants::default().with_overrides(&bad).is_err());
        let mut unknown = BTreeMap::new();
        unknown.insert("speed_of_light".to_string(), 1.0);
        assert!(PhysicalConstants::default()
            .with_overrides(&unknown)
            .is_err());
    }

    #[test]
    fn quantity_dimension_checks() {
        let a = Quantity::new(2.0, Dimension::Length);
        let b = Quantity::new(3.0, Dimension::Length);
        let t = Quantity::new(1.0, Dimension::Time);
        assert_eq!(a.try_add(b).unwrap().value, 5.0);
        assert_eq!(b.try_sub(a).unwrap().value, 1.0);
        assert!(matches!(a.try_add(t), Err(Error::DimensionMismatch(_))));
        assert!(a.ratio(t).is_err());
        assert_eq!(a.ratio(b).unwrap(), 2.0 / 3.0);
        assert_eq!(a.scale(2.0).dimension, Dimension::Length);
    }
}
