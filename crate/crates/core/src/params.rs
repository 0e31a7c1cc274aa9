//! Kinetic parameter sets and thermodynamic conditions.
//!
//! Parameters are read from a flat TOML key/value document. The field names
//! mirror the rate-model symbols (`A_K1`, `dH_K1`, `A_k3`, `Ea_k3`, ...). Unknown
//! keys are rejected so that a typo cannot silently fall back to a default.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The bundled placeholder parameter file.
pub const PLACEHOLDER_PARAMS: &str = include_str!("../data/placeholder_params.toml");

/// Rate unit accepted in the `rate_unit` field.
pub const RATE_UNIT: &str = "mol/(kg*s)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PressureUnit {
    #[serde(rename = "bar")]
    Bar,
    #[serde(rename = "MPa")]
    MPa,
}

impl PressureUnit {
    /// Number of bar in one unit.
    pub fn bar_per_unit(self) -> f64 {
        match self {
            PressureUnit::Bar => 1.0,
            PressureUnit::MPa => 10.0,
        }
    }

    pub fn from_bar(self, bar: f64) -> f64 {
        bar / self.bar_per_unit()
    }

    pub fn to_bar(self, value: f64) -> f64 {
        value * self.bar_per_unit()
    }

    pub fn from_mpa(self, mpa: f64) -> f64 {
        self.from_bar(mpa * 10.0)
    }

    pub fn to_mpa(self, value: f64) -> f64 {
        self.to_bar(value) / 10.0
    }
}

impl fmt::Display for PressureUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PressureUnit::Bar => f.write_str("bar"),
            PressureUnit::MPa => f.write_str("MPa"),
        }
    }
}

impl FromStr for PressureUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bar" => Ok(PressureUnit::Bar),
            "MPa" => Ok(PressureUnit::MPa),
            other => Err(Error::InvalidParameter(format!(
                "unknown pressure unit {other:?} (expected \"bar\" or \"MPa\")"
            ))),
        }
    }
}

/// `A * exp(-E / (R T))`, used for both equilibrium and rate constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrhenius {
    pub pre_exponential: f64,
    /// Reaction enthalpy or activation energy, J/mol.
    pub energy: f64,
}

impl Arrhenius {
    pub fn new(pre_exponential: f64, energy: f64) -> Self {
        Self {
            pre_exponential,
            energy,
        }
    }

    pub fn at(&self, temperature: f64, gas_constant: f64) -> f64 {
        self.pre_exponential * (-self.energy / (gas_constant * temperature)).exp()
    }
}

/// Constants of the CO-insertion rate model.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticParameters {
    pub k1: Arrhenius,
    pub k2: Arrhenius,
    pub k4: Arrhenius,
    pub k5: Arrhenius,
    pub k6: Arrhenius,
    pub k3: Arrhenius,
    pub k7: Arrhenius,
    pub k7m: Arrhenius,
    pub k8_0: Arrhenius,
    pub k8e_0: Arrhenius,
    /// Chain-length energy increment, J/mol. Positive.
    pub delta_e: f64,
    pub gas_constant: f64,
    pub n_max: usize,
    pub pressure_unit: PressureUnit,
    pub provenance: String,
    pub reference: String,
}

/// Temperature-evaluated constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConstants {
    pub k1: f64,
    pub k2: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub k3: f64,
    pub k7: f64,
    pub k7m: f64,
    pub k8_0: f64,
    pub k8e_0: f64,
    /// `dE / (R T)`, positive.
    pub c: f64,
}

impl KineticParameters {
    /// The bundled placeholder set (see `data/placeholder_params.toml`).
    pub fn placeholder() -> Self {
        Self::from_toml_str(PLACEHOLDER_PARAMS).expect("bundled parameter file is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ParamFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<parameters>".into(),
            message: e.to_string(),
        })?;
        let params = file.into_params()?;
        params.validate()?;
        Ok(params)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ParamFile::from(self)).expect("parameter file serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("A_K1", self.k1.pre_exponential),
            ("A_K2", self.k2.pre_exponential),
            ("A_K4", self.k4.pre_exponential),
            ("A_K5", self.k5.pre_exponential),
            ("A_K6", self.k6.pre_exponential),
            ("A_k3", self.k3.pre_exponential),
            ("A_k7", self.k7.pre_exponential),
            ("A_k7M", self.k7m.pre_exponential),
            ("A_k8_0", self.k8_0.pre_exponential),
            ("A_k8E_0", self.k8e_0.pre_exponential),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        let energies = [
            self.k1.energy,
            self.k2.energy,
            self.k4.energy,
            self.k5.energy,
            self.k6.energy,
            self.k3.energy,
            self.k7.energy,
            self.k7m.energy,
            self.k8_0.energy,
            self.k8e_0.energy,
        ];
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("non-finite energy".into()));
        }
        if !(self.delta_e.is_finite() && self.delta_e > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dE must be positive, got {}",
                self.delta_e
            )));
        }
        if !(self.gas_constant.is_finite() && self.gas_constant > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "R must be positive, got {}",
                self.gas_constant
            )));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidParameter(format!(
                "N_max must be at least 2, got {}",
                self.n_max
            )));
        }
        Ok(())
    }

    pub fn constants(&self, temperature: f64) -> RateConstants {
        let r = self.gas_constant;
        let t = temperature;
        RateConstants {
            k1: self.k1.at(t, r),
            k2: self.k2.at(t, r),
            k4: self.k4.at(t, r),
            k5: self.k5.at(t, r),
            k6: self.k6.at(t, r),
            k3: self.k3.at(t, r),
            k7: self.k7.at(t, r),
            k7m: self.k7m.at(t, r),
            k8_0: self.k8_0.at(t, r),
            k8e_0: self.k8e_0.at(t, r),
            c: self.delta_e / (r * t),
        }
    }
}

/// Partial pressures (in the parameter file's pressure unit) and temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    pub p_co: f64,
    pub p_h2: f64,
    pub p_h2o: f64,
    /// Kelvin.
    pub temperature: f64,
}

impl Conditions {
    pub fn new(p_co: f64, p_h2: f64, p_h2o: f64, temperature: f64) -> Self {
        Self {
            p_co,
            p_h2,
            p_h2o,
            temperature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("P_CO", self.p_co), ("P_H2", self.p_h2), ("P_H2O", self.p_h2o)] {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidConditions(format!(
                    "{name} must be finite and non-negative, got {p}"
                )));
            }
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::InvalidConditions(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamFile {
    #[serde(default)]
    provenance: Option<String>,
    #[serde(default)]
    reference: Option<String>,
    pressure_unit: String,
    #[serde(default)]
    rate_unit: Option<String>,
    #[serde(rename = "R")]
    gas_constant: f64,
    #[serde(rename = "dE")]
    delta_e: f64,
    #[serde(rename = "N_max", default = "default_n_max")]
    n_max: i64,
    #[serde(rename = "A_K1")]
    a_k1: f64,
    #[serde(rename = "dH_K1")]
    dh_k1: f64,
    #[serde(rename = "A_K2")]
    a_k2: f64,
    #[serde(rename = "dH_K2")]
    dh_k2: f64,
    #[serde(rename = "A_K4")]
    a_k4: f64,
    #[serde(rename = "dH_K4")]
    dh_k4: f64,
    #[serde(rename = "A_K5")]
    a_k5: f64,
    #[serde(rename = "dH_K5")]
    dh_k5: f64,
    #[serde(rename = "A_K6")]
    a_k6: f64,
    #[serde(rename = "dH_K6")]
    dh_k6: f64,
    #[serde(rename = "A_k3")]
    a_k3: f64,
    #[serde(rename = "Ea_k3")]
    ea_k3: f64,
    #[serde(rename = "A_k7")]
    a_k7: f64,
    #[serde(rename = "Ea_k7")]
    ea_k7: f64,
    #[serde(rename = "A_k7M")]
    a_k7m: f64,
    #[serde(rename = "Ea_k7M")]
    ea_k7m: f64,
    #[serde(rename = "A_k8_0")]
    a_k8_0: f64,
    #[serde(rename = "Ea_k8_0")]
    ea_k8_0: f64,
    #[serde(rename = "A_k8E_0")]
    a_k8e_0: f64,
    #[serde(rename = "Ea_k8E_0")]
    ea_k8e_0: f64,
}

fn default_n_max() -> i64 {
    100
}

impl ParamFile {
    fn into_params(self) -> Result<KineticParameters> {
        if let Some(unit) = &self.rate_unit {
            if unit != RATE_UNIT {
                return Err(Error::InvalidParameter(format!(
                    "unsupported rate_unit {unit:?} (only {RATE_UNIT:?})"
                )));
            }
        }
        if self.n_max < 2 {
            return Err(Error::InvalidParameter(format!(
                "N_max must be at least 2, got {}",
                self.n_max
            )));
        }
        Ok(KineticParameters {
            k1: Arrhenius::new(self.a_k1, self.dh_k1),
            k2: Arrhenius::new(self.a_k2, self.dh_k2),
            k4: Arrhenius::new(self.a_k4, self.dh_k4),
            k5: Arrhenius::new(self.a_k5, self.dh_k5),
            k6: Arrhenius::new(self.a_k6, self.dh_k6),
            k3: Arrhenius::new(self.a_k3, self.ea_k3),
            k7: Arrhenius::new(self.a_k7, self.ea_k7),
            k7m: Arrhenius::new(self.a_k7m, self.ea_k7m),
            k8_0: Arrhenius::new(self.a_k8_0, self.ea_k8_0),
            k8e_0: Arrhenius::new(self.a_k8e_0, self.ea_k8e_0),
            delta_e: self.delta_e,
            gas_constant: self.gas_constant,
            n_max: self.n_max as usize,
            pressure_unit: self.pressure_unit.parse()?,
            provenance: self.provenance.unwrap_or_default(),
            reference: self.reference.unwrap_or_default(),
        })
    }
}

impl From<&KineticParameters> for ParamFile {
    fn from(p: &KineticParameters) -> Self {
        ParamFile {
            provenance: Some(p.provenance.clone()),
            reference: Some(p.reference.clone()),
            pressure_unit: p.pressure_unit.to_string(),
            rate_unit: Some(RATE_UNIT.to_string()),
            gas_constant: p.gas_constant,
            delta_e: p.delta_e,
            n_max: p.n_max as i64,
            a_k1: p.k1.pre_exponential,
            dh_k1: p.k1.energy,
            a_k2: p.k2.pre_exponential,
            dh_k2: p.k2.energy,
            a_k4: p.k4.pre_exponential,
            dh_k4: p.k4.energy,
            a_k5: p.k5.pre_exponential,
            dh_k5: p.k5.energy,
            a_k6: p.k6.pre_exponential,
            dh_k6: p.k6.energy,
            a_k3: p.k3.pre_exponential,
            ea_k3: p.k3.energy,
            a_k7: p.k7.pre_exponential,
            ea_k7: p.k7.energy,
            a_k7m: p.k7m.pre_exponential,
            ea_k7m: p.k7m.energy,
            a_k8_0: p.k8_0.pre_exponential,
            ea_k8_0: p.k8_0.energy,
            a_k8e_0: p.k8e_0.pre_exponential,
            ea_k8e_0: p.k8e_0.energy,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholder_loads_and_hits_reference_values() {
        let p = KineticParameters::placeholder();
        assert_eq!(p.n_max, 100);
        assert_eq!(p.pressure_unit, PressureUnit::MPa);
        let k = p.constants(493.15);
        assert!((k.k1 - 1.0).abs() < 1e-9);
        assert!((k.k2 - 0.5).abs() < 1e-9);
        assert!((k.k3 / 6e-2 - 1.0).abs() < 1e-9);
        assert!((k.k8e_0 / 1.5e-3 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("{PLACEHOLDER_PARAMS}\nA_K7 = 1.0\n");
        let err = KineticParameters::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn non_positive_prefactor_is_rejected() {
        let text = PLACEHOLDER_PARAMS.replace("A_K5 = 1.0", "A_K5 = 0.0");
        let err = KineticParameters::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "{err}");
    }

    #[test]
    fn small_n_max_is_rejected() {
        let text = PLACEHOLDER_PARAMS.replace("N_max = 100", "N_max = 1");
        assert!(KineticParameters::from_toml_str(&text).is_err());
    }

    #[test]
    fn negative_delta_e_is_rejected() {
        let text = PLACEHOLDER_PARAMS.replace("dE = 1100.0", "dE = -1100.0");
        assert!(KineticParameters::from_toml_str(&text).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let p = KineticParameters::placeholder();
        let again = KineticParameters::from_toml_str(&p.to_toml_string()).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn pressure_units_convert() {
        assert_eq!(PressureUnit::MPa.from_bar(25.0), 2.5);
        assert_eq!(PressureUnit::Bar.from_mpa(0.5), 5.0);
        assert_eq!(PressureUnit::MPa.to_mpa(0.5), 0.5);
    }
}
