//! Physical parameters and the derived k-constants of the plant equations.

use serde::{Deserialize, Serialize};

use crate::error::{DryerError, Result};
use crate::model::ExogenousInputs;

/// Physical constants of the dryer, all SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantParameters {
    /// Fuel lower heating value, J/kg.
    #[serde(rename = "HV_J_kg")]
    pub hv: f64,
    /// Latent heat of vaporization, J/kg.
    #[serde(rename = "LH_J_kg")]
    pub lh: f64,
    #[serde(rename = "cp_chamber_J_kgK")]
    pub cp_chamber: f64,
    #[serde(rename = "cp_air_J_kgK")]
    pub cp_air: f64,
    #[serde(rename = "cp_windbox_gas_J_kgK")]
    pub cp_windbox_gas: f64,
    #[serde(rename = "cp_dryer_gas_J_kgK")]
    pub cp_dryer_gas: f64,
    #[serde(rename = "cp_exhaust_gas_J_kgK")]
    pub cp_exhaust_gas: f64,
    #[serde(rename = "cp_solid_J_kgK")]
    pub cp_solid: f64,
    #[serde(rename = "cp_liquid_water_J_kgK")]
    pub cp_liquid_water: f64,
    /// Gas to bed conductance, W/K.
    #[serde(rename = "UA_bed_W_K")]
    pub ua_bed: f64,
    /// Exhaust duct loss conductance, W/K.
    #[serde(rename = "UeAe_duct_W_K")]
    pub ue_ae_duct: f64,
    #[serde(rename = "R_gas_J_kgK")]
    pub r_gas: f64,
    /// Exhaust duct volume, m³.
    #[serde(rename = "V_exhaust_m3")]
    pub v_exhaust: f64,
    /// Dry pebble mass in the bed, kg.
    #[serde(rename = "M_solid_kg")]
    pub m_solid: f64,
    #[serde(rename = "T_ambient_K")]
    pub t_ambient: f64,
    /// Air actuator gain, (kg/s) per signal unit.
    #[serde(rename = "k_air_actuator_kg_s_per_unit")]
    pub k_air_actuator: f64,
    /// ID fan coefficient, (kg/s) per (signal unit · √Pa).
    #[serde(rename = "k_fan_kg_s_per_unit_sqrtPa")]
    pub k_fan: f64,
}

impl Default for PlantParameters {
    fn default() -> Self {
        Self {
            hv: 42.5e6,
            lh: 2.26e6,
            cp_chamber: 1100.0,
            cp_air: 1005.0,
            cp_windbox_gas: 1100.0,
            cp_dryer_gas: 1100.0,
            cp_exhaust_gas: 1100.0,
            cp_solid: 900.0,
            cp_liquid_water: 4186.0,
            ua_bed: 500.0,
            ue_ae_duct: 50.0,
            r_gas: 287.0,
            v_exhaust: 2.0,
            m_solid: 750.0,
            t_ambient: 293.0,
            k_air_actuator: 0.05,
            k_fan: 0.03,
        }
    }
}

impl PlantParameters {
    /// Named view of every field that must be strictly positive.
    fn positive_fields(&self) -> [(&'static str, f64); 17] {
        [
            ("HV", self.hv),
            ("LH", self.lh),
            ("cp_chamber", self.cp_chamber),
            ("cp_air", self.cp_air),
            ("cp_windbox_gas", self.cp_windbox_gas),
            ("cp_dryer_gas", self.cp_dryer_gas),
            ("cp_exhaust_gas", self.cp_exhaust_gas),
            ("cp_solid", self.cp_solid),
            ("cp_liquid_water", self.cp_liquid_water),
            ("UA_bed", self.ua_bed),
            ("UeAe_duct", self.ue_ae_duct),
            ("R_gas", self.r_gas),
            ("V_exhaust", self.v_exhaust),
            ("M_solid", self.m_solid),
            ("T_ambient", self.t_ambient),
            ("k_air_actuator", self.k_air_actuator),
            ("k_fan", self.k_fan),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in self.positive_fields() {
            if !(value.is_finite() && value > 0.0) {
                return Err(DryerError::InvalidParameter {
                    field: field.to_string(),
                    reason: format!("must be finite and > 0, got {value}"),
                });
            }
        }
        Ok(())
    }
}

/// Ratios of physical parameters that appear in the dynamic equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// HV / cp_chamber, K.
    pub k12: f64,
    pub k22: f64,
    pub k14: f64,
    pub k24: f64,
    pub k34: f64,
    /// Not listed among the published ratios; taken equal to k24.
    pub k44: f64,
    /// UA_bed / cp_windbox_gas, kg/s.
    pub k17: f64,
    /// UeAe_duct / cp_exhaust_gas, kg/s.
    pub k18: f64,
    /// R / V_e, J/(kg·K·m³).
    pub k19: f64,
    pub k29: f64,
    /// Ambient temperature, carried here because the exhaust rows need it.
    pub t_ambient: f64,
}

pub fn derive_constants(params: &PlantParameters) -> Result<DerivedConstants> {
    params.validate()?;
    let p = params;
    Ok(DerivedConstants {
        k12: p.hv / p.cp_chamber,
        k22: p.cp_air / p.cp_chamber,
        k14: p.cp_chamber / p.cp_windbox_gas,
        k24: p.cp_air / p.cp_windbox_gas,
        k34: 1.0,
        k44: p.cp_air / p.cp_windbox_gas,
        k17: p.ua_bed / p.cp_windbox_gas,
        k18: p.ue_ae_duct / p.cp_exhaust_gas,
        k19: p.r_gas / p.v_exhaust,
        k29: p.r_gas * p.ue_ae_duct / (p.v_exhaust * p.cp_exhaust_gas),
        t_ambient: p.t_ambient,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, field: field.into(), message: message.into() }
    }

    pub fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, field: field.into(), message: message.into() }
    }
}

/// Reports invariant violations as errors and physical inconsistencies as
/// warnings. Never aborts.
pub fn validate_parameters(params: &PlantParameters, inputs: &ExogenousInputs) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (field, value) in params.positive_fields() {
        if !(value.is_finite() && value > 0.0) {
            out.push(Diagnostic::error(field, format!("must be > 0, got {value}")));
        }
    }
    for (field, value) in inputs.flows() {
        if !(value >= 0.0) {
            out.push(Diagnostic::error(field, format!("flow must be >= 0, got {value}")));
        }
    }
    for (field, value) in [("X_in", inputs.x_in), ("X_out_cmd", inputs.x_out_cmd)] {
        if !(0.0..=1.0).contains(&value) {
            out.push(Diagnostic::error(field, format!("moisture fraction must lie in [0, 1], got {value}")));
        }
    }
    let useful = params.lh * inputs.f_solids * (inputs.x_in - inputs.x_out_cmd);
    let fuel = params.hv * inputs.mdot_fuel;
    if useful > fuel {
        out.push(Diagnostic::warning(
            "energy_balance",
            format!("useful power {:.0} kW exceeds fuel power {:.0} kW", useful / 1e3, fuel / 1e3),
        ));
    }
    if inputs.x_out_cmd > inputs.x_in {
        out.push(Diagnostic::warning("X_out_cmd", "outlet moisture above inlet moisture (condensation)"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_constants_from_defaults() {
        let k = derive_constants(&PlantParameters::default()).unwrap();
        assert!((k.k12 - 38636.363636).abs() < 1e-3);
        assert!((k.k19 - 143.5).abs() < 1e-12);
        assert_eq!(k.k34, 1.0);
        assert_eq!(k.k44, k.k24);
        assert!((k.k29 - k.k19 * k.k18).abs() < 1e-12);
    }

    #[test]
    fn non_positive_parameter_is_named() {
        let p = PlantParameters { v_exhaust: 0.0, ..Default::default() };
        match derive_constants(&p) {
            Err(DryerError::InvalidParameter { field, .. }) => assert_eq!(field, "V_exhaust"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn table_values_expose_energy_imbalance() {
        let inputs = ExogenousInputs::table_i();
        let d = validate_parameters(&PlantParameters::default(), &inputs);
        let w: Vec<_> = d.iter().filter(|d| d.field == "energy_balance").collect();
        assert_eq!(w.len(), 1);
        assert!(w[0].message.contains("565 kW"), "{}", w[0].message);
        assert!(w[0].message.contains("510 kW"), "{}", w[0].message);
    }

    #[test]
    fn consistent_toy_set_is_clean() {
        let inputs = ExogenousInputs { f_solids: 0.1, ..ExogenousInputs::table_i() };
        assert!(validate_parameters(&PlantParameters::default(), &inputs).is_empty());
    }

    #[test]
    fn negative_solid_mass_is_hard_error() {
        let p = PlantParameters { m_solid: -1.0, ..Default::default() };
        let d = validate_parameters(&p, &ExogenousInputs::table_i());
        assert!(d.iter().any(|d| d.severity == Severity::Error && d.field == "M_solid"));
    }
}
