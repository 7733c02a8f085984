//! Run configuration: strict JSON with units in the field names.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{DryerError, Result};
use crate::model::ModelVariant;
use crate::params::{derive_constants, DerivedConstants, PlantParameters};
use crate::sim::{BedModel, CompensatorSource, Method, Scenario, SimOptions, TuningOverrides};
use crate::steady::{closed_form_op, KnownVariables, OperatingPoint, SteadyInventory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Overrides the scenario step when set.
    #[serde(default)]
    pub step_s: Option<f64>,
    #[serde(default = "default_interval")]
    pub output_interval_s: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub anti_windup: bool,
    #[serde(default)]
    pub bed_model: Option<BedModel>,
    #[serde(default)]
    pub compensator_source: CompensatorSource,
    #[serde(default)]
    pub stiffness_check: bool,
}

fn default_interval() -> f64 {
    0.1
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            step_s: None,
            output_interval_s: default_interval(),
            method: Method::Rk4,
            anti_windup: false,
            bed_model: None,
            compensator_source: CompensatorSource::Jacobian,
            stiffness_check: false,
        }
    }
}

impl SimulationConfig {
    pub fn options(&self) -> SimOptions {
        SimOptions { anti_windup: self.anti_windup, output_interval_s: self.output_interval_s, method: self.method }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub plant: PlantParameters,
    #[serde(default = "KnownVariables::table_i")]
    pub known_variables: KnownVariables,
    #[serde(default)]
    pub inventory: SteadyInventory,
    #[serde(default)]
    pub variant: ModelVariant,
    /// Relative to the config file.
    #[serde(default)]
    pub scenario_path: Option<PathBuf>,
    #[serde(default)]
    pub tuning: TuningOverrides,
    #[serde(default)]
    pub simulation: SimulationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            plant: PlantParameters::default(),
            known_variables: KnownVariables::table_i(),
            inventory: SteadyInventory::default(),
            variant: ModelVariant::default(),
            scenario_path: None,
            tuning: TuningOverrides::default(),
            simulation: SimulationConfig::default(),
        }
    }
}

/// Parses JSON, reporting the path of the offending field.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        DryerError::Config(format!("at `{path}`: {}", e.inner()))
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| DryerError::Config(format!("{}: {e}", path.display())))?;
    from_json_str(&text).map_err(|e| match e {
        DryerError::Config(m) => DryerError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn check(field: &str, ok: bool, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(DryerError::InvalidParameter { field: field.into(), reason: reason.into() })
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut c: RunConfig = read_json(path)?;
        if let Some(p) = c.scenario_path.take() {
            let base = path.parent().unwrap_or(Path::new("."));
            c.scenario_path = Some(if p.is_absolute() { p } else { base.join(p) });
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.tuning.validate()?;
        let kv = &self.known_variables;
        for (name, v) in [
            ("known_variables.mdot_fuel_kg_s", kv.mdot_fuel),
            ("known_variables.mdot_air_kg_s", kv.mdot_air),
            ("known_variables.F_solids_kg_s", kv.f_solids),
        ] {
            check(name, v.is_finite() && v >= 0.0, "must be finite and >= 0")?;
        }
        for (name, v) in [("known_variables.X_in", kv.x_in), ("known_variables.X_out", kv.x_out)] {
            check(name, (0.0..1.0).contains(&v), "must lie in [0, 1)")?;
        }
        for (name, v) in [
            ("known_variables.T_air_in_K", kv.t_air_in),
            ("known_variables.T_dryer_in_K", kv.t_dryer_in),
            ("known_variables.T_bed_K", kv.t_bed),
        ] {
            check(name, v.is_finite() && v > 0.0, "must be a positive absolute temperature")?;
        }
        let inv = &self.inventory;
        for (name, v) in [
            ("inventory.m_chamber_kg", inv.m_chamber),
            ("inventory.m_windbox_kg", inv.m_windbox),
            ("inventory.m_dryergas_kg", inv.m_dryergas),
            ("inventory.m_exhaust_kg", inv.m_exhaust),
        ] {
            check(name, v.is_finite() && v > 0.0, "must be finite and > 0")?;
        }
        let sim = &self.simulation;
        if let Some(h) = sim.step_s {
            check("simulation.step_s", h.is_finite() && h > 0.0, "must be > 0")?;
        }
        check("simulation.output_interval_s", sim.output_interval_s > 0.0, "must be > 0")?;
        if let Some(b) = sim.bed_model {
            check("simulation.bed_model.X_critical", b.x_critical > 0.0, "must be > 0")?;
        }
        Ok(())
    }

    pub fn consts(&self) -> Result<DerivedConstants> {
        derive_constants(&self.plant)
    }

    /// Closed-form operating point for the configured inventories.
    pub fn operating_point(&self, variant: ModelVariant) -> Result<OperatingPoint> {
        let k = self.consts()?;
        let uv = closed_form_op(&self.known_variables, &k, variant)?;
        OperatingPoint::new(self.known_variables, uv, self.inventory, &k, variant)
    }

    /// The configured scenario, or the published schedule when none is set.
    /// A configured step overrides the file's.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = match &self.scenario_path {
            Some(p) => read_json(p)?,
            None => Scenario::published(),
        };
        if let Some(h) = self.simulation.step_s {
            s.step_s = h;
        }
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default_config() {
        let c: RunConfig = from_json_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let c = RunConfig {
            tuning: TuningOverrides { lambda3_s: Some(4.0), ..Default::default() },
            simulation: SimulationConfig { bed_model: Some(BedModel::default()), ..Default::default() },
            ..Default::default()
        };
        let back: RunConfig = from_json_str(&serde_json::to_string_pretty(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors_name_the_field() {
        let e = from_json_str::<RunConfig>(r#"{"plant": {"HV_J_kg": "lots"}}"#).unwrap_err();
        assert!(e.to_string().contains("plant.HV_J_kg"), "{e}");
        let e = from_json_str::<RunConfig>(r#"{"plant": {"HV": 1.0}}"#).unwrap_err();
        assert!(e.to_string().contains("HV"), "{e}");
        let c: RunConfig = from_json_str(
            r#"{"known_variables": {"mdot_fuel_kg_s": -1, "mdot_air_kg_s": 0.25, "F_solids_kg_s": 2.5,
            "X_in": 0.15, "X_out": 0.05, "T_air_in_K": 298, "T_dryer_in_K": 993.15, "T_bed_K": 643.15,
            "mdot_evap_to_windbox_kg_s": 0.2}}"#,
        )
        .unwrap();
        let e = c.validate().unwrap_err();
        assert!(e.to_string().contains("mdot_fuel"), "{e}");
        assert!(!e.is_numerical());
    }

    #[test]
    fn default_scenario_is_the_published_schedule() {
        let c = RunConfig {
            simulation: SimulationConfig { step_s: Some(0.02), ..Default::default() },
            ..Default::default()
        };
        let s = c.scenario().unwrap();
        assert_eq!(s.step_s, 0.02);
        assert_eq!(s.events, Scenario::published().events);
    }
}
