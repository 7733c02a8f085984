use serde::{Deserialize, Serialize};

use crate::error::{DryerError, Result};
use crate::model::{ExogenousInputs, PlantState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventTarget {
    FuelFlow,
    DryerInletTemp,
    InletMoisture,
    MoistureSetpoint,
    PressureSetpoint,
    ChamberTempSetpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub t_s: f64,
    pub target: EventTarget,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub horizon_s: f64,
    pub step_s: f64,
    pub initial_state: PlantState,
    pub initial_inputs: ExogenousInputs,
    #[serde(default)]
    pub events: Vec<Event>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_s > 0.0) {
            return Err(DryerError::Scenario(format!("step_s must be > 0, got {}", self.step_s)));
        }
        if !(self.horizon_s >= self.step_s) {
            return Err(DryerError::Scenario(format!(
                "horizon_s {} must be at least step_s {}",
                self.horizon_s, self.step_s
            )));
        }
        let mut prev = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            if !(e.t_s >= 0.0 && e.t_s <= self.horizon_s) {
                return Err(DryerError::Scenario(format!("event {i} at t = {} s is outside [0, horizon]", e.t_s)));
            }
            if e.t_s < prev {
                return Err(DryerError::Scenario(format!("event {i} at t = {} s is out of order", e.t_s)));
            }
            if !e.value.is_finite() {
                return Err(DryerError::Scenario(format!("event {i} has a non-finite value")));
            }
            prev = e.t_s;
        }
        Ok(())
    }

    /// The published disturbance schedule over 2000 s. Setpoints are
    /// initialized by events at t = 0.
    pub fn published() -> Self {
        let c = 273.15;
        let ev = |t_s, target, value| Event { t_s, target, value };
        use EventTarget::*;
        Self {
            horizon_s: 2000.0,
            step_s: 0.01,
            initial_state: PlantState::table_ii(),
            initial_inputs: ExogenousInputs::table_i(),
            events: vec![
                ev(0.0, MoistureSetpoint, 0.08),
                ev(0.0, PressureSetpoint, -100e3),
                ev(0.0, ChamberTempSetpoint, 800.0 + c),
                ev(200.0, FuelFlow, 0.006),
                ev(300.0, DryerInletTemp, 792.0 + c),
                ev(500.0, InletMoisture, 0.23),
                ev(600.0, MoistureSetpoint, 0.04),
                ev(800.0, PressureSetpoint, -200e3),
                ev(1000.0, ChamberTempSetpoint, 1000.0 + c),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_schedule_is_valid_and_round_trips() {
        let s = Scenario::published();
        s.validate().unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let mut s = Scenario::published();
        s.events.swap(3, 4);
        assert!(s.validate().is_err());
        let mut s = Scenario::published();
        s.events.push(Event { t_s: 5000.0, target: EventTarget::FuelFlow, value: 0.01 });
        assert!(s.validate().is_err());
        let s = Scenario { step_s: 0.0, ..Scenario::published() };
        assert!(s.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = serde_json::to_value(Scenario::published()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(serde_json::from_value::<Scenario>(v).is_err());
    }
}
