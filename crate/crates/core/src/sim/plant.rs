//! The nonlinear plant with the flow closures a closed-loop run needs.

use serde::{Deserialize, Serialize};

use crate::error::{DryerError, Result};
use crate::model::{
    bed_energy_rate, outlet_moisture, rhs_with_evaporation, ModelVariant, PlantState, N_INPUTS, N_STATES,
};
use crate::params::{derive_constants, DerivedConstants, PlantParameters};
use crate::steady::OperatingPoint;

/// Bed-temperature state with heat-limited evaporation,
/// E = min(1, X/X_cr)·max(0, UA·(T_g − T_bed))/LH.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BedModel {
    #[serde(rename = "X_critical")]
    pub x_critical: f64,
}

impl Default for BedModel {
    fn default() -> Self {
        Self { x_critical: 0.10 }
    }
}

/// Flows set by the three loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Manipulated {
    pub f_solids: f64,
    pub mdot_air: f64,
    pub mdot_stack: f64,
}

/// Inputs the scenario may step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Disturbances {
    pub mdot_fuel: f64,
    pub t_dryer_in: f64,
    pub x_in: f64,
}

/// Closures: ṁ_{c→w} = ṁ_f + ṁ_a, ṁ_{w→d} = ṁ_{c→w}, ṁ_g^out = E (plus
/// ṁ_{w→d} when mass-consistent), T_d^out = T_g. Without the bed model E is
/// held at its operating value.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopPlant {
    pub params: PlantParameters,
    pub consts: DerivedConstants,
    pub variant: ModelVariant,
    pub evaporation_ss: f64,
    pub t_air_in: f64,
    pub mdot_evap_to_windbox: f64,
    pub t_bed_input: f64,
    pub bed: Option<BedModel>,
}

impl ClosedLoopPlant {
    pub fn new(
        params: PlantParameters,
        variant: ModelVariant,
        op: &OperatingPoint,
        bed: Option<BedModel>,
    ) -> Result<Self> {
        if let Some(b) = bed {
            if !(b.x_critical > 0.0) {
                return Err(DryerError::InvalidParameter {
                    field: "X_critical".into(),
                    reason: format!("must be > 0, got {}", b.x_critical),
                });
            }
        }
        Ok(Self {
            consts: derive_constants(&params)?,
            params,
            variant,
            evaporation_ss: op.kv.evaporation(),
            t_air_in: op.kv.t_air_in,
            mdot_evap_to_windbox: op.kv.mdot_evap_to_windbox,
            t_bed_input: op.kv.t_bed,
            bed,
        })
    }

    /// Same plant with the bed model removed.
    pub fn without_bed(&self) -> Self {
        Self { bed: None, ..self.clone() }
    }

    pub fn n_states(&self) -> usize {
        N_STATES + usize::from(self.bed.is_some())
    }

    pub fn moisture(&self, x: &[f64]) -> Result<f64> {
        outlet_moisture(x[4], self.params.m_solid)
    }

    fn t_bed(&self, x: &[f64]) -> f64 {
        if self.bed.is_some() {
            x[N_STATES]
        } else {
            self.t_bed_input
        }
    }

    pub fn evaporation(&self, x: &[f64]) -> Result<f64> {
        match self.bed {
            None => Ok(self.evaporation_ss),
            Some(b) => {
                let moisture = self.moisture(x)?;
                let drive = (moisture / b.x_critical).min(1.0).max(0.0);
                let heat = (self.params.ua_bed * (x[6] - self.t_bed(x))).max(0.0);
                Ok(drive * heat / self.params.lh)
            }
        }
    }

    /// Bed water inventory giving outlet moisture `x_out`.
    pub fn bedwater_for(&self, x_out: f64) -> f64 {
        x_out * self.params.m_solid / (1.0 - x_out)
    }

    /// Operating state with the bed water consistent with X_out, so that the
    /// moisture row is at rest too.
    pub fn operating_state(&self, op: &OperatingPoint) -> Vec<f64> {
        let mut s = op.state();
        s.m_bedwater = self.bedwater_for(op.kv.x_out);
        let mut x = s.to_array().to_vec();
        if self.bed.is_some() {
            x.push(op.kv.t_bed);
        }
        x
    }

    /// State vector from a [`PlantState`]; the bed temperature defaults to the
    /// bed input when the state does not carry one.
    pub fn state_vector(&self, s: &PlantState) -> Vec<f64> {
        let mut x = s.to_array().to_vec();
        if self.bed.is_some() {
            x.push(s.t_bed.unwrap_or(self.t_bed_input));
        }
        x
    }

    /// The 14-entry input vector implied by the closures.
    pub fn input_vector(
        &self,
        x: &[f64],
        m: &Manipulated,
        d: &Disturbances,
        evaporation: f64,
        moisture: f64,
    ) -> [f64; N_INPUTS] {
        let mcw = d.mdot_fuel + m.mdot_air;
        let mwd = mcw;
        let mgo = match self.variant {
            ModelVariant::PaperVerbatim => evaporation,
            ModelVariant::MassConsistent => evaporation + mwd,
        };
        [
            d.mdot_fuel,
            m.mdot_air,
            mcw,
            self.mdot_evap_to_windbox,
            self.t_air_in,
            mwd,
            d.t_dryer_in,
            m.f_solids,
            d.x_in,
            moisture,
            mgo,
            self.t_bed(x),
            m.mdot_stack,
            x[6],
        ]
    }

    pub fn derivative(&self, x: &[f64], m: &Manipulated, d: &Disturbances) -> Result<Vec<f64>> {
        if x.len() != self.n_states() {
            return Err(DryerError::DimensionMismatch(format!(
                "state has {} entries, plant {}",
                x.len(),
                self.n_states()
            )));
        }
        let moisture = self.moisture(x)?;
        let e = self.evaporation(x)?;
        let u = self.input_vector(x, m, d, e, moisture);
        let core: &[f64; N_STATES] = x[..N_STATES].try_into().expect("length checked");
        let mut dx = rhs_with_evaporation(core, &u, e, &self.consts, self.variant)?.to_vec();
        dx[4] = m.f_solids * (d.x_in - moisture) - e;
        if self.bed.is_some() {
            dx.push(bed_energy_rate(self.t_bed(x), x[6], x[4], m.f_solids, moisture, e, &self.params)?);
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::KnownVariables;

    fn setup(variant: ModelVariant) -> (ClosedLoopPlant, OperatingPoint) {
        let p = PlantParameters::default();
        let op = OperatingPoint::solve(KnownVariables::table_i(), &derive_constants(&p).unwrap(), variant).unwrap();
        (ClosedLoopPlant::new(p, variant, &op, None).unwrap(), op)
    }

    fn nominal(op: &OperatingPoint) -> (Manipulated, Disturbances) {
        (
            Manipulated { f_solids: op.kv.f_solids, mdot_air: op.kv.mdot_air, mdot_stack: op.uv.mdot_stack },
            Disturbances { mdot_fuel: op.kv.mdot_fuel, t_dryer_in: op.kv.t_dryer_in, x_in: op.kv.x_in },
        )
    }

    #[test]
    fn operating_state_is_an_equilibrium() {
        for v in [ModelVariant::PaperVerbatim, ModelVariant::MassConsistent] {
            let (plant, op) = setup(v);
            let (m, d) = nominal(&op);
            let x = plant.operating_state(&op);
            let dx = plant.derivative(&x, &m, &d).unwrap();
            for (i, r) in dx.iter().enumerate() {
                let scale = if i == 9 { 1e3 } else { 1.0 };
                assert!(r.abs() < 1e-9 * scale, "{v:?} row {i}: {r}");
            }
        }
    }

    #[test]
    fn chamber_mass_is_conserved_by_the_closure() {
        let (plant, op) = setup(ModelVariant::PaperVerbatim);
        let (m, d) = nominal(&op);
        let x = plant.operating_state(&op);
        let m2 = Manipulated { mdot_air: 0.4, ..m };
        assert_eq!(plant.derivative(&x, &m2, &d).unwrap()[0], 0.0);
    }

    #[test]
    fn bed_model_adds_a_state() {
        let (plant, op) = setup(ModelVariant::PaperVerbatim);
        let bed = ClosedLoopPlant { bed: Some(BedModel::default()), ..plant };
        let (m, d) = nominal(&op);
        let x = bed.operating_state(&op);
        assert_eq!(x.len(), 11);
        let dx = bed.derivative(&x, &m, &d).unwrap();
        assert_eq!(dx.len(), 11);
        // gas above the bed: positive convective drive, evaporation limited by heat
        let e = bed.evaporation(&x).unwrap();
        let q = bed.params.ua_bed * (x[6] - x[10]);
        assert!(e > 0.0 && e * bed.params.lh <= q + 1e-9);
        assert!(bed.derivative(&x[..10], &m, &d).is_err());
    }
}
