//! Compensators for the three loops, either from the published loop models
//! or by direct synthesis on loops cut from the closed-loop plant Jacobian.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::plant::{ClosedLoopPlant, Disturbances, Manipulated};
use crate::control::loops::{ds_loop_design, extract_loop, LoopDesign};
use crate::control::{
    g1_model, imc_compensator_g2, imc_compensator_g3, lambda2_fallback, lambda2_tuning, pi_direct_synthesis,
    stack_gain, RationalTransferFunction,
};
use crate::error::{DryerError, Result};
use crate::exec::Exec;
use crate::linearize::{alpha_coefficients, central_jacobian, DEFAULT_REL_STEP};
use crate::steady::OperatingPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompensatorSource {
    Paper,
    #[default]
    Jacobian,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningOverrides {
    #[serde(default)]
    pub tau_c1_s: Option<f64>,
    #[serde(default)]
    pub tau_c2_s: Option<f64>,
    #[serde(default)]
    pub tau_c3_s: Option<f64>,
    #[serde(default)]
    pub lambda2_s: Option<f64>,
    #[serde(default)]
    pub lambda3_s: Option<f64>,
    #[serde(default)]
    pub filter_order3: Option<u32>,
}

impl TuningOverrides {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tau_c1_s", self.tau_c1_s),
            ("tau_c2_s", self.tau_c2_s),
            ("tau_c3_s", self.tau_c3_s),
            ("lambda2_s", self.lambda2_s),
            ("lambda3_s", self.lambda3_s),
        ];
        for (name, v) in fields {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(DryerError::InvalidParameter {
                        field: name.into(),
                        reason: format!("must be > 0, got {v}"),
                    });
                }
            }
        }
        if matches!(self.filter_order3, Some(n) if n < 2) {
            return Err(DryerError::InvalidParameter { field: "filter_order3".into(), reason: "must be >= 2".into() });
        }
        Ok(())
    }
}

/// Error-to-drive transfer function of one loop. Drives are F_s (kg/s) for
/// moisture, c2 for chamber temperature and c3 for draft pressure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopCompensator {
    pub compensator: RationalTransferFunction,
    pub plant: RationalTransferFunction,
    pub tuning: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompensatorSet {
    pub source: CompensatorSource,
    pub moisture: LoopCompensator,
    pub chamber_temperature: LoopCompensator,
    pub draft_pressure: LoopCompensator,
    pub notes: Vec<String>,
}

/// Operating values of the plant inputs and of the drive signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingDrives {
    pub manipulated: Manipulated,
    pub disturbances: Disturbances,
    pub c2: f64,
    pub c3: f64,
    pub k_air: f64,
    pub k_stack: f64,
}

impl OperatingDrives {
    pub fn new(plant: &ClosedLoopPlant, op: &OperatingPoint) -> Result<Self> {
        let k_air = plant.params.k_air_actuator;
        let k_stack = stack_gain(plant.params.k_fan, op.inventory.p_draft);
        if !(k_air > 0.0) || !(k_stack > 0.0) {
            return Err(DryerError::InvalidDesign(format!(
                "actuator gains must be > 0 (air {k_air}, stack {k_stack})"
            )));
        }
        let manipulated =
            Manipulated { f_solids: op.kv.f_solids, mdot_air: op.kv.mdot_air, mdot_stack: op.uv.mdot_stack };
        Ok(Self {
            manipulated,
            disturbances: Disturbances { mdot_fuel: op.kv.mdot_fuel, t_dryer_in: op.kv.t_dryer_in, x_in: op.kv.x_in },
            c2: manipulated.mdot_air / k_air,
            c3: manipulated.mdot_stack / k_stack,
            k_air,
            k_stack,
        })
    }
}

/// SISO loops (F_s→X, c2→T_c, c3→P) of the constant-evaporation plant
/// linearized at its operating state.
pub fn jacobian_loops(
    plant: &ClosedLoopPlant,
    op: &OperatingPoint,
    exec: Exec,
) -> Result<[(RationalTransferFunction, Vec<usize>); 3]> {
    let plant = plant.without_bed();
    let drives = OperatingDrives::new(&plant, op)?;
    let x0 = plant.operating_state(op);
    let dist = drives.disturbances;
    let to_flows =
        |v: &[f64]| Manipulated { f_solids: v[0], mdot_air: drives.k_air * v[1], mdot_stack: drives.k_stack * v[2] };
    let v0 = [drives.manipulated.f_solids, drives.c2, drives.c3];
    let m0 = to_flows(&v0);
    let a = central_jacobian(|x| plant.derivative(x, &m0, &dist), &x0, DEFAULT_REL_STEP, exec)?;
    let b = central_jacobian(|v| plant.derivative(&x0, &to_flows(v), &dist), &v0, DEFAULT_REL_STEP, exec)?;
    let ms = plant.params.m_solid;
    let n = x0.len();
    let mut c_x = DVector::zeros(n);
    c_x[4] = ms / (ms + x0[4]).powi(2);
    let mut c_t = DVector::zeros(n);
    c_t[1] = 1.0;
    let mut c_p = DVector::zeros(n);
    c_p[9] = 1.0;
    let col = |j: usize| b.column(j).into_owned();
    Ok([extract_loop(&a, &col(0), &c_x), extract_loop(&a, &col(1), &c_t), extract_loop(&a, &col(2), &c_p)])
}

fn ds_loop(tf: &RationalTransferFunction, keep: Vec<usize>, tau_c: Option<f64>) -> Result<LoopCompensator> {
    let mut d: LoopDesign = ds_loop_design(tf, tau_c)?;
    d.retained_states = keep;
    Ok(LoopCompensator {
        compensator: d.compensator.clone(),
        plant: d.plant.clone(),
        tuning: serde_json::json!({
            "tau_c_s": d.tau_c_s,
            "tau_dom_s": d.tau_dom_s,
            "retained_states": d.retained_states,
            "plant_poles": d.plant_poles,
            "plant_zeros": d.plant_zeros,
        }),
    })
}

pub fn design_compensators(
    plant: &ClosedLoopPlant,
    op: &OperatingPoint,
    source: CompensatorSource,
    overrides: &TuningOverrides,
    exec: Exec,
) -> Result<CompensatorSet> {
    overrides.validate()?;
    let drives = OperatingDrives::new(plant, op)?;
    let mut notes = Vec::new();
    match source {
        CompensatorSource::Jacobian => {
            let [lx, lt, lp] = jacobian_loops(plant, op, exec)?;
            Ok(CompensatorSet {
                source,
                moisture: ds_loop(&lx.0, lx.1, overrides.tau_c1_s)?,
                chamber_temperature: ds_loop(&lt.0, lt.1, overrides.tau_c2_s)?,
                draft_pressure: ds_loop(&lp.0, lp.1, overrides.tau_c3_s)?,
                notes,
            })
        }
        CompensatorSource::Paper => {
            let g1 = g1_model(op, plant.params.m_solid)?;
            let tau_c1 = overrides.tau_c1_s.unwrap_or(g1.tau / 3.0);
            let pi = pi_direct_synthesis(&g1, tau_c1)?;
            if let Some(w) = &g1.warning {
                notes.push(format!("moisture loop: {w}"));
            }
            let al = alpha_coefficients(op, &plant.consts)?;
            let lambda2 = match overrides.lambda2_s {
                Some(l) => l,
                None => match lambda2_tuning(&al) {
                    Ok(t) => t.lambda2_s,
                    Err(e) => {
                        let l = lambda2_fallback(&al);
                        notes.push(format!(
                            "temperature loop: {e}; lambda2 = {l:.4} s from max(1/sqrt|wn^2|, 1/(2|a12|))"
                        ));
                        l
                    }
                },
            };
            let g2 = imc_compensator_g2(&al, lambda2, Some(drives.k_air))?;
            let lambda3 = overrides.lambda3_s.unwrap_or(3.0 / al.alpha(29));
            let order3 = overrides.filter_order3.unwrap_or(2);
            let g3 = imc_compensator_g3(&al, lambda3, order3, Some(drives.k_stack))?;
            for w in g2.warnings.iter().chain(&g3.warnings) {
                notes.push(w.clone());
            }
            let drive = |d: &crate::control::IMCDesign| d.drive_compensator.clone().expect("actuator gain supplied");
            Ok(CompensatorSet {
                source,
                moisture: LoopCompensator {
                    compensator: pi.transfer_function(),
                    plant: g1.transfer_function(),
                    tuning: serde_json::json!({ "Kc": pi.kc, "tau_I_s": pi.tau_i, "tau_c_s": tau_c1 }),
                },
                chamber_temperature: LoopCompensator {
                    compensator: drive(&g2),
                    plant: g2.plant.clone(),
                    tuning: serde_json::json!({ "lambda2_s": lambda2, "rhp_zero": g2.rhp_zero }),
                },
                draft_pressure: LoopCompensator {
                    compensator: drive(&g3),
                    plant: g3.plant.clone(),
                    tuning: serde_json::json!({ "lambda3_s": lambda3, "filter_order": order3, "rhp_zero": g3.rhp_zero }),
                },
                notes,
            })
        }
    }
}
