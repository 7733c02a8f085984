//! Thermal efficiency: full and simplified forms, rate of change,
//! sensitivities, elasticities and grid sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{DryerError, Result};
use crate::exec::{map_indexed, Exec};
use crate::params::PlantParameters;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyBreakdown {
    pub q_useful_w: f64,
    pub q_input_w: f64,
    pub q_loss_w: f64,
    pub eta: f64,
    pub warnings: Vec<String>,
}

/// Operating signals the full efficiency depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencySignals {
    pub f_solids: f64,
    pub x_in: f64,
    pub x_out: f64,
    pub mdot_fuel: f64,
    pub mdot_stack: f64,
    pub t_exhaust: f64,
    pub t_ambient: f64,
}

/// (q_useful / q_input)·(1 − q_loss / q_input), unclamped.
pub fn efficiency_full(s: &EfficiencySignals, params: &PlantParameters) -> Result<EfficiencyBreakdown> {
    if !(s.mdot_fuel > 0.0) {
        return Err(DryerError::UndefinedEfficiency(s.mdot_fuel));
    }
    let q_useful = params.lh * s.f_solids * (s.x_in - s.x_out);
    let q_input = params.hv * s.mdot_fuel;
    let q_loss = params.cp_exhaust_gas * s.mdot_stack * (s.t_exhaust - s.t_ambient);
    let eta = q_useful / q_input * (1.0 - q_loss / q_input);
    let mut warnings = Vec::new();
    if eta > 1.0 {
        warnings.push(format!(
            "eta = {eta:.4} > 1: useful power {:.0} kW against fuel power {:.0} kW",
            q_useful / 1e3,
            q_input / 1e3
        ));
    } else if eta < 0.0 {
        warnings.push(format!("eta = {eta:.4} < 0"));
    }
    if q_useful < 0.0 {
        warnings.push("negative useful power (condensation)".into());
    }
    if q_loss < 0.0 {
        warnings.push("negative stack loss (exhaust below ambient)".into());
    }
    Ok(EfficiencyBreakdown { q_useful_w: q_useful, q_input_w: q_input, q_loss_w: q_loss, eta, warnings })
}

fn lift(t_in: f64, t_amb: f64) -> Result<f64> {
    let d = t_in - t_amb;
    if d == 0.0 {
        return Err(DryerError::DegenerateLift(format!("T_in = T_amb = {t_in}")));
    }
    Ok(d)
}

/// (T_in − T_e)/(T_in − T_amb).
pub fn efficiency_simplified(t_in: f64, t_e: f64, t_amb: f64) -> Result<f64> {
    Ok((t_in - t_e) / lift(t_in, t_amb)?)
}

/// Time derivatives of the signals in [`EfficiencySignals`]; T_amb is held.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignalRates {
    pub f_solids: Option<f64>,
    pub x_in: Option<f64>,
    pub x_out: Option<f64>,
    pub mdot_fuel: Option<f64>,
    pub mdot_stack: Option<f64>,
    pub t_exhaust: Option<f64>,
}

impl SignalRates {
    fn get(&self) -> Result<[f64; 6]> {
        Ok([
            self.f_solids.ok_or(DryerError::MissingChannel("f_solids"))?,
            self.x_in.ok_or(DryerError::MissingChannel("x_in"))?,
            self.x_out.ok_or(DryerError::MissingChannel("x_out"))?,
            self.mdot_fuel.ok_or(DryerError::MissingChannel("mdot_fuel"))?,
            self.mdot_stack.ok_or(DryerError::MissingChannel("mdot_stack"))?,
            self.t_exhaust.ok_or(DryerError::MissingChannel("t_exhaust"))?,
        ])
    }
}

/// Writes η = U·(1 − L) with U = q_useful/q_input and L = q_loss/q_input,
/// returning (U, L, dU/dt, dL/dt).
fn ratio_rates(s: &EfficiencySignals, r: &[f64; 6], p: &PlantParameters) -> Result<(f64, f64, f64, f64)> {
    if !(s.mdot_fuel > 0.0) {
        return Err(DryerError::UndefinedEfficiency(s.mdot_fuel));
    }
    let [dfs, dxin, dxout, dmf, dmst, dte] = *r;
    let dx = s.x_in - s.x_out;
    let u = p.lh * s.f_solids * dx / (p.hv * s.mdot_fuel);
    let l = p.cp_exhaust_gas * s.mdot_stack * (s.t_exhaust - s.t_ambient) / (p.hv * s.mdot_fuel);
    let du = p.lh / p.hv
        * ((dfs * dx + s.f_solids * (dxin - dxout)) / s.mdot_fuel - s.f_solids * dx * dmf / s.mdot_fuel.powi(2));
    let dl = p.cp_exhaust_gas / p.hv
        * ((dmst * (s.t_exhaust - s.t_ambient) + s.mdot_stack * dte) / s.mdot_fuel
            - s.mdot_stack * (s.t_exhaust - s.t_ambient) * dmf / s.mdot_fuel.powi(2));
    Ok((u, l, du, dl))
}

/// Exact dη/dt of the full efficiency: U'(1 − L) − U·L'.
pub fn efficiency_rate(s: &EfficiencySignals, rates: &SignalRates, p: &PlantParameters) -> Result<f64> {
    let r = rates.get()?;
    let (u, l, du, dl) = ratio_rates(s, &r, p)?;
    Ok(du * (1.0 - l) - u * dl)
}

/// The published three-term chain rule, d(U − L)/dt. It omits the product
/// coupling of the exact derivative and agrees with it only when U·L is
/// stationary.
pub fn efficiency_rate_as_printed(s: &EfficiencySignals, rates: &SignalRates, p: &PlantParameters) -> Result<f64> {
    let r = rates.get()?;
    let (_, _, du, dl) = ratio_rates(s, &r, p)?;
    Ok(du - dl)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityTriple {
    pub d_eta_d_tin: f64,
    pub d_eta_d_te: f64,
    pub d_eta_d_tamb: f64,
}

pub fn sensitivities(t_in: f64, t_e: f64, t_amb: f64) -> Result<SensitivityTriple> {
    let d = lift(t_in, t_amb)?;
    Ok(SensitivityTriple {
        d_eta_d_tin: (t_e - t_amb) / (d * d),
        d_eta_d_te: -1.0 / d,
        d_eta_d_tamb: (t_in - t_e) / (d * d),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElasticityTriple {
    pub e_tin: f64,
    pub e_te: f64,
    pub e_tamb: f64,
}

impl ElasticityTriple {
    pub fn sum(&self) -> f64 {
        self.e_tin + self.e_te + self.e_tamb
    }
}

pub fn elasticities(t_in: f64, t_e: f64, t_amb: f64) -> Result<ElasticityTriple> {
    let d = lift(t_in, t_amb)?;
    let g = t_in - t_e;
    if g == 0.0 {
        return Err(DryerError::DegenerateLift(format!("T_in = T_e = {t_in}: efficiency is zero")));
    }
    Ok(ElasticityTriple { e_tin: t_in * (t_e - t_amb) / (d * g), e_te: -t_e / g, e_tamb: t_amb / d })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Axes T_in × T_e at fixed T_amb.
    FixTamb,
    /// Axes T_in × T_amb at fixed T_e.
    FixTe,
    /// Axes T_e × T_amb at fixed T_in.
    FixTin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepQuantity {
    Eta,
    DEtaDTin,
    DEtaDTe,
}

impl SweepMode {
    pub fn axis_names(self) -> (&'static str, &'static str, &'static str) {
        match self {
            SweepMode::FixTamb => ("T_in_K", "T_e_K", "T_amb_K"),
            SweepMode::FixTe => ("T_in_K", "T_amb_K", "T_e_K"),
            SweepMode::FixTin => ("T_e_K", "T_amb_K", "T_in_K"),
        }
    }

    /// (T_in, T_e, T_amb) for a cell.
    fn triple(self, a1: f64, a2: f64, fixed: f64) -> (f64, f64, f64) {
        match self {
            SweepMode::FixTamb => (a1, a2, fixed),
            SweepMode::FixTe => (a1, fixed, a2),
            SweepMode::FixTin => (fixed, a1, a2),
        }
    }
}

pub const T_IN_RANGE: (f64, f64) = (500.0, 1300.0);
pub const T_E_RANGE: (f64, f64) = (350.0, 900.0);
pub const T_AMB_RANGE: (f64, f64) = (263.0, 323.0);
pub const DEFAULT_GRID_POINTS: usize = 50;

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceGrid {
    pub mode: SweepMode,
    pub quantity: SweepQuantity,
    pub axis1_name: &'static str,
    pub axis1: Vec<f64>,
    pub axis2_name: &'static str,
    pub axis2: Vec<f64>,
    pub fixed_name: &'static str,
    pub fixed_value: f64,
    /// Row-major over (axis1, axis2); `None` marks a degenerate cell.
    pub values: Vec<Option<f64>>,
}

impl SurfaceGrid {
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.axis2.len() + j]
    }

    /// Long-form rows (axis1, axis2, value, degenerate).
    pub fn long_form(&self) -> impl Iterator<Item = (f64, f64, Option<f64>)> + '_ {
        let n2 = self.axis2.len();
        self.values.iter().enumerate().map(move |(k, v)| (self.axis1[k / n2], self.axis2[k % n2], *v))
    }
}

fn monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0]) || v.windows(2).all(|w| w[1] < w[0])
}

/// Evaluates the quantity on every cell; cells with T_in = T_amb are masked.
pub fn surface_sweep(
    mode: SweepMode,
    fixed: f64,
    axis1: &[f64],
    axis2: &[f64],
    quantity: SweepQuantity,
    exec: Exec,
) -> Result<SurfaceGrid> {
    if axis1.is_empty() || axis2.is_empty() {
        return Err(DryerError::EmptyGrid(format!("axis sizes {} x {}", axis1.len(), axis2.len())));
    }
    if !monotone(axis1) || !monotone(axis2) {
        return Err(DryerError::EmptyGrid("grid axes must be strictly monotone".into()));
    }
    let n2 = axis2.len();
    let values = map_indexed(exec, axis1.len() * n2, |k| {
        let (t_in, t_e, t_amb) = mode.triple(axis1[k / n2], axis2[k % n2], fixed);
        match quantity {
            SweepQuantity::Eta => efficiency_simplified(t_in, t_e, t_amb).ok(),
            SweepQuantity::DEtaDTin => sensitivities(t_in, t_e, t_amb).ok().map(|s| s.d_eta_d_tin),
            SweepQuantity::DEtaDTe => sensitivities(t_in, t_e, t_amb).ok().map(|s| s.d_eta_d_te),
        }
    });
    let (a1, a2, f) = mode.axis_names();
    Ok(SurfaceGrid {
        mode,
        quantity,
        axis1_name: a1,
        axis1: axis1.to_vec(),
        axis2_name: a2,
        axis2: axis2.to_vec(),
        fixed_name: f,
        fixed_value: fixed,
        values,
    })
}

/// Default axes for a mode: the two swept ranges at the default resolution.
pub fn default_axes(mode: SweepMode, n: usize) -> (Vec<f64>, Vec<f64>) {
    let r = |(lo, hi): (f64, f64)| linspace(lo, hi, n);
    match mode {
        SweepMode::FixTamb => (r(T_IN_RANGE), r(T_E_RANGE)),
        SweepMode::FixTe => (r(T_IN_RANGE), r(T_AMB_RANGE)),
        SweepMode::FixTin => (r(T_E_RANGE), r(T_AMB_RANGE)),
    }
}
