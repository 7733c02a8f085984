//! Steady operating points: closed form, residual system and a Newton oracle.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{DryerError, Result};
use crate::model::{exhaust_energy_row, ExogenousInputs, ModelVariant, PlantState, N_STATES};
use crate::params::DerivedConstants;

/// Inputs fixed by the operator plus the boundary values the energy rows need.
/// The ambient temperature is taken from [`DerivedConstants`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnownVariables {
    #[serde(rename = "mdot_fuel_kg_s")]
    pub mdot_fuel: f64,
    #[serde(rename = "mdot_air_kg_s")]
    pub mdot_air: f64,
    #[serde(rename = "F_solids_kg_s")]
    pub f_solids: f64,
    #[serde(rename = "X_in")]
    pub x_in: f64,
    #[serde(rename = "X_out")]
    pub x_out: f64,
    #[serde(rename = "T_air_in_K")]
    pub t_air_in: f64,
    #[serde(rename = "T_dryer_in_K")]
    pub t_dryer_in: f64,
    #[serde(rename = "T_bed_K")]
    pub t_bed: f64,
    /// Carried for the linear model only; no nonlinear row uses it.
    #[serde(rename = "mdot_evap_to_windbox_kg_s")]
    pub mdot_evap_to_windbox: f64,
}

impl KnownVariables {
    pub fn table_i() -> Self {
        let u = ExogenousInputs::table_i();
        Self {
            mdot_fuel: u.mdot_fuel,
            mdot_air: u.mdot_air,
            f_solids: u.f_solids,
            x_in: u.x_in,
            x_out: u.x_out_cmd,
            t_air_in: u.t_air_in,
            t_dryer_in: u.t_dryer_in,
            t_bed: u.t_bed_input,
            mdot_evap_to_windbox: u.mdot_evap_to_windbox,
        }
    }

    pub fn evaporation(&self) -> f64 {
        self.f_solids * (self.x_in - self.x_out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnknownVariables {
    #[serde(rename = "mdot_chamber_to_windbox_kg_s")]
    pub mdot_chamber_to_windbox: f64,
    #[serde(rename = "mdot_windbox_to_dryer_kg_s")]
    pub mdot_windbox_to_dryer: f64,
    #[serde(rename = "mdot_gas_out_kg_s")]
    pub mdot_gas_out: f64,
    #[serde(rename = "mdot_stack_kg_s")]
    pub mdot_stack: f64,
    #[serde(rename = "T_chamber_K")]
    pub t_chamber: f64,
    #[serde(rename = "T_windbox_K")]
    pub t_windbox: f64,
    #[serde(rename = "T_dryergas_K")]
    pub t_dryergas: f64,
    #[serde(rename = "T_exhaust_K")]
    pub t_exhaust: f64,
    #[serde(rename = "T_dryer_out_K")]
    pub t_dryer_out: f64,
}

impl UnknownVariables {
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.mdot_chamber_to_windbox,
            self.mdot_windbox_to_dryer,
            self.t_chamber,
            self.t_windbox,
            self.mdot_gas_out,
            self.mdot_stack,
            self.t_dryergas,
            self.t_exhaust,
            self.t_dryer_out,
        ]
    }

    pub fn from_array(v: &[f64; 9]) -> Self {
        Self {
            mdot_chamber_to_windbox: v[0],
            mdot_windbox_to_dryer: v[1],
            t_chamber: v[2],
            t_windbox: v[3],
            mdot_gas_out: v[4],
            mdot_stack: v[5],
            t_dryergas: v[6],
            t_exhaust: v[7],
            t_dryer_out: v[8],
        }
    }
}

/// Gas inventories and draft pressure at the operating point. The balance
/// rows fix flows, not holdups, so these are configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadyInventory {
    #[serde(rename = "m_chamber_kg")]
    pub m_chamber: f64,
    #[serde(rename = "m_windbox_kg")]
    pub m_windbox: f64,
    #[serde(rename = "m_dryergas_kg")]
    pub m_dryergas: f64,
    #[serde(rename = "m_exhaust_kg")]
    pub m_exhaust: f64,
    #[serde(rename = "M_bedwater_kg")]
    pub m_bedwater: f64,
    #[serde(rename = "P_draft_Pa")]
    pub p_draft: f64,
}

impl Default for SteadyInventory {
    fn default() -> Self {
        Self { m_chamber: 1.0, m_windbox: 1.0, m_dryergas: 2.0, m_exhaust: 2.0, m_bedwater: 110.0, p_draft: -100e3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub kv: KnownVariables,
    pub uv: UnknownVariables,
    pub inventory: SteadyInventory,
    pub variant: ModelVariant,
    pub residuals: [f64; N_STATES],
    pub residual_norm: f64,
}

impl OperatingPoint {
    pub fn new(
        kv: KnownVariables,
        uv: UnknownVariables,
        inventory: SteadyInventory,
        consts: &DerivedConstants,
        variant: ModelVariant,
    ) -> Result<Self> {
        if inventory.m_chamber == 0.0 {
            return Err(DryerError::SingularState { state: "m_chamber", value: 0.0 });
        }
        if inventory.m_windbox == 0.0 {
            return Err(DryerError::SingularState { state: "m_windbox", value: 0.0 });
        }
        let terms = residual_terms(&kv, &uv, consts, variant);
        Ok(Self {
            kv,
            uv,
            inventory,
            variant,
            residuals: terms.map(|t| t.value),
            residual_norm: norm_of(&terms, false),
        })
    }

    /// Closed-form point with default inventories.
    pub fn solve(kv: KnownVariables, consts: &DerivedConstants, variant: ModelVariant) -> Result<Self> {
        let uv = closed_form_op(&kv, consts, variant)?;
        Self::new(kv, uv, SteadyInventory::default(), consts, variant)
    }

    pub fn state(&self) -> PlantState {
        let (i, u) = (&self.inventory, &self.uv);
        PlantState {
            m_chamber: i.m_chamber,
            t_chamber: u.t_chamber,
            m_windbox: i.m_windbox,
            t_windbox: u.t_windbox,
            m_bedwater: i.m_bedwater,
            m_dryergas: i.m_dryergas,
            t_dryergas: u.t_dryergas,
            m_exhaust: i.m_exhaust,
            t_exhaust: u.t_exhaust,
            p_draft: i.p_draft,
            t_bed: None,
        }
    }

    pub fn inputs(&self) -> ExogenousInputs {
        let (k, u) = (&self.kv, &self.uv);
        ExogenousInputs {
            mdot_fuel: k.mdot_fuel,
            mdot_air: k.mdot_air,
            mdot_chamber_to_windbox: u.mdot_chamber_to_windbox,
            mdot_evap_to_windbox: k.mdot_evap_to_windbox,
            t_air_in: k.t_air_in,
            mdot_windbox_to_dryer: u.mdot_windbox_to_dryer,
            t_dryer_in: k.t_dryer_in,
            f_solids: k.f_solids,
            x_in: k.x_in,
            x_out_cmd: k.x_out,
            mdot_gas_out: u.mdot_gas_out,
            t_bed_input: k.t_bed,
            mdot_stack: u.mdot_stack,
            t_dryer_out: u.t_dryer_out,
        }
    }
}

fn solve2(m: Matrix2<f64>, b: Vector2<f64>, expr: &str) -> Result<Vector2<f64>> {
    let det = m.determinant();
    let scale = m.abs().max().powi(2);
    if !(det.abs() > 1e-14 * scale) || scale == 0.0 {
        return Err(DryerError::SingularOperatingPoint { expr: expr.to_string() });
    }
    Ok(Vector2::new((b[0] * m[(1, 1)] - m[(0, 1)] * b[1]) / det, (m[(0, 0)] * b[1] - m[(1, 0)] * b[0]) / det))
}

/// Flow lines by direct arithmetic, then the energy rows as two coupled
/// 2×2 blocks, chamber/windbox and dryer-gas/exhaust, with T_d^out = T_g.
pub fn closed_form_op(kv: &KnownVariables, k: &DerivedConstants, variant: ModelVariant) -> Result<UnknownVariables> {
    let mf = kv.mdot_fuel;
    let ma = kv.mdot_air;
    let mcw = mf + ma;
    let mwd = mcw;
    let e = kv.evaporation();
    let mgo = match variant {
        ModelVariant::PaperVerbatim => e,
        ModelVariant::MassConsistent => e + mwd,
    };
    let mst = mgo;

    let m1 = Matrix2::new(
        mf + k.k22 * ma + ma + mcw,
        -mcw,
        k.k14 * mcw,
        -(k.k14 * mcw + k.k24 * mcw + k.k34 * mwd - k.k44 * mwd),
    );
    let b1 = Vector2::new(k.k12 * mf + k.k22 * ma * kv.t_air_in, -k.k34 * mwd * kv.t_dryer_in);
    let tcw = solve2(m1, b1, "chamber/windbox temperature block (fuel + air flow)")?;

    // With T_d^out = T_g the exhaust row reads
    // mgo·(T_g − 2T_e) − mst·(T_e − 2T_amb) − k18·(T_g − T_amb) = 0.
    let tamb = k.t_ambient;
    let m2 = Matrix2::new(mwd + e + k.k17, -mgo, mgo - k.k18, -(2.0 * mgo + mst));
    let b2 = Vector2::new(mwd * tcw[1] + k.k17 * kv.t_bed, -(2.0 * mst * tamb + k.k18 * tamb));
    let tge = solve2(m2, b2, "dryer-gas/exhaust temperature block")?;

    Ok(UnknownVariables {
        mdot_chamber_to_windbox: mcw,
        mdot_windbox_to_dryer: mwd,
        mdot_gas_out: mgo,
        mdot_stack: mst,
        t_chamber: tcw[0],
        t_windbox: tcw[1],
        t_dryergas: tge[0],
        t_exhaust: tge[1],
        t_dryer_out: tge[0],
    })
}

/// One steady balance row: its value and the largest single term in it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowTerm {
    pub value: f64,
    pub dominant: f64,
}

fn row(terms: &[f64]) -> RowTerm {
    RowTerm { value: terms.iter().sum(), dominant: terms.iter().fold(0.0_f64, |m, t| m.max(t.abs())) }
}

/// The ten steady balance rows, each multiplied through by its holdup so no
/// inventory appears. The draft row is k19 times the exhaust mass row times
/// T_e plus k19 times the exhaust energy row.
pub fn residual_terms(
    kv: &KnownVariables,
    uv: &UnknownVariables,
    k: &DerivedConstants,
    variant: ModelVariant,
) -> [RowTerm; N_STATES] {
    let (mf, ma, ta, tdin, ts) = (kv.mdot_fuel, kv.mdot_air, kv.t_air_in, kv.t_dryer_in, kv.t_bed);
    let u = uv;
    let (mcw, mwd, mgo, mst) = (u.mdot_chamber_to_windbox, u.mdot_windbox_to_dryer, u.mdot_gas_out, u.mdot_stack);
    let (tc, tw, tg, te, tdout) = (u.t_chamber, u.t_windbox, u.t_dryergas, u.t_exhaust, u.t_dryer_out);
    let e = kv.evaporation();
    let tamb = k.t_ambient;
    let inflow = match variant {
        ModelVariant::PaperVerbatim => 0.0,
        ModelVariant::MassConsistent => mwd,
    };
    let r9_terms =
        [mgo * (tdout - te), -mgo * te, -mst * (te - tamb), mst * te, -mst * (te - tamb), -k.k18 * (tdout - tamb)];
    let r9 = exhaust_energy_row(te, mgo, mst, tdout, tamb, k.k18);
    let mut r10_terms: Vec<f64> = r9_terms.iter().map(|t| k.k19 * t).collect();
    r10_terms.extend([k.k19 * te * mgo, -k.k19 * te * mst]);
    let r10 = row(&r10_terms);
    debug_assert!((r10.value - k.k19 * (te * (mgo - mst) + r9)).abs() <= 1e-6 * r10.dominant.max(1.0));

    [
        row(&[mf, ma, -mcw]),
        row(&[k.k12 * mf, -mf * tc, k.k22 * ma * (ta - tc), -ma * tc, -mcw * (tc - tw)]),
        row(&[mcw, -mwd]),
        row(&[k.k14 * mcw * (tc - tw), -k.k24 * mcw * tw, -k.k34 * mwd * (tw - tdin), k.k44 * mwd * tw]),
        row(&[e]),
        row(&[e, -mgo, inflow]),
        row(&[mwd * (tw - tg), -e * tg, -mgo * (tg - te), mgo * tg, -k.k17 * (tg - ts)]),
        row(&[mgo, -mst]),
        row(&r9_terms),
        r10,
    ]
}

pub fn residuals(op: &OperatingPoint, k: &DerivedConstants) -> [f64; N_STATES] {
    residual_terms(&op.kv, &op.uv, k, op.variant).map(|t| t.value)
}

/// max_i |r_i| / max(1, |dominant term of row i|); row 5 (index 4) only when
/// `include_bedwater_row` is set.
pub fn norm_of(terms: &[RowTerm; N_STATES], include_bedwater_row: bool) -> f64 {
    terms
        .iter()
        .enumerate()
        .filter(|(i, _)| include_bedwater_row || *i != 4)
        .map(|(_, t)| t.value.abs() / t.dominant.max(1.0))
        .fold(0.0, f64::max)
}

pub fn residual_norm(op: &OperatingPoint, k: &DerivedConstants, include_bedwater_row: bool) -> f64 {
    norm_of(&residual_terms(&op.kv, &op.uv, k, op.variant), include_bedwater_row)
}

/// Scaled equations for Newton: rows 1,2,3,4,6,7,8,9 and T_d^out − T_g.
fn newton_equations(kv: &KnownVariables, v: &[f64; 9], k: &DerivedConstants, variant: ModelVariant) -> DVector<f64> {
    let uv = UnknownVariables::from_array(v);
    let t = residual_terms(kv, &uv, k, variant);
    let mut out = DVector::zeros(9);
    for (j, i) in [0usize, 1, 2, 3, 5, 6, 7, 8].iter().enumerate() {
        out[j] = t[*i].value;
    }
    out[8] = uv.t_dryer_out - uv.t_dryergas;
    out
}

fn newton_norm(kv: &KnownVariables, v: &[f64; 9], k: &DerivedConstants, variant: ModelVariant) -> f64 {
    let uv = UnknownVariables::from_array(v);
    let t = residual_terms(kv, &uv, k, variant);
    let closure = (uv.t_dryer_out - uv.t_dryergas).abs() / uv.t_dryergas.abs().max(1.0);
    norm_of(&t, false).max(closure)
}

fn condition_estimate(j: &DMatrix<f64>) -> f64 {
    let sv = j.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Damped Newton with a forward-difference Jacobian. Halves the step up to
/// 30 times while the residual norm does not decrease.
pub fn newton_solve(
    kv: &KnownVariables,
    k: &DerivedConstants,
    variant: ModelVariant,
    guess: &UnknownVariables,
    tol: f64,
    max_iter: usize,
) -> Result<UnknownVariables> {
    if !(tol > 0.0) {
        return Err(DryerError::InvalidParameter { field: "tol".into(), reason: "must be > 0".into() });
    }
    let mut v = guess.to_array();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(DryerError::InvalidParameter { field: "guess".into(), reason: "non-finite entry".into() });
    }
    let mut norm = newton_norm(kv, &v, k, variant);
    for _ in 0..max_iter {
        if norm < tol {
            return Ok(UnknownVariables::from_array(&v));
        }
        let f0 = newton_equations(kv, &v, k, variant);
        let mut jac = DMatrix::zeros(9, 9);
        for c in 0..9 {
            let h = 1e-7 * v[c].abs().max(1.0);
            let mut vp = v;
            vp[c] += h;
            let fp = newton_equations(kv, &vp, k, variant);
            jac.set_column(c, &((fp - &f0) / h));
        }
        let cond = condition_estimate(&jac);
        if !(cond < 1e14) {
            return Err(DryerError::SingularJacobian { condition_estimate: cond });
        }
        let step = jac.lu().solve(&(-f0)).ok_or(DryerError::SingularJacobian { condition_estimate: cond })?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let mut trial = v;
            for i in 0..9 {
                trial[i] += lambda * step[i];
            }
            let n = newton_norm(kv, &trial, k, variant);
            if n < norm {
                v = trial;
                norm = n;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm < tol {
        Ok(UnknownVariables::from_array(&v))
    } else {
        Err(DryerError::NonConvergence { iterations: max_iter, residual_norm: norm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::nonlinear_rhs;
    use crate::params::{derive_constants, PlantParameters};

    fn k() -> DerivedConstants {
        derive_constants(&PlantParameters::default()).unwrap()
    }

    #[test]
    fn flow_chain_from_table_values() {
        let uv = closed_form_op(&KnownVariables::table_i(), &k(), ModelVariant::PaperVerbatim).unwrap();
        assert_eq!(uv.mdot_chamber_to_windbox, 0.012 + 0.25);
        assert_eq!(uv.mdot_windbox_to_dryer, uv.mdot_chamber_to_windbox);
        assert!((uv.mdot_chamber_to_windbox - 0.262).abs() < 1e-15);
        assert!((uv.mdot_gas_out - 0.25).abs() < 1e-15);
        assert_eq!(uv.mdot_stack, uv.mdot_gas_out);
        assert_eq!(uv.t_dryer_out, uv.t_dryergas);
    }

    #[test]
    fn closed_form_satisfies_residuals() {
        for variant in [ModelVariant::PaperVerbatim, ModelVariant::MassConsistent] {
            let op = OperatingPoint::solve(KnownVariables::table_i(), &k(), variant).unwrap();
            assert!(op.residual_norm < 1e-9, "{variant:?}: {}", op.residual_norm);
            assert!((op.residuals[4] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn op_temperatures_at_table_values() {
        let uv = closed_form_op(&KnownVariables::table_i(), &k(), ModelVariant::PaperVerbatim).unwrap();
        assert!((uv.t_chamber - 1065.0068).abs() < 1e-3);
        assert!((uv.t_windbox - 1029.0784).abs() < 1e-3);
        assert!((uv.t_dryergas - 684.8365).abs() < 1e-3);
        assert!((uv.t_exhaust - 399.8645).abs() < 1e-3);
    }

    #[test]
    fn rhs_vanishes_at_op_except_bedwater_row() {
        let kk = k();
        let op = OperatingPoint::solve(KnownVariables::table_i(), &kk, ModelVariant::PaperVerbatim).unwrap();
        let d = nonlinear_rhs(&op.state(), &op.inputs(), &kk, ModelVariant::PaperVerbatim).unwrap();
        for i in 0..N_STATES {
            if i == 4 {
                assert!((d[i] - 0.25).abs() < 1e-15);
            } else {
                let scale = if i == 9 { kk.k19 * 1e3 } else { 1e3 };
                assert!(d[i].abs() < 1e-9 * scale, "row {i}: {}", d[i]);
            }
        }
    }

    #[test]
    fn chamber_perturbation_sign() {
        let kk = k();
        let kv = KnownVariables::table_i();
        let mut op = OperatingPoint::solve(kv, &kk, ModelVariant::PaperVerbatim).unwrap();
        let base = residuals(&op, &kk)[1];
        op.uv.t_chamber += 1.0;
        let r = residuals(&op, &kk)[1] - base;
        let expect = -(kv.mdot_fuel + kk.k22 * kv.mdot_air + kv.mdot_air + op.uv.mdot_chamber_to_windbox);
        assert!((r - expect).abs() < 1e-9);
    }

    #[test]
    fn zero_flows_give_zero_residuals() {
        let kk = k();
        let kv = KnownVariables { mdot_fuel: 0.0, mdot_air: 0.0, f_solids: 0.0, ..KnownVariables::table_i() };
        // the two conductance terms vanish only with temperatures at their boundaries
        let uv = UnknownVariables::from_array(&[0.0, 0.0, 900.0, 900.0, 0.0, 0.0, kv.t_bed, 500.0, kk.t_ambient]);
        for t in residual_terms(&kv, &uv, &kk, ModelVariant::PaperVerbatim) {
            assert_eq!(t.value, 0.0);
        }
    }

    #[test]
    fn zero_fuel_and_air_is_singular() {
        let kv = KnownVariables { mdot_fuel: 0.0, mdot_air: 0.0, ..KnownVariables::table_i() };
        assert!(matches!(
            closed_form_op(&kv, &k(), ModelVariant::PaperVerbatim),
            Err(DryerError::SingularOperatingPoint { .. })
        ));
        let guess = closed_form_op(&KnownVariables::table_i(), &k(), ModelVariant::PaperVerbatim).unwrap();
        assert!(newton_solve(&kv, &k(), ModelVariant::PaperVerbatim, &guess, 1e-12, 50).is_err());
    }

    #[test]
    fn newton_from_closed_form_is_immediate() {
        let kk = k();
        let kv = KnownVariables::table_i();
        let cf = closed_form_op(&kv, &kk, ModelVariant::PaperVerbatim).unwrap();
        let nw = newton_solve(&kv, &kk, ModelVariant::PaperVerbatim, &cf, 1e-9, 1).unwrap();
        assert_eq!(nw, cf);
    }

    #[test]
    fn newton_recovers_closed_form_from_perturbed_guess() {
        let kk = k();
        let kv = KnownVariables::table_i();
        let cf = closed_form_op(&kv, &kk, ModelVariant::PaperVerbatim).unwrap();
        for sign in [-1.0, 1.0] {
            let g = cf.to_array().map(|x| x * (1.0 + sign * 0.2));
            let nw = newton_solve(&kv, &kk, ModelVariant::PaperVerbatim, &UnknownVariables::from_array(&g), 1e-13, 100)
                .unwrap();
            for (a, b) in nw.to_array().iter().zip(cf.to_array()) {
                assert!((a - b).abs() <= 1e-8 * b.abs(), "{a} vs {b}");
            }
        }
    }
}
