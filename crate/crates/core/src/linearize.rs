//! Deviation-variable linear models: the published α-coefficient matrices and
//! a central-difference Jacobian of the nonlinear right-hand side.

use nalgebra::DMatrix;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{DryerError, Result};
use crate::exec::{map_indexed, Exec};
use crate::model::{
    rhs_with_evaporation, ExogenousInputs, ModelVariant, PlantState, INPUT_LABELS, N_INPUTS, N_STATES, STATE_LABELS,
};
use crate::params::DerivedConstants;
use crate::steady::OperatingPoint;

pub const N_ALPHA: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaCoefficients {
    values: [f64; N_ALPHA],
}

impl AlphaCoefficients {
    /// 1-based accessor matching the coefficient numbering.
    pub fn alpha(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.values[i - 1] = v;
    }

    pub fn from_values(values: [f64; N_ALPHA]) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64; N_ALPHA] {
        &self.values
    }
}

impl Serialize for AlphaCoefficients {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(N_ALPHA))?;
        for (i, v) in self.values.iter().enumerate() {
            m.serialize_entry(&format!("alpha_{}", i + 1), v)?;
        }
        m.end()
    }
}

/// Coefficients of the linear model, term for term as published.
pub fn alpha_coefficients(op: &OperatingPoint, k: &DerivedConstants) -> Result<AlphaCoefficients> {
    let inv = &op.inventory;
    for (name, m) in [
        ("m_chamber", inv.m_chamber),
        ("m_windbox", inv.m_windbox),
        ("m_dryergas", inv.m_dryergas),
        ("m_exhaust", inv.m_exhaust),
    ] {
        if m == 0.0 || !m.is_finite() {
            return Err(DryerError::SingularState { state: name, value: m });
        }
    }
    let (mc, mw, mg_s, me) = (inv.m_chamber, inv.m_windbox, inv.m_dryergas, inv.m_exhaust);
    let kv = &op.kv;
    let uv = &op.uv;
    let (mf, ma, mew, ta, tdin, ts) =
        (kv.mdot_fuel, kv.mdot_air, kv.mdot_evap_to_windbox, kv.t_air_in, kv.t_dryer_in, kv.t_bed);
    let (fs, xin, xout) = (kv.f_solids, kv.x_in, kv.x_out);
    let (mcw, mwd, mgo, mst) = (uv.mdot_chamber_to_windbox, uv.mdot_windbox_to_dryer, uv.mdot_gas_out, uv.mdot_stack);
    let (tc, tw, tg, te, td) = (uv.t_chamber, uv.t_windbox, uv.t_dryergas, uv.t_exhaust, uv.t_dryer_out);
    let tamb = k.t_ambient;

    let mut a = [0.0; N_ALPHA];
    a[0] = (k.k12 - tc) / mc;
    a[1] = (k.k22 * (ta - tc) - tc) / mc;
    a[2] = -(te - tc) / mc;
    a[3] = (-k.k12 * mf + mf * tc - k.k22 * ma * (ta - tc) + ma * tc + mew * (tc - tw)) / (mc * mc);
    a[4] = (mf + k.k22 * ma + ma + mew) / (mc * mc);
    a[5] = k.k22 * ma / mc;
    a[6] = mew / mc;
    a[7] = (k.k14 * (tc - tw) - k.k24 * tw) / mw;
    a[8] = (-k.k34 * (tw - tdin) + k.k24 * tw) / (mw * mw);
    a[9] = (-k.k14 * mcw * (tc - tw) + k.k24 * mcw * tw + k.k34 * mwd * (tw - tdin)) / (mw * mw)
        - k.k24 * mwd * tw / (mw * mw);
    a[10] = k.k14 * mcw / mw;
    a[11] = (-k.k14 * mcw - k.k24 * mcw) / mw + (k.k24 * mwd - k.k34 * mwd) / mw;
    a[12] = k.k34 * mwd / mw;
    a[13] = xin - xout;
    a[14] = fs;
    a[15] = (tw - tg) / mg_s;
    a[16] = te / mg_s;
    a[17] = mwd * (tw - tg) / (mg_s * mg_s) + (fs * (xin - xout) * tg - mgo * te + k.k17 * (tg - ts)) / (mg_s * mg_s);
    a[18] = mwd / mg_s;
    a[19] = (mwd + fs * (xin - xout) + k.k17) / mg_s;
    a[20] = mgo / mg_s;
    a[21] = k.k17 / mg_s;
    a[22] = tg * (xin - xout) / mg_s;
    a[23] = fs * tg / mg_s;
    a[24] = (tdin - 2.0 * te) / me;
    a[25] = (-te + 2.0 * tamb) / me;
    a[26] =
        (-mgo * tdin + 2.0 * te * mgo - 2.0 * tamb * mst) / (me * me) + (te * mst + k.k18 * (td - tamb)) / (me * me);
    a[27] = (mgo - k.k18) / me;
    a[28] = 2.0 * mgo / me;
    a[29] = k.k19 * (td - te);
    a[30] = -2.0 * k.k19 * te + (1.0 + k.k19) * tamb;
    a[31] = k.k19 * (2.0 * mst + mgo);
    a[32] = k.k19 * mgo - k.k29;
    if let Some(i) = a.iter().position(|v| !v.is_finite()) {
        return Err(DryerError::InvalidParameter { field: format!("alpha_{}", i + 1), reason: "non-finite".into() });
    }
    Ok(AlphaCoefficients { values: a })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
}

impl StateSpaceModel {
    /// Full-state output model around `a`, `b`.
    pub fn with_state_output(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        state_labels: Vec<String>,
        input_labels: Vec<String>,
    ) -> Self {
        let n = a.nrows();
        let m = b.ncols();
        Self { a, b, c: DMatrix::identity(n, n), d: DMatrix::zeros(n, m), state_labels, input_labels }
    }

    fn plant_labels() -> (Vec<String>, Vec<String>) {
        (STATE_LABELS.iter().map(|s| s.to_string()).collect(), INPUT_LABELS.iter().map(|s| s.to_string()).collect())
    }
}

/// A and B from the published stencils. The printed A carries an eleventh,
/// all-zero column which is dropped.
pub fn assemble_paper_model(al: &AlphaCoefficients) -> StateSpaceModel {
    let x = |i| al.alpha(i);
    let mut a = DMatrix::zeros(N_STATES, N_STATES);
    let mut b = DMatrix::zeros(N_STATES, N_INPUTS);
    // (row, col) pairs below are 1-based, as printed
    let mut sa = |r: usize, c: usize, v: f64| a[(r - 1, c - 1)] = v;
    sa(2, 1, x(4));
    sa(2, 2, -x(5));
    sa(2, 4, x(7));
    sa(4, 2, x(11));
    sa(4, 3, x(10));
    sa(4, 4, x(12));
    sa(7, 4, x(19));
    sa(7, 6, x(18));
    sa(7, 7, -x(20));
    sa(7, 9, x(21));
    sa(9, 8, x(27));
    sa(9, 9, -x(29));
    sa(10, 9, -x(32));

    let mut sb = |r: usize, c: usize, v: f64| b[(r - 1, c - 1)] = v;
    sb(1, 1, 1.0);
    sb(1, 2, 1.0);
    sb(1, 3, -1.0);
    sb(2, 1, x(1));
    sb(2, 2, x(2));
    sb(2, 4, -x(3));
    sb(2, 5, x(6));
    sb(3, 3, 1.0);
    sb(3, 4, -1.0);
    sb(3, 7, -1.0);
    sb(4, 3, x(8));
    sb(4, 6, x(9));
    sb(4, 7, x(13));
    sb(5, 8, x(14));
    sb(5, 9, x(15));
    sb(5, 10, -x(15));
    sb(6, 8, x(16));
    sb(6, 9, x(15));
    sb(6, 10, -x(15));
    sb(6, 11, -1.0);
    sb(7, 6, x(16));
    sb(7, 8, -x(23));
    sb(7, 9, -x(24));
    sb(7, 10, x(24));
    sb(7, 11, x(17));
    sb(7, 12, x(22));
    sb(8, 11, 1.0);
    sb(8, 13, -1.0);
    sb(9, 11, x(25));
    sb(9, 13, x(26));
    sb(9, 14, x(28));
    sb(10, 11, x(30));
    sb(10, 13, x(31));
    sb(10, 14, x(33));

    let (sl, il) = StateSpaceModel::plant_labels();
    StateSpaceModel::with_state_output(a, b, sl, il)
}

pub const DEFAULT_REL_STEP: f64 = 1e-6;
pub const STEP_FLOOR: f64 = 1e-9;

/// Central-difference Jacobian of `f` at `z`; columns may run in parallel.
pub fn central_jacobian<F>(f: F, z: &[f64], rel_step: f64, exec: Exec) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
{
    if !(rel_step > 0.0) {
        return Err(DryerError::InvalidParameter { field: "step".into(), reason: "must be > 0".into() });
    }
    let cols = map_indexed(exec, z.len(), |j| -> Result<Vec<f64>> {
        let h = (rel_step * z[j].abs()).max(STEP_FLOOR);
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[j] += h;
        zm[j] -= h;
        // divide by the step actually represented in floating point
        let span = zp[j] - zm[j];
        let fp = f(&zp)?;
        let fm = f(&zm)?;
        Ok(fp.iter().zip(&fm).map(|(p, m)| (p - m) / span).collect())
    });
    let mut out: Option<DMatrix<f64>> = None;
    for (j, col) in cols.into_iter().enumerate() {
        let col = col?;
        let m = out.get_or_insert_with(|| DMatrix::zeros(col.len(), z.len()));
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(out.unwrap_or_else(|| DMatrix::zeros(0, 0)))
}

/// Jacobians of an arbitrary right-hand side `f(x, u)` with respect to x and u.
pub fn jacobian_of<F>(f: F, x0: &[f64], u0: &[f64], rel_step: f64, exec: Exec) -> Result<(DMatrix<f64>, DMatrix<f64>)>
where
    F: Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Sync + Send,
{
    let a = central_jacobian(|x| f(x, u0), x0, rel_step, exec)?;
    let b = central_jacobian(|u| f(x0, u), u0, rel_step, exec)?;
    Ok((a, b))
}

/// Residual-norm ceiling for a point to count as a valid linearization point.
pub const LINEARIZATION_TOL: f64 = 1e-9;

pub fn numeric_jacobian(
    op: &OperatingPoint,
    inputs_ss: &ExogenousInputs,
    consts: &DerivedConstants,
    variant: ModelVariant,
    rel_step: f64,
    exec: Exec,
) -> Result<StateSpaceModel> {
    if !(op.residual_norm <= LINEARIZATION_TOL) {
        return Err(DryerError::InvalidLinearizationPoint { residual_norm: op.residual_norm, tol: LINEARIZATION_TOL });
    }
    let x0 = op.state().to_array();
    let u0 = inputs_ss.to_array();
    let f = |x: &[f64], u: &[f64]| -> Result<Vec<f64>> {
        let x: [f64; N_STATES] = x.try_into().expect("state length");
        let u: [f64; N_INPUTS] = u.try_into().expect("input length");
        let e = u[7] * (u[8] - u[9]);
        Ok(rhs_with_evaporation(&x, &u, e, consts, variant)?.to_vec())
    };
    let (a, b) = jacobian_of(f, &x0, &u0, rel_step, exec)?;
    let (sl, il) = StateSpaceModel::plant_labels();
    Ok(StateSpaceModel::with_state_output(a, b, sl, il))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub matrix: &'static str,
    pub row: usize,
    pub col: usize,
    pub row_label: String,
    pub col_label: String,
    pub first: f64,
    pub second: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub tol: f64,
    /// Signed differences first − second, row-major, per matrix.
    pub a_diff: Vec<Vec<f64>>,
    pub b_diff: Vec<Vec<f64>>,
    pub findings: Vec<Discrepancy>,
}

impl DiscrepancyReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Lists every element with |a − b| > tol·max(1, |a|, |b|).
pub fn compare_models(first: &StateSpaceModel, second: &StateSpaceModel, tol: f64) -> Result<DiscrepancyReport> {
    if first.a.shape() != second.a.shape() || first.b.shape() != second.b.shape() {
        return Err(DryerError::DimensionMismatch(format!(
            "A {:?} vs {:?}, B {:?} vs {:?}",
            first.a.shape(),
            second.a.shape(),
            first.b.shape(),
            second.b.shape()
        )));
    }
    if first.state_labels != second.state_labels || first.input_labels != second.input_labels {
        return Err(DryerError::DimensionMismatch("label lists differ".into()));
    }
    let mut findings = Vec::new();
    for (name, p, q, cols) in
        [("A", &first.a, &second.a, &first.state_labels), ("B", &first.b, &second.b, &first.input_labels)]
    {
        for i in 0..p.nrows() {
            for j in 0..p.ncols() {
                let (x, y) = (p[(i, j)], q[(i, j)]);
                let d = (x - y).abs();
                let scale = 1f64.max(x.abs()).max(y.abs());
                if d > tol * scale {
                    findings.push(Discrepancy {
                        matrix: name,
                        row: i,
                        col: j,
                        row_label: first.state_labels[i].clone(),
                        col_label: cols[j].clone(),
                        first: x,
                        second: y,
                        abs_diff: d,
                        rel_diff: d / scale,
                    });
                }
            }
        }
    }
    Ok(DiscrepancyReport {
        tol,
        a_diff: rows_of(&(&first.a - &second.a)),
        b_diff: rows_of(&(&first.b - &second.b)),
        findings,
    })
}

pub fn to_deviation(state: &PlantState, op: &OperatingPoint) -> [f64; N_STATES] {
    let x = state.to_array();
    let s = op.state().to_array();
    std::array::from_fn(|i| x[i] - s[i])
}

pub fn from_deviation(dv: &[f64; N_STATES], op: &OperatingPoint) -> PlantState {
    let s = op.state().to_array();
    PlantState::from_array(&std::array::from_fn(|i| s[i] + dv[i]))
}
