//! Single-loop transfer functions cut out of a linear state-space model, and
//! direct-synthesis compensators designed on them.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use super::synthesis::direct_synthesis;
use super::tf::{poly, RationalTransferFunction};
use crate::error::{DryerError, Result};

/// Entries of A below this fraction of max|A| are treated as structural zeros.
pub const STRUCTURAL_TOL: f64 = 1e-8;

/// States both reachable from `b` and observable through `c`, following
/// the significant entries of `a`.
pub fn structural_subsystem(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Vec<usize> {
    let n = a.nrows();
    let thr_a = STRUCTURAL_TOL * a.abs().max();
    let edge = |from: usize, to: usize| a[(to, from)].abs() > thr_a;
    let flood = |seed: Vec<bool>, forward: bool| {
        let mut mark = seed;
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..n {
                if !mark[i] {
                    continue;
                }
                for j in 0..n {
                    let linked = if forward { edge(i, j) } else { edge(j, i) };
                    if linked && !mark[j] {
                        mark[j] = true;
                        changed = true;
                    }
                }
            }
        }
        mark
    };
    let thr_b = STRUCTURAL_TOL * b.abs().max();
    let thr_c = STRUCTURAL_TOL * c.abs().max();
    let reach = flood(b.iter().map(|v| v.abs() > thr_b).collect(), true);
    let obs = flood(c.iter().map(|v| v.abs() > thr_c).collect(), false);
    (0..n).filter(|&i| reach[i] && obs[i]).collect()
}

/// c·adj(sI − A)·b / det(sI − A) by the Faddeev–LeVerrier recursion.
pub fn faddeev_leverrier(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> RationalTransferFunction {
    let n = a.nrows();
    if n == 0 {
        return RationalTransferFunction::gain(0.0);
    }
    let mut den = vec![0.0; n + 1];
    den[n] = 1.0;
    let mut num = vec![0.0; n];
    let mut m = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        num[n - k] = c.dot(&(&m * b));
        let am = a * &m;
        let coeff = -am.trace() / k as f64;
        den[n - k] = coeff;
        m = am + DMatrix::identity(n, n) * coeff;
    }
    RationalTransferFunction { num: poly::trim(&num), den }
}

/// Transfer function from input column `b` to output `c·x` of (A, b, c),
/// restricted to the structurally reachable and observable states.
pub fn extract_loop(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> (RationalTransferFunction, Vec<usize>) {
    let keep = structural_subsystem(a, b, c);
    let ar = DMatrix::from_fn(keep.len(), keep.len(), |i, j| a[(keep[i], keep[j])]);
    let br = DVector::from_fn(keep.len(), |i, _| b[keep[i]]);
    let cr = DVector::from_fn(keep.len(), |i, _| c[keep[i]]);
    (faddeev_leverrier(&ar, &br, &cr), keep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopDesign {
    pub plant: RationalTransferFunction,
    pub retained_states: Vec<usize>,
    pub plant_poles: Vec<(f64, f64)>,
    pub plant_zeros: Vec<(f64, f64)>,
    pub tau_dom_s: f64,
    pub tau_c_s: f64,
    pub compensator: RationalTransferFunction,
}

fn pairs(v: &[Complex<f64>]) -> Vec<(f64, f64)> {
    v.iter().map(|z| (z.re, z.im)).collect()
}

/// 1/|slowest nonzero pole|.
pub fn dominant_time_constant(poles: &[Complex<f64>]) -> Option<f64> {
    let scale = poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
    poles
        .iter()
        .map(|p| p.norm())
        .filter(|m| *m > 1e-9 * scale.max(1e-300))
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.min(m))))
        .map(|m| 1.0 / m)
}

/// Direct synthesis for the target 1/(τc·s + 1). An integrating plant
/// keeps its integrator; the s factor the target introduces is cancelled.
pub fn ds_loop_design(plant: &RationalTransferFunction, tau_c: Option<f64>) -> Result<LoopDesign> {
    let plant = plant.normalized();
    let poles = plant.poles();
    let zeros = plant.zeros();
    if poly::is_zero(&plant.num) {
        return Err(DryerError::DegeneratePlant);
    }
    let pole_scale = poles.iter().map(|p| p.norm()).fold(1e-12, f64::max);
    if let Some(z) = zeros.iter().find(|z| z.re > 1e-9 * pole_scale.max(z.norm())) {
        return Err(DryerError::InvalidDesign(format!("loop has an RHP zero at {z}; inversion is unstable")));
    }
    if let Some(p) = poles.iter().find(|p| p.re > 1e-9 * pole_scale) {
        return Err(DryerError::InvalidDesign(format!("loop has an unstable pole at {p}")));
    }
    let rel = plant.den_degree() as i64 - plant.num_degree() as i64;
    if rel > 1 {
        return Err(DryerError::InvalidDesign(format!(
            "relative degree {rel} > 1 makes the first-order target improper"
        )));
    }
    let tau_dom = dominant_time_constant(&poles)
        .ok_or_else(|| DryerError::InvalidDesign("loop has no nonzero pole to set a time scale".into()))?;
    let tau_c = tau_c.unwrap_or(tau_dom / 3.0);
    if !(tau_c > 0.0) {
        return Err(DryerError::InvalidDesign(format!("tau_c must be > 0, got {tau_c}")));
    }
    let raw = direct_synthesis(&plant, &RationalTransferFunction::lag_filter(tau_c, 1))?;
    // the target makes den(0) = 0; when the plant also integrates, num(0) ≈ 0 and the pair cancels
    let den_scale = plant.den.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let compensator = if plant.den[0].abs() <= 1e-10 * den_scale {
        let mut num = raw.num.clone();
        num[0] = 0.0;
        RationalTransferFunction { num, den: raw.den.clone() }.cancel_origin()
    } else {
        raw
    };
    if !compensator.is_proper() {
        return Err(DryerError::Improper { num: compensator.num_degree(), den: compensator.den_degree() });
    }
    Ok(LoopDesign {
        plant_poles: pairs(&poles),
        plant_zeros: pairs(&zeros),
        plant,
        retained_states: Vec::new(),
        tau_dom_s: tau_dom,
        tau_c_s: tau_c,
        compensator,
    })
}
