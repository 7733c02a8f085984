//! Figures of merit: ISE, percent overshoot per setpoint step, and
//! steady-state error over the tail of the window.

use std::collections::BTreeMap;

use serde::Serialize;

use super::run::Trace;
use crate::error::{DryerError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopFoM {
    pub ise: f64,
    pub ov_percent: f64,
    pub ess_percent: f64,
    pub window_s: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceFoM>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation_note: Option<String>,
}

/// Published whole-window values, kept as magnitudes to compare against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceFoM {
    pub ise: f64,
    pub ov_percent: f64,
    pub ess_percent: f64,
}

pub const REFERENCE_MOISTURE: ReferenceFoM = ReferenceFoM { ise: 0.021, ov_percent: 12.4, ess_percent: 3.1 };
pub const REFERENCE_TEMPERATURE: ReferenceFoM = ReferenceFoM { ise: 1.84e5, ov_percent: 10.1, ess_percent: 1.6 };
pub const REFERENCE_PRESSURE: ReferenceFoM = ReferenceFoM { ise: 3.10e8, ov_percent: 14.7, ess_percent: 2.3 };

/// Fraction of the window averaged for the steady-state error.
pub const ESS_TAIL: f64 = 0.05;

/// FoMs of `y` tracking `sp` on the samples with t in `window`.
pub fn compute_foms(t: &[f64], y: &[f64], sp: &[f64], window: (f64, f64)) -> Result<LoopFoM> {
    if t.len() != y.len() || t.len() != sp.len() {
        return Err(DryerError::DimensionMismatch(format!("t {}, y {}, sp {}", t.len(), y.len(), sp.len())));
    }
    if !(window.1 > window.0) {
        return Err(DryerError::EmptyWindow);
    }
    let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= window.0 && t[i] <= window.1).collect();
    if idx.len() < 2 {
        return Err(DryerError::EmptyWindow);
    }
    let (t, y, sp): (Vec<f64>, Vec<f64>, Vec<f64>) = (
        idx.iter().map(|&i| t[i]).collect(),
        idx.iter().map(|&i| y[i]).collect(),
        idx.iter().map(|&i| sp[i]).collect(),
    );
    let n = t.len();
    let err: Vec<f64> = (0..n).map(|i| sp[i] - y[i]).collect();

    let ise = (1..n).map(|i| 0.5 * (err[i] * err[i] + err[i - 1] * err[i - 1]) * (t[i] - t[i - 1])).sum();

    let steps: Vec<usize> = (1..n).filter(|&i| sp[i] != sp[i - 1]).collect();
    let mut ov: f64 = 0.0;
    for (k, &i) in steps.iter().enumerate() {
        let end = steps.get(k + 1).copied().unwrap_or(n);
        let mag = sp[i] - sp[i - 1];
        let peak = (i..end).map(|j| (y[j] - sp[i]) * mag.signum()).fold(f64::NEG_INFINITY, f64::max);
        ov = ov.max(peak / mag.abs() * 100.0);
    }

    let tail_start = window.1 - ESS_TAIL * (window.1 - window.0);
    let tail: Vec<usize> = (0..n).filter(|&i| t[i] >= tail_start).collect();
    let tail = if tail.is_empty() { vec![n - 1] } else { tail };
    let mean_abs = tail.iter().map(|&i| err[i].abs()).sum::<f64>() / tail.len() as f64;
    let final_sp = sp[n - 1];
    let denom =
        if final_sp != 0.0 { final_sp.abs() } else { steps.last().map(|&i| (sp[i] - sp[i - 1]).abs()).unwrap_or(1.0) };
    Ok(LoopFoM {
        ise,
        ov_percent: ov.max(0.0),
        ess_percent: mean_abs / denom * 100.0,
        window_s: [window.0, window.1],
        reference: None,
        deviation_note: None,
    })
}

/// Ratio band within which an ISE counts as the same order as the reference.
pub const ISE_BAND: (f64, f64) = (0.1, 10.0);

fn with_reference(mut f: LoopFoM, r: ReferenceFoM) -> LoopFoM {
    let ratio = f.ise / r.ise;
    if !(ratio >= ISE_BAND.0 && ratio <= ISE_BAND.1) {
        f.deviation_note = Some(format!(
            "ISE {:.3e} is {:.3}x the reference {:.3e}; the reference run's time constants, filter constants, actuator gains and \
             integration method are not published, so only the order of magnitude is comparable",
            f.ise, ratio, r.ise
        ));
    }
    f.reference = Some(r);
    f
}

pub type FoMReport = BTreeMap<String, LoopFoM>;

/// FoMs of the three loops of a trace, keyed by loop name. `window` defaults
/// to the whole trace. Published references are attached only to loops whose
/// setpoint moves inside the window.
pub fn trace_foms(trace: &Trace, window: Option<(f64, f64)>) -> Result<FoMReport> {
    let t = trace.times();
    let window = match window {
        Some(w) => w,
        None => (*t.first().ok_or(DryerError::EmptyWindow)?, *t.last().ok_or(DryerError::EmptyWindow)?),
    };
    let col = |n: &str| trace.column(n).expect("trace column");
    let mut out = FoMReport::new();
    for (name, y, sp, r) in [
        ("moisture", "x_out", "sp_xout", REFERENCE_MOISTURE),
        ("chamber_temperature", "T_c", "sp_tc", REFERENCE_TEMPERATURE),
        ("draft_pressure", "P", "sp_p", REFERENCE_PRESSURE),
    ] {
        let sp = col(sp);
        let f = compute_foms(&t, &col(y), &sp, window)?;
        let stepped = (1..t.len()).any(|i| t[i] >= window.0 && t[i] <= window.1 && sp[i] != sp[i - 1]);
        out.insert(name.to_string(), if stepped { with_reference(f, r) } else { f });
    }
    Ok(out)
}
