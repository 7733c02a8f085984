use serde::{Deserialize, Serialize};

use crate::error::{DryerError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
    Euler,
}

/// One explicit step of size `h` from (t, x).
pub fn step<F>(f: &mut F, t: f64, x: &[f64], h: f64, method: Method) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let axpy = |x: &[f64], k: &[f64], a: f64| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + a * k).collect() };
    match method {
        Method::Euler => {
            let k1 = f(t, x)?;
            Ok(axpy(x, &k1, h))
        }
        Method::Rk4 => {
            let k1 = f(t, x)?;
            let k2 = f(t + h / 2.0, &axpy(x, &k1, h / 2.0))?;
            let k3 = f(t + h / 2.0, &axpy(x, &k2, h / 2.0))?;
            let k4 = f(t + h, &axpy(x, &k3, h))?;
            Ok((0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.x.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// Fixed-step integration of dx/dt = rhs(t, x) over [0, horizon]. Time-varying
/// inputs enter through the closure. The final step is shortened so the last
/// sample lands on the horizon.
pub fn integrate<F>(mut rhs: F, x0: &[f64], step_s: f64, horizon: f64, method: Method) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    if !(step_s > 0.0) {
        return Err(DryerError::Scenario(format!("step must be > 0, got {step_s}")));
    }
    if !(horizon >= step_s) {
        return Err(DryerError::Scenario(format!("horizon {horizon} shorter than step {step_s}")));
    }
    let n = (horizon / step_s - 1e-9).ceil() as usize;
    let mut t = vec![0.0];
    let mut x = vec![x0.to_vec()];
    let mut cur = x0.to_vec();
    for k in 0..n {
        let tk = k as f64 * step_s;
        let h = if k + 1 == n { horizon - tk } else { step_s };
        let next = step(&mut rhs, tk, &cur, h, method)
            .map_err(|e| DryerError::IntegrationBlowUp { time: tk, detail: e.to_string() })?;
        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            return Err(DryerError::IntegrationBlowUp { time: tk + h, detail: format!("state {i} is not finite") });
        }
        cur = next;
        t.push(if k + 1 == n { horizon } else { (k + 1) as f64 * step_s });
        x.push(cur.clone());
    }
    Ok(Trajectory { t, x })
}
