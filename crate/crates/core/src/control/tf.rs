//! Rational transfer functions in ascending powers of s, their realization
//! and discretization.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DryerError, Result};

/// Coefficients below this fraction of the largest one are dropped.
pub const TRIM_TOL: f64 = 1e-12;

pub mod poly {
    //! Dense real polynomials, coefficient `i` multiplying s^i.

    use super::*;

    pub fn trim(p: &[f64]) -> Vec<f64> {
        let max = p.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if max == 0.0 {
            return vec![0.0];
        }
        let mut out: Vec<f64> = p.iter().map(|&c| if c.abs() < TRIM_TOL * max { 0.0 } else { c }).collect();
        while out.len() > 1 && *out.last().unwrap() == 0.0 {
            out.pop();
        }
        out
    }

    pub fn degree(p: &[f64]) -> usize {
        trim(p).len() - 1
    }

    pub fn is_zero(p: &[f64]) -> bool {
        p.iter().all(|c| *c == 0.0)
    }

    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = a.len().max(b.len());
        (0..n).map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0)).collect()
    }

    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        add(a, &scale(b, -1.0))
    }

    pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
        a.iter().map(|c| c * k).collect()
    }

    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn pow(a: &[f64], n: u32) -> Vec<f64> {
        (0..n).fold(vec![1.0], |acc, _| mul(&acc, a))
    }

    pub fn eval(p: &[f64], s: Complex<f64>) -> Complex<f64> {
        p.iter().rev().fold(Complex::new(0.0, 0.0), |acc, c| acc * s + c)
    }

    pub fn eval_real(p: &[f64], s: f64) -> f64 {
        p.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    /// Roots from the eigenvalues of the companion matrix.
    pub fn roots(p: &[f64]) -> Vec<Complex<f64>> {
        let p = trim(p);
        let n = p.len() - 1;
        if n == 0 {
            return Vec::new();
        }
        // exact zero roots first; the companion matrix of the rest is better conditioned
        let lead_zeros = p.iter().take_while(|c| **c == 0.0).count();
        let q = &p[lead_zeros..];
        let m = q.len() - 1;
        let mut out = vec![Complex::new(0.0, 0.0); lead_zeros];
        if m == 0 {
            return out;
        }
        let lead = q[m];
        let mut comp = DMatrix::zeros(m, m);
        for i in 1..m {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..m {
            comp[(i, m - 1)] = -q[i] / lead;
        }
        out.extend(comp.complex_eigenvalues().iter().copied());
        out
    }

    /// Product of (s − r) over the roots, real part taken.
    pub fn from_roots(rs: &[Complex<f64>]) -> Vec<f64> {
        let mut acc = vec![Complex::new(1.0, 0.0)];
        for r in rs {
            let mut next = vec![Complex::new(0.0, 0.0); acc.len() + 1];
            for (i, c) in acc.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            acc = next;
        }
        acc.into_iter().map(|c| c.re).collect()
    }

    /// Divides out a factor s^k when the lowest k coefficients are (near) zero.
    pub fn strip_origin_roots(p: &[f64], k: usize, tol: f64) -> Option<Vec<f64>> {
        let max = p.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if p.len() <= k || p[..k].iter().any(|c| c.abs() > tol * max) {
            return None;
        }
        Some(p[k..].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTransferFunction {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl RationalTransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let den = poly::trim(&den);
        if poly::is_zero(&den) || den.iter().any(|c| !c.is_finite()) || num.iter().any(|c| !c.is_finite()) {
            return Err(DryerError::InvalidDesign("denominator identically zero or non-finite".into()));
        }
        Ok(Self { num: poly::trim(&num), den })
    }

    pub fn gain(k: f64) -> Self {
        Self { num: vec![k], den: vec![1.0] }
    }

    /// 1/(λs + 1)^n.
    pub fn lag_filter(lambda: f64, order: u32) -> Self {
        Self { num: vec![1.0], den: poly::pow(&[1.0, lambda], order) }
    }

    pub fn num_degree(&self) -> usize {
        poly::degree(&self.num)
    }

    pub fn den_degree(&self) -> usize {
        poly::degree(&self.den)
    }

    pub fn is_proper(&self) -> bool {
        self.num_degree() <= self.den_degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        poly::is_zero(&self.num) || self.num_degree() < self.den_degree()
    }

    pub fn eval(&self, s: Complex<f64>) -> Complex<f64> {
        poly::eval(&self.num, s) / poly::eval(&self.den, s)
    }

    pub fn dc_gain(&self) -> f64 {
        self.num[0] / self.den[0]
    }

    pub fn poles(&self) -> Vec<Complex<f64>> {
        poly::roots(&self.den)
    }

    pub fn zeros(&self) -> Vec<Complex<f64>> {
        if poly::is_zero(&self.num) {
            return Vec::new();
        }
        poly::roots(&self.num)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self { num: poly::trim(&poly::mul(&self.num, &o.num)), den: poly::trim(&poly::mul(&self.den, &o.den)) }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { num: poly::trim(&poly::scale(&self.num, k)), den: self.den.clone() }
    }

    pub fn inverse(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    /// Scales so the highest denominator coefficient is one.
    pub fn normalized(&self) -> Self {
        let lead = *self.den.last().unwrap();
        Self { num: poly::scale(&self.num, 1.0 / lead), den: poly::scale(&self.den, 1.0 / lead) }
    }

    /// Removes a common factor s^k from numerator and denominator.
    pub fn cancel_origin(&self) -> Self {
        let mut num = self.num.clone();
        let mut den = self.den.clone();
        while num.len() > 1 && den.len() > 1 && num[0] == 0.0 && den[0] == 0.0 {
            num.remove(0);
            den.remove(0);
        }
        Self { num, den }
    }

    /// Unity negative feedback around `self`: self/(1 + self).
    pub fn unity_feedback(&self) -> Self {
        Self { num: self.num.clone(), den: poly::trim(&poly::add(&self.den, &self.num)) }
    }

    /// Relative mismatch of two transfer functions evaluated at `s`.
    pub fn rel_diff_at(&self, o: &Self, s: Complex<f64>) -> f64 {
        let a = self.eval(s);
        let b = o.eval(s);
        (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
    }

    /// Cross-multiplied polynomial identity num_a·den_b = num_b·den_a,
    /// relative to the largest coefficient.
    pub fn polynomial_mismatch(&self, o: &Self) -> f64 {
        let l = poly::mul(&self.num, &o.den);
        let r = poly::mul(&o.num, &self.den);
        let d = poly::sub(&l, &r);
        let scale = l.iter().chain(r.iter()).fold(0.0_f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE);
        d.iter().fold(0.0_f64, |m, c| m.max(c.abs())) / scale
    }
}

/// x' = A x + B u, y = C x + D u for a single-input single-output system.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl Realization {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn eval(&self, s: Complex<f64>) -> Option<Complex<f64>> {
        let n = self.order();
        if n == 0 {
            return Some(Complex::new(self.d, 0.0));
        }
        let m = DMatrix::<Complex<f64>>::identity(n, n) * s - self.a.map(|v| Complex::new(v, 0.0));
        let b = self.b.map(|v| Complex::new(v, 0.0));
        let x = m.lu().solve(&b)?;
        let y = self.c.iter().zip(x.iter()).fold(Complex::new(self.d, 0.0), |acc, (c, x)| acc + x * *c);
        Some(y)
    }
}

/// Controllable canonical form.
pub fn tf_realize(tf: &RationalTransferFunction) -> Result<Realization> {
    if !tf.is_proper() {
        return Err(DryerError::Improper { num: tf.num_degree(), den: tf.den_degree() });
    }
    let den = poly::trim(&tf.den);
    let n = den.len() - 1;
    let lead = den[n];
    let a_c: Vec<f64> = den.iter().map(|c| c / lead).collect();
    let mut b_c = vec![0.0; n + 1];
    for (i, c) in tf.num.iter().enumerate() {
        b_c[i] = c / lead;
    }
    let d = b_c[n];
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    if n > 0 {
        for j in 0..n {
            a[(n - 1, j)] = -a_c[j];
        }
    }
    let mut b = DVector::zeros(n);
    if n > 0 {
        b[n - 1] = 1.0;
    }
    let c = DVector::from_fn(n, |j, _| b_c[j] - d * a_c[j]);
    Ok(Realization { a, b, c, d })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    ZeroOrderHold,
    Trapezoid,
}

/// Discrete-time compensator with its own state, x[k+1] = Ad x[k] + Bd e[k].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCompensator {
    pub ad: DMatrix<f64>,
    pub bd: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
    pub method: Discretization,
    state: DVector<f64>,
}

impl DiscreteCompensator {
    pub fn output(&self, e: f64) -> f64 {
        self.c.dot(&self.state) + self.d * e
    }

    pub fn update(&mut self, e: f64) {
        self.state = &self.ad * &self.state + &self.bd * e;
    }

    pub fn reset(&mut self) {
        self.state.fill(0.0);
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    /// High-frequency gain, used by back-calculation anti-windup.
    pub fn feedthrough(&self) -> f64 {
        self.d
    }
}

/// Exact zero-order-hold discretization through the matrix exponential of
/// the augmented system; trapezoidal (Tustin) when the exponential is not finite.
pub fn discretize(r: &Realization, dt: f64) -> Result<DiscreteCompensator> {
    if !(dt > 0.0) {
        return Err(DryerError::InvalidParameter { field: "step_s".into(), reason: "must be > 0".into() });
    }
    let n = r.order();
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&r.a * dt));
    aug.view_mut((0, n), (n, 1)).copy_from(&(&r.b * dt));
    let e = aug.exp();
    let zoh_ok = e.iter().all(|v| v.is_finite());
    let (ad, bd, method) = if zoh_ok {
        (
            e.view((0, 0), (n, n)).into_owned(),
            e.view((0, n), (n, 1)).column(0).into_owned(),
            Discretization::ZeroOrderHold,
        )
    } else {
        let i = DMatrix::identity(n, n);
        let m = (&i - &r.a * (dt / 2.0))
            .try_inverse()
            .ok_or_else(|| DryerError::InvalidDesign("trapezoid discretization is singular".into()))?;
        (&m * (&i + &r.a * (dt / 2.0)), &m * &r.b * dt, Discretization::Trapezoid)
    };
    Ok(DiscreteCompensator { ad, bd, c: r.c.clone(), d: r.d, method, state: DVector::zeros(n) })
}
