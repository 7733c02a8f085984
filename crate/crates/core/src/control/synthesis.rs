//! Loop models and compensator synthesis: moisture PI by direct synthesis,
//! furnace-temperature and draft-pressure IMC designs, actuator maps.

use nalgebra::Complex;
use serde::Serialize;

use super::tf::{poly, RationalTransferFunction};
use crate::error::{DryerError, Result};
use crate::linearize::AlphaCoefficients;
use crate::steady::OperatingPoint;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoistureLoopModel {
    /// dX/dM_w at the operating point, 1/kg.
    pub k_x: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "tau_s")]
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl MoistureLoopModel {
    /// K1/(τs + 1).
    pub fn transfer_function(&self) -> RationalTransferFunction {
        RationalTransferFunction { num: vec![self.k1], den: vec![1.0, self.tau] }
    }
}

pub fn g1_model(op: &OperatingPoint, m_solid: f64) -> Result<MoistureLoopModel> {
    if !(m_solid > 0.0) {
        return Err(DryerError::InvalidParameter { field: "M_solid".into(), reason: "must be > 0".into() });
    }
    let kv = &op.kv;
    if !(kv.f_solids > 0.0) {
        return Err(DryerError::InvalidDesign("F_solids = 0 gives an infinite moisture time constant".into()));
    }
    let dry = (1.0 - kv.x_out).powi(2);
    let k_x = dry / m_solid;
    let k1 = k_x * (kv.x_in - kv.x_out);
    let tau = m_solid / (kv.f_solids * dry);
    let warning = (k1 == 0.0).then(|| "zero process gain: X_in equals X_out".to_string());
    Ok(MoistureLoopModel { k_x, k1, tau, warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PIGains {
    #[serde(rename = "Kc")]
    pub kc: f64,
    #[serde(rename = "tau_I_s")]
    pub tau_i: f64,
}

impl PIGains {
    /// Kc·(τ_I s + 1)/(τ_I s).
    pub fn transfer_function(&self) -> RationalTransferFunction {
        RationalTransferFunction { num: vec![self.kc, self.kc * self.tau_i], den: vec![0.0, self.tau_i] }
    }
}

pub fn pi_direct_synthesis(model: &MoistureLoopModel, tau_c: f64) -> Result<PIGains> {
    if !(tau_c > 0.0) {
        return Err(DryerError::InvalidDesign(format!("tau_c must be > 0, got {tau_c}")));
    }
    if model.k1 == 0.0 {
        return Err(DryerError::InvalidDesign("process gain K1 is zero".into()));
    }
    Ok(PIGains { kc: model.tau / (model.k1 * tau_c), tau_i: model.tau })
}

/// Gc = Gcl / (Gp·(1 − Gcl)), rationalized.
pub fn direct_synthesis(
    plant: &RationalTransferFunction,
    target: &RationalTransferFunction,
) -> Result<RationalTransferFunction> {
    if poly::is_zero(&plant.num) {
        return Err(DryerError::InvalidDesign("plant numerator is zero".into()));
    }
    let num = poly::mul(&target.num, &plant.den);
    let den = poly::mul(&plant.num, &poly::sub(&target.den, &target.num));
    RationalTransferFunction::new(num, den)
}

/// Q·(1 − G⁻F)⁻¹ with Q = (G⁺)⁻¹F, written over a single denominator:
/// F_num·G⁺_den·G⁻_den / (G⁺_num·(G⁻_den·F_den − G⁻_num·F_num)).
pub fn imc_feedback_form(
    minus: &RationalTransferFunction,
    plus: &RationalTransferFunction,
    filter: &RationalTransferFunction,
) -> Result<RationalTransferFunction> {
    let num = poly::mul(&poly::mul(&filter.num, &plus.den), &minus.den);
    let inner = poly::sub(&poly::mul(&minus.den, &filter.den), &poly::mul(&minus.num, &filter.num));
    let den = poly::mul(&plus.num, &inner);
    let gc = RationalTransferFunction::new(num, den)?;
    if !gc.is_proper() {
        return Err(DryerError::Improper { num: gc.num_degree(), den: gc.den_degree() });
    }
    Ok(gc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IMCDesign {
    pub plant: RationalTransferFunction,
    pub noninvertible_part: RationalTransferFunction,
    pub invertible_part: RationalTransferFunction,
    pub filter_lambda: f64,
    pub filter_order: u32,
    /// Unity-feedback compensator acting on the plant input.
    pub compensator: RationalTransferFunction,
    /// Compensator divided by the actuator gain, acting on the drive signal.
    pub drive_compensator: Option<RationalTransferFunction>,
    pub rhp_zero: Option<f64>,
    pub warnings: Vec<String>,
}

impl IMCDesign {
    pub fn filter(&self) -> RationalTransferFunction {
        RationalTransferFunction::lag_filter(self.filter_lambda, self.filter_order)
    }

    /// |T(s) − G⁻(s)F(s)| / |G⁻F| at `s`, with T the unity-feedback
    /// complementary sensitivity of compensator and plant.
    pub fn nominal_identity_error(&self, s: Complex<f64>) -> f64 {
        let l = self.compensator.eval(s) * self.plant.eval(s);
        let t = l / (l + 1.0);
        let target = self.noninvertible_part.eval(s) * self.filter().eval(s);
        (t - target).norm() / target.norm().max(f64::MIN_POSITIVE)
    }

    /// Smallest distance from a compensator pole to the points that must
    /// not be cancelled (origin and the RHP zero when present).
    pub fn min_pole_distance_to_preserved(&self) -> f64 {
        let mut pts = vec![Complex::new(0.0, 0.0)];
        if let Some(z) = self.rhp_zero {
            pts.push(Complex::new(z, 0.0));
        }
        let poles = self.compensator.poles();
        poles.iter().flat_map(|p| pts.iter().map(move |q| (p - q).norm())).fold(f64::INFINITY, f64::min)
    }

    pub fn factorization_mismatch(&self) -> f64 {
        self.noninvertible_part.mul(&self.invertible_part).polynomial_mismatch(&self.plant)
    }
}

fn rhp_roots(p: &[f64]) -> Vec<Complex<f64>> {
    poly::roots(p).into_iter().filter(|r| r.re > 1e-12).collect()
}

fn a(al: &AlphaCoefficients, i: usize) -> f64 {
    al.alpha(i)
}

/// Published cubic denominator −s³ + (α12 + α5)s² + (α5α12 + α7α11)s.
fn g2_den(al: &AlphaCoefficients) -> Vec<f64> {
    vec![0.0, a(al, 5) * a(al, 12) + a(al, 7) * a(al, 11), a(al, 12) + a(al, 5), -1.0]
}

pub fn g2_model(al: &AlphaCoefficients) -> RationalTransferFunction {
    let num = poly::mul(&[a(al, 12), -1.0], &[a(al, 4), a(al, 2)]);
    RationalTransferFunction { num: poly::trim(&num), den: g2_den(al) }
}

/// Splits G2 into the non-invertible and invertible parts. With α12 > 0 the
/// RHP zero and the integrator go to G2⁻; otherwise only the integrator does.
pub fn g2_factorize(al: &AlphaCoefficients) -> IMCDesign {
    let plant = g2_model(al);
    let quad: Vec<f64> = g2_den(al)[1..].to_vec();
    let mut warnings = Vec::new();
    let (minus, plus, rhp_zero) = if a(al, 12) > 0.0 {
        (
            RationalTransferFunction { num: vec![a(al, 12), -1.0], den: vec![0.0, 1.0] },
            RationalTransferFunction { num: vec![a(al, 4), a(al, 2)], den: quad.clone() },
            Some(a(al, 12)),
        )
    } else {
        warnings.push(format!(
            "alpha_12 = {} <= 0: the zero is not in the RHP; G2- = 1/s and the zero stays in G2+",
            a(al, 12)
        ));
        (
            RationalTransferFunction { num: vec![1.0], den: vec![0.0, 1.0] },
            RationalTransferFunction { num: poly::mul(&[a(al, 12), -1.0], &[a(al, 4), a(al, 2)]), den: quad.clone() },
            None,
        )
    };
    let unstable = rhp_roots(&quad);
    if !unstable.is_empty() {
        warnings.push(format!(
            "G2+ denominator has RHP roots {:?}: non-minimum-phase remainder, inverse is unstable",
            unstable.iter().map(|r| r.re).collect::<Vec<_>>()
        ));
    }
    if let Some(z) = rhp_roots(&plus.num).first() {
        warnings.push(format!("G2+ numerator has an RHP zero at {}", z.re));
    }
    IMCDesign {
        plant,
        noninvertible_part: minus,
        invertible_part: plus,
        filter_lambda: 0.0,
        filter_order: 0,
        compensator: RationalTransferFunction::gain(0.0),
        drive_compensator: None,
        rhp_zero,
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lambda2Tuning {
    pub lambda2_s: f64,
    pub omega_n: f64,
    pub t_dom_s: f64,
    /// 1/(2α12), present when α12 > 0.
    pub rhp_floor_s: Option<f64>,
    pub floor_applied: bool,
}

pub fn lambda2_tuning(al: &AlphaCoefficients) -> Result<Lambda2Tuning> {
    let wn2 = a(al, 7) * a(al, 11) + a(al, 5) * a(al, 12);
    if !(wn2 > 0.0) {
        return Err(DryerError::Tuning {
            reason: format!(
                "omega_n^2 = alpha_7*alpha_11 + alpha_5*alpha_12 = {wn2} is not positive (alpha_5 = {}, alpha_7 = {}, alpha_11 = {}, alpha_12 = {})",
                a(al, 5),
                a(al, 7),
                a(al, 11),
                a(al, 12)
            ),
            omega_n_sq: wn2,
        });
    }
    let wn = wn2.sqrt();
    let gap = (a(al, 12) - a(al, 5)).max(0.0);
    let t_dom = if gap > 0.0 { (1.0 / wn).max(1.0 / gap) } else { 1.0 / wn };
    let base = (1.0 / wn).max(0.3 * t_dom);
    let floor = (a(al, 12) > 0.0).then(|| 1.0 / (2.0 * a(al, 12)));
    let (lambda2, applied) = match floor {
        Some(f) if base < f => (f, true),
        _ => (base, false),
    };
    Ok(Lambda2Tuning { lambda2_s: lambda2, omega_n: wn, t_dom_s: t_dom, rhp_floor_s: floor, floor_applied: applied })
}

/// Substitute when ω_n² ≤ 0: max(1/√|ω_n²|, 1/(2|α12|)).
pub fn lambda2_fallback(al: &AlphaCoefficients) -> f64 {
    let wn2 = a(al, 7) * a(al, 11) + a(al, 5) * a(al, 12);
    let mut l = if wn2 != 0.0 { 1.0 / wn2.abs().sqrt() } else { 1.0 };
    if a(al, 12) != 0.0 {
        l = l.max(1.0 / (2.0 * a(al, 12).abs()));
    }
    l
}

pub fn imc_compensator_g2(al: &AlphaCoefficients, lambda2: f64, k_air_actuator: Option<f64>) -> Result<IMCDesign> {
    if !(lambda2 > 0.0) {
        return Err(DryerError::InvalidDesign(format!("lambda2 must be > 0, got {lambda2}")));
    }
    let mut d = g2_factorize(al);
    if poly::is_zero(&d.invertible_part.num) {
        return Err(DryerError::InvalidDesign("G2+ numerator is identically zero".into()));
    }
    d.filter_lambda = lambda2;
    d.filter_order = 2;
    d.compensator = imc_feedback_form(&d.noninvertible_part, &d.invertible_part, &d.filter())?;
    d.drive_compensator = k_air_actuator.map(|ka| d.compensator.scale(1.0 / ka));
    Ok(d)
}

/// Zero z3 = α27/α26 when α26 ≠ 0.
pub fn g3_zero(al: &AlphaCoefficients) -> Option<f64> {
    (a(al, 26) != 0.0).then(|| a(al, 27) / a(al, 26))
}

/// α31·s·(α29 + s) + α32·(α27 − α26·s).
fn g3_numerator(al: &AlphaCoefficients) -> Vec<f64> {
    vec![a(al, 32) * a(al, 27), a(al, 31) * a(al, 29) - a(al, 32) * a(al, 26), a(al, 31)]
}

/// Single-fraction draft-pressure model over s²·(α29 + s), with the zero
/// z3 reported when it lies in the right half plane.
pub fn g3_model(al: &AlphaCoefficients) -> (RationalTransferFunction, Option<f64>) {
    let tf = RationalTransferFunction { num: poly::trim(&g3_numerator(al)), den: vec![0.0, 0.0, a(al, 29), 1.0] };
    (tf, g3_zero(al).filter(|z| *z > 0.0))
}

pub fn imc_compensator_g3(
    al: &AlphaCoefficients,
    lambda3: f64,
    order: u32,
    stack_gain: Option<f64>,
) -> Result<IMCDesign> {
    if !(lambda3 > 0.0) {
        return Err(DryerError::InvalidDesign(format!("lambda3 must be > 0, got {lambda3}")));
    }
    if order < 2 {
        return Err(DryerError::InvalidDesign("the draft filter needs order >= 2".into()));
    }
    let n3 = g3_numerator(al);
    if n3.iter().all(|c| *c == 0.0) {
        return Err(DryerError::DegeneratePlant);
    }
    let (plant, rhp_zero) = g3_model(al);
    let lag = vec![a(al, 29), 1.0];
    let (minus, plus) = match rhp_zero {
        Some(z) => {
            let factor = vec![1.0, -1.0 / z];
            (
                RationalTransferFunction { num: factor.clone(), den: vec![0.0, 0.0, 1.0] },
                RationalTransferFunction { num: n3.clone(), den: poly::mul(&lag, &factor) },
            )
        }
        None => (
            RationalTransferFunction { num: vec![1.0], den: vec![0.0, 0.0, 1.0] },
            RationalTransferFunction { num: n3.clone(), den: lag },
        ),
    };
    let mut warnings = Vec::new();
    let n3_rhp = rhp_roots(&n3);
    if !n3_rhp.is_empty() {
        warnings.push(format!(
            "N3 has RHP roots {:?}; the invertible part is not minimum phase",
            n3_rhp.iter().map(|r| (r.re, r.im)).collect::<Vec<_>>()
        ));
    }
    let mut d = IMCDesign {
        plant,
        noninvertible_part: minus,
        invertible_part: plus,
        filter_lambda: lambda3,
        filter_order: order,
        compensator: RationalTransferFunction::gain(0.0),
        drive_compensator: None,
        rhp_zero,
        warnings,
    };
    d.compensator = imc_feedback_form(&d.noninvertible_part, &d.invertible_part, &d.filter())?;
    d.drive_compensator = stack_gain.map(|g| d.compensator.scale(1.0 / g));
    Ok(d)
}

/// Air flow from the drive signal, clamped at zero. Returns (flow, clamped).
pub fn air_actuator(c2: f64, k_a: f64) -> (f64, bool) {
    let f = k_a * c2;
    if f < 0.0 {
        (0.0, true)
    } else {
        (f, false)
    }
}

/// Fan gain k_f·√|P_ss|.
pub fn stack_gain(k_f: f64, p_ss: f64) -> f64 {
    k_f * p_ss.abs().sqrt()
}

pub fn stack_actuator(c3: f64, k_f: f64, p_ss: f64) -> (f64, bool) {
    let f = stack_gain(k_f, p_ss) * c3;
    if f < 0.0 {
        (0.0, true)
    } else {
        (f, false)
    }
}
