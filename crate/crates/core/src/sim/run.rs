//! Closed-loop runs: sampled compensators driving the nonlinear plant.

use serde::{Deserialize, Serialize};

use super::design::{CompensatorSet, OperatingDrives};
use super::integrate::{self, Method};
use super::plant::{ClosedLoopPlant, Disturbances, Manipulated};
use super::scenario::{EventTarget, Scenario};
use crate::control::{discretize, tf_realize, DiscreteCompensator, RationalTransferFunction};
use crate::efficiency::efficiency_simplified;
use crate::error::{DryerError, Result};
use crate::exec::{map_indexed, Exec};
use crate::model::{N_STATES, STATE_LABELS};
use crate::steady::OperatingPoint;

pub const TRACE_COLUMNS: [&str; 21] = [
    "t",
    "m_c",
    "T_c",
    "m_w",
    "T_w",
    "M_w",
    "m_g",
    "T_g",
    "m_e",
    "T_e",
    "P",
    "x_out",
    "sp_xout",
    "sp_tc",
    "sp_p",
    "f_s",
    "c2",
    "mdot_air",
    "c3",
    "mdot_stack",
    "eta_d",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    #[serde(default)]
    pub anti_windup: bool,
    #[serde(default = "default_output_interval")]
    pub output_interval_s: f64,
    #[serde(default)]
    pub method: Method,
}

fn default_output_interval() -> f64 {
    0.1
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { anti_windup: false, output_interval_s: default_output_interval(), method: Method::Rk4 }
    }
}

/// Actuator clamps engaged at a sample: F_s, ṁ_a, ṁ_stack.
pub type SaturationFlags = [bool; 3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    /// One row per output sample, laid out as [`TRACE_COLUMNS`].
    pub rows: Vec<[f64; 21]>,
    pub saturation: Vec<SaturationFlags>,
    /// Bed temperature per sample when the bed model is on.
    pub t_bed: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl Trace {
    /// Rebuilds a trace read back from its CSV form; flags are unknown there.
    pub fn from_rows(rows: Vec<[f64; 21]>) -> Result<Self> {
        if let Some(i) = rows.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(DryerError::Config(format!("trace row {i} has a non-finite entry")));
        }
        if rows.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            return Err(DryerError::Config("trace times must increase".into()));
        }
        let n = rows.len();
        Ok(Self { rows, saturation: vec![[false; 3]; n], t_bed: None, warnings: Vec::new() })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = TRACE_COLUMNS.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn saturation_count(&self) -> [usize; 3] {
        let mut n = [0; 3];
        for f in &self.saturation {
            for i in 0..3 {
                n[i] += usize::from(f[i]);
            }
        }
        n
    }
}

fn realize(tf: &RationalTransferFunction, dt: f64) -> Result<DiscreteCompensator> {
    discretize(&tf_realize(tf)?, dt)
}

struct Setpoints {
    x_out: f64,
    t_chamber: f64,
    p_draft: f64,
}

/// Runs the scenario. Events act from the first sample at or after their
/// time; compensator outputs are held over each integration step.
pub fn closed_loop_simulate(
    plant: &ClosedLoopPlant,
    op: &OperatingPoint,
    comps: &CompensatorSet,
    scenario: &Scenario,
    opts: &SimOptions,
) -> Result<Trace> {
    scenario.validate()?;
    if !(opts.output_interval_s > 0.0) {
        return Err(DryerError::Scenario("output_interval_s must be > 0".into()));
    }
    let dt = scenario.step_s;
    let drives = OperatingDrives::new(plant, op)?;
    let mut c1 = realize(&comps.moisture.compensator, dt)?;
    let mut c2 = realize(&comps.chamber_temperature.compensator, dt)?;
    let mut c3 = realize(&comps.draft_pressure.compensator, dt)?;

    let mut x = plant.state_vector(&scenario.initial_state);
    let u0 = scenario.initial_inputs;
    let mut dist = Disturbances { mdot_fuel: u0.mdot_fuel, t_dryer_in: u0.t_dryer_in, x_in: u0.x_in };
    let mut sp = Setpoints {
        x_out: plant.moisture(&x)?,
        t_chamber: scenario.initial_state.t_chamber,
        p_draft: scenario.initial_state.p_draft,
    };

    let n_steps = (scenario.horizon_s / dt - 1e-9).ceil() as usize;
    let decim = ((opts.output_interval_s / dt).round() as usize).max(1);
    let mut rows = Vec::with_capacity(n_steps / decim + 2);
    let mut saturation = Vec::with_capacity(n_steps / decim + 2);
    let mut t_bed = plant.bed.map(|_| Vec::with_capacity(n_steps / decim + 2));
    let mut next_event = 0;
    let t_amb = plant.params.t_ambient;

    for k in 0..=n_steps {
        let t = k as f64 * dt;
        while next_event < scenario.events.len() && scenario.events[next_event].t_s <= t + 1e-9 * dt {
            let e = scenario.events[next_event];
            match e.target {
                EventTarget::FuelFlow => dist.mdot_fuel = e.value,
                EventTarget::DryerInletTemp => dist.t_dryer_in = e.value,
                EventTarget::InletMoisture => dist.x_in = e.value,
                EventTarget::MoistureSetpoint => sp.x_out = e.value,
                EventTarget::PressureSetpoint => sp.p_draft = e.value,
                EventTarget::ChamberTempSetpoint => sp.t_chamber = e.value,
            }
            next_event += 1;
        }

        let moisture = plant.moisture(&x)?;
        let e1 = sp.x_out - moisture;
        let e2 = sp.t_chamber - x[1];
        let e3 = sp.p_draft - x[9];
        let fs_raw = drives.manipulated.f_solids + c1.output(e1);
        let c2_sig = drives.c2 + c2.output(e2);
        let c3_sig = drives.c3 + c3.output(e3);
        let ma_raw = drives.k_air * c2_sig;
        let mst_raw = drives.k_stack * c3_sig;
        let flags = [fs_raw < 0.0, ma_raw < 0.0, mst_raw < 0.0];
        let m = Manipulated { f_solids: fs_raw.max(0.0), mdot_air: ma_raw.max(0.0), mdot_stack: mst_raw.max(0.0) };

        if k % decim == 0 || k == n_steps {
            let eta = efficiency_simplified(dist.t_dryer_in, x[8], t_amb).unwrap_or(f64::NAN);
            let mut row = [0.0; 21];
            row[0] = t;
            row[1..=N_STATES].copy_from_slice(&x[..N_STATES]);
            row[11..].copy_from_slice(&[
                moisture,
                sp.x_out,
                sp.t_chamber,
                sp.p_draft,
                m.f_solids,
                c2_sig,
                m.mdot_air,
                c3_sig,
                m.mdot_stack,
                eta,
            ]);
            rows.push(row);
            saturation.push(flags);
            if let Some(tb) = t_bed.as_mut() {
                tb.push(x[N_STATES]);
            }
        }
        if k == n_steps {
            break;
        }

        let e1_eff = if opts.anti_windup && flags[0] && c1.feedthrough() != 0.0 {
            e1 + (m.f_solids - fs_raw) / c1.feedthrough()
        } else {
            e1
        };
        c1.update(e1_eff);
        c2.update(e2);
        c3.update(e3);

        let h = if k + 1 == n_steps { scenario.horizon_s - t } else { dt };
        let mut f = |_t: f64, y: &[f64]| plant.derivative(y, &m, &dist);
        let next = integrate::step(&mut f, t, &x, h, opts.method)
            .map_err(|e| DryerError::IntegrationBlowUp { time: t, detail: e.to_string() })?;
        if let Some(i) = next.iter().position(|v| !v.is_finite()) {
            let name = STATE_LABELS.get(i).copied().unwrap_or("T_bed");
            return Err(DryerError::IntegrationBlowUp { time: t + h, detail: format!("{name} is not finite") });
        }
        x = next;
    }

    let mut warnings = Vec::new();
    let sat = saturation.iter().fold([0usize; 3], |mut n, f| {
        for i in 0..3 {
            n[i] += usize::from(f[i]);
        }
        n
    });
    for (i, name) in ["f_s", "mdot_air", "mdot_stack"].iter().enumerate() {
        if sat[i] > 0 {
            warnings.push(format!("{name} clamped at zero in {} of {} samples", sat[i], rows.len()));
        }
    }
    Ok(Trace { rows, saturation, t_bed, warnings })
}

/// The scenario started at the operating point with no events.
pub fn undisturbed(plant: &ClosedLoopPlant, op: &OperatingPoint, base: &Scenario) -> Scenario {
    let x = plant.operating_state(op);
    let mut s = crate::model::PlantState::from_array(&x[..N_STATES].try_into().expect("10 states"));
    s.t_bed = x.get(N_STATES).copied();
    Scenario { initial_state: s, initial_inputs: op.inputs(), events: Vec::new(), ..base.clone() }
}

/// One independent run of a batch.
#[derive(Debug, Clone)]
pub struct SimJob<'a> {
    pub plant: &'a ClosedLoopPlant,
    pub op: &'a OperatingPoint,
    pub comps: &'a CompensatorSet,
    pub scenario: Scenario,
    pub opts: SimOptions,
}

pub fn simulate_many(jobs: &[SimJob<'_>], exec: Exec) -> Vec<Result<Trace>> {
    map_indexed(exec, jobs.len(), |i| {
        let j = &jobs[i];
        closed_loop_simulate(j.plant, j.op, j.comps, &j.scenario, &j.opts)
    })
}

/// Threshold on the relative state change under step halving.
pub const STIFFNESS_TOL: f64 = 1e-3;

/// Reruns the scenario at half the step and reports the largest relative
/// state change at common samples; `Some` when it exceeds [`STIFFNESS_TOL`].
pub fn stiffness_check(
    plant: &ClosedLoopPlant,
    op: &OperatingPoint,
    comps: &CompensatorSet,
    scenario: &Scenario,
    opts: &SimOptions,
    exec: Exec,
) -> Result<Option<String>> {
    let half = Scenario { step_s: scenario.step_s / 2.0, ..scenario.clone() };
    let jobs = [
        SimJob { plant, op, comps, scenario: scenario.clone(), opts: *opts },
        SimJob { plant, op, comps, scenario: half, opts: *opts },
    ];
    let mut out = simulate_many(&jobs, exec).into_iter();
    let a = out.next().expect("two runs")?;
    let b = out.next().expect("two runs")?;
    let mut worst = (0.0_f64, 0usize, 0.0_f64);
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        if (ra[0] - rb[0]).abs() > 1e-9 * ra[0].abs().max(1.0) {
            continue;
        }
        for j in 1..=N_STATES {
            let rel = (ra[j] - rb[j]).abs() / rb[j].abs().max(1e-12);
            if rel > worst.0 {
                worst = (rel, j, ra[0]);
            }
        }
    }
    Ok((worst.0 > STIFFNESS_TOL).then(|| {
        format!(
            "step halving changes {} by {:.2e} relative at t = {:.1} s; the step may be too large",
            TRACE_COLUMNS[worst.1], worst.0, worst.2
        )
    }))
}
