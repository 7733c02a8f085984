use std::path::{Path, PathBuf};

use dryer_core::config::{read_json, RunConfig};
use dryer_core::control::{
    g1_model, imc_compensator_g2, imc_compensator_g3, lambda2_fallback, lambda2_tuning, pi_direct_synthesis, stack_gain,
};
use dryer_core::efficiency::{default_axes, surface_sweep, SweepMode};
use dryer_core::linearize::{
    alpha_coefficients, assemble_paper_model, compare_models, numeric_jacobian, DEFAULT_REL_STEP, LINEARIZATION_TOL,
};
use dryer_core::params::validate_parameters;
use dryer_core::sim::{
    closed_loop_simulate, design_compensators, stiffness_check, trace_foms, undisturbed, ClosedLoopPlant,
    CompensatorSource, Scenario,
};
use dryer_core::steady::{newton_solve, residual_norm, OperatingPoint, UnknownVariables};
use dryer_core::{DryerError, Exec, ModelVariant, Result};
use serde_json::json;

use crate::io::{
    read_trace_csv, write_bed_csv, write_json, write_model_csvs, write_saturation_csv, write_surface_csv,
    write_trace_csv,
};
use crate::{Cli, Command, LoopArg, SourceArg};

/// Tolerance of the paper-vs-Jacobian element comparison.
const DISCREPANCY_TOL: f64 = 1e-6;

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.variant {
        cfg.variant = v.into();
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| DryerError::Config(format!("{}: {e}", cli.out.display())))?;
    let out = |name: &str| -> PathBuf { cli.out.join(name) };
    match &cli.command {
        Command::Steady { newton } => steady(&cfg, *newton, &out),
        Command::Linearize { source, op } => linearize(&cfg, *source, op.as_deref(), &out),
        Command::Tune { r#loop, source } => tune(&cfg, *r#loop, *source, &out),
        Command::Simulate { source, scenario, no_events, stiffness_check } => simulate(
            &cfg,
            source.map(Into::into).unwrap_or(cfg.simulation.compensator_source),
            scenario.as_deref(),
            *no_events,
            *stiffness_check || cfg.simulation.stiffness_check,
            &out,
        ),
        Command::Foms { trace, window } => foms(trace, window.as_deref(), &out),
        Command::Surface { mode, quantity, fixed, points } => {
            surface(&cfg, (*mode).into(), (*quantity).into(), *fixed, *points, &out)
        }
    }
}

fn variant_name(v: ModelVariant) -> &'static str {
    match v {
        ModelVariant::PaperVerbatim => "paper_verbatim",
        ModelVariant::MassConsistent => "mass_consistent",
    }
}

fn steady(cfg: &RunConfig, newton: bool, out: &dyn Fn(&str) -> PathBuf) -> Result<()> {
    let k = cfg.consts()?;
    let op = cfg.operating_point(cfg.variant)?;
    let diagnostics = validate_parameters(&cfg.plant, &op.inputs());
    let mut report = json!({
        "variant": variant_name(cfg.variant),
        "known_variables": op.kv,
        "unknowns": op.uv,
        "inventory": op.inventory,
        "residuals": op.residuals,
        "residual_norm": op.residual_norm,
        "residual_norm_with_bedwater_row": residual_norm(&op, &k, true),
        "diagnostics": diagnostics,
    });
    if newton {
        let guess = UnknownVariables::from_array(&op.uv.to_array().map(|v| 1.1 * v));
        let sol = newton_solve(&op.kv, &k, cfg.variant, &guess, 1e-12, 100)?;
        let gap = sol
            .to_array()
            .iter()
            .zip(op.uv.to_array())
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        report["newton"] = json!({ "unknowns": sol, "max_rel_gap_to_closed_form": gap });
    }
    write_json(&out("steady.json"), &report)?;
    write_json(&out("op.json"), &op.uv)?;
    let uv = &op.uv;
    println!("mdot_chamber_to_windbox = {:.6} kg/s", uv.mdot_chamber_to_windbox);
    println!("mdot_windbox_to_dryer   = {:.6} kg/s", uv.mdot_windbox_to_dryer);
    println!("mdot_gas_out            = {:.6} kg/s", uv.mdot_gas_out);
    println!("mdot_stack              = {:.6} kg/s", uv.mdot_stack);
    println!(
        "T_chamber {:.4} K, T_windbox {:.4} K, T_dryergas {:.4} K, T_exhaust {:.4} K",
        uv.t_chamber, uv.t_windbox, uv.t_dryergas, uv.t_exhaust
    );
    println!("residual norm {:.3e}", op.residual_norm);
    for d in &diagnostics {
        eprintln!("{:?} {}: {}", d.severity, d.field, d.message);
    }
    Ok(())
}

fn load_op(cfg: &RunConfig, path: Option<&Path>) -> Result<OperatingPoint> {
    match path {
        None => cfg.operating_point(cfg.variant),
        Some(p) => {
            let uv: UnknownVariables = read_json(p)?;
            OperatingPoint::new(cfg.known_variables, uv, cfg.inventory, &cfg.consts()?, cfg.variant)
        }
    }
}

fn linearize(cfg: &RunConfig, source: SourceArg, op_path: Option<&Path>, out: &dyn Fn(&str) -> PathBuf) -> Result<()> {
    let k = cfg.consts()?;
    let op = load_op(cfg, op_path)?;
    if !(op.residual_norm <= LINEARIZATION_TOL) {
        return Err(DryerError::InvalidLinearizationPoint { residual_norm: op.residual_norm, tol: LINEARIZATION_TOL });
    }
    let alphas = alpha_coefficients(&op, &k)?;
    let paper = assemble_paper_model(&alphas);
    let jac = numeric_jacobian(&op, &op.inputs(), &k, cfg.variant, DEFAULT_REL_STEP, Exec::default())?;
    let (model, tag) = match source {
        SourceArg::Paper => (&paper, "paper"),
        SourceArg::Jacobian => (&jac, "jacobian"),
    };
    write_model_csvs(&out(&format!("A_{tag}.csv")), &out(&format!("B_{tag}.csv")), model)?;
    let report = compare_models(&paper, &jac, DISCREPANCY_TOL)?;
    write_json(&out("discrepancy.json"), &report)?;
    write_json(&out("alphas.json"), &alphas)?;
    println!(
        "wrote A_{tag}.csv ({}x{}) and B_{tag}.csv ({}x{})",
        model.a.nrows(),
        model.a.ncols(),
        model.b.nrows(),
        model.b.ncols()
    );
    println!("paper vs jacobian: {} differing elements (tol {DISCREPANCY_TOL:e})", report.findings.len());
    Ok(())
}

fn tune(cfg: &RunConfig, which: LoopArg, source: SourceArg, out: &dyn Fn(&str) -> PathBuf) -> Result<()> {
    let k = cfg.consts()?;
    let op = cfg.operating_point(cfg.variant)?;
    let t = &cfg.tuning;
    let (name, value) = match source {
        SourceArg::Jacobian => {
            let plant = ClosedLoopPlant::new(cfg.plant, cfg.variant, &op, None)?;
            let set = design_compensators(&plant, &op, CompensatorSource::Jacobian, t, Exec::default())?;
            let (name, l) = match which {
                LoopArg::G1 => ("g1", set.moisture),
                LoopArg::G2 => ("g2", set.chamber_temperature),
                LoopArg::G3 => ("g3", set.draft_pressure),
            };
            (
                name,
                json!({ "loop": name, "source": "jacobian", "plant": l.plant, "compensator": l.compensator, "tuning": l.tuning }),
            )
        }
        SourceArg::Paper => match which {
            LoopArg::G1 => {
                let model = g1_model(&op, cfg.plant.m_solid)?;
                let tau_c = t.tau_c1_s.unwrap_or(model.tau / 3.0);
                let gains = pi_direct_synthesis(&model, tau_c)?;
                println!(
                    "Kc = {:.6e}, tau_I = {:.6} s (tau = {:.6} s, tau_c = {:.6} s)",
                    gains.kc, gains.tau_i, model.tau, tau_c
                );
                (
                    "g1",
                    json!({ "loop": "g1", "source": "paper", "model": model, "gains": gains, "tau_c_s": tau_c,
                            "compensator": gains.transfer_function() }),
                )
            }
            LoopArg::G2 => {
                let al = alpha_coefficients(&op, &k)?;
                let (lambda2, rule, tuning) = match (t.lambda2_s, lambda2_tuning(&al)) {
                    (Some(l), _) => (l, "configured".to_string(), None),
                    (None, Ok(tu)) => {
                        let rule = if tu.floor_applied {
                            "dominant time constant, raised to the 1/(2*alpha12) floor"
                        } else {
                            "dominant time constant"
                        };
                        (tu.lambda2_s, rule.to_string(), Some(tu))
                    }
                    (None, Err(e)) => {
                        let l = lambda2_fallback(&al);
                        (l, format!("{e}; fallback max(1/sqrt|wn^2|, 1/(2|alpha12|))"), None)
                    }
                };
                let d = imc_compensator_g2(&al, lambda2, Some(cfg.plant.k_air_actuator))?;
                println!(
                    "lambda2 = {lambda2:.6} s ({rule}); alpha12 = {:.6}, rhp_zero = {:?}",
                    al.alpha(12),
                    d.rhp_zero
                );
                (
                    "g2",
                    json!({ "loop": "g2", "source": "paper", "alpha12": al.alpha(12), "rhp_zero": d.rhp_zero,
                               "lambda2_s": lambda2, "lambda2_rule": rule, "lambda2_tuning": tuning, "design": d }),
                )
            }
            LoopArg::G3 => {
                let al = alpha_coefficients(&op, &k)?;
                let lambda3 = t.lambda3_s.unwrap_or(3.0 / al.alpha(29));
                let order = t.filter_order3.unwrap_or(2);
                let gs = stack_gain(cfg.plant.k_fan, op.inventory.p_draft);
                let d = imc_compensator_g3(&al, lambda3, order, Some(gs))?;
                println!("lambda3 = {lambda3:.6} s, filter order {order}, rhp_zero = {:?}", d.rhp_zero);
                (
                    "g3",
                    json!({ "loop": "g3", "source": "paper", "lambda3_s": lambda3, "filter_order": order,
                               "rhp_zero": d.rhp_zero, "stack_gain": gs, "design": d }),
                )
            }
        },
    };
    write_json(&out(&format!("tune_{name}.json")), &value)
}

fn simulate(
    cfg: &RunConfig,
    source: CompensatorSource,
    scenario_path: Option<&Path>,
    no_events: bool,
    check_stiffness: bool,
    out: &dyn Fn(&str) -> PathBuf,
) -> Result<()> {
    let op = cfg.operating_point(cfg.variant)?;
    let plant = ClosedLoopPlant::new(cfg.plant, cfg.variant, &op, cfg.simulation.bed_model)?;
    let comps = design_compensators(&plant, &op, source, &cfg.tuning, Exec::default())?;
    let mut scenario = match scenario_path {
        Some(p) => {
            let mut s: Scenario = read_json(p)?;
            if let Some(h) = cfg.simulation.step_s {
                s.step_s = h;
            }
            s
        }
        None => cfg.scenario()?,
    };
    if no_events {
        scenario = undisturbed(&plant, &op, &scenario);
    }
    let opts = cfg.simulation.options();
    let trace = closed_loop_simulate(&plant, &op, &comps, &scenario, &opts)?;
    write_trace_csv(&out("trace.csv"), &trace)?;
    write_saturation_csv(&out("saturation.csv"), &trace)?;
    if let Some(tb) = &trace.t_bed {
        write_bed_csv(&out("bed.csv"), &trace, tb)?;
    }
    write_json(&out("compensators.json"), &comps)?;
    let foms = trace_foms(&trace, None)?;
    write_json(&out("foms.json"), &foms)?;
    for (name, f) in &foms {
        println!("{name}: ISE {:.4e}, ov {:.2}%, ess {:.2}%", f.ise, f.ov_percent, f.ess_percent);
    }
    for note in comps.notes.iter().chain(&trace.warnings) {
        eprintln!("note: {note}");
    }
    for f in foms.values() {
        if let Some(n) = &f.deviation_note {
            eprintln!("note: {n}");
        }
    }
    if check_stiffness {
        if let Some(w) = stiffness_check(&plant, &op, &comps, &scenario, &opts, Exec::default())? {
            eprintln!("warning: {w}");
        }
    }
    Ok(())
}

fn foms(trace: &Path, window: Option<&[f64]>, out: &dyn Fn(&str) -> PathBuf) -> Result<()> {
    if let Some(w) = window {
        if !(w[0].is_finite() && w[1].is_finite() && w[1] > w[0]) {
            return Err(DryerError::Config(format!("--window {} {}: END must exceed START", w[0], w[1])));
        }
    }
    let tr = read_trace_csv(trace)?;
    let report = trace_foms(&tr, window.map(|w| (w[0], w[1])))?;
    write_json(&out("foms.json"), &report)?;
    for (name, f) in &report {
        println!("{name}: ISE {:.4e}, ov {:.2}%, ess {:.2}%", f.ise, f.ov_percent, f.ess_percent);
    }
    Ok(())
}

fn surface(
    cfg: &RunConfig,
    mode: SweepMode,
    quantity: dryer_core::efficiency::SweepQuantity,
    fixed: Option<f64>,
    points: usize,
    out: &dyn Fn(&str) -> PathBuf,
) -> Result<()> {
    let fixed = fixed.unwrap_or(match mode {
        SweepMode::FixTamb => cfg.plant.t_ambient,
        SweepMode::FixTe => cfg.known_variables.t_bed,
        SweepMode::FixTin => cfg.known_variables.t_dryer_in,
    });
    let (a1, a2) = default_axes(mode, points);
    let grid = surface_sweep(mode, fixed, &a1, &a2, quantity, Exec::default())?;
    let stem = format!("surface_{}_{}", serde_name(&mode), serde_name(&quantity));
    write_surface_csv(&out(&format!("{stem}.csv")), &grid)?;
    write_json(
        &out(&format!("{stem}.json")),
        &json!({ "mode": mode, "quantity": quantity, "axis1": grid.axis1_name, "axis2": grid.axis2_name,
                 "fixed": grid.fixed_name, "fixed_value": fixed, "rows": grid.values.len(),
                 "degenerate_cells": grid.values.iter().filter(|v| v.is_none()).count() }),
    )?;
    println!("wrote {stem}.csv ({} rows)", grid.values.len());
    Ok(())
}

fn serde_name<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}
