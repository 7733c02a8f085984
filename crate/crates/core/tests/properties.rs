use dryer_core::control::{direct_synthesis, pi_direct_synthesis, MoistureLoopModel, RationalTransferFunction};
use dryer_core::efficiency::{efficiency_simplified, elasticities, sensitivities};
use dryer_core::linearize::central_jacobian;
use dryer_core::model::{bed_energy_rate, outlet_moisture};
use dryer_core::sim::compute_foms;
use dryer_core::steady::{closed_form_op, newton_solve, residual_terms, KnownVariables, UnknownVariables};
use dryer_core::{derive_constants, DerivedConstants, Exec, ModelVariant, PlantParameters};
use proptest::prelude::*;

fn consts() -> DerivedConstants {
    derive_constants(&PlantParameters::default()).unwrap()
}

fn known_variables() -> impl Strategy<Value = KnownVariables> {
    (0.005..0.03f64, 0.1..0.5f64, 1.0..4.0f64, 0.10..0.25f64, 0.1..0.9f64).prop_map(|(mf, ma, fs, xin, frac)| {
        KnownVariables {
            mdot_fuel: mf,
            mdot_air: ma,
            f_solids: fs,
            x_in: xin,
            x_out: xin * frac,
            ..KnownVariables::table_i()
        }
    })
}

fn variant() -> impl Strategy<Value = ModelVariant> {
    prop_oneof![Just(ModelVariant::PaperVerbatim), Just(ModelVariant::MassConsistent)]
}

fn scaled_residual(kv: &KnownVariables, uv: &UnknownVariables, k: &DerivedConstants, v: ModelVariant) -> f64 {
    residual_terms(kv, uv, k, v)
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != 4)
        .map(|(_, t)| t.value.abs() / t.dominant.max(1.0))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn flow_chain_identities(kv in known_variables(), v in variant()) {
        let uv = closed_form_op(&kv, &consts(), v).unwrap();
        prop_assert_eq!(uv.mdot_chamber_to_windbox, kv.mdot_fuel + kv.mdot_air);
        prop_assert_eq!(uv.mdot_windbox_to_dryer, uv.mdot_chamber_to_windbox);
        prop_assert_eq!(uv.mdot_stack, uv.mdot_gas_out);
        let expect = match v {
            ModelVariant::PaperVerbatim => kv.evaporation(),
            ModelVariant::MassConsistent => kv.evaporation() + uv.mdot_windbox_to_dryer,
        };
        prop_assert_eq!(uv.mdot_gas_out, expect);
        prop_assert_eq!(uv.t_dryer_out, uv.t_dryergas);
    }

    #[test]
    fn closed_form_zeroes_the_balances(kv in known_variables(), v in variant()) {
        let k = consts();
        let uv = closed_form_op(&kv, &k, v).unwrap();
        prop_assert!(scaled_residual(&kv, &uv, &k, v) < 1e-9);
    }

    #[test]
    fn combustion_temperatures_ignore_joint_flow_scaling(kv in known_variables(), s in 0.25..4.0f64) {
        let k = consts();
        let v = ModelVariant::PaperVerbatim;
        let a = closed_form_op(&kv, &k, v).unwrap();
        let scaled = KnownVariables { mdot_fuel: kv.mdot_fuel * s, mdot_air: kv.mdot_air * s, ..kv };
        let b = closed_form_op(&scaled, &k, v).unwrap();
        prop_assert!((a.t_chamber - b.t_chamber).abs() <= 1e-9 * a.t_chamber.abs());
        prop_assert!((a.t_windbox - b.t_windbox).abs() <= 1e-9 * a.t_windbox.abs());
    }

    #[test]
    fn newton_finds_the_closed_form(kv in known_variables(), v in variant(), seeds in prop::array::uniform9(-0.2..0.2f64)) {
        let k = consts();
        let cf = closed_form_op(&kv, &k, v).unwrap().to_array();
        let mut g = cf;
        for (x, d) in g.iter_mut().zip(seeds) {
            *x *= 1.0 + d;
        }
        let sol = newton_solve(&kv, &k, v, &UnknownVariables::from_array(&g), 1e-13, 100).unwrap().to_array();
        for (a, b) in sol.iter().zip(&cf) {
            prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-6), "{} vs {}", a, b);
        }
    }

    #[test]
    fn outlet_moisture_rises_with_bed_water(ms in 100.0..2000.0f64, mw in 0.0..500.0f64, dm in 1e-3..50.0f64) {
        let x0 = outlet_moisture(mw, ms).unwrap();
        let x1 = outlet_moisture(mw + dm, ms).unwrap();
        prop_assert!(x1 > x0);
        prop_assert!((0.0..1.0).contains(&x0));
    }

    #[test]
    fn bed_heats_toward_the_gas(t_bed in 300.0..900.0f64, dt in -300.0..300.0f64, mw in 0.0..200.0f64) {
        prop_assume!(dt.abs() > 1e-6);
        let p = PlantParameters::default();
        let r = bed_energy_rate(t_bed, t_bed + dt, mw, 0.0, 0.0, 0.0, &p).unwrap();
        prop_assert_eq!(r.signum(), dt.signum());
    }

    #[test]
    fn efficiency_derivatives_match_differences(tamb in 263.0..323.0f64, tin in 500.0..1300.0f64, f in 0.01..0.99f64) {
        let te = tamb + f * (tin - tamb);
        let eta = |a: f64, b: f64, c: f64| efficiency_simplified(a, b, c).unwrap();
        let s = sensitivities(tin, te, tamb).unwrap();
        let h = 1e-2;
        let fd = [
            (eta(tin + h, te, tamb) - eta(tin - h, te, tamb)) / (2.0 * h),
            (eta(tin, te + h, tamb) - eta(tin, te - h, tamb)) / (2.0 * h),
            (eta(tin, te, tamb + h) - eta(tin, te, tamb - h)) / (2.0 * h),
        ];
        let scale = 1.0 / (tin - tamb);
        for (a, b) in [s.d_eta_d_tin, s.d_eta_d_te, s.d_eta_d_tamb].iter().zip(fd) {
            prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(scale));
        }
        prop_assert!(elasticities(tin, te, tamb).unwrap().sum().abs() < 1e-12);
    }

    #[test]
    fn efficiency_ignores_a_common_offset(tamb in 263.0..323.0f64, tin in 500.0..1300.0f64, f in 0.0..1.0f64, c in -50.0..50.0f64) {
        let te = tamb + f * (tin - tamb);
        let a = efficiency_simplified(tin, te, tamb).unwrap();
        let b = efficiency_simplified(tin + c, te + c, tamb + c).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn direct_synthesis_of_a_first_order_lag_is_pi(k1 in 1e-6..1e2f64, tau in 0.1..1e3f64, tc in 0.05..500.0f64) {
        let g = MoistureLoopModel { k_x: 0.0, k1, tau, warning: None };
        let ds = direct_synthesis(&g.transfer_function(), &RationalTransferFunction::lag_filter(tc, 1)).unwrap();
        let pi = pi_direct_synthesis(&g, tc).unwrap();
        prop_assert_eq!(pi.tau_i, tau);
        prop_assert!(ds.polynomial_mismatch(&pi.transfer_function()) < 1e-12);
    }

    #[test]
    fn jacobian_of_a_linear_map(entries in prop::collection::vec(-10.0..10.0f64, 9), z in prop::array::uniform3(-100.0..100.0f64)) {
        let m = |i: usize, j: usize| entries[3 * i + j];
        let f = |x: &[f64]| Ok((0..3).map(|i| (0..3).map(|j| m(i, j) * x[j]).sum()).collect());
        let jac = central_jacobian(f, &z, 1e-3, Exec::default()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((jac[(i, j)] - m(i, j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn ise_scales_with_the_square_of_the_error(err in prop::collection::vec(-5.0..5.0f64, 3..50), a in 0.1..10.0f64) {
        let t: Vec<f64> = (0..err.len()).map(|i| i as f64 * 0.1).collect();
        let sp = vec![0.0; err.len()];
        let y: Vec<f64> = err.iter().map(|e| -e).collect();
        let ya: Vec<f64> = y.iter().map(|v| a * v).collect();
        let w = (0.0, *t.last().unwrap());
        let f1 = compute_foms(&t, &y, &sp, w).unwrap();
        let f2 = compute_foms(&t, &ya, &sp, w).unwrap();
        prop_assert!(f1.ise >= 0.0);
        prop_assert!((f2.ise - a * a * f1.ise).abs() <= 1e-12 * f2.ise.max(1e-300) + 1e-300);
    }
}
