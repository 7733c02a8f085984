use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dryer_core::efficiency::{default_axes, surface_sweep, SweepMode, SweepQuantity};
use dryer_core::linearize::{numeric_jacobian, DEFAULT_REL_STEP};
use dryer_core::sim::{
    design_compensators, simulate_many, ClosedLoopPlant, CompensatorSource, Scenario, SimJob, SimOptions,
    TuningOverrides,
};
use dryer_core::steady::{KnownVariables, OperatingPoint};
use dryer_core::{derive_constants, Exec, ModelVariant, PlantParameters};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn surface(c: &mut Criterion) {
    let mut g = c.benchmark_group("surface_sweep");
    for n in [50, 400] {
        let (a1, a2) = default_axes(SweepMode::FixTamb, n);
        for (name, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(name, n * n), &exec, |b, &exec| {
                b.iter(|| surface_sweep(SweepMode::FixTamb, 293.0, &a1, &a2, SweepQuantity::DEtaDTin, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn jacobian(c: &mut Criterion) {
    let k = derive_constants(&PlantParameters::default()).unwrap();
    let v = ModelVariant::PaperVerbatim;
    let op = OperatingPoint::solve(KnownVariables::table_i(), &k, v).unwrap();
    let u = op.inputs();
    let mut g = c.benchmark_group("jacobian_columns");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| numeric_jacobian(&op, &u, &k, v, DEFAULT_REL_STEP, exec).unwrap()));
    }
    g.finish();
}

fn multi_run(c: &mut Criterion) {
    let p = PlantParameters::default();
    let v = ModelVariant::PaperVerbatim;
    let op = OperatingPoint::solve(KnownVariables::table_i(), &derive_constants(&p).unwrap(), v).unwrap();
    let plant = ClosedLoopPlant::new(p, v, &op, None).unwrap();
    let comps =
        design_compensators(&plant, &op, CompensatorSource::Jacobian, &TuningOverrides::default(), Exec::Sequential)
            .unwrap();
    let base = Scenario { horizon_s: 200.0, ..Scenario::published() };
    let jobs: Vec<SimJob> = (0..8)
        .map(|i| {
            let mut s = base.clone();
            for e in &mut s.events {
                e.t_s *= 0.1 * (1.0 + i as f64 * 0.05);
            }
            SimJob { plant: &plant, op: &op, comps: &comps, scenario: s, opts: SimOptions::default() }
        })
        .collect();
    let mut g = c.benchmark_group("multi_run");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| simulate_many(&jobs, exec)));
    }
    g.finish();
}

criterion_group!(benches, surface, jacobian, multi_run);
criterion_main!(benches);
