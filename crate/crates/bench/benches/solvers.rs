use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use roadheat_core::controller::{plan_step, SearchMode};
use roadheat_core::oracle::{solve_ladder, Anchor};
use roadheat_core::scenario::ThermalParams;
use roadheat_core::thermal::{step_soil_column, ColumnBoundary, ColumnScratch};
use roadheat_core::{
    solve_profile, BoundarySpec, Conductor, Exogenous, Injection, InjectionMap, PlantState,
    Scenario, ShootingOptions,
};

fn cable_load() -> InjectionMap {
    let mut m = InjectionMap::new();
    m.push(Injection::active(1.0, -0.2, 0.02));
    m
}

fn shooting(c: &mut Criterion) {
    let x: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let inj = cable_load();
    let opts = ShootingOptions::default();
    c.bench_function("shooting cable M=200", |b| {
        b.iter(|| {
            solve_profile(
                Conductor::new(0.5, 0.5),
                black_box(&inj),
                BoundarySpec::fed_from_head(0.0, 1.0),
                &x,
                &opts,
            )
            .unwrap()
        })
    });
}

fn ladder(c: &mut Criterion) {
    let inj = cable_load();
    c.bench_function("ladder cable 10^4 cells", |b| {
        b.iter(|| {
            solve_ladder(
                Conductor::new(0.5, 0.5),
                black_box(&inj),
                Anchor::Head,
                (0.0, 1.0),
                1.0,
                10_000,
            )
            .unwrap()
        })
    });
}

fn soil(c: &mut Criterion) {
    let p = ThermalParams::default();
    let mut col = vec![0.0; 21];
    let mut scratch = ColumnScratch::new(21);
    c.bench_function("soil column step, 21 nodes", |b| {
        b.iter(|| {
            step_soil_column(
                black_box(&mut col),
                ColumnBoundary::Robin {
                    coeff: 88.0,
                    bath: 0.0,
                },
                ColumnBoundary::Robin {
                    coeff: 300.0,
                    bath: 1.0,
                },
                p.soil_diffusivity,
                p.soil_conductivity,
                0.005,
                30.0,
                &mut scratch,
            )
        })
    });
}

fn planning(c: &mut Criterion) {
    let exo = Exogenous {
        residential_load: -0.5,
        pv_generation: 1.5,
        solar_flux: 80.0,
        snowfall: 0.1,
        ..Default::default()
    };
    let sc = Scenario::constant(exo, 60.0);
    let plant = PlantState::initial(&sc);
    let opts = ShootingOptions::default();
    let mut group = c.benchmark_group("planning");
    group.sample_size(10);
    group.bench_function("plan_step N=3, 62 rollouts", |b| {
        b.iter(|| plan_step(0, black_box(&plant), &sc, SearchMode::Cascade, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, shooting, ladder, soil, planning);
criterion_main!(benches);
