//! Acceptance checks, one PASS/FAIL line each. Exits non-zero if any fail.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use roadheat_core::controller::{plan_step, run_closed_loop, RunOptions, SearchMode};
use roadheat_core::oracle::suite;
use roadheat_core::scenario::ThermalParams;
use roadheat_core::thermal::step_snow;
use roadheat_core::{
    load_scenario, solve_profile, BatteryRoute, BoundarySpec, Conductor, ControlWord, Exogenous,
    InjectionMap, PlantState, PvRoute, Scenario, ShootingOptions, Switch, ThermalState,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ladder_equivalence() -> Check {
    let checks = suite::run_ladder_suite(200, 10_000).map_err(|e| e.to_string())?;
    let worst = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    let slowest = checks.iter().map(|c| c.solve_ms).fold(0.0, f64::max);
    let failed: Vec<_> = checks
        .iter()
        .filter(|c| !c.passes())
        .map(|c| c.name)
        .collect();
    ensure(
        checks.len() >= 5 && failed.is_empty(),
        format!(
            "{} cases, max rel |dv| {worst:.2e}, slowest solve {slowest:.2} ms, failing {failed:?}",
            checks.len()
        ),
    )
}

fn zero_injection() -> Check {
    let x: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let opts = ShootingOptions::default();
    let mut worst: f64 = 0.0;
    for (cond, bc) in [
        (
            Conductor::new(0.5, 0.5),
            BoundarySpec::fed_from_head(0.0, 1.0),
        ),
        (
            Conductor::new(0.5, 0.5),
            BoundarySpec::fed_from_tail(0.0, 1.0),
        ),
        (
            Conductor::new(4.0, 2.0),
            BoundarySpec::fed_from_head(0.0, 1.0),
        ),
    ] {
        let p =
            solve_profile(cond, &InjectionMap::new(), bc, &x, &opts).map_err(|e| e.to_string())?;
        for i in 0..p.len() {
            worst = worst.max((p.v[i] - 1.0).abs()).max(p.loss_density[i].abs());
        }
    }
    ensure(
        worst <= 1e-10,
        format!("max |v - v1|, |gamma| = {worst:.1e}"),
    )
}

fn thermal_oracles() -> Check {
    let h = suite::run_heat_suite();
    ensure(
        h.passes(),
        format!(
            "steady L∞ {:.1e} °C, series {:.1e} °C, cable step {:.1e} °C",
            h.steady_linf, h.fourier, h.cable_step
        ),
    )
}

fn snow_ledger() -> Check {
    // no heat anywhere: soil, cable and sky all sit at the snow temperature
    let p = ThermalParams::default();
    let mut state = ThermalState::new(11, 11, &p);
    let initial = state.snow[0];
    let dt_s = 30.0;
    let mut fallen = 0.0;
    for k in 0..240 {
        let exo = Exogenous {
            snowfall: 0.2 * ((k % 7) as f64 / 7.0),
            ..Default::default()
        };
        state.step(&[0.0; 11], &exo, &p, dt_s);
        fallen += exo.snowfall * dt_s / 60.0;
    }
    let ledger = state
        .snow
        .iter()
        .map(|h| (h - initial - fallen).abs())
        .fold(0.0, f64::max);

    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let steps = prop::collection::vec(
        (-2e3..2e3f64, -2e3..2e3f64, 0.0..0.5f64, 0.0..10.0f64),
        1000,
    );
    let negative = runner.run(&(0.0..50.0f64, steps), |(h0, steps)| {
        let mut h = h0;
        for (mu1, mu2, f, dt) in steps {
            h = step_snow(h, mu1, mu2, f, &p, dt);
            prop_assert!(h >= 0.0 && h.is_finite());
        }
        Ok(())
    });
    ensure(
        ledger <= 1e-12 && negative.is_ok(),
        format!(
            "ledger error {ledger:.1e} mm; 10^6 random steps non-negative: {}",
            negative.is_ok()
        ),
    )
}

fn purchased_energy() -> Check {
    let sc = Scenario::constant(Exogenous::default(), 120.0);
    let opts = ShootingOptions::default();
    let on = ControlWord::new(Switch::Purchased, PvRoute::Line, BatteryRoute::Idle).unwrap();
    let mut got = Vec::new();
    for minutes in [90.0, 50.0, 10.0] {
        let mut plant = PlantState::initial(&sc);
        let steps = (minutes / sc.numerics.step_min()).round() as usize;
        let exo = sc.series.at(0.0, &sc.thermal);
        for _ in 0..steps {
            plant
                .advance(on, &sc, &exo, &opts)
                .map_err(|e| e.to_string())?;
        }
        got.push(plant.purchased);
    }
    let want = [15.0, 25.0 / 3.0, 5.0 / 3.0];
    let exact = got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 1e-12);
    let shown: Vec<String> = got.iter().map(|g| format!("{g:.1}")).collect();
    ensure(
        exact && shown == ["15.0", "8.3", "1.7"],
        format!("{:.6} / {:.6} / {:.6} p.u.·h", got[0], got[1], got[2]),
    )
}

fn load_case(name: &str) -> Result<Scenario, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .join("scenario.toml");
    load_scenario(&path).map_err(|e| e.to_string())
}

fn battery_ledger() -> Check {
    let sc = load_case("case2_evening")?;
    let out = run_closed_loop(
        &sc,
        120.0,
        RunOptions::default(),
        &ShootingOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let b = &out.last;
    let closure = (out.initial.battery.energy + b.charged_total
        - b.discharged_total
        - b.clipped_total
        - b.battery.energy)
        .abs();
    let (floor, cap) = (
        sc.controller.battery_reserve_floor,
        sc.controller.battery_capacity,
    );
    let in_bounds = out
        .records
        .iter()
        .all(|r| r.battery_after >= floor && r.battery_after <= cap);
    ensure(
        closure <= 1e-9 && in_bounds,
        format!(
            "closure {closure:.1e} p.u.·h, bounds [{floor}, {cap}] held: {in_bounds}, final {:.4}",
            b.battery.energy
        ),
    )
}

fn cascade_vs_exhaustive() -> Check {
    let reports = suite::run_enumeration_suite(3).map_err(|e| e.to_string())?;
    let agree = reports.iter().all(|r| r.all_agree());
    let joint_ok = reports.iter().all(|r| r.joint_j <= r.cascade_j);
    let gaps: Vec<String> = reports
        .iter()
        .map(|r| format!("{:.3e}", r.cascade_j - r.joint_j))
        .collect();
    ensure(
        agree && joint_ok,
        format!(
            "{} slots, stage argmins identical: {agree}, cascade J − joint J = [{}]",
            reports.len(),
            gaps.join(", ")
        ),
    )
}

// Regression values of the bundled scenarios, p.u.·h.
const CASE1_WITH: f64 = 6.66666666666666;
const CASE1_WITHOUT: f64 = 8.333333333333323;
const CASE2_WITH: f64 = 1.666666666666666;
const CASE2_WITHOUT: f64 = 10.000000000000002;

fn battery_benefit() -> Check {
    let opts = ShootingOptions::default();
    let mut got = Vec::new();
    let mut loop_secs: f64 = 0.0;
    for name in ["case1_morning", "case2_evening"] {
        let sc = load_case(name)?;
        for variant in [sc.clone(), sc.without_battery()] {
            let t = Instant::now();
            let out = run_closed_loop(&variant, 120.0, RunOptions::default(), &opts)
                .map_err(|e| e.to_string())?;
            loop_secs = loop_secs.max(t.elapsed().as_secs_f64());
            got.push(out.last.purchased);
        }
    }
    let pinned = [CASE1_WITH, CASE1_WITHOUT, CASE2_WITH, CASE2_WITHOUT];
    ensure(
        got[0] < got[1] && got[2] < got[3] && got == pinned,
        format!(
            "case1 {:?} < {:?}, case2 {:?} < {:?} p.u.·h (slowest 120 min loop {loop_secs:.1} s)",
            got[0], got[1], got[2], got[3]
        ),
    )
}

fn planning_time() -> Check {
    let exo = Exogenous {
        residential_load: -1.0,
        pv_generation: 1.0,
        solar_flux: 50.0,
        snowfall: 0.1,
        ..Default::default()
    };
    let sc = Scenario::constant(exo, 150.0);
    let opts = ShootingOptions::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .map_err(|e| e.to_string())?;
    let (plan_secs, rollouts, loop_secs) = pool.install(|| -> Result<_, String> {
        let plant = PlantState::initial(&sc);
        let t = Instant::now();
        let plan =
            plan_step(0, &plant, &sc, SearchMode::Cascade, &opts).map_err(|e| e.to_string())?;
        let plan_secs = t.elapsed().as_secs_f64();
        let t = Instant::now();
        run_closed_loop(&sc, 120.0, RunOptions::default(), &opts).map_err(|e| e.to_string())?;
        Ok((plan_secs, plan.rollouts, t.elapsed().as_secs_f64()))
    })?;
    ensure(
        sc.controller.horizon_slots() == 3 && plan_secs <= 60.0 && loop_secs <= 720.0,
        format!("N=3, {rollouts} rollouts in {plan_secs:.3} s; 120 min loop in {loop_secs:.1} s (4 threads)"),
    )
}

fn scale_invariance() -> Check {
    let reduced = suite::reduced_scenario();
    let opts = ShootingOptions::default();
    // advance a little so the battery and snow are off their initial values
    let mut plant = PlantState::initial(&reduced);
    let exo = reduced.series.at(0.0, &reduced.thermal);
    for _ in 0..10 {
        plant
            .advance(ControlWord::OFF, &reduced, &exo, &opts)
            .map_err(|e| e.to_string())?;
    }
    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    });
    let exponent = -3.0..8.0f64;
    let weights = prop::collection::vec(exponent, 8);
    let result = runner.run(&(weights, -3.0..3.0f64), |(e, c)| {
        let mut sc = reduced.clone();
        let w = &mut sc.controller.weights;
        let draw = |i: usize| 10f64.powf(e[i]);
        (w.w_loss, w.w_fluc, w.w_snow, w.w_cost) = (draw(0), draw(1), draw(2), draw(3));
        (w.w_pvfluc, w.w_stor1, w.w_batteryfluc, w.w_stor2) = (draw(4), draw(5), draw(6), draw(7));
        let base = plan_step(0, &plant, &sc, SearchMode::Cascade, &opts).unwrap();
        let c = 10f64.powf(c);
        let w = &mut sc.controller.weights;
        for v in [
            &mut w.w_loss,
            &mut w.w_fluc,
            &mut w.w_snow,
            &mut w.w_cost,
            &mut w.w_pvfluc,
            &mut w.w_stor1,
            &mut w.w_batteryfluc,
            &mut w.w_stor2,
        ] {
            *v *= c;
        }
        let scaled = plan_step(0, &plant, &sc, SearchMode::Cascade, &opts).unwrap();
        prop_assert_eq!(&base.pattern, &scaled.pattern);
        Ok(())
    });
    ensure(
        result.is_ok(),
        match result {
            Ok(()) => "100 weight draws, rescaled optimum unchanged".into(),
            Err(e) => format!("counterexample: {e}"),
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("power flow matches the ladder circuit", ladder_equivalence),
        ("zero injection is a fixed point", zero_injection),
        ("thermal solvers match closed forms", thermal_oracles),
        (
            "snow ledger closes and depth stays non-negative",
            snow_ledger,
        ),
        ("purchased energy 15 / 8.3 / 1.7", purchased_energy),
        ("battery ledger closes within bounds", battery_ledger),
        (
            "cascade stages match exhaustive search",
            cascade_vs_exhaustive,
        ),
        ("battery lowers purchased energy", battery_benefit),
        ("planning step and closed loop within budget", planning_time),
        ("argmin invariant under weight rescaling", scale_invariance),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (verdict, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{verdict} {:>2} {name}: {detail}", i + 1);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
