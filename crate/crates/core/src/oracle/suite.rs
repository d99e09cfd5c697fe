//! Fixed oracle configurations and thresholds shared by the command line and
//! the acceptance tests.

use std::time::Instant;

use serde::Serialize;

use super::enumeration::{check_enumeration, EnumerationReport};
use super::heat;
use super::ladder::{max_relative_error, solve_ladder, Anchor};
use crate::controller::{plan_step, SearchMode};
use crate::error::Result;
use crate::plant::PlantState;
use crate::powerflow::{
    loss_by_power_balance, solve_profile, BoundarySpec, Conductor, Injection, InjectionMap,
    ShootingOptions,
};
use crate::scenario::{Exogenous, GridParams, Scenario, ThermalParams};

pub const LADDER_TOL: f64 = 1e-4;
pub const SOLVE_BUDGET_MS: f64 = 50.0;
pub const STEADY_TOL: f64 = 1e-6;
pub const FOURIER_TOL: f64 = 1e-4;
pub const CABLE_STEP_TOL: f64 = 1e-10;

pub struct LadderCase {
    pub name: &'static str,
    pub cond: Conductor,
    pub injections: InjectionMap,
    pub anchor: Anchor,
}

/// Line and cable configurations at the default constants.
pub fn ladder_cases(grid: &GridParams, cells: usize) -> Vec<LadderCase> {
    let cell = 1.0 / cells as f64;
    let width = grid.to_pu_length(grid.cable_load_width);
    let cable_load = grid.cable_load_power * width;
    let cable = Conductor::new(grid.cable_conductance, grid.cable_susceptance);
    let line = Conductor::new(grid.line_conductance, grid.line_susceptance);
    let at = |x_m: f64| grid.to_pu_length(x_m);
    let map = |entries: Vec<Injection>| InjectionMap { entries };
    vec![
        LadderCase {
            name: "cable, switch 1",
            cond: cable,
            injections: map(vec![Injection::active(1.0, cable_load, width)]),
            anchor: Anchor::Head,
        },
        LadderCase {
            name: "cable, switch 2",
            cond: cable,
            injections: map(vec![Injection::active(0.0, cable_load, width)]),
            anchor: Anchor::Tail,
        },
        LadderCase {
            name: "line, load only",
            cond: line,
            injections: map(vec![Injection::active(at(grid.load_position), -0.6, cell)]),
            anchor: Anchor::Head,
        },
        LadderCase {
            name: "line, load + pv + battery",
            cond: line,
            injections: map(vec![
                Injection::active(at(grid.load_position), -0.6, cell),
                Injection::active(at(grid.pv_position), 1.0, cell),
                Injection::active(at(grid.battery_position), 0.6, cell),
            ]),
            anchor: Anchor::Head,
        },
        LadderCase {
            name: "line, switch 1 draw + load",
            cond: line,
            injections: map(vec![
                Injection::active(0.0, -0.3, width),
                Injection::active(at(grid.load_position), -0.5, cell),
                Injection::active(at(grid.pv_position), 0.2, cell),
            ]),
            anchor: Anchor::Head,
        },
        LadderCase {
            name: "line, reactive load",
            cond: line,
            injections: map(vec![Injection {
                position: at(grid.load_position),
                active: -0.4,
                reactive: -0.2,
                width: cell,
            }]),
            anchor: Anchor::Head,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderCheck {
    pub name: &'static str,
    /// max |v_shoot − v_ladder| / v_1 over the solver nodes.
    pub max_rel_error: f64,
    /// Relative difference of the single-phase Joule loss.
    pub loss_rel_error: f64,
    /// Wall time of the shooting solve, ms.
    pub solve_ms: f64,
}

impl LadderCheck {
    pub fn passes(&self) -> bool {
        self.max_rel_error <= LADDER_TOL
            && self.loss_rel_error <= LADDER_TOL
            && self.solve_ms <= SOLVE_BUDGET_MS
    }
}

/// Shooting at `cells` against the ladder at `ladder_cells` for every case.
pub fn run_ladder_suite(cells: usize, ladder_cells: usize) -> Result<Vec<LadderCheck>> {
    let grid = GridParams::default();
    let x: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
    let opts = ShootingOptions::default();
    ladder_cases(&grid, cells)
        .into_iter()
        .map(|case| {
            let boundary = match case.anchor {
                Anchor::Head => BoundarySpec::fed_from_head(0.0, 1.0),
                Anchor::Tail => BoundarySpec::fed_from_tail(0.0, 1.0),
            };
            // best of a few runs so a cold cache does not dominate
            let mut solve_ms = f64::INFINITY;
            let mut profile = None;
            for _ in 0..3 {
                let t = Instant::now();
                let p = solve_profile(case.cond, &case.injections, boundary, &x, &opts)?;
                solve_ms = solve_ms.min(t.elapsed().as_secs_f64() * 1e3);
                profile = Some(p);
            }
            let profile = profile.unwrap();
            let ladder = solve_ladder(
                case.cond,
                &case.injections,
                case.anchor,
                (0.0, 1.0),
                1.0,
                ladder_cells,
            )?;
            let loss = loss_by_power_balance(case.cond, &profile, &case.injections);
            let loss_rel_error = if ladder.joule_loss == 0.0 {
                loss.abs()
            } else {
                (loss - ladder.joule_loss).abs() / ladder.joule_loss
            };
            Ok(LadderCheck {
                name: case.name,
                max_rel_error: max_relative_error(&profile.x, &profile.v, &ladder, 1.0),
                loss_rel_error,
                solve_ms,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatChecks {
    /// L∞ error of the marched two-Robin column against the analytic
    /// steady state, °C.
    pub steady_linf: f64,
    /// Mid-column error against the 50-term series, °C.
    pub fourier: f64,
    /// One 30 s cable step against the exponential, °C.
    pub cable_step: f64,
}

impl HeatChecks {
    pub fn passes(&self) -> bool {
        self.steady_linf <= STEADY_TOL
            && self.fourier <= FOURIER_TOL
            && self.cable_step <= CABLE_STEP_TOL
    }
}

pub fn run_heat_suite() -> HeatChecks {
    let p = ThermalParams::default();
    // the series case uses a slow soil so the transient is resolved
    HeatChecks {
        steady_linf: heat::steady_state_error(&p, 21, 5.0),
        fourier: heat::fourier_error(5e-7, 0.1, 101, 0.1, 600.0),
        cable_step: heat::cable_step_error(&p, 100.0 * p.cable_contact_coeff / 1e-2, 30.0),
    }
}

/// Two-slot horizon on a coarse grid with snow, PV and a half-full battery.
pub fn reduced_scenario() -> Scenario {
    let exo = Exogenous {
        residential_load: -0.5,
        pv_generation: 1.5,
        solar_flux: 80.0,
        sensible_flux: -10.0,
        latent_flux: 0.0,
        snowfall: 0.1,
        air_temperature: -2.0,
        wind_speed: 2.0,
    };
    let mut sc = Scenario::constant(exo, 60.0);
    sc.controller.t_pred = 20.0;
    sc.numerics.spatial_cells = 50;
    sc.numerics.depth_nodes = 11;
    sc
}

/// Checks the cascade against exhaustive enumeration at the start of each
/// of `slots` consecutive closed-loop slots.
pub fn run_enumeration_suite(slots: usize) -> Result<Vec<EnumerationReport>> {
    let sc = reduced_scenario();
    let opts = ShootingOptions::default();
    let mut plant = PlantState::initial(&sc);
    let steps = sc.numerics.steps_per_slot(&sc.controller);
    let mut out = Vec::with_capacity(slots);
    for k in 0..slots {
        out.push(check_enumeration(&sc, &plant, &opts)?);
        let word = plan_step(k, &plant, &sc, SearchMode::Cascade, &opts)?.word;
        for _ in 0..steps {
            let exo = sc.series.at(plant.t_min, &sc.thermal);
            plant.advance(word, &sc, &exo, &opts)?;
        }
    }
    Ok(out)
}
