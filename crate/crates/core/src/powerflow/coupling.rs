use serde::Serialize;

use super::{
    loss_density_cable, loss_density_line, solve_profile, BoundarySpec, Conductor, ShootingOptions,
    VoltageProfile,
};
use crate::error::Result;
use crate::plant::{build_injections, ControlWord, Switch};
use crate::scenario::{Exogenous, Scenario};

/// Line and cable solved together for one control word.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledFlow {
    pub line: VoltageProfile,
    pub cable: VoltageProfile,
    /// Line phase and amplitude at the far end (bifurcation point 2).
    pub theta2: f64,
    pub v2: f64,
    /// Active power entering the energized cable at its source end, p.u.
    pub cable_head_power: f64,
}

/// Solves the cable under the switch pattern, then the line with the cable
/// head draw added when Switch 1 is On. The transformer is lossless, so the
/// draw enters the line unchanged at x = 0. With Switch 2 On the cable is fed
/// by the battery and the line sees nothing of it.
pub fn couple_line_and_cable(
    word: &ControlWord,
    scenario: &Scenario,
    exo: &Exogenous,
    opts: &ShootingOptions,
) -> Result<CoupledFlow> {
    let grid = &scenario.grid;
    let x = scenario.x_grid();
    let cell = 1.0 / scenario.numerics.spatial_cells as f64;
    let (mut line_inj, cable_inj) = build_injections(word, exo, scenario, cell);
    let cable_cond = Conductor::new(grid.cable_conductance, grid.cable_susceptance);
    let line_cond = Conductor::new(grid.line_conductance, grid.line_susceptance);

    let (mut cable, head_power) = match word.switch() {
        Switch::Off => (VoltageProfile::de_energized(&x), 0.0),
        Switch::Purchased => {
            let c = solve_profile(
                cable_cond,
                &cable_inj,
                BoundarySpec::fed_from_head(grid.ref_phase, 1.0),
                &x,
                opts,
            )?;
            let p = cable_cond.active_flow(c.v[0], c.s[0], c.w[0]);
            // build_injections appends the nominal head draw last
            if let Some(e) = line_inj.entries.last_mut() {
                e.active = -p;
            }
            (c, p)
        }
        Switch::Battery => {
            let c = solve_profile(
                cable_cond,
                &cable_inj,
                BoundarySpec::fed_from_tail(grid.ref_phase, 1.0),
                &x,
                opts,
            )?;
            let n = c.len() - 1;
            let p = -cable_cond.active_flow(c.v[n], c.s[n], c.w[n]);
            (c, p)
        }
    };
    cable.loss_density = loss_density_cable(&cable, grid.cable_conductance);

    let mut line = solve_profile(
        line_cond,
        &line_inj,
        BoundarySpec::fed_from_head(grid.ref_phase, 1.0),
        &x,
        opts,
    )?;
    line.loss_density = loss_density_line(&line, grid.line_conductance)?;
    let n = line.len() - 1;
    Ok(CoupledFlow {
        theta2: line.theta[n],
        v2: line.v[n],
        line,
        cable,
        cable_head_power: head_power,
    })
}
