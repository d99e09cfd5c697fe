//! Discrete control state, battery accounting and the coupled per-step
//! update of the whole system.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::powerflow::{
    couple_line_and_cable, trapezoid, CoupledFlow, Injection, InjectionMap, ShootingOptions,
};
use crate::scenario::{ControllerParams, Exogenous, GridParams, Scenario};
use crate::thermal::ThermalState;

/// Heating-cable feed. Discriminants are the pattern digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Switch {
    Off = 0,
    /// Switch 1: cable fed from the line; energy is purchased.
    Purchased = 1,
    /// Switch 2: cable fed from the battery.
    Battery = 2,
}

/// Destination of the PV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PvRoute {
    Battery = 0,
    Line = 1,
}

/// Destination of battery discharge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BatteryRoute {
    Idle = 0,
    Line = 1,
    Cable = 2,
}

impl Switch {
    pub const ALL: [Switch; 3] = [Switch::Off, Switch::Purchased, Switch::Battery];

    pub fn from_digit(d: u8) -> Option<Self> {
        Self::ALL.get(d as usize).copied()
    }
}

impl PvRoute {
    pub const ALL: [PvRoute; 2] = [PvRoute::Battery, PvRoute::Line];

    pub fn from_digit(d: u8) -> Option<Self> {
        Self::ALL.get(d as usize).copied()
    }
}

impl BatteryRoute {
    pub const ALL: [BatteryRoute; 3] =
        [BatteryRoute::Idle, BatteryRoute::Line, BatteryRoute::Cable];

    pub fn from_digit(d: u8) -> Option<Self> {
        Self::ALL.get(d as usize).copied()
    }

    /// The battery route implied by a switch when nothing else is chosen.
    pub fn forced_by(switch: Switch) -> Self {
        if switch == Switch::Battery {
            BatteryRoute::Cable
        } else {
            BatteryRoute::Idle
        }
    }
}

/// One slot's joint decision. Only coupling-consistent words can be built:
/// the cable is fed by the battery exactly when the battery discharges into
/// the cable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ControlWord {
    switch: Switch,
    pv: PvRoute,
    battery: BatteryRoute,
}

impl ControlWord {
    pub const OFF: ControlWord = ControlWord {
        switch: Switch::Off,
        pv: PvRoute::Line,
        battery: BatteryRoute::Idle,
    };

    pub fn new(switch: Switch, pv: PvRoute, battery: BatteryRoute) -> Result<Self> {
        if (switch == Switch::Battery) != (battery == BatteryRoute::Cable) {
            return Err(Error::InfeasibleWord(format!(
                "switch {} with battery route {}",
                switch as u8, battery as u8
            )));
        }
        Ok(Self {
            switch,
            pv,
            battery,
        })
    }

    pub fn switch(&self) -> Switch {
        self.switch
    }

    pub fn pv(&self) -> PvRoute {
        self.pv
    }

    pub fn battery(&self) -> BatteryRoute {
        self.battery
    }

    /// All ten coupling-consistent words, switch-major.
    pub fn all() -> Vec<ControlWord> {
        let mut out = Vec::with_capacity(10);
        for s in Switch::ALL {
            for p in PvRoute::ALL {
                for b in BatteryRoute::ALL {
                    if let Ok(w) = ControlWord::new(s, p, b) {
                        out.push(w);
                    }
                }
            }
        }
        out
    }

    /// Worst-case battery discharge power over a slot, p.u.
    pub fn worst_case_discharge(&self, grid: &GridParams, ctrl: &ControllerParams) -> f64 {
        match self.battery {
            BatteryRoute::Idle => 0.0,
            BatteryRoute::Line => ctrl.battery_line_rate,
            BatteryRoute::Cable => grid.cable_rated_power(),
        }
    }
}

impl fmt::Display for ControlWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            self.switch as u8, self.pv as u8, self.battery as u8
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatteryState {
    /// Stored energy, p.u.·h.
    pub energy: f64,
    pub floor: f64,
    pub capacity: f64,
}

impl BatteryState {
    pub fn from_params(ctrl: &ControllerParams) -> Self {
        Self {
            energy: ctrl.battery_initial,
            floor: ctrl.battery_reserve_floor,
            capacity: ctrl.battery_capacity,
        }
    }

    /// A battery whose capacity equals its floor can neither store nor
    /// deliver energy.
    pub fn is_disabled(&self) -> bool {
        self.capacity <= self.floor
    }
}

/// Words usable for the next slot of `slot_h` hours. Words whose worst-case
/// discharge would take the battery below its floor are dropped, as is
/// charging a disabled battery.
pub fn feasible_words(
    battery: &BatteryState,
    grid: &GridParams,
    ctrl: &ControllerParams,
    slot_h: f64,
) -> Vec<ControlWord> {
    ControlWord::all()
        .into_iter()
        .filter(|w| word_is_feasible(w, battery, grid, ctrl, slot_h))
        .collect()
}

pub fn word_is_feasible(
    word: &ControlWord,
    battery: &BatteryState,
    grid: &GridParams,
    ctrl: &ControllerParams,
    slot_h: f64,
) -> bool {
    if battery.is_disabled() && (word.pv == PvRoute::Battery || word.battery != BatteryRoute::Idle)
    {
        return false;
    }
    let drawn = word.worst_case_discharge(grid, ctrl) * slot_h;
    drawn == 0.0 || battery.energy - drawn >= battery.floor - 1e-12
}

/// Battery discharge power into the line for the given load, p.u.
pub fn line_discharge(exo: &Exogenous, ctrl: &ControllerParams) -> f64 {
    exo.residential_load.abs().min(ctrl.battery_line_rate)
}

/// Injection maps (line, cable) on a per-unit grid with cell width `cell`.
///
/// The line carries the residential load, PV when routed to the line, the
/// battery when discharging to the line and the cable head draw when
/// Switch 1 is On. The head draw entered here is nominal; the coupled solve
/// replaces it with the solved cable head power.
pub fn build_injections(
    word: &ControlWord,
    exo: &Exogenous,
    scenario: &Scenario,
    cell: f64,
) -> (InjectionMap, InjectionMap) {
    let grid = &scenario.grid;
    let ctrl = &scenario.controller;
    let mut line = InjectionMap::new();
    let mut cable = InjectionMap::new();
    if exo.residential_load != 0.0 {
        line.push(Injection::active(
            grid.to_pu_length(grid.load_position),
            exo.residential_load,
            cell,
        ));
    }
    if word.pv == PvRoute::Line && exo.pv_generation != 0.0 {
        line.push(Injection::active(
            grid.to_pu_length(grid.pv_position),
            exo.pv_generation * grid.pv_phase_share,
            cell,
        ));
    }
    if word.battery == BatteryRoute::Line {
        let p = line_discharge(exo, ctrl);
        if p > 0.0 {
            line.push(Injection::active(
                grid.to_pu_length(grid.battery_position),
                p,
                cell,
            ));
        }
    }
    let width = grid.to_pu_length(grid.cable_load_width);
    let load_total = grid.cable_load_power * width;
    match word.switch {
        Switch::Off => {}
        Switch::Purchased => {
            line.push(Injection::active(0.0, load_total, width));
            cable.push(Injection::active(1.0, load_total, width));
        }
        Switch::Battery => cable.push(Injection::active(0.0, load_total, width)),
    }
    (line, cable)
}

/// Energy moved through the battery during one step, p.u.·h.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BatteryFlows {
    pub charged: f64,
    pub discharged: f64,
    /// Positive when energy was spilled at capacity, negative when a
    /// shortfall below the floor was cut off.
    pub clipped: f64,
}

/// Lossless integration over `dt_h` hours followed by clipping to
/// `[floor, capacity]`.
pub fn step_battery(
    battery: &BatteryState,
    word: &ControlWord,
    exo: &Exogenous,
    grid: &GridParams,
    ctrl: &ControllerParams,
    dt_h: f64,
) -> (BatteryState, BatteryFlows) {
    let charge = if word.pv == PvRoute::Battery {
        exo.pv_generation
    } else {
        0.0
    };
    let discharge = match word.battery {
        BatteryRoute::Idle => 0.0,
        BatteryRoute::Line => line_discharge(exo, ctrl),
        BatteryRoute::Cable => grid.cable_rated_power(),
    };
    let charged = charge * dt_h;
    let discharged = discharge * dt_h;
    let raw = battery.energy + charged - discharged;
    let energy = raw.clamp(battery.floor, battery.capacity.max(battery.floor));
    let clipped = raw - energy;
    if clipped != 0.0 {
        log::debug!("battery clipped by {clipped:.3e} p.u.·h (raw {raw:.6})");
    }
    (
        BatteryState { energy, ..*battery },
        BatteryFlows {
            charged,
            discharged,
            clipped,
        },
    )
}

/// What happened during one simulation step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    /// Start of the step, min.
    pub t_min: f64,
    pub dt_min: f64,
    pub word: ControlWord,
    /// ∫Γ dx over line and cable times the step length, W·min.
    pub p_loss: f64,
    /// Largest |v_e − v_1| on the line at the start of the step, V.
    pub max_vdev: f64,
    /// Time integral of ∫h dx over the step (trapezoid), mm·m·min.
    pub s_snow: f64,
    /// Rated cable power times step length while Switch 1 is On, p.u.·min.
    pub m_cost: f64,
    pub battery_before: f64,
    pub battery_after: f64,
    pub flows: BatteryFlows,
    /// ∫h dx after the step, mm·m.
    pub snow_area: f64,
    pub purchased_after: f64,
}

/// Full simulation state. Cloned for every candidate rollout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantState {
    pub control: ControlWord,
    pub battery: BatteryState,
    pub thermal: ThermalState,
    pub t_min: f64,
    /// Purchased energy, p.u.·h.
    pub purchased: f64,
    pub loss_integral: f64,
    pub snow_integral: f64,
    pub charged_total: f64,
    pub discharged_total: f64,
    pub clipped_total: f64,
}

impl PlantState {
    pub fn initial(scenario: &Scenario) -> Self {
        Self {
            control: ControlWord::OFF,
            battery: BatteryState::from_params(&scenario.controller),
            thermal: ThermalState::new(
                scenario.numerics.spatial_cells + 1,
                scenario.numerics.depth_nodes,
                &scenario.thermal,
            ),
            t_min: 0.0,
            purchased: 0.0,
            loss_integral: 0.0,
            snow_integral: 0.0,
            charged_total: 0.0,
            discharged_total: 0.0,
            clipped_total: 0.0,
        }
    }

    /// ∫h dx in mm·m.
    pub fn snow_area(&self, x_m: &[f64]) -> f64 {
        trapezoid(x_m, &self.thermal.snow)
    }

    /// Solves the network for `word` under `exo` and advances one step.
    pub fn advance(
        &mut self,
        word: ControlWord,
        scenario: &Scenario,
        exo: &Exogenous,
        opts: &ShootingOptions,
    ) -> Result<StepRecord> {
        let flow = couple_line_and_cable(&word, scenario, exo, opts).map_err(|e| Error::Step {
            t_min: self.t_min,
            source: Box::new(e),
        })?;
        Ok(self.advance_with_flow(word, scenario, exo, &flow))
    }

    /// Advances one step using an already solved network state. Used by
    /// rollouts that hold the inputs constant and so reuse one solve.
    pub fn advance_with_flow(
        &mut self,
        word: ControlWord,
        scenario: &Scenario,
        exo: &Exogenous,
        flow: &CoupledFlow,
    ) -> StepRecord {
        let grid = &scenario.grid;
        let dt_s = scenario.numerics.step;
        let dt_min = dt_s / 60.0;
        let x_m: Vec<f64> = flow.line.x.iter().map(|x| x * grid.line_length).collect();

        let to_w = |g: &f64| grid.loss_density_to_w_per_m(*g);
        let line_w: Vec<f64> = flow.line.loss_density.iter().map(to_w).collect();
        let cable_w: Vec<f64> = flow.cable.loss_density.iter().map(to_w).collect();
        let p_loss = (trapezoid(&x_m, &line_w) + trapezoid(&x_m, &cable_w)) * dt_min;
        let max_vdev = flow.line.max_deviation(1.0) * grid.ref_amplitude;

        let area_before = self.snow_area(&x_m);
        self.thermal.step(&cable_w, exo, &scenario.thermal, dt_s);
        let area_after = self.snow_area(&x_m);
        let s_snow = 0.5 * (area_before + area_after) * dt_min;

        let battery_before = self.battery.energy;
        let (battery, flows) = step_battery(
            &self.battery,
            &word,
            exo,
            grid,
            &scenario.controller,
            dt_min / 60.0,
        );
        self.battery = battery;
        self.charged_total += flows.charged;
        self.discharged_total += flows.discharged;
        self.clipped_total += flows.clipped;

        let m_cost = if word.switch == Switch::Purchased {
            grid.cable_rated_power() * dt_min
        } else {
            0.0
        };
        self.purchased += m_cost / 60.0;
        self.loss_integral += p_loss;
        self.snow_integral += s_snow;
        let record = StepRecord {
            t_min: self.t_min,
            dt_min,
            word,
            p_loss,
            max_vdev,
            s_snow,
            m_cost,
            battery_before,
            battery_after: self.battery.energy,
            flows,
            snow_area: area_after,
            purchased_after: self.purchased,
        };
        self.control = word;
        self.t_min += dt_min;
        record
    }
}
