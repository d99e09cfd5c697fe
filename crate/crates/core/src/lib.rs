//! Coupled electro-thermal simulation of a distribution feeder that supplies
//! a buried road-heating cable, a PV unit and a battery, together with an
//! enumerative receding-horizon switching controller.
//!
//! Electrical quantities are per-unit; thermal quantities are SI except where
//! a field name says otherwise.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod error;
pub mod oracle;
pub mod output;
pub mod plant;
pub mod powerflow;
pub mod scenario;
pub mod thermal;

pub use error::{Error, Result};
pub use plant::{BatteryRoute, BatteryState, ControlWord, PlantState, PvRoute, StepRecord, Switch};
pub use powerflow::{
    couple_line_and_cable, loss_by_power_balance, solve_profile, BoundarySpec, Conductor,
    CoupledFlow, EndCondition, Injection, InjectionMap, ShootingOptions, VoltageProfile,
};
pub use scenario::{load_scenario, Exogenous, Scenario};
pub use thermal::ThermalState;
