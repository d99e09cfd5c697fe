//! Model parameters and exogenous inputs.
//!
//! All electrical quantities are per-unit on `base_apparent_power` and the
//! line reference amplitude; lengths inside the solver are per-unit on
//! `line_length`. Conversions to SI happen only at the edges (thermal bridge,
//! reports).

mod config;
pub mod series;

use serde::{Deserialize, Serialize};

pub use config::{load_scenario, ScenarioFile, SeriesSource, SeriesTable};
pub use series::{load_series, SeriesKind, TimeSeries, UniformSeries};

use crate::error::{Error, Result};

/// Electrical constants of the feeder and heating cable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    #[serde(rename = "base_apparent_power_va")]
    pub base_apparent_power: f64,
    #[serde(rename = "line_length_m")]
    pub line_length: f64,
    #[serde(rename = "ref_phase_rad")]
    pub ref_phase: f64,
    #[serde(rename = "ref_amplitude_v")]
    pub ref_amplitude: f64,
    #[serde(rename = "cable_ref_amplitude_v")]
    pub cable_ref_amplitude: f64,
    pub transformer_ratio: f64,
    #[serde(rename = "base_conductance_m_per_ohm")]
    pub base_conductance: f64,
    #[serde(rename = "base_susceptance_m_per_ohm")]
    pub base_susceptance: f64,
    #[serde(rename = "line_conductance_pu")]
    pub line_conductance: f64,
    #[serde(rename = "line_susceptance_pu")]
    pub line_susceptance: f64,
    #[serde(rename = "cable_conductance_pu")]
    pub cable_conductance: f64,
    #[serde(rename = "cable_susceptance_pu")]
    pub cable_susceptance: f64,
    /// Load density drawn at the switched cable terminal, p.u. (<= 0).
    #[serde(rename = "cable_load_power_pu")]
    pub cable_load_power: f64,
    /// Physical extent of the cable terminal load.
    #[serde(rename = "cable_load_width_m")]
    pub cable_load_width: f64,
    #[serde(rename = "load_position_m")]
    pub load_position: f64,
    #[serde(rename = "pv_position_m")]
    pub pv_position: f64,
    #[serde(rename = "battery_position_m")]
    pub battery_position: f64,
    /// Share of the PV output that reaches the modelled phase when routed to
    /// the line. Charging always receives the full output.
    pub pv_phase_share: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        let v1 = 6600.0 / 3f64.sqrt();
        Self {
            base_apparent_power: 10_000.0,
            line_length: 100.0,
            ref_phase: 0.0,
            ref_amplitude: v1,
            cable_ref_amplitude: 200.0,
            transformer_ratio: 33.0 / 3f64.sqrt(),
            base_conductance: 918.0,
            base_susceptance: 918.0,
            line_conductance: 1.0,
            line_susceptance: 1.0,
            cable_conductance: 0.5,
            cable_susceptance: 0.5,
            cable_load_power: -10.0,
            cable_load_width: 2.0,
            load_position: 25.0,
            pv_position: 50.0,
            battery_position: 75.0,
            pv_phase_share: 1.0 / 3.0,
        }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be > 0 (got {v})")))
            }
        };
        pos("line_length_m", self.line_length)?;
        pos("transformer_ratio", self.transformer_ratio)?;
        pos("base_apparent_power_va", self.base_apparent_power)?;
        pos("ref_amplitude_v", self.ref_amplitude)?;
        pos("line_conductance_pu", self.line_conductance)?;
        pos("line_susceptance_pu", self.line_susceptance)?;
        pos("cable_conductance_pu", self.cable_conductance)?;
        pos("cable_susceptance_pu", self.cable_susceptance)?;
        pos("cable_load_width_m", self.cable_load_width)?;
        if self.cable_load_power > 0.0 {
            return Err(Error::Config("cable_load_power_pu must be <= 0".into()));
        }
        for (n, x) in [
            ("load_position_m", self.load_position),
            ("pv_position_m", self.pv_position),
            ("battery_position_m", self.battery_position),
        ] {
            if !(0.0..=self.line_length).contains(&x) {
                return Err(Error::Config(format!("{n} outside [0, line_length_m]")));
            }
        }
        if self.cable_load_width > self.line_length {
            return Err(Error::Config("cable_load_width_m exceeds the cable".into()));
        }
        if !(0.0..=1.0).contains(&self.pv_phase_share) {
            return Err(Error::Config("pv_phase_share must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Metres to per-unit length.
    pub fn to_pu_length(&self, x_m: f64) -> f64 {
        x_m / self.line_length
    }

    /// Converts a loss density in p.u. power per p.u. length to W/m.
    pub fn loss_density_to_w_per_m(&self, gamma_pu: f64) -> f64 {
        gamma_pu * self.base_apparent_power / self.line_length
    }

    /// Rated power drawn by the cable terminal load while a switch is On.
    /// Used for the purchased-energy and battery ledgers.
    pub fn cable_rated_power(&self) -> f64 {
        -self.cable_load_power
    }
}

/// Heating-cable, soil and snow constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalParams {
    #[serde(rename = "radiative_cooling_w_per_cm")]
    pub radiative_cooling: f64,
    #[serde(rename = "cable_contact_coeff_w_per_m_k")]
    pub cable_contact_coeff: f64,
    #[serde(rename = "cable_heat_capacity_j_per_cm_c")]
    pub cable_heat_capacity: f64,
    #[serde(rename = "soil_conductivity_w_per_m_k")]
    pub soil_conductivity: f64,
    #[serde(rename = "cable_soil_transfer_w_per_m2_k")]
    pub cable_soil_transfer: f64,
    #[serde(rename = "burial_depth_cm")]
    pub burial_depth: f64,
    #[serde(rename = "soil_diffusivity_m2_per_s")]
    pub soil_diffusivity: f64,
    #[serde(rename = "ground_snow_transfer_w_per_m2_k")]
    pub ground_snow_transfer: f64,
    #[serde(rename = "snow_temperature_c")]
    pub snow_temperature: f64,
    #[serde(rename = "snow_density_g_per_cm3")]
    pub snow_density: f64,
    pub unit_conversion: f64,
    #[serde(rename = "initial_snow_mm")]
    pub initial_snow: f64,
    #[serde(rename = "initial_soil_c")]
    pub initial_soil: f64,
    /// Bulk coefficient for sensible flux when no series is supplied.
    #[serde(rename = "sensible_coeff_w_s_per_m3_k")]
    pub sensible_coeff: f64,
    /// Bulk coefficient for latent flux when no series is supplied.
    #[serde(rename = "latent_coeff_w_s_per_m3")]
    pub latent_coeff: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            radiative_cooling: 0.0,
            cable_contact_coeff: 1.04,
            cable_heat_capacity: 18.0,
            soil_conductivity: 0.5,
            cable_soil_transfer: 300.0,
            burial_depth: 10.0,
            soil_diffusivity: 0.008,
            ground_snow_transfer: 88.0,
            snow_temperature: 0.0,
            snow_density: 0.06,
            unit_conversion: 1.792e-4,
            initial_snow: 30.0,
            initial_soil: 0.0,
            sensible_coeff: 2.0,
            latent_coeff: 0.0,
        }
    }
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("cable_contact_coeff_w_per_m_k", self.cable_contact_coeff),
            ("cable_heat_capacity_j_per_cm_c", self.cable_heat_capacity),
            ("soil_conductivity_w_per_m_k", self.soil_conductivity),
            ("cable_soil_transfer_w_per_m2_k", self.cable_soil_transfer),
            ("burial_depth_cm", self.burial_depth),
            ("soil_diffusivity_m2_per_s", self.soil_diffusivity),
            ("ground_snow_transfer_w_per_m2_k", self.ground_snow_transfer),
            ("snow_density_g_per_cm3", self.snow_density),
            ("unit_conversion", self.unit_conversion),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{n} must be > 0 (got {v})")));
            }
        }
        if self.initial_snow < 0.0 {
            return Err(Error::Config("initial_snow_mm must be >= 0".into()));
        }
        Ok(())
    }

    /// Melt rate in mm/min per W/m² of melt flux.
    pub fn melt_rate_per_flux(&self) -> f64 {
        self.unit_conversion / self.snow_density
    }
}

/// Weights of the three evaluation functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub w_loss: f64,
    pub w_fluc: f64,
    pub w_snow: f64,
    pub w_cost: f64,
    pub w_pvfluc: f64,
    pub w_stor1: f64,
    pub w_batteryfluc: f64,
    pub w_stor2: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            w_loss: 4e2,
            w_fluc: 1e7,
            w_snow: 1.2e5,
            w_cost: 8e5,
            w_pvfluc: 1.0,
            w_stor1: 1e-3,
            w_batteryfluc: 1.0,
            w_stor2: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerParams {
    #[serde(rename = "t_mini_min")]
    pub t_mini: f64,
    #[serde(rename = "t_pred_min")]
    pub t_pred: f64,
    pub weights: Weights,
    #[serde(rename = "battery_initial_puh")]
    pub battery_initial: f64,
    #[serde(rename = "battery_reserve_floor_puh")]
    pub battery_reserve_floor: f64,
    #[serde(rename = "battery_capacity_puh")]
    pub battery_capacity: f64,
    /// Upper bound on battery-to-line discharge.
    #[serde(rename = "battery_line_rate_pu")]
    pub battery_line_rate: f64,
    #[serde(rename = "zeta_guard_puh")]
    pub zeta_guard: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            t_mini: 10.0,
            t_pred: 30.0,
            weights: Weights::default(),
            battery_initial: 10.0,
            battery_reserve_floor: 2.0,
            battery_capacity: 20.0,
            battery_line_rate: 10.0,
            zeta_guard: 0.1,
        }
    }
}

impl ControllerParams {
    pub fn horizon_slots(&self) -> usize {
        (self.t_pred / self.t_mini).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_mini > 0.0) || !(self.t_pred > 0.0) {
            return Err(Error::Config(
                "t_mini_min and t_pred_min must be > 0".into(),
            ));
        }
        let n = self.t_pred / self.t_mini;
        if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
            return Err(Error::Config(
                "t_pred_min must be a positive multiple of t_mini_min".into(),
            ));
        }
        let w = &self.weights;
        for v in [
            w.w_loss,
            w.w_fluc,
            w.w_snow,
            w.w_cost,
            w.w_pvfluc,
            w.w_stor1,
            w.w_batteryfluc,
            w.w_stor2,
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config("weights must be finite and >= 0".into()));
            }
        }
        if !(0.0 <= self.battery_reserve_floor
            && self.battery_reserve_floor <= self.battery_capacity)
        {
            return Err(Error::Config(
                "need 0 <= battery_reserve_floor_puh <= battery_capacity_puh".into(),
            ));
        }
        if !(self.zeta_guard > 0.0) {
            return Err(Error::Config("zeta_guard_puh must be > 0".into()));
        }
        if self.battery_line_rate < 0.0 {
            return Err(Error::Config("battery_line_rate_pu must be >= 0".into()));
        }
        Ok(())
    }
}

/// Discretisation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub spatial_cells: usize,
    pub depth_nodes: usize,
    #[serde(rename = "step_s")]
    pub step: f64,
    pub shooting_tol: f64,
    pub max_newton_iter: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            spatial_cells: 200,
            depth_nodes: 21,
            step: 30.0,
            shooting_tol: 1e-10,
            max_newton_iter: 50,
        }
    }
}

impl Numerics {
    pub fn step_min(&self) -> f64 {
        self.step / 60.0
    }

    pub fn validate(&self, ctrl: &ControllerParams) -> Result<()> {
        if self.spatial_cells < 4 {
            return Err(Error::Config("spatial_cells must be >= 4".into()));
        }
        if self.depth_nodes < 3 {
            return Err(Error::Config("depth_nodes must be >= 3".into()));
        }
        let per_slot = ctrl.t_mini * 60.0 / self.step;
        if !(self.step > 0.0) || (per_slot - per_slot.round()).abs() > 1e-9 {
            return Err(Error::Config("step_s must divide t_mini_min evenly".into()));
        }
        Ok(())
    }

    pub fn steps_per_slot(&self, ctrl: &ControllerParams) -> usize {
        (ctrl.t_mini * 60.0 / self.step).round() as usize
    }
}

/// Exogenous inputs on the uniform simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousSeries {
    pub residential_load: UniformSeries,
    pub pv_generation: UniformSeries,
    pub solar_flux: UniformSeries,
    /// `None` selects the bulk-transfer generator.
    pub sensible_flux: Option<UniformSeries>,
    pub latent_flux: Option<UniformSeries>,
    pub snowfall: UniformSeries,
    pub air_temperature: UniformSeries,
    pub wind_speed: UniformSeries,
}

/// Exogenous values at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Exogenous {
    pub residential_load: f64,
    pub pv_generation: f64,
    pub solar_flux: f64,
    pub sensible_flux: f64,
    pub latent_flux: f64,
    pub snowfall: f64,
    pub air_temperature: f64,
    pub wind_speed: f64,
}

impl ExogenousSeries {
    /// Every input held at a constant value over `[0, duration]`.
    pub fn constant(values: Exogenous, duration_min: f64, step_min: f64) -> Self {
        let n = (duration_min / step_min).round() as usize + 1;
        let c = |k, v| UniformSeries::constant(k, 0.0, step_min, n, v);
        Self {
            residential_load: c(SeriesKind::ResidentialLoad, values.residential_load),
            pv_generation: c(SeriesKind::PvGeneration, values.pv_generation),
            solar_flux: c(SeriesKind::SolarFlux, values.solar_flux),
            sensible_flux: Some(c(SeriesKind::SensibleFlux, values.sensible_flux)),
            latent_flux: Some(c(SeriesKind::LatentFlux, values.latent_flux)),
            snowfall: c(SeriesKind::Snowfall, values.snowfall),
            air_temperature: c(SeriesKind::AirTemperature, values.air_temperature),
            wind_speed: c(SeriesKind::WindSpeed, values.wind_speed),
        }
    }

    pub fn end_min(&self) -> f64 {
        self.residential_load.end_min()
    }

    /// Samples every input at `t`. Missing sensible/latent series are
    /// generated from wind and air temperature.
    pub fn at(&self, t_min: f64, thermal: &ThermalParams) -> Exogenous {
        let wind = self.wind_speed.at(t_min);
        let air = self.air_temperature.at(t_min);
        Exogenous {
            residential_load: self.residential_load.at(t_min),
            pv_generation: self.pv_generation.at(t_min),
            solar_flux: self.solar_flux.at(t_min),
            sensible_flux: match &self.sensible_flux {
                Some(s) => s.at(t_min),
                None => thermal.sensible_coeff * wind * (air - thermal.snow_temperature),
            },
            latent_flux: match &self.latent_flux {
                Some(s) => s.at(t_min),
                None => thermal.latent_coeff * wind,
            },
            snowfall: self.snowfall.at(t_min),
            air_temperature: air,
            wind_speed: wind,
        }
    }
}

/// Everything needed to simulate: parameters plus gridded inputs.
/// Immutable once built; shared read-only by concurrent rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: GridParams,
    pub thermal: ThermalParams,
    pub controller: ControllerParams,
    pub numerics: Numerics,
    pub series: ExogenousSeries,
}

impl Scenario {
    pub fn new(
        grid: GridParams,
        thermal: ThermalParams,
        controller: ControllerParams,
        numerics: Numerics,
        series: ExogenousSeries,
    ) -> Result<Self> {
        grid.validate()?;
        thermal.validate()?;
        controller.validate()?;
        numerics.validate(&controller)?;
        Ok(Self {
            grid,
            thermal,
            controller,
            numerics,
            series,
        })
    }

    /// Default parameters with every input held constant.
    pub fn constant(values: Exogenous, duration_min: f64) -> Self {
        let numerics = Numerics::default();
        let series = ExogenousSeries::constant(values, duration_min, numerics.step_min());
        Self::new(
            GridParams::default(),
            ThermalParams::default(),
            ControllerParams::default(),
            numerics,
            series,
        )
        .expect("defaults are valid")
    }

    /// Same scenario with the battery removed (capacity pinned to the floor).
    pub fn without_battery(&self) -> Self {
        let mut s = self.clone();
        s.controller.battery_capacity = s.controller.battery_reserve_floor;
        s.controller.battery_initial = s.controller.battery_reserve_floor;
        s
    }

    /// Spatial grid in p.u. length, `spatial_cells + 1` nodes on [0, 1].
    pub fn x_grid(&self) -> Vec<f64> {
        let m = self.numerics.spatial_cells;
        (0..=m).map(|i| i as f64 / m as f64).collect()
    }
}
