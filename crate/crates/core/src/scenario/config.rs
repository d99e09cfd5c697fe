use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::series::{load_series, SeriesKind, TimeSeries};
use super::{ControllerParams, ExogenousSeries, GridParams, Numerics, Scenario, ThermalParams};
use crate::error::{Error, Result};

/// One CSV input and the factor applied after parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSource {
    pub path: PathBuf,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesTable {
    /// Origin for ISO-8601 timestamps.
    #[serde(default)]
    pub start: Option<String>,
    /// Length of the gridded window; defaults to the shortest series.
    #[serde(default, rename = "duration_min")]
    pub duration: Option<f64>,
    pub residential_load: SeriesSource,
    pub pv_generation: SeriesSource,
    pub solar_flux: SeriesSource,
    #[serde(default)]
    pub sensible_flux: Option<SeriesSource>,
    #[serde(default)]
    pub latent_flux: Option<SeriesSource>,
    pub snowfall: SeriesSource,
    pub air_temperature: SeriesSource,
    pub wind_speed: SeriesSource,
}

/// On-disk scenario layout (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub thermal: ThermalParams,
    #[serde(default)]
    pub controller: ControllerParams,
    #[serde(default)]
    pub numerics: Numerics,
    pub series: SeriesTable,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a scenario config and every series it references. Series paths are
/// resolved relative to the config file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: ScenarioFile =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    file.build(base)
}

impl ScenarioFile {
    pub fn build(self, base_dir: &Path) -> Result<Scenario> {
        let origin = match &self.series.start {
            Some(s) => Some(
                NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
                    .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
                    .map_err(|e| Error::Config(format!("series.start `{s}`: {e}")))?,
            ),
            None => None,
        };
        let read = |src: &SeriesSource, kind: SeriesKind| -> Result<TimeSeries> {
            let p = base_dir.join(&src.path);
            let f = fs::File::open(&p).map_err(|e| io_err(&p, e))?;
            Ok(load_series(f, kind, &p.display().to_string(), origin)?.rescale(src.scale))
        };
        let t = &self.series;
        let raw = [
            read(&t.residential_load, SeriesKind::ResidentialLoad)?,
            read(&t.pv_generation, SeriesKind::PvGeneration)?,
            read(&t.solar_flux, SeriesKind::SolarFlux)?,
            read(&t.snowfall, SeriesKind::Snowfall)?,
            read(&t.air_temperature, SeriesKind::AirTemperature)?,
            read(&t.wind_speed, SeriesKind::WindSpeed)?,
        ];
        let sensible = t
            .sensible_flux
            .as_ref()
            .map(|s| read(s, SeriesKind::SensibleFlux))
            .transpose()?;
        let latent = t
            .latent_flux
            .as_ref()
            .map(|s| read(s, SeriesKind::LatentFlux))
            .transpose()?;

        let duration = match t.duration {
            Some(d) => d,
            None => raw
                .iter()
                .chain(sensible.iter())
                .chain(latent.iter())
                .map(|s| *s.times_min.last().unwrap())
                .fold(f64::INFINITY, f64::min),
        };
        let step = self.numerics.step_min();
        let grid = |s: &TimeSeries| s.interpolate_to_grid(0.0, duration, step);
        let [load, pv, solar, snow, air, wind] = raw;
        let series = ExogenousSeries {
            residential_load: grid(&load)?,
            pv_generation: grid(&pv)?,
            solar_flux: grid(&solar)?,
            sensible_flux: sensible.as_ref().map(grid).transpose()?,
            latent_flux: latent.as_ref().map(grid).transpose()?,
            snowfall: grid(&snow)?,
            air_temperature: grid(&air)?,
            wind_speed: grid(&wind)?,
        };
        Scenario::new(
            self.grid,
            self.thermal,
            self.controller,
            self.numerics,
            series,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn loads_minimal_config() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        write(d, "load.csv", "time,value\n0,-0.9\n60,-0.9\n");
        write(d, "pv.csv", "time,value\n0,0\n60,3\n");
        write(d, "sun.csv", "time,value\n0,0\n60,100\n");
        write(d, "snow.csv", "time,value\n0,0\n60,0\n");
        write(d, "air.csv", "time,value\n0,-1\n60,1\n");
        write(d, "wind.csv", "time,value\n0,2\n60,2\n");
        write(
            d,
            "s.toml",
            r#"
[grid]
line_length_m = 100.0

[controller]
t_mini_min = 10.0
t_pred_min = 20.0

[controller.weights]
w_cost = 0.0

[series]
residential_load = { path = "load.csv", scale = 0.3333333333333333 }
pv_generation = { path = "pv.csv" }
solar_flux = { path = "sun.csv" }
snowfall = { path = "snow.csv" }
air_temperature = { path = "air.csv" }
wind_speed = { path = "wind.csv" }
"#,
        );
        let sc = load_scenario(&d.join("s.toml")).unwrap();
        assert_eq!(sc.controller.horizon_slots(), 2);
        assert_eq!(sc.controller.weights.w_cost, 0.0);
        assert_eq!(sc.controller.weights.w_fluc, 1e7);
        assert_eq!(sc.series.residential_load.values.len(), 121);
        assert!((sc.series.residential_load.values[0] + 0.3).abs() < 1e-12);
        assert!((sc.series.pv_generation.at(30.0) - 1.5).abs() < 1e-12);
        assert!(sc.series.sensible_flux.is_none());
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.toml");
        fs::write(&p, "[grid]\nline_lenght_m = 3\n").unwrap();
        assert!(matches!(load_scenario(&p), Err(Error::Config(_))));
    }
}
