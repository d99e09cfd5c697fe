//! Exogenous time series: CSV ingestion, rescaling, resampling onto the
//! simulation grid and the hold-constant predictor used inside the planner.

use std::io::Read;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a series measures. Determines the sign check applied on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// Residential consumption at the load bus, p.u. (non-positive).
    ResidentialLoad,
    /// PV output, p.u. (non-negative).
    PvGeneration,
    /// Net radiation flux, W/m².
    SolarFlux,
    /// Sensible heat flux, W/m².
    SensibleFlux,
    /// Latent heat flux, W/m².
    LatentFlux,
    /// Snowfall, mm/min (non-negative).
    Snowfall,
    /// Air temperature, °C.
    AirTemperature,
    /// Wind speed, m/s (non-negative).
    WindSpeed,
}

impl SeriesKind {
    fn check(self, v: f64) -> std::result::Result<(), &'static str> {
        match self {
            SeriesKind::ResidentialLoad if v > 0.0 => Err("residential load must be <= 0"),
            SeriesKind::PvGeneration if v < 0.0 => Err("pv generation must be >= 0"),
            SeriesKind::Snowfall if v < 0.0 => Err("snowfall must be >= 0"),
            SeriesKind::WindSpeed if v < 0.0 => Err("wind speed must be >= 0"),
            _ => Ok(()),
        }
    }
}

/// A series at its original (possibly irregular) sampling. Times in minutes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub kind: SeriesKind,
    pub times_min: Vec<f64>,
    pub values: Vec<f64>,
}

enum Stamp {
    Minutes(f64),
    Absolute(NaiveDateTime),
}

fn parse_stamp(s: &str) -> Option<Stamp> {
    if let Ok(m) = s.parse::<f64>() {
        return m.is_finite().then_some(Stamp::Minutes(m));
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(Stamp::Absolute(dt.naive_utc()));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(Stamp::Absolute(dt));
        }
    }
    None
}

/// Parses a two-column `time,value` CSV.
///
/// Times are either minutes from scenario start or ISO-8601 timestamps. For
/// timestamps, `origin` fixes minute zero; without it the first row does.
/// `name` only appears in error messages.
pub fn load_series<R: Read>(
    source: R,
    kind: SeriesKind,
    name: &str,
    origin: Option<NaiveDateTime>,
) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let perr = |line: usize, msg: String| Error::Parse {
        path: name.to_string(),
        line,
        msg,
    };

    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "time" || &headers[1] != "value" {
        return Err(perr(
            1,
            format!(
                "expected header `time,value`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut origin = origin;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| perr(line, e.to_string()))?;
        if rec.len() != 2 {
            return Err(perr(
                line,
                format!("expected 2 fields, found {}", rec.len()),
            ));
        }
        let t = match parse_stamp(&rec[0]) {
            Some(Stamp::Minutes(m)) => m,
            Some(Stamp::Absolute(dt)) => {
                let o = *origin.get_or_insert(dt);
                (dt - o).num_milliseconds() as f64 / 60_000.0
            }
            None => return Err(perr(line, format!("unparseable time `{}`", &rec[0]))),
        };
        let v: f64 = rec[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| perr(line, format!("unparseable value `{}`", &rec[1])))?;
        kind.check(v).map_err(|m| perr(line, m.to_string()))?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::NonMonotone {
                    path: name.to_string(),
                    line,
                });
            }
        }
        times.push(t);
        values.push(v);
    }
    if times.is_empty() {
        return Err(perr(1, "no data rows".into()));
    }
    Ok(TimeSeries {
        kind,
        times_min: times,
        values,
    })
}

impl TimeSeries {
    pub fn new(kind: SeriesKind, times_min: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times_min.len(), values.len());
        Self {
            kind,
            times_min,
            values,
        }
    }

    /// Multiplies every value by `factor`, keeping the time axis.
    pub fn rescale(mut self, factor: f64) -> Self {
        for v in &mut self.values {
            *v *= factor;
        }
        self
    }

    /// Piecewise-linear resampling onto `t0, t0+step, ..., t1` (minutes).
    pub fn interpolate_to_grid(&self, t0: f64, t1: f64, step_min: f64) -> Result<UniformSeries> {
        let lo = self.times_min[0];
        let hi = *self.times_min.last().unwrap();
        let eps = 1e-9 * step_min.max(1.0);
        if t0 < lo - eps || t1 > hi + eps || (self.times_min.len() < 2 && t1 > t0) {
            return Err(Error::Extrapolation {
                start: t0,
                end: t1,
                lo,
                hi,
            });
        }
        let n = ((t1 - t0) / step_min).round() as usize + 1;
        let mut out = Vec::with_capacity(n);
        let mut seg = 0usize;
        for i in 0..n {
            let t = t0 + i as f64 * step_min;
            while seg + 2 < self.times_min.len() && t > self.times_min[seg + 1] {
                seg += 1;
            }
            out.push(self.eval_segment(seg, t));
        }
        Ok(UniformSeries {
            kind: self.kind,
            t0_min: t0,
            step_min,
            values: out,
        })
    }

    fn eval_segment(&self, seg: usize, t: f64) -> f64 {
        if self.times_min.len() == 1 {
            return self.values[0];
        }
        let (ta, tb) = (self.times_min[seg], self.times_min[seg + 1]);
        let (va, vb) = (self.values[seg], self.values[seg + 1]);
        if t == ta {
            return va;
        }
        if t == tb {
            return vb;
        }
        let r = (t - ta) / (tb - ta);
        va + r * (vb - va)
    }
}

/// A series sampled on a uniform grid starting at `t0_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    pub kind: SeriesKind,
    pub t0_min: f64,
    pub step_min: f64,
    pub values: Vec<f64>,
}

impl UniformSeries {
    pub fn constant(kind: SeriesKind, t0_min: f64, step_min: f64, len: usize, value: f64) -> Self {
        Self {
            kind,
            t0_min,
            step_min,
            values: vec![value; len],
        }
    }

    pub fn end_min(&self) -> f64 {
        self.t0_min + (self.values.len().saturating_sub(1)) as f64 * self.step_min
    }

    /// Value at `t` (minutes); linear between grid points, clamped at the ends.
    pub fn at(&self, t_min: f64) -> f64 {
        let u = (t_min - self.t0_min) / self.step_min;
        let last = self.values.len() - 1;
        if u <= 0.0 {
            return self.values[0];
        }
        if u >= last as f64 {
            return self.values[last];
        }
        let i = u.floor() as usize;
        let r = u - i as f64;
        if r < 1e-9 {
            return self.values[i];
        }
        self.values[i] + r * (self.values[i + 1] - self.values[i])
    }

    /// Hold-constant forecast: the value at `t_now` repeated over
    /// `[t_now, t_now + horizon)` on this series' grid.
    pub fn predict(&self, t_now_min: f64, horizon_min: f64) -> Vec<f64> {
        let n = (horizon_min / self.step_min).round() as usize;
        vec![self.at(t_now_min); n]
    }
}
