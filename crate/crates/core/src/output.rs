//! CSV artifacts and run summaries.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::controller::{Candidate, RunOutcome};
use crate::error::Result;
use crate::plant::StepRecord;
use crate::powerflow::{trapezoid, VoltageProfile};
use crate::scenario::{GridParams, Scenario};
use crate::thermal::ThermalState;

/// `x_m,theta_rad,v_pu,s_pu,w_pu,gamma_pu`
pub fn write_profile<W: Write>(out: W, profile: &VoltageProfile, grid: &GridParams) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x_m", "theta_rad", "v_pu", "s_pu", "w_pu", "gamma_pu"])?;
    for i in 0..profile.len() {
        w.serialize((
            profile.x[i] * grid.line_length,
            profile.theta[i],
            profile.v[i],
            profile.s[i],
            profile.w[i],
            profile.loss_density[i],
        ))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `x_m,surf_C,soil_top_C,soil_bottom_C,snow_mm`
pub fn write_thermal<W: Write>(out: W, state: &ThermalState, x_m: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x_m", "surf_C", "soil_top_C", "soil_bottom_C", "snow_mm"])?;
    for (i, x) in x_m.iter().enumerate() {
        w.serialize((
            x,
            state.surface_temperature(i),
            state.soil_top(i),
            *state.soil[i].last().unwrap(),
            state.snow[i],
        ))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row per step, values at the end of the step except `max_vdev_pu`
/// (sampled at its start). `total_snow_mm` is ∫h dx in mm·m.
pub fn write_trajectory<W: Write>(out: W, records: &[StepRecord], grid: &GridParams) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t_min",
        "switch_index",
        "pv_dest",
        "battery_dest",
        "battery_puh",
        "purchased_puh",
        "max_vdev_pu",
        "total_snow_mm",
    ])?;
    for r in records {
        w.serialize((
            r.t_min + r.dt_min,
            r.word.switch() as u8,
            r.word.pv() as u8,
            r.word.battery() as u8,
            r.battery_after,
            r.purchased_after,
            r.max_vdev / grid.ref_amplitude,
            r.snow_area,
        ))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `k,stage,pattern,J,P_loss,V_fluc,S_snow,M_cost`; `J` is the score of the
/// candidate's own stage.
pub fn write_planning_log<W: Write>(out: W, candidates: &[Candidate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "k", "stage", "pattern", "J", "P_loss", "V_fluc", "S_snow", "M_cost",
    ])?;
    for c in candidates {
        w.serialize((
            c.k,
            c.stage.label(),
            c.pattern.to_string(),
            c.score,
            c.terms.p_loss,
            c.terms.v_fluc,
            c.terms.s_snow,
            c.terms.m_cost,
        ))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Headline numbers of a closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    /// p.u.·h
    pub purchased_energy: f64,
    /// Σ over slots of the largest line deviation, V.
    pub v_fluc_total: f64,
    /// ∫h dx at the end, mm·m.
    pub final_snow_total: f64,
    /// Battery energy at the end of every slot, p.u.·h (first entry is the
    /// initial value).
    pub battery_trace: Vec<f64>,
    /// Mean planning wall time per slot, s.
    pub wall_time_per_plan_step: f64,
    /// Applied word per slot, as `switch pv battery` digits.
    pub words: Vec<String>,
    /// Largest line deviation per slot, V.
    pub slot_vdev: Vec<f64>,
}

impl RunReport {
    pub fn from_outcome(outcome: &RunOutcome, scenario: &Scenario) -> Self {
        let x_m: Vec<f64> = scenario
            .x_grid()
            .iter()
            .map(|x| x * scenario.grid.line_length)
            .collect();
        let mut battery_trace = vec![outcome.initial.battery.energy];
        let steps = scenario.numerics.steps_per_slot(&scenario.controller);
        battery_trace.extend(
            outcome
                .records
                .chunks(steps)
                .map(|c| c.last().unwrap().battery_after),
        );
        let n = outcome.slots.len();
        Self {
            purchased_energy: outcome.last.purchased,
            v_fluc_total: outcome.v_fluc_total(),
            final_snow_total: trapezoid(&x_m, &outcome.last.thermal.snow),
            battery_trace,
            wall_time_per_plan_step: if n == 0 {
                0.0
            } else {
                outcome.slots.iter().map(|s| s.plan_seconds).sum::<f64>() / n as f64
            },
            words: outcome.slots.iter().map(|s| s.word.to_string()).collect(),
            slot_vdev: outcome.slots.iter().map(|s| s.max_vdev).collect(),
        }
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "purchased energy      {:.4} p.u.·h",
            self.purchased_energy
        )?;
        writeln!(
            f,
            "voltage fluctuation   {:.4} V (sum of slot maxima)",
            self.v_fluc_total
        )?;
        writeln!(f, "final snow            {:.4} mm·m", self.final_snow_total)?;
        writeln!(
            f,
            "battery               {:.4} -> {:.4} p.u.·h",
            self.battery_trace.first().copied().unwrap_or(0.0),
            self.battery_trace.last().copied().unwrap_or(0.0)
        )?;
        writeln!(
            f,
            "planning time         {:.3} s per slot",
            self.wall_time_per_plan_step
        )?;
        write!(f, "words                 {}", self.words.join(" "))
    }
}

/// Side-by-side summary of two runs and the per-slot signed difference of
/// the largest voltage deviation (B − A).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: RunReport,
    pub b: RunReport,
    pub vdev_difference: Vec<f64>,
}

impl Comparison {
    pub fn new(a: RunReport, b: RunReport) -> Self {
        let vdev_difference = a
            .slot_vdev
            .iter()
            .zip(&b.slot_vdev)
            .map(|(x, y)| y - x)
            .collect();
        Self {
            a,
            b,
            vdev_difference,
        }
    }

    /// `k,vdev_a_V,vdev_b_V,difference_V`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "vdev_a_V", "vdev_b_V", "difference_V"])?;
        for (k, d) in self.vdev_difference.iter().enumerate() {
            w.serialize((k, self.a.slot_vdev[k], self.b.slot_vdev[k], d))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24}{:>14}{:>14}", "", "A", "B")?;
        writeln!(
            f,
            "{:<24}{:>14.4}{:>14.4}",
            "purchased [p.u.·h]", self.a.purchased_energy, self.b.purchased_energy
        )?;
        writeln!(
            f,
            "{:<24}{:>14.4}{:>14.4}",
            "sum max |dv| [V]", self.a.v_fluc_total, self.b.v_fluc_total
        )?;
        writeln!(
            f,
            "{:<24}{:>14.4}{:>14.4}",
            "final snow [mm·m]", self.a.final_snow_total, self.b.final_snow_total
        )?;
        write!(f, "per-slot |dv| difference B − A [V]:")?;
        for d in &self.vdev_difference {
            write!(f, " {d:+.3}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_csv_header_and_rows() {
        let p = VoltageProfile::de_energized(&[0.0, 0.5, 1.0]);
        let mut buf = Vec::new();
        write_profile(&mut buf, &p, &GridParams::default()).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "x_m,theta_rad,v_pu,s_pu,w_pu,gamma_pu");
        assert_eq!(lines[2], "50.0,0.0,0.0,0.0,0.0,0.0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn identical_runs_compare_to_zero() {
        let r = RunReport {
            purchased_energy: 1.0,
            v_fluc_total: 2.0,
            final_snow_total: 3.0,
            battery_trace: vec![10.0],
            wall_time_per_plan_step: 0.0,
            words: vec![],
            slot_vdev: vec![1.0, 2.0],
        };
        let c = Comparison::new(r.clone(), r);
        assert_eq!(c.vdev_difference, vec![0.0, 0.0]);
    }
}
