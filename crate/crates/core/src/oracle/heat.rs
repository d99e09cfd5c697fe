//! Closed-form references for the cable-surface and soil-column updates.

use std::f64::consts::PI;

use crate::scenario::ThermalParams;
use crate::thermal::{step_cable_surface, step_soil_column, ColumnBoundary, ColumnScratch};

/// Steady two-Robin conduction through a slab of depth `d_m`: linear profile
/// between the two baths, returned as the values at `y` (m).
pub fn two_robin_steady_state(
    top_bath: f64,
    top_coeff: f64,
    bottom_bath: f64,
    bottom_coeff: f64,
    conductivity: f64,
    d_m: f64,
    y: &[f64],
) -> Vec<f64> {
    let q = (bottom_bath - top_bath) / (1.0 / bottom_coeff + d_m / conductivity + 1.0 / top_coeff);
    let top = top_bath + q / top_coeff;
    y.iter().map(|&y| top + q * y / conductivity).collect()
}

/// Marches the implicit column to steady state under fixed baths and returns
/// the L∞ distance to the analytic profile, °C.
pub fn steady_state_error(params: &ThermalParams, nodes: usize, bottom_bath: f64) -> f64 {
    let d_m = params.burial_depth * 1e-2;
    let dy = d_m / (nodes - 1) as f64;
    let y: Vec<f64> = (0..nodes).map(|k| k as f64 * dy).collect();
    let exact = two_robin_steady_state(
        params.snow_temperature,
        params.ground_snow_transfer,
        bottom_bath,
        params.cable_soil_transfer,
        params.soil_conductivity,
        d_m,
        &y,
    );
    let mut col = vec![params.snow_temperature; nodes];
    let mut scratch = ColumnScratch::new(nodes);
    for _ in 0..20_000 {
        step_soil_column(
            &mut col,
            ColumnBoundary::Robin {
                coeff: params.ground_snow_transfer,
                bath: params.snow_temperature,
            },
            ColumnBoundary::Robin {
                coeff: params.cable_soil_transfer,
                bath: bottom_bath,
            },
            params.soil_diffusivity,
            params.soil_conductivity,
            dy,
            30.0,
            &mut scratch,
        );
    }
    col.iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Dirichlet slab initially at 0 with the bottom raised to `step` at t = 0:
/// `step·y/D + Σ 2·step·(−1)ⁿ/(nπ) sin(nπy/D) exp(−α n²π² t/D²)`.
pub fn fourier_step_response(
    step: f64,
    alpha: f64,
    d_m: f64,
    y: f64,
    t_s: f64,
    terms: usize,
) -> f64 {
    let mut sum = step * y / d_m;
    for n in 1..=terms {
        let k = n as f64 * PI / d_m;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += 2.0 * step * sign / (n as f64 * PI) * (k * y).sin() * (-alpha * k * k * t_s).exp();
    }
    sum
}

/// Mid-column error of the implicit solver against the 50-term series on the
/// Dirichlet sub-problem, °C.
pub fn fourier_error(alpha: f64, d_m: f64, nodes: usize, dt_s: f64, t_end_s: f64) -> f64 {
    let dy = d_m / (nodes - 1) as f64;
    let mut col = vec![0.0; nodes];
    let mut scratch = ColumnScratch::new(nodes);
    let steps = (t_end_s / dt_s).round() as usize;
    for _ in 0..steps {
        step_soil_column(
            &mut col,
            ColumnBoundary::Dirichlet(0.0),
            ColumnBoundary::Dirichlet(1.0),
            alpha,
            1.0,
            dy,
            dt_s,
            &mut scratch,
        );
    }
    let mid = nodes / 2;
    (col[mid] - fourier_step_response(1.0, alpha, d_m, mid as f64 * dy, t_end_s, 50)).abs()
}

/// Error of one cable-surface step from rest against the exponential.
pub fn cable_step_error(params: &ThermalParams, gamma_w_per_m: f64, dt_s: f64) -> f64 {
    let got = step_cable_surface(0.0, gamma_w_per_m, params, dt_s);
    let inf = (gamma_w_per_m * 1e-2 - params.radiative_cooling) / params.cable_contact_coeff;
    let exact =
        inf * (1.0 - (-params.cable_contact_coeff * dt_s / params.cable_heat_capacity).exp());
    (got - exact).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_profile_is_continuous_in_flux() {
        let y = [0.0, 0.05, 0.1];
        let p = two_robin_steady_state(0.0, 88.0, 10.0, 300.0, 0.5, 0.1, &y);
        let q = 0.5 * (p[2] - p[0]) / 0.1;
        assert!((q - 88.0 * (p[0] - 0.0)).abs() < 1e-9);
        assert!((q - 300.0 * (10.0 - p[2])).abs() < 1e-9);
    }

    #[test]
    fn series_satisfies_end_values() {
        assert!(fourier_step_response(1.0, 1e-6, 0.1, 0.0, 10.0, 50).abs() < 1e-12);
        assert!((fourier_step_response(1.0, 1e-6, 0.1, 0.1, 1e9, 50) - 1.0).abs() < 1e-12);
    }
}
