//! Cable-surface temperature, vertical soil conduction and snow depth.
//!
//! Every horizontal position carries an independent soil column (no
//! horizontal diffusion). Depth `y` runs from the ground surface (`y = 0`)
//! down to the cable (`y = D_f`).

use serde::Serialize;

use crate::scenario::{Exogenous, ThermalParams};

/// A condition at one end of a soil column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColumnBoundary {
    /// Flux into the column equals `coeff · (bath − δ_end)`, W/m².
    Robin {
        coeff: f64,
        bath: f64,
    },
    Dirichlet(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalState {
    /// Cable surface minus ambient, °C, per x node.
    pub surf_offset: Vec<f64>,
    /// Soil temperature, °C, `soil[x][k]` at depth `depth_grid[k]`.
    pub soil: Vec<Vec<f64>>,
    /// Snow depth, mm, per x node.
    pub snow: Vec<f64>,
    /// Depth nodes, cm, from 0 (surface) to D_f (cable).
    pub depth_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeltFluxes {
    /// Radiative + sensible + latent, W/m².
    pub mu1: Vec<f64>,
    /// Conducted from the soil surface, W/m².
    pub mu2: Vec<f64>,
}

impl ThermalState {
    pub fn new(n_x: usize, depth_nodes: usize, params: &ThermalParams) -> Self {
        let dy = params.burial_depth / (depth_nodes - 1) as f64;
        Self {
            surf_offset: vec![0.0; n_x],
            soil: vec![vec![params.initial_soil; depth_nodes]; n_x],
            snow: vec![params.initial_snow; n_x],
            depth_grid: (0..depth_nodes).map(|k| k as f64 * dy).collect(),
        }
    }

    /// Cable surface temperature δ_surf = offset + δ_soil(D_f).
    pub fn surface_temperature(&self, i: usize) -> f64 {
        self.surf_offset[i] + *self.soil[i].last().unwrap()
    }

    pub fn soil_top(&self, i: usize) -> f64 {
        self.soil[i][0]
    }

    /// Advances the whole state by `dt_s` seconds given the cable Joule heat
    #[allow(clippy::needless_range_loop)] // several per-node arrays move in lockstep
    /// (W/m per node) and the weather at the start of the step.
    pub fn step(
        &mut self,
        gamma_w_per_m: &[f64],
        exo: &Exogenous,
        params: &ThermalParams,
        dt_s: f64,
    ) {
        let dy_m = self.depth_grid[1] * 1e-2;
        let mut scratch = ColumnScratch::new(self.depth_grid.len());
        for i in 0..self.snow.len() {
            self.surf_offset[i] =
                step_cable_surface(self.surf_offset[i], gamma_w_per_m[i], params, dt_s);
            let bath = self.surface_temperature(i);
            step_soil_column(
                &mut self.soil[i],
                ColumnBoundary::Robin {
                    coeff: params.ground_snow_transfer,
                    bath: params.snow_temperature,
                },
                ColumnBoundary::Robin {
                    coeff: params.cable_soil_transfer,
                    bath,
                },
                params.soil_diffusivity,
                params.soil_conductivity,
                dy_m,
                dt_s,
                &mut scratch,
            );
        }
        let fluxes = melt_fluxes(self, exo, params);
        for i in 0..self.snow.len() {
            self.snow[i] = step_snow(
                self.snow[i],
                fluxes.mu1[i],
                fluxes.mu2[i],
                exo.snowfall,
                params,
                dt_s / 60.0,
            );
        }
    }
}

/// Exact update of `C dδ/dt = Γ·10⁻² − q_r − γ δ` over `dt_s` with Γ held
/// constant. `gamma_w_per_m` is converted to W/cm by the 10⁻² factor.
pub fn step_cable_surface(
    offset: f64,
    gamma_w_per_m: f64,
    params: &ThermalParams,
    dt_s: f64,
) -> f64 {
    let target = cable_surface_steady_state(gamma_w_per_m, params);
    let decay = (-params.cable_contact_coeff * dt_s / params.cable_heat_capacity).exp();
    target + (offset - target) * decay
}

pub fn cable_surface_steady_state(gamma_w_per_m: f64, params: &ThermalParams) -> f64 {
    (gamma_w_per_m * 1e-2 - params.radiative_cooling) / params.cable_contact_coeff
}

/// Reusable buffers for the tridiagonal solve.
pub struct ColumnScratch {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
}

impl ColumnScratch {
    pub fn new(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            rhs: vec![0.0; n],
        }
    }
}

/// One backward-Euler step of `∂δ/∂t = α ∂²δ/∂y²` on a uniform column.
///
/// Robin ends use a ghost node so the boundary flux is second-order
/// accurate. `dy_m` is the node spacing in metres; `conductivity` converts
/// boundary fluxes into gradients.
#[allow(clippy::too_many_arguments)]
pub fn step_soil_column(
    column: &mut [f64],
    top: ColumnBoundary,
    bottom: ColumnBoundary,
    diffusivity: f64,
    conductivity: f64,
    dy_m: f64,
    dt_s: f64,
    scratch: &mut ColumnScratch,
) {
    let n = column.len();
    let r = diffusivity * dt_s / (dy_m * dy_m);
    let ColumnScratch {
        lower,
        diag,
        upper,
        rhs,
    } = scratch;
    if lower.len() != n {
        *scratch = ColumnScratch::new(n);
        return step_soil_column(
            column,
            top,
            bottom,
            diffusivity,
            conductivity,
            dy_m,
            dt_s,
            scratch,
        );
    }
    for i in 1..n - 1 {
        lower[i] = -r;
        diag[i] = 1.0 + 2.0 * r;
        upper[i] = -r;
        rhs[i] = column[i];
    }
    match top {
        ColumnBoundary::Robin { coeff, bath } => {
            let k = 2.0 * r * dy_m * coeff / conductivity;
            diag[0] = 1.0 + 2.0 * r + k;
            upper[0] = -2.0 * r;
            rhs[0] = column[0] + k * bath;
        }
        ColumnBoundary::Dirichlet(v) => {
            diag[0] = 1.0;
            upper[0] = 0.0;
            rhs[0] = v;
        }
    }
    let last = n - 1;
    match bottom {
        ColumnBoundary::Robin { coeff, bath } => {
            let k = 2.0 * r * dy_m * coeff / conductivity;
            lower[last] = -2.0 * r;
            diag[last] = 1.0 + 2.0 * r + k;
            rhs[last] = column[last] + k * bath;
        }
        ColumnBoundary::Dirichlet(v) => {
            lower[last] = 0.0;
            diag[last] = 1.0;
            rhs[last] = v;
        }
    }
    // Thomas algorithm; the matrix is strictly diagonally dominant.
    for i in 1..n {
        let m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    column[last] = rhs[last] / diag[last];
    for i in (0..last).rev() {
        column[i] = (rhs[i] - upper[i] * column[i + 1]) / diag[i];
    }
}

/// μ₁ from the weather, μ₂ = β_ground (δ_soil(0) − δ_snow) per position.
pub fn melt_fluxes(state: &ThermalState, exo: &Exogenous, params: &ThermalParams) -> MeltFluxes {
    let mu1 = exo.solar_flux + exo.sensible_flux + exo.latent_flux;
    MeltFluxes {
        mu1: vec![mu1; state.snow.len()],
        mu2: (0..state.snow.len())
            .map(|i| params.ground_snow_transfer * (state.soil_top(i) - params.snow_temperature))
            .collect(),
    }
}

/// Explicit snow update over `dt_min` minutes.
///
/// Melt only acts on existing snow and a net negative flux does not
/// deposit snow; depth never drops below zero.
pub fn step_snow(
    h: f64,
    mu1: f64,
    mu2: f64,
    snowfall: f64,
    params: &ThermalParams,
    dt_min: f64,
) -> f64 {
    let melt = if h > 0.0 {
        params.melt_rate_per_flux() * (mu1 + mu2).max(0.0) * dt_min
    } else {
        0.0
    };
    (h - melt + snowfall * dt_min).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ThermalParams {
        ThermalParams::default()
    }

    #[test]
    fn cable_at_rest_stays_at_rest() {
        assert_eq!(step_cable_surface(0.0, 0.0, &params(), 30.0), 0.0);
    }

    #[test]
    fn cable_step_matches_closed_form() {
        let p = params();
        let gamma = 100.0 * p.cable_contact_coeff; // W/m
        let got = step_cable_surface(0.0, gamma, &p, 30.0);
        // δ(t) = δ∞ (1 − exp(−γ t / C)) with δ∞ = Γ·10⁻²/γ
        let inf = gamma * 1e-2 / 1.04;
        let exact = inf * (1.0 - (-1.04 * 30.0 / 18.0f64).exp());
        assert!((got - exact).abs() <= 1e-10);
    }

    #[test]
    fn cable_reaches_steady_state() {
        let p = params();
        let mut d = 0.0;
        for _ in 0..10_000 {
            d = step_cable_surface(d, 250.0, &p, 30.0);
        }
        assert!((d - 250.0e-2 / 1.04).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_column_unchanged() {
        let mut col = vec![0.0; 21];
        let mut s = ColumnScratch::new(21);
        step_soil_column(
            &mut col,
            ColumnBoundary::Robin {
                coeff: 88.0,
                bath: 0.0,
            },
            ColumnBoundary::Robin {
                coeff: 300.0,
                bath: 0.0,
            },
            0.008,
            0.5,
            0.005,
            30.0,
            &mut s,
        );
        assert!(col.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn snow_examples() {
        let p = params();
        assert!((step_snow(30.0, 0.0, 0.0, 0.2, &p, 1.0) - 30.2).abs() < 1e-12);
        assert_eq!(step_snow(0.0, 1e6, 1e6, 0.0, &p, 1.0), 0.0);
        assert_eq!(step_snow(1.0, 1e6, 0.0, 0.0, &p, 1.0), 0.0);
        let h = step_snow(30.0, 100.0, 67.4, 0.0, &p, 10.0);
        assert!((h - (30.0 - 1.792e-4 / 0.06 * 167.4 * 10.0)).abs() < 1e-12);
        assert!((h - 25.0).abs() < 1e-3);
    }

    #[test]
    fn mu2_from_surface_soil() {
        let p = params();
        let mut st = ThermalState::new(3, 21, &p);
        st.soil[1][0] = 1.0;
        let f = melt_fluxes(&st, &Exogenous::default(), &p);
        assert_eq!(f.mu2, vec![0.0, 88.0, 0.0]);
        let exo = Exogenous {
            solar_flux: 40.0,
            sensible_flux: -5.0,
            latent_flux: 2.0,
            ..Default::default()
        };
        assert!(melt_fluxes(&st, &exo, &p).mu1.iter().all(|&m| m == 37.0));
    }

    #[test]
    fn heated_cable_warms_soil_and_melts() {
        let p = params();
        let mut st = ThermalState::new(2, 21, &p);
        let exo = Exogenous::default();
        for _ in 0..20 {
            st.step(&[300.0, 0.0], &exo, &p, 30.0);
        }
        assert!(st.soil[0][0] > 0.1);
        assert!(st.snow[0] < 30.0);
        assert_eq!(st.snow[1], 30.0);
        assert!(st.surface_temperature(0) > st.soil[0][20]);
    }
}
