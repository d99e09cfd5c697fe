//! Single shooting for the four-state profile problem.
//!
//! The two free head values are corrected by a damped Newton iteration whose
//! Jacobian comes from integrating the variational equations alongside the
//! profile. Injection densities are piecewise constant, so the integration
//! is split at every density discontinuity and each smooth piece is advanced
//! with step-doubling RK4.

use super::{BoundarySpec, Conductor, EndCondition, InjectionMap, VoltageProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    /// Max-norm tolerance on the far-end boundary residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Local error target of the adaptive integrator.
    pub integration_tol: f64,
    /// Trajectories with v below this fraction of the anchor amplitude are
    /// treated as collapsed.
    pub collapse_fraction: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            integration_tol: 1e-12,
            collapse_fraction: 1e-3,
        }
    }
}

// state layout: [θ, v, s, w, ∂/∂s0 (4), ∂/∂w0 (4)]
type State = [f64; 12];

#[derive(Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    /// (b p − g q)/(g² + b²)
    c1: f64,
    /// (g p + b q)/(g² + b²)
    c2: f64,
    /// Index of the grid node at `b`, if `b` is one.
    node: Option<usize>,
}

fn rhs(y: &State, c1: f64, c2: f64) -> State {
    let (v, s) = (y[1], y[2]);
    let w = y[3];
    let v2 = v * v;
    let v3 = v2 * v;
    let mut d = [0.0; 12];
    d[0] = -s / v2;
    d[1] = w;
    d[2] = c1;
    d[3] = s * s / v3 - c2 / v;

    // partials of the right-hand side
    let dth_dv = 2.0 * s / v3;
    let dth_ds = -1.0 / v2;
    let dw_dv = -3.0 * s * s / (v3 * v) + c2 / v2;
    let dw_ds = 2.0 * s / v3;
    for k in 0..2 {
        let o = 4 + 4 * k;
        let (dv, ds, dw) = (y[o + 1], y[o + 2], y[o + 3]);
        d[o] = dth_dv * dv + dth_ds * ds;
        d[o + 1] = dw;
        d[o + 2] = 0.0;
        d[o + 3] = dw_dv * dv + dw_ds * ds;
    }
    d
}

fn rk4(y: &State, h: f64, c1: f64, c2: f64) -> State {
    let add = |a: &State, k: &State, f: f64| {
        let mut o = *a;
        for i in 0..12 {
            o[i] += f * k[i];
        }
        o
    };
    let k1 = rhs(y, c1, c2);
    let k2 = rhs(&add(y, &k1, 0.5 * h), c1, c2);
    let k3 = rhs(&add(y, &k2, 0.5 * h), c1, c2);
    let k4 = rhs(&add(y, &k3, h), c1, c2);
    let mut o = *y;
    for i in 0..12 {
        o[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    o
}

struct Problem<'a> {
    pieces: Vec<Piece>,
    n_nodes: usize,
    head_theta: f64,
    head_v: f64,
    tail: EndCondition,
    opts: &'a ShootingOptions,
}

struct Trajectory {
    nodes: Vec<[f64; 4]>,
    end: State,
}

impl Problem<'_> {
    fn advance_piece(&self, y: &mut State, p: &Piece) -> Result<()> {
        let floor = self.opts.collapse_fraction * self.head_v.abs();
        let mut x = p.a;
        let mut h = p.b - p.a;
        let mut guard = 0usize;
        while x < p.b {
            if x + h > p.b {
                h = p.b - x;
            }
            let full = rk4(y, h, p.c1, p.c2);
            let half = rk4(y, 0.5 * h, p.c1, p.c2);
            let two = rk4(&half, 0.5 * h, p.c1, p.c2);
            let mut err: f64 = 0.0;
            for i in 0..4 {
                err = err.max((two[i] - full[i]).abs() / (1.0 + two[i].abs()));
            }
            let finite = two.iter().all(|v| v.is_finite());
            if finite && (err <= self.opts.integration_tol || h < 1e-9) {
                for i in 0..12 {
                    y[i] = two[i] + (two[i] - full[i]) / 15.0;
                }
                x += h;
                if y[1] < floor || !y[1].is_finite() {
                    return Err(Error::VoltageCollapse { x, v: y[1] });
                }
                if err < self.opts.integration_tol / 64.0 {
                    h *= 2.0;
                }
            } else {
                h *= 0.5;
            }
            guard += 1;
            if guard > 1_000_000 {
                return Err(Error::VoltageCollapse { x, v: y[1] });
            }
        }
        Ok(())
    }

    fn integrate(&self, s0: f64, w0: f64) -> Result<Trajectory> {
        let mut y: State = [0.0; 12];
        y[0] = self.head_theta;
        y[1] = self.head_v;
        y[2] = s0;
        y[3] = w0;
        y[4 + 2] = 1.0; // ∂s/∂s0
        y[8 + 3] = 1.0; // ∂w/∂w0
        let mut nodes = vec![[0.0; 4]; self.n_nodes];
        nodes[0] = [y[0], y[1], y[2], y[3]];
        for p in &self.pieces {
            self.advance_piece(&mut y, p)?;
            if let Some(k) = p.node {
                nodes[k] = [y[0], y[1], y[2], y[3]];
            }
        }
        Ok(Trajectory { nodes, end: y })
    }

    /// Far-end residual and its Jacobian w.r.t. (s0, w0).
    fn residual(&self, t: &Trajectory) -> ([f64; 2], [[f64; 2]; 2]) {
        let y = &t.end;
        match self.tail {
            EndCondition::Flow { s, w } => (
                [y[2] - s, y[3] - w],
                [[y[4 + 2], y[8 + 2]], [y[4 + 3], y[8 + 3]]],
            ),
            EndCondition::Voltage { theta, v } => (
                [y[0] - theta, y[1] - v],
                [[y[4], y[8]], [y[4 + 1], y[8 + 1]]],
            ),
        }
    }

    fn initial_guess(&self) -> (f64, f64) {
        let v0 = self.head_v;
        match self.tail {
            EndCondition::Flow { s: st, w: wt } => {
                let total_c1: f64 = self.pieces.iter().map(|p| p.c1 * (p.b - p.a)).sum();
                let s0 = st - total_c1;
                // freeze v at the head value and integrate dw/dx once
                let mut s = s0;
                let mut dw = 0.0;
                for p in &self.pieces {
                    let len = p.b - p.a;
                    let s_mid = s + 0.5 * p.c1 * len;
                    dw += (s_mid * s_mid / (v0 * v0 * v0) - p.c2 / v0) * len;
                    s += p.c1 * len;
                }
                (s0, wt - dw)
            }
            EndCondition::Voltage { theta, v } => {
                let len = self.pieces.last().map_or(1.0, |p| p.b);
                ((self.head_theta - theta) * v0 * v0 / len, (v - v0) / len)
            }
        }
    }

    fn solve(&self) -> Result<Trajectory> {
        let norm = |r: &[f64; 2]| r[0].abs().max(r[1].abs());
        let (mut s0, mut w0) = self.initial_guess();
        let mut traj = self.integrate(s0, w0)?;
        let (mut r, mut jac) = self.residual(&traj);
        for _ in 0..self.opts.max_iter {
            let rn = norm(&r);
            if rn <= self.opts.tol {
                return Ok(traj);
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det == 0.0 || !det.is_finite() {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    residual: rn,
                });
            }
            let ds = -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det;
            let dw = -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det;

            // Newton step, halved until the residual decreases
            let mut lambda = 1.0;
            loop {
                let (ts, tw) = (s0 + lambda * ds, w0 + lambda * dw);
                if let Ok(t) = self.integrate(ts, tw) {
                    let (tr, tj) = self.residual(&t);
                    if norm(&tr) < (1.0 - 1e-4 * lambda) * rn || norm(&tr) <= self.opts.tol {
                        s0 = ts;
                        w0 = tw;
                        traj = t;
                        r = tr;
                        jac = tj;
                        break;
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-12 {
                    return Err(Error::NoConvergence {
                        iterations: self.opts.max_iter,
                        residual: rn,
                    });
                }
            }
        }
        let rn = norm(&r);
        if rn <= self.opts.tol {
            Ok(traj)
        } else {
            Err(Error::NoConvergence {
                iterations: self.opts.max_iter,
                residual: rn,
            })
        }
    }
}

fn build_pieces(cond: Conductor, inj: &InjectionMap, grid: &[f64]) -> Vec<Piece> {
    let len = *grid.last().unwrap();
    let bps = inj.breakpoints(len);
    let mut pieces = Vec::with_capacity(grid.len() + bps.len());
    let mut bi = 0;
    let den = cond.denom();
    for k in 1..grid.len() {
        let (lo, hi) = (grid[k - 1], grid[k]);
        let mut a = lo;
        while bi < bps.len() && bps[bi] <= lo {
            bi += 1;
        }
        let mut cuts = Vec::new();
        while bi < bps.len() && bps[bi] < hi {
            if bps[bi] > a {
                cuts.push(bps[bi]);
            }
            bi += 1;
        }
        cuts.push(hi);
        let last = cuts.len() - 1;
        for (j, &b) in cuts.iter().enumerate() {
            let (p, q) = inj.density_right_of(0.5 * (a + b), len);
            pieces.push(Piece {
                a,
                b,
                c1: (cond.b * p - cond.g * q) / den,
                c2: (cond.g * p + cond.b * q) / den,
                node: (j == last).then_some(k),
            });
            a = b;
        }
    }
    pieces
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::IllPosed(
            "grid must start at 0 and be strictly increasing with at least two nodes".into(),
        ));
    }
    Ok(())
}

/// Solves the profile on `grid` (p.u. length, `grid[0] = 0`).
///
/// Problems anchored at the tail are solved as the mirror image of a
/// head-anchored problem: under `x → L − x` the equations are unchanged when
/// s and w change sign.
pub fn solve_profile(
    cond: Conductor,
    injections: &InjectionMap,
    boundary: BoundarySpec,
    grid: &[f64],
    opts: &ShootingOptions,
) -> Result<VoltageProfile> {
    check_grid(grid)?;
    let len = *grid.last().unwrap();
    injections.validate(len)?;
    match (boundary.head, boundary.tail) {
        (EndCondition::Voltage { theta, v }, tail) => {
            if !(v > 0.0) {
                return Err(Error::IllPosed("source amplitude must be > 0".into()));
            }
            let problem = Problem {
                pieces: build_pieces(cond, injections, grid),
                n_nodes: grid.len(),
                head_theta: theta,
                head_v: v,
                tail,
                opts,
            };
            let traj = problem.solve()?;
            let mut prof = VoltageProfile {
                x: grid.to_vec(),
                theta: Vec::with_capacity(grid.len()),
                v: Vec::with_capacity(grid.len()),
                s: Vec::with_capacity(grid.len()),
                w: Vec::with_capacity(grid.len()),
                loss_density: vec![0.0; grid.len()],
            };
            for n in traj.nodes {
                prof.theta.push(n[0]);
                prof.v.push(n[1]);
                prof.s.push(n[2]);
                prof.w.push(n[3]);
            }
            Ok(prof)
        }
        (EndCondition::Flow { s, w }, EndCondition::Voltage { theta, v }) => {
            let mgrid: Vec<f64> = grid.iter().rev().map(|x| len - x).collect();
            let mut mgrid = mgrid;
            mgrid[0] = 0.0;
            let mirrored = BoundarySpec {
                head: EndCondition::Voltage { theta, v },
                tail: EndCondition::Flow { s: -s, w: -w },
            };
            let m = solve_profile(cond, &injections.mirrored(len), mirrored, &mgrid, opts)?;
            Ok(VoltageProfile {
                x: grid.to_vec(),
                theta: m.theta.iter().rev().copied().collect(),
                v: m.v.iter().rev().copied().collect(),
                s: m.s.iter().rev().map(|s| -s).collect(),
                w: m.w.iter().rev().map(|w| -w).collect(),
                loss_density: vec![0.0; grid.len()],
            })
        }
        (EndCondition::Flow { .. }, EndCondition::Flow { .. }) => Err(Error::IllPosed(
            "no voltage fixed at either end; amplitude is undetermined".into(),
        )),
    }
}
