//! Discrete series-admittance ladder solved by Newton on nodal voltages.
//!
//! Node `i` sits at `x_i = i·Δx`; neighbouring nodes are joined by the
//! branch admittance `(g − j b)/Δx`. Each node receives the exact integral of
//! the injection density over its dual cell. The anchored end is the slack.

use crate::error::{Error, Result};
use crate::powerflow::{trapezoid, Conductor, InjectionMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Head,
    Tail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderSolution {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    /// Σ G |V_i − V_{i+1}|² over the branches.
    pub joule_loss: f64,
}

impl LadderSolution {
    /// Amplitude at `x` by linear interpolation between ladder nodes.
    pub fn v_at(&self, x: f64) -> f64 {
        let h = self.x[1] - self.x[0];
        let i = ((x / h).floor() as usize).min(self.x.len() - 2);
        let f = (x - self.x[i]) / h;
        self.v[i] * (1.0 - f) + self.v[i + 1] * f
    }
}

type C = (f64, f64);

/// Solves the ladder with `cells` branches over `[0, length]`.
pub fn solve_ladder(
    cond: Conductor,
    injections: &InjectionMap,
    anchor: Anchor,
    source: (f64, f64),
    length: f64,
    cells: usize,
) -> Result<LadderSolution> {
    // work head-anchored; a tail anchor is handled by mirroring
    let inj = match anchor {
        Anchor::Head => injections.clone(),
        Anchor::Tail => injections.mirrored(length),
    };
    let m = cells;
    let dx = length / m as f64;
    let big_g = cond.g / dx;
    let big_b = cond.b / dx;
    let s_inj: Vec<C> = (0..=m)
        .map(|i| {
            let x = i as f64 * dx;
            let lo = (x - 0.5 * dx).max(0.0);
            let hi = (x + 0.5 * dx).min(length);
            inj.integral(lo, hi, length)
        })
        .collect();
    let (theta0, v0) = source;
    let slack: C = (v0 * theta0.cos(), v0 * theta0.sin());
    let mut volt: Vec<C> = vec![slack; m + 1];

    // branch currents carry round-off of order ε·|Y|
    let tol = 1e-14 * (big_g.abs() + big_b.abs()).max(1.0);
    let mut residual = f64::INFINITY;
    for iter in 0..100 {
        let (f, jac) = assemble(&volt, &s_inj, big_g, big_b);
        residual = f
            .iter()
            .map(|c| c.0.abs().max(c.1.abs()))
            .fold(0.0, f64::max);
        if residual < tol {
            break;
        }
        let step = solve_block_tridiagonal(jac, &f)?;
        // damped update: halve until the residual drops
        let mut lambda = 1.0;
        loop {
            let trial: Vec<C> = volt
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if i == 0 {
                        *v
                    } else {
                        (v.0 - lambda * step[i - 1].0, v.1 - lambda * step[i - 1].1)
                    }
                })
                .collect();
            let (tf, _) = assemble(&trial, &s_inj, big_g, big_b);
            let tr = tf
                .iter()
                .map(|c| c.0.abs().max(c.1.abs()))
                .fold(0.0, f64::max);
            if tr < residual || lambda < 1e-4 {
                volt = trial;
                break;
            }
            lambda *= 0.5;
        }
        if iter == 99 {
            return Err(Error::NoConvergence {
                iterations: 100,
                residual,
            });
        }
    }
    if !(residual < tol) {
        return Err(Error::NoConvergence {
            iterations: 100,
            residual,
        });
    }
    let joule_loss = volt
        .windows(2)
        .map(|p| big_g * ((p[0].0 - p[1].0).powi(2) + (p[0].1 - p[1].1).powi(2)))
        .sum();
    let mut x: Vec<f64> = (0..=m).map(|i| i as f64 * dx).collect();
    x[m] = length;
    if anchor == Anchor::Tail {
        volt.reverse();
    }
    Ok(LadderSolution {
        v: volt.iter().map(|c| c.0.hypot(c.1)).collect(),
        theta: volt.iter().map(|c| c.1.atan2(c.0)).collect(),
        x,
        joule_loss,
    })
}

/// 2×2 real block `[[a, b], [c, d]]`.
type Block = [[f64; 2]; 2];

struct BlockTri {
    lower: Vec<Block>,
    diag: Vec<Block>,
    upper: Vec<Block>,
}

/// Mismatch (branch currents out minus injected current) at nodes 1..=M and
/// its Jacobian with respect to (Re V, Im V) of those nodes.
fn assemble(volt: &[C], s_inj: &[C], g: f64, b: f64) -> (Vec<C>, BlockTri) {
    let m = volt.len() - 1;
    // current through admittance (g − jb) for a voltage difference d
    let y_mul = |d: C| (g * d.0 + b * d.1, -b * d.0 + g * d.1);
    let y_block: Block = [[g, b], [-b, g]];
    let neg_y: Block = [[-g, -b], [b, -g]];
    let mut f = Vec::with_capacity(m);
    let mut tri = BlockTri {
        lower: Vec::with_capacity(m),
        diag: Vec::with_capacity(m),
        upper: Vec::with_capacity(m),
    };
    for i in 1..=m {
        let vi = volt[i];
        let mut out = y_mul((vi.0 - volt[i - 1].0, vi.1 - volt[i - 1].1));
        let mut diag = y_block;
        if i < m {
            let o = y_mul((vi.0 - volt[i + 1].0, vi.1 - volt[i + 1].1));
            out = (out.0 + o.0, out.1 + o.1);
            diag = [[2.0 * g, 2.0 * b], [-2.0 * b, 2.0 * g]];
        }
        // injected current conj(S / V)
        let (p, q) = s_inj[i];
        let (a, bb) = vi;
        let r2 = a * a + bb * bb;
        let r4 = r2 * r2;
        let inj = ((p * a + q * bb) / r2, (p * bb - q * a) / r2);
        let d_re_a = (p * (bb * bb - a * a) - 2.0 * a * bb * q) / r4;
        let d_re_b = (q * (a * a - bb * bb) - 2.0 * a * bb * p) / r4;
        let d_im_a = (q * (a * a - bb * bb) - 2.0 * a * bb * p) / r4;
        let d_im_b = (p * (a * a - bb * bb) + 2.0 * a * bb * q) / r4;
        diag[0][0] -= d_re_a;
        diag[0][1] -= d_re_b;
        diag[1][0] -= d_im_a;
        diag[1][1] -= d_im_b;
        f.push((out.0 - inj.0, out.1 - inj.1));
        tri.diag.push(diag);
        tri.lower.push(if i > 1 { neg_y } else { [[0.0; 2]; 2] });
        tri.upper.push(if i < m { neg_y } else { [[0.0; 2]; 2] });
    }
    (f, tri)
}

fn mul(a: &Block, b: &Block) -> Block {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mul_vec(a: &Block, v: C) -> C {
    (a[0][0] * v.0 + a[0][1] * v.1, a[1][0] * v.0 + a[1][1] * v.1)
}

fn inverse(a: &Block) -> Result<Block> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < 1e-300 {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::NAN,
        });
    }
    Ok([
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ])
}

fn solve_block_tridiagonal(mut t: BlockTri, rhs: &[C]) -> Result<Vec<C>> {
    let n = rhs.len();
    let mut r = rhs.to_vec();
    for i in 1..n {
        let factor = mul(&t.lower[i], &inverse(&t.diag[i - 1])?);
        let fu = mul(&factor, &t.upper[i - 1]);
        for (row, fu_row) in t.diag[i].iter_mut().zip(fu) {
            for (d, f) in row.iter_mut().zip(fu_row) {
                *d -= f;
            }
        }
        let fr = mul_vec(&factor, r[i - 1]);
        r[i] = (r[i].0 - fr.0, r[i].1 - fr.1);
    }
    let mut out = vec![(0.0, 0.0); n];
    out[n - 1] = mul_vec(&inverse(&t.diag[n - 1])?, r[n - 1]);
    for i in (0..n - 1).rev() {
        let u = mul_vec(&t.upper[i], out[i + 1]);
        out[i] = mul_vec(&inverse(&t.diag[i])?, (r[i].0 - u.0, r[i].1 - u.1));
    }
    Ok(out)
}

/// Largest |v_profile − v_ladder| / v_ref over the profile nodes.
pub fn max_relative_error(
    profile_x: &[f64],
    profile_v: &[f64],
    ladder: &LadderSolution,
    v_ref: f64,
) -> f64 {
    profile_x
        .iter()
        .zip(profile_v)
        .map(|(&x, &v)| (v - ladder.v_at(x)).abs() / v_ref)
        .fold(0.0, f64::max)
}

/// ∫Γ dx of a loss-density profile by the trapezoid rule.
pub fn profile_loss(x: &[f64], gamma: &[f64]) -> f64 {
    trapezoid(x, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerflow::Injection;

    #[test]
    fn unloaded_ladder_is_flat() {
        let s = solve_ladder(
            Conductor::new(1.0, 1.0),
            &InjectionMap::new(),
            Anchor::Head,
            (0.0, 1.0),
            1.0,
            100,
        )
        .unwrap();
        assert!(s.v.iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert_eq!(s.joule_loss, 0.0);
    }

    #[test]
    fn single_load_matches_two_node_circuit() {
        // one branch, load at the far node: V2 = V1 − I/Y with I = conj(S/V2)
        let mut m = InjectionMap::new();
        m.push(Injection::active(1.0, -0.1, 1.0));
        let s = solve_ladder(
            Conductor::new(1.0, 1.0),
            &m,
            Anchor::Head,
            (0.0, 1.0),
            1.0,
            1,
        )
        .unwrap();
        // far node receives half the top-hat integral
        let (p, q) = (-0.05, 0.0);
        let v2 = (s.v[1] * s.theta[1].cos(), s.v[1] * s.theta[1].sin());
        let r2 = v2.0 * v2.0 + v2.1 * v2.1;
        let inj = ((p * v2.0 + q * v2.1) / r2, (p * v2.1 - q * v2.0) / r2);
        let d = (v2.0 - 1.0, v2.1);
        let out = (d.0 + d.1, -d.0 + d.1);
        assert!((out.0 - inj.0).abs() < 1e-12 && (out.1 - inj.1).abs() < 1e-12);
    }
}
