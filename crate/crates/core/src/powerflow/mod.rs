//! Steady-state voltage profiles along a conductor.
//!
//! The profile is described by four states along the per-unit length
//! coordinate `x ∈ [0, 1]`: phase θ, amplitude v, the supplemental variable s
//! and the amplitude gradient w. With per-length conductance g, susceptance b
//! and injected power densities p, q:
//!
//! ```text
//! dθ/dx = -s / v²
//! dv/dx = w
//! ds/dx = (b p - g q) / (g² + b²)
//! dw/dx = s² / v³ - (g p + b q) / ((g² + b²) v)
//! ```
//!
//! Two conditions are fixed at each end; the remaining two head values are
//! found by shooting (see [`shooting`]).

mod coupling;
mod shooting;

pub use coupling::{couple_line_and_cable, CoupledFlow};
pub use shooting::{solve_profile, ShootingOptions};

use serde::Serialize;

use crate::error::{Error, Result};

/// Per-length series conductance and susceptance (p.u.).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conductor {
    pub g: f64,
    pub b: f64,
}

impl Conductor {
    pub fn new(g: f64, b: f64) -> Self {
        Self { g, b }
    }

    fn denom(&self) -> f64 {
        self.g * self.g + self.b * self.b
    }

    /// Active power flowing in +x at a node: `b·s − g·v·w`.
    pub fn active_flow(&self, v: f64, s: f64, w: f64) -> f64 {
        self.b * s - self.g * v * w
    }

    /// Reactive power flowing in +x at a node: `−(b·v·w + g·s)`.
    pub fn reactive_flow(&self, v: f64, s: f64, w: f64) -> f64 {
        -(self.b * v * w + self.g * s)
    }
}

/// A device injection spread as a top-hat density over `width`.
///
/// `active`/`reactive` are total powers; positive values feed the conductor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Injection {
    pub position: f64,
    pub active: f64,
    pub reactive: f64,
    pub width: f64,
}

impl Injection {
    pub fn active(position: f64, active: f64, width: f64) -> Self {
        Self {
            position,
            active,
            reactive: 0.0,
            width,
        }
    }

    /// Support `[start, start + width]`, centred on `position` and shifted
    /// inward when it would leave `[0, length]`.
    pub fn support(&self, length: f64) -> (f64, f64) {
        let hi = (length - self.width).max(0.0);
        let mut start = (self.position - 0.5 * self.width).clamp(0.0, hi);
        // absorb rounding so end-anchored supports stay exactly anchored
        let eps = 1e-12 * length;
        if start < eps {
            start = 0.0;
        } else if hi - start < eps {
            start = hi;
        }
        let end = if start == hi {
            length.max(self.width)
        } else {
            start + self.width
        };
        (start, end)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InjectionMap {
    pub entries: Vec<Injection>,
}

impl InjectionMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, inj: Injection) {
        self.entries.push(inj);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self, length: f64) -> Result<()> {
        for e in &self.entries {
            if !(0.0..=length).contains(&e.position) || !(e.width > 0.0) || e.width > length {
                return Err(Error::IllPosed(format!(
                    "injection {e:?} not resolvable on [0, {length}]"
                )));
            }
            if !e.active.is_finite() || !e.reactive.is_finite() {
                return Err(Error::IllPosed(format!("non-finite injection {e:?}")));
            }
        }
        Ok(())
    }

    /// Densities (p, q) on the open interval just right of `x`.
    pub fn density_right_of(&self, x: f64, length: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut q = 0.0;
        for e in &self.entries {
            let (a, b) = e.support(length);
            if x >= a && x < b {
                p += e.active / e.width;
                q += e.reactive / e.width;
            }
        }
        (p, q)
    }

    /// Exact ∫ (p, q) dx over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64, length: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut q = 0.0;
        for e in &self.entries {
            let (a, b) = e.support(length);
            let overlap = (hi.min(b) - lo.max(a)).max(0.0);
            p += e.active / e.width * overlap;
            q += e.reactive / e.width * overlap;
        }
        (p, q)
    }

    /// Density discontinuities strictly inside `(0, length)`.
    pub fn breakpoints(&self, length: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .entries
            .iter()
            .flat_map(|e| {
                let (a, b) = e.support(length);
                [a, b]
            })
            .filter(|&x| x > 0.0 && x < length)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Mirror image under `x → length − x`.
    pub fn mirrored(&self, length: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|e| {
                    let (a, b) = e.support(length);
                    Injection {
                        position: length - 0.5 * (a + b),
                        ..*e
                    }
                })
                .collect(),
        }
    }
}

/// Two scalar conditions imposed at one end of the conductor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EndCondition {
    /// Phase and amplitude fixed (a source).
    Voltage { theta: f64, v: f64 },
    /// Supplemental variable and gradient fixed (an open end has s = w = 0).
    Flow { s: f64, w: f64 },
}

impl EndCondition {
    pub const OPEN: EndCondition = EndCondition::Flow { s: 0.0, w: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySpec {
    pub head: EndCondition,
    pub tail: EndCondition,
}

impl BoundarySpec {
    /// Source at x = 0, open at x = L.
    pub fn fed_from_head(theta: f64, v: f64) -> Self {
        Self {
            head: EndCondition::Voltage { theta, v },
            tail: EndCondition::OPEN,
        }
    }

    /// Source at x = L, open at x = 0.
    pub fn fed_from_tail(theta: f64, v: f64) -> Self {
        Self {
            head: EndCondition::OPEN,
            tail: EndCondition::Voltage { theta, v },
        }
    }
}

/// Node values of the four states on a grid over `[0, length]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoltageProfile {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    /// Joule loss density Γ; filled by [`loss_density_line`] or
    /// [`loss_density_cable`] depending on the conductor.
    pub loss_density: Vec<f64>,
}

impl VoltageProfile {
    /// The all-zero profile of a disconnected conductor.
    pub fn de_energized(x: &[f64]) -> Self {
        let z = vec![0.0; x.len()];
        Self {
            x: x.to_vec(),
            theta: z.clone(),
            v: z.clone(),
            s: z.clone(),
            w: z.clone(),
            loss_density: z,
        }
    }

    pub fn is_de_energized(&self) -> bool {
        self.v.iter().all(|&v| v == 0.0)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Trapezoidal ∫ Γ dx over the grid.
    pub fn total_loss(&self) -> f64 {
        trapezoid(&self.x, &self.loss_density)
    }

    /// Largest |v − v_ref| over the nodes.
    pub fn max_deviation(&self, v_ref: f64) -> f64 {
        self.v.iter().map(|v| (v - v_ref).abs()).fold(0.0, f64::max)
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Single-phase ∫Γ dx from the power balance `dP/dx = p − Γ`:
/// inflow at both ends plus net injection. Free of quadrature error.
pub fn loss_by_power_balance(
    cond: Conductor,
    profile: &VoltageProfile,
    injections: &InjectionMap,
) -> f64 {
    if profile.is_de_energized() {
        return 0.0;
    }
    let n = profile.len() - 1;
    let len = profile.x[n];
    let head = cond.active_flow(profile.v[0], profile.s[0], profile.w[0]);
    let tail = cond.active_flow(profile.v[n], profile.s[n], profile.w[n]);
    head - tail + injections.integral(0.0, len, len).0
}

fn single_phase_loss(v: f64, s: f64, w: f64, g: f64) -> f64 {
    g * (w * w + (s * s) / (v * v))
}

/// Three-phase line loss density Γ_e = 3 g (w² + s²/v²).
pub fn loss_density_line(profile: &VoltageProfile, g: f64) -> Result<Vec<f64>> {
    profile
        .v
        .iter()
        .zip(&profile.s)
        .zip(&profile.w)
        .zip(&profile.x)
        .map(|(((&v, &s), &w), &x)| {
            if v == 0.0 {
                Err(Error::VoltageCollapse { x, v })
            } else {
                Ok(3.0 * single_phase_loss(v, s, w, g))
            }
        })
        .collect()
}

/// Heating-cable loss density Γ_h = g (w² + s²/v²); zero on de-energized nodes.
pub fn loss_density_cable(profile: &VoltageProfile, g: f64) -> Vec<f64> {
    profile
        .v
        .iter()
        .zip(&profile.s)
        .zip(&profile.w)
        .map(|((&v, &s), &w)| {
            if v == 0.0 {
                0.0
            } else {
                single_phase_loss(v, s, w, g)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_node(v: f64, s: f64, w: f64) -> VoltageProfile {
        VoltageProfile {
            x: vec![0.0],
            theta: vec![0.0],
            v: vec![v],
            s: vec![s],
            w: vec![w],
            loss_density: vec![0.0],
        }
    }

    #[test]
    fn line_loss_substitution() {
        assert_eq!(
            loss_density_line(&one_node(1.0, 0.0, 0.0), 1.0).unwrap(),
            vec![0.0]
        );
        let g = loss_density_line(&one_node(1.0, 0.2, 0.1), 1.0).unwrap()[0];
        assert!((g - 0.15).abs() < 1e-15);
    }

    #[test]
    fn line_loss_rejects_zero_voltage() {
        assert!(loss_density_line(&one_node(0.0, 0.2, 0.1), 1.0).is_err());
    }

    #[test]
    fn cable_loss_substitution() {
        let g = loss_density_cable(&one_node(1.0, 0.2, 0.1), 0.5)[0];
        assert!((g - 0.025).abs() < 1e-15);
        let off = VoltageProfile::de_energized(&[0.0, 0.5, 1.0]);
        assert_eq!(loss_density_cable(&off, 0.5), vec![0.0; 3]);
    }

    #[test]
    fn injection_support_stays_inside() {
        let tail = Injection::active(1.0, -0.1, 0.01);
        let (a, b) = tail.support(1.0);
        assert!((a - 0.99).abs() < 1e-15 && b == 1.0);
        let head = Injection::active(0.0, -0.1, 0.01);
        assert_eq!(head.support(1.0), (0.0, 0.01));
        let mid = Injection::active(0.25, 1.0, 0.01);
        let (a, b) = mid.support(1.0);
        assert!((a - 0.245).abs() < 1e-15 && (b - 0.255).abs() < 1e-15);
    }

    #[test]
    fn integral_and_mirror() {
        let mut m = InjectionMap::new();
        m.push(Injection::active(1.0, -0.1, 0.01));
        m.push(Injection::active(0.25, 0.3, 0.005));
        let (p, _) = m.integral(0.0, 1.0, 1.0);
        assert!((p - 0.2).abs() < 1e-15);
        let mm = m.mirrored(1.0);
        assert_eq!(mm.entries[0].support(1.0).0, 0.0);
        let (p2, _) = mm.integral(0.0, 0.01, 1.0);
        assert!((p2 + 0.1).abs() < 1e-12);
        assert_eq!(m.breakpoints(1.0).len(), 3);
    }
}
