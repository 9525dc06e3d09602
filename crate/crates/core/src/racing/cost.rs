//! Stage and terminal costs of the racing game.
//!
//! Constraints enter as one-sided quadratic penalties. Indicator functions
//! are frozen at the evaluation point and a penalty exactly on its boundary
//! counts as inactive.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gg::GGDiamond;
use super::track::Track;
use super::vehicle::{AX, AY, N, S, V};
use crate::error::{Error, Result};
use crate::ilq::{StageExpansion, TerminalExpansion};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    /// Jerk weight `R` (row-major 2x2, positive definite).
    pub jerk_weight: [[f64; 2]; 2],
    pub collision: f64,
    pub wall: f64,
    pub ax_limit: f64,
    pub acceleration: f64,
    /// Weight on the opponents' terminal progress.
    pub competition: f64,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            jerk_weight: [[1e-2, 0.0], [0.0, 1e-2]],
            collision: 1.0,
            wall: 10.0,
            ax_limit: 10.0,
            acceleration: 10.0,
            competition: 0.2,
            vehicle_length: 5.0,
            vehicle_width: 2.0,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            self.collision,
            self.wall,
            self.ax_limit,
            self.acceleration,
            self.competition,
        ];
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter("cost weights must be non-negative".into()));
        }
        if !(self.vehicle_length > 0.0 && self.vehicle_width > 0.0) {
            return Err(Error::InvalidParameter("vehicle dimensions must be positive".into()));
        }
        let [[a, b], [c, d]] = self.jerk_weight;
        if (b - c).abs() > 1e-12 * (1.0 + b.abs()) || !(a > 0.0) || !(a * d - b * c > 0.0) {
            return Err(Error::InvalidParameter(
                "jerk weight must be symmetric positive definite".into(),
            ));
        }
        Ok(())
    }
}

/// Another vehicle as seen from a cost owner: its position and, when it is
/// part of the game state, the offset of its state block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OtherVehicle {
    pub s: f64,
    pub n: f64,
    pub offset: Option<usize>,
}

/// Collision penalty `c exp(1 - (ds/l)^2 - (dn/w)^2)` with its gradient and
/// Hessian in `(ds, dn)`.
pub fn collision_term(ds: f64, dn: f64, params: &CostParams) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let l2 = params.vehicle_length * params.vehicle_length;
    let w2 = params.vehicle_width * params.vehicle_width;
    let v = params.collision * (1.0 - ds * ds / l2 - dn * dn / w2).exp();
    let gs = -2.0 * ds / l2;
    let gn = -2.0 * dn / w2;
    let hss = v * (gs * gs - 2.0 / l2);
    let hnn = v * (gn * gn - 2.0 / w2);
    let hsn = v * gs * gn;
    (v, [v * gs, v * gn], [[hss, hsn], [hsn, hnn]])
}

/// Accumulates the racing stage cost of the vehicle whose state block
/// starts at `own` in the joint state `x`.
pub fn stage_cost(
    own: usize,
    x: &DVector<f64>,
    u: &DVector<f64>,
    others: &[OtherVehicle],
    track: &Track,
    params: &CostParams,
    gg: &GGDiamond,
) -> StageExpansion {
    let dim = x.len();
    let mut e = StageExpansion {
        value: 0.0,
        grad_x: DVector::zeros(dim),
        hess_x: DMatrix::zeros(dim, dim),
        grad_u: DVector::zeros(2),
        hess_u: DMatrix::zeros(2, 2),
    };

    // jerk regularization u' R u
    let r = DMatrix::from_row_slice(2, 2, &[
        params.jerk_weight[0][0],
        params.jerk_weight[0][1],
        params.jerk_weight[1][0],
        params.jerk_weight[1][1],
    ]);
    let ru = &r * u;
    e.value += u.dot(&ru);
    e.grad_u = (&r + r.transpose()) * u;
    e.hess_u = &r + r.transpose();

    let s = x[own + S];
    let n = x[own + N];
    let v = x[own + V];
    let ax = x[own + AX];
    let ay = x[own + AY];

    for other in others {
        let (value, g, h) = collision_term(s - other.s, n - other.n, params);
        e.value += value;
        // d(ds)/dx = e_own_s - e_other_s, likewise for dn
        let mut dirs: Vec<(usize, f64, usize)> = vec![(own + S, 1.0, 0), (own + N, 1.0, 1)];
        if let Some(off) = other.offset {
            dirs.push((off + S, -1.0, 0));
            dirs.push((off + N, -1.0, 1));
        }
        for &(ra, sa, ca) in &dirs {
            e.grad_x[ra] += sa * g[ca];
            for &(rb, sb, cb) in &dirs {
                e.hess_x[(ra, rb)] += sa * sb * h[ca][cb];
            }
        }
    }

    // track boundaries, one side at a time
    let (wl, dwl) = track.width_left.eval(s);
    let (wr, dwr) = track.width_right.eval(s);
    for (excess, grad_s, grad_n) in [(n - wl, -dwl, 1.0), (-n - wr, -dwr, -1.0)] {
        if excess > 0.0 {
            let c = params.wall;
            e.value += c * excess * excess;
            let idx = [own + S, own + N];
            let grad = [grad_s, grad_n];
            for a in 0..2 {
                e.grad_x[idx[a]] += 2.0 * c * excess * grad[a];
                for b in 0..2 {
                    e.hess_x[(idx[a], idx[b])] += 2.0 * c * grad[a] * grad[b];
                }
            }
        }
    }

    let lim = gg.limits(v);

    // longitudinal acceleration limit
    let excess = ax - lim.ax_max;
    if excess > 0.0 {
        let c = params.ax_limit;
        e.value += c * excess * excess;
        let idx = [own + V, own + AX];
        let grad = [-lim.d_ax_max, 1.0];
        for a in 0..2 {
            e.grad_x[idx[a]] += 2.0 * c * excess * grad[a];
            for b in 0..2 {
                e.hess_x[(idx[a], idx[b])] += 2.0 * c * grad[a] * grad[b];
            }
        }
    }

    // combined acceleration diamond
    let (xm, ym) = (lim.ax_min, lim.ay_max);
    let h = (ax / xm).powi(2) + (ay / ym).powi(2);
    if h > 1.0 {
        let c = params.acceleration;
        let excess = h - 1.0;
        e.value += c * excess * excess;
        // h as a function of (V, ax, ay)
        let dh = [
            -2.0 * ax * ax * lim.d_ax_min / xm.powi(3) - 2.0 * ay * ay * lim.d_ay_max / ym.powi(3),
            2.0 * ax / (xm * xm),
            2.0 * ay / (ym * ym),
        ];
        let hvv = 6.0 * ax * ax * lim.d_ax_min.powi(2) / xm.powi(4)
            + 6.0 * ay * ay * lim.d_ay_max.powi(2) / ym.powi(4);
        let hvx = -4.0 * ax * lim.d_ax_min / xm.powi(3);
        let hvy = -4.0 * ay * lim.d_ay_max / ym.powi(3);
        let d2h = [
            [hvv, hvx, hvy],
            [hvx, 2.0 / (xm * xm), 0.0],
            [hvy, 0.0, 2.0 / (ym * ym)],
        ];
        let idx = [own + V, own + AX, own + AY];
        for a in 0..3 {
            e.grad_x[idx[a]] += 2.0 * c * excess * dh[a];
            for b in 0..3 {
                e.hess_x[(idx[a], idx[b])] += 2.0 * c * (dh[a] * dh[b] + excess * d2h[a][b]);
            }
        }
    }

    e
}

/// Terminal cost `-s_i + c_g sum_{j != i} s_j` over the players modeled in
/// the joint state (blocks of `block` entries).
pub fn terminal_cost(
    player: usize,
    x: &DVector<f64>,
    block: usize,
    params: &CostParams,
) -> TerminalExpansion {
    let dim = x.len();
    let players = dim / block;
    let mut grad = DVector::zeros(dim);
    let mut value = 0.0;
    for j in 0..players {
        let weight = if j == player { -1.0 } else { params.competition };
        value += weight * x[j * block + S];
        grad[j * block + S] = weight;
    }
    TerminalExpansion {
        value,
        grad,
        hess: DMatrix::zeros(dim, dim),
    }
}
