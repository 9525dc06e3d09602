use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Velocity-dependent acceleration envelope approximated by a diamond.
///
/// Tables are sampled over speed and linearly interpolated, held constant
/// below the first sample and above the last one. `ax_min` stores the
/// magnitude of the maximum deceleration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GGDiamond {
    pub speeds: Vec<f64>,
    pub ax_max: Vec<f64>,
    pub ax_min: Vec<f64>,
    pub ay_max: Vec<f64>,
    /// Top speed; the longitudinal acceleration limit is zero at and above it.
    pub v_max: f64,
}

/// Limits at one speed, with their derivatives w.r.t. speed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GGLimits {
    pub ax_max: f64,
    pub ax_min: f64,
    pub ay_max: f64,
    pub d_ax_max: f64,
    pub d_ax_min: f64,
    pub d_ay_max: f64,
}

impl GGDiamond {
    /// Constant lateral and braking limits, longitudinal limit falling
    /// linearly from `ax_max_at_rest` at standstill to zero at `v_max`.
    pub fn linear(v_max: f64, ax_max_at_rest: f64, ax_min: f64, ay_max: f64) -> Self {
        Self {
            speeds: vec![0.0, v_max],
            ax_max: vec![ax_max_at_rest, 0.0],
            ax_min: vec![ax_min, ax_min],
            ay_max: vec![ay_max, ay_max],
            v_max,
        }
    }

    /// Default envelope for a given top speed.
    pub fn with_top_speed(v_max: f64) -> Self {
        Self::linear(v_max, 6.0, 15.0, 12.0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.speeds.len();
        if n == 0 || self.ax_max.len() != n || self.ax_min.len() != n || self.ay_max.len() != n {
            return Err(Error::InvalidParameter("gg tables must share one non-empty speed grid".into()));
        }
        if self.speeds.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("gg speed grid must be strictly increasing".into()));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::InvalidParameter("v_max must be positive".into()));
        }
        if self.ax_min.iter().chain(&self.ay_max).any(|&a| !(a > 0.0))
            || self.ax_max.iter().any(|&a| !(a >= 0.0))
        {
            return Err(Error::InvalidParameter("gg limits must be positive".into()));
        }
        Ok(())
    }

    /// Interpolated limits at speed `v`.
    pub fn limits(&self, v: f64) -> GGLimits {
        let (ax_max, d_ax_max) = if v >= self.v_max {
            (0.0, 0.0)
        } else {
            interpolate(&self.speeds, &self.ax_max, v)
        };
        let (ax_min, d_ax_min) = interpolate(&self.speeds, &self.ax_min, v);
        let (ay_max, d_ay_max) = interpolate(&self.speeds, &self.ay_max, v);
        GGLimits {
            ax_max,
            ax_min,
            ay_max,
            d_ax_max,
            d_ax_min,
            d_ay_max,
        }
    }
}

/// `(a_x,max, a_x,min, a_y,max)` at speed `v`.
pub fn gg_limits(v: f64, diamond: &GGDiamond) -> (f64, f64, f64) {
    let l = diamond.limits(v);
    (l.ax_max, l.ax_min, l.ay_max)
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> (f64, f64) {
    let last = xs.len() - 1;
    if x < xs[0] {
        return (ys[0], 0.0);
    }
    if x >= xs[last] {
        return (ys[last], 0.0);
    }
    let seg = xs.partition_point(|&k| k <= x) - 1;
    let slope = (ys[seg + 1] - ys[seg]) / (xs[seg + 1] - xs[seg]);
    (ys[seg] + slope * (x - xs[seg]), slope)
}
