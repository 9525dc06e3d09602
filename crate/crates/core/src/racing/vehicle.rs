//! Point-mass vehicle model in curvilinear track coordinates.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use super::track::Track;
use crate::error::{Error, Result};

pub const STATE_DIM: usize = 6;
pub const INPUT_DIM: usize = 2;

pub const S: usize = 0;
pub const V: usize = 1;
pub const N: usize = 2;
pub const CHI: usize = 3;
pub const AX: usize = 4;
pub const AY: usize = 5;

/// Lowest admissible speed (m/s).
pub const MIN_SPEED: f64 = 0.1;
/// Lowest admissible value of `1 - n * kappa`.
pub const MIN_CHART_SCALE: f64 = 1e-6;

pub type StateVec = SVector<f64, STATE_DIM>;
pub type StateJacobian = SMatrix<f64, STATE_DIM, STATE_DIM>;
pub type InputJacobian = SMatrix<f64, STATE_DIM, INPUT_DIM>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleState {
    /// Progress along the centerline (m).
    pub s: f64,
    /// Speed (m/s).
    pub v: f64,
    /// Lateral displacement, left positive (m).
    pub n: f64,
    /// Heading relative to the centerline (rad).
    pub chi: f64,
    pub ax: f64,
    pub ay: f64,
}

impl VehicleState {
    pub fn new(s: f64, v: f64, n: f64) -> Self {
        Self {
            s,
            v,
            n,
            ..Default::default()
        }
    }

    pub fn to_array(self) -> [f64; STATE_DIM] {
        [self.s, self.v, self.n, self.chi, self.ax, self.ay]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            s: x[S],
            v: x[V],
            n: x[N],
            chi: x[CHI],
            ax: x[AX],
            ay: x[AY],
        }
    }

    pub fn to_vector(self) -> StateVec {
        StateVec::from(self.to_array())
    }

    /// Checks `V > MIN_SPEED` and chart validity.
    pub fn check(&self, track: &Track) -> Result<()> {
        if !self.to_array().iter().all(|v| v.is_finite()) {
            return Err(Error::Evaluation("non-finite vehicle state".into()));
        }
        if self.v <= MIN_SPEED {
            return Err(Error::Evaluation(format!("speed {} at or below floor", self.v)));
        }
        let scale = 1.0 - self.n * track.curvature.value(self.s);
        if scale <= MIN_CHART_SCALE {
            return Err(Error::Evaluation(format!(
                "curvilinear chart singular at s = {}, n = {}",
                self.s, self.n
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// Longitudinal jerk (m/s^3).
    pub jx: f64,
    /// Lateral jerk (m/s^3).
    pub jy: f64,
}

/// Time derivative of a single vehicle's state.
pub fn continuous_dynamics(state: &VehicleState, input: &ControlInput, track: &Track) -> Result<StateVec> {
    state.check(track)?;
    let kappa = track.curvature.value(state.s);
    let scale = 1.0 - state.n * kappa;
    let (sin, cos) = state.chi.sin_cos();
    let s_dot = state.v * cos / scale;
    Ok(StateVec::from([
        s_dot,
        state.ax,
        state.v * sin,
        state.ay / state.v - kappa * s_dot,
        input.jx,
        input.jy,
    ]))
}

/// Analytic Jacobians of [`continuous_dynamics`] w.r.t. state and input.
pub fn dynamics_jacobians(
    state: &VehicleState,
    _input: &ControlInput,
    track: &Track,
) -> Result<(StateJacobian, InputJacobian)> {
    state.check(track)?;
    let (kappa, dkappa) = track.curvature.eval(state.s);
    let scale = 1.0 - state.n * kappa;
    let (sin, cos) = state.chi.sin_cos();
    let v = state.v;
    let s_dot = v * cos / scale;

    let mut a = StateJacobian::zeros();
    // s_dot = V cos(chi) / (1 - n kappa(s))
    a[(S, S)] = s_dot * state.n * dkappa / scale;
    a[(S, V)] = cos / scale;
    a[(S, N)] = s_dot * kappa / scale;
    a[(S, CHI)] = -v * sin / scale;
    a[(V, AX)] = 1.0;
    a[(N, V)] = sin;
    a[(N, CHI)] = v * cos;
    // chi_dot = ay / V - kappa(s) s_dot
    a[(CHI, S)] = -dkappa * s_dot - kappa * a[(S, S)];
    a[(CHI, V)] = -state.ay / (v * v) - kappa * a[(S, V)];
    a[(CHI, N)] = -kappa * a[(S, N)];
    a[(CHI, CHI)] = -kappa * a[(S, CHI)];
    a[(CHI, AY)] = 1.0 / v;

    let mut b = InputJacobian::zeros();
    b[(AX, 0)] = 1.0;
    b[(AY, 1)] = 1.0;
    Ok((a, b))
}
