//! Head-to-head racing as a dynamic game.
//!
//! Each player is a point mass in curvilinear track coordinates with state
//! `(s, V, n, chi, a_x, a_y)` and jerk inputs `(j_x, j_y)`. Players are
//! coupled through a collision penalty in the stage cost and through the
//! opponents' progress in the terminal cost.

pub mod cost;
pub mod gg;
pub mod track;
pub mod vehicle;

use nalgebra::{DMatrix, DVector};

pub use cost::{collision_term, stage_cost, terminal_cost, CostParams, OtherVehicle};
pub use gg::{gg_limits, GGDiamond, GGLimits};
pub use track::{Profile, Track};
pub use vehicle::{
    continuous_dynamics, dynamics_jacobians, ControlInput, VehicleState, INPUT_DIM, STATE_DIM,
};

use crate::error::{Error, Result};
use crate::ilq::{GameDefinition, StageExpansion, TerminalExpansion};

/// Cost parameters and acceleration envelope of one player.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerModel {
    pub cost: CostParams,
    pub gg: GGDiamond,
}

/// The racing game over the players held in the joint state, optionally
/// with exogenous vehicles whose positions are given per stage.
#[derive(Clone, Debug)]
pub struct RacingGame {
    pub track: Track,
    pub players: Vec<PlayerModel>,
    /// Predicted `(s, n)` of vehicles outside the state, `K + 1` entries each.
    pub exogenous: Vec<Vec<[f64; 2]>>,
    pub time_step: f64,
    pub horizon: usize,
}

impl RacingGame {
    pub fn new(track: Track, players: Vec<PlayerModel>, time_step: f64, horizon: usize) -> Self {
        Self {
            track,
            players,
            exogenous: Vec::new(),
            time_step,
            horizon,
        }
    }

    pub fn with_exogenous(mut self, predictions: Vec<Vec<[f64; 2]>>) -> Self {
        self.exogenous = predictions;
        self
    }

    /// Packs per-player states into a joint state vector.
    pub fn joint_state(states: &[VehicleState]) -> DVector<f64> {
        DVector::from_iterator(
            states.len() * STATE_DIM,
            states.iter().flat_map(|s| s.to_array()),
        )
    }

    /// Unpacks a joint state.
    pub fn vehicle_states(x: &DVector<f64>) -> Vec<VehicleState> {
        x.as_slice()
            .chunks(STATE_DIM)
            .map(VehicleState::from_slice)
            .collect()
    }

    fn others(&self, player: usize, stage: usize, x: &DVector<f64>) -> Vec<OtherVehicle> {
        let mut out: Vec<OtherVehicle> = (0..self.players.len())
            .filter(|&j| j != player)
            .map(|j| OtherVehicle {
                s: x[j * STATE_DIM + vehicle::S],
                n: x[j * STATE_DIM + vehicle::N],
                offset: Some(j * STATE_DIM),
            })
            .collect();
        for pred in &self.exogenous {
            let [s, n] = pred[stage.min(pred.len() - 1)];
            out.push(OtherVehicle { s, n, offset: None });
        }
        out
    }
}

fn to_input(u: &DVector<f64>) -> ControlInput {
    ControlInput { jx: u[0], jy: u[1] }
}

/// Joint vector field: the per-vehicle dynamics stacked block by block.
pub fn joint_dynamics(x: &DVector<f64>, inputs: &[DVector<f64>], track: &Track) -> Result<DVector<f64>> {
    if x.len() != inputs.len() * STATE_DIM {
        return Err(Error::Dimension(format!(
            "joint state of length {} for {} players",
            x.len(),
            inputs.len()
        )));
    }
    let mut out = DVector::zeros(x.len());
    for (i, u) in inputs.iter().enumerate() {
        let state = VehicleState::from_slice(&x.as_slice()[i * STATE_DIM..(i + 1) * STATE_DIM]);
        let d = continuous_dynamics(&state, &to_input(u), track)?;
        out.rows_mut(i * STATE_DIM, STATE_DIM).copy_from(&d);
    }
    Ok(out)
}

/// Block-diagonal Jacobians of [`joint_dynamics`].
pub fn joint_jacobians(
    x: &DVector<f64>,
    inputs: &[DVector<f64>],
    track: &Track,
) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let dim = x.len();
    let mut a = DMatrix::zeros(dim, dim);
    let mut bs = Vec::with_capacity(inputs.len());
    for (i, u) in inputs.iter().enumerate() {
        let off = i * STATE_DIM;
        let state = VehicleState::from_slice(&x.as_slice()[off..off + STATE_DIM]);
        let (ai, bi) = dynamics_jacobians(&state, &to_input(u), track)?;
        a.view_mut((off, off), (STATE_DIM, STATE_DIM)).copy_from(&ai);
        let mut b = DMatrix::zeros(dim, INPUT_DIM);
        b.view_mut((off, 0), (STATE_DIM, INPUT_DIM)).copy_from(&bi);
        bs.push(b);
    }
    Ok((a, bs))
}

impl GameDefinition for RacingGame {
    fn num_players(&self) -> usize {
        self.players.len()
    }

    fn state_dim(&self) -> usize {
        self.players.len() * STATE_DIM
    }

    fn input_dim(&self, _player: usize) -> usize {
        INPUT_DIM
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn time_step(&self) -> f64 {
        self.time_step
    }

    fn vector_field(&self, _stage: usize, x: &DVector<f64>, u: &[DVector<f64>]) -> Result<DVector<f64>> {
        joint_dynamics(x, u, &self.track)
    }

    fn vector_field_jacobians(
        &self,
        _stage: usize,
        x: &DVector<f64>,
        u: &[DVector<f64>],
    ) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        joint_jacobians(x, u, &self.track)
    }

    fn stage_cost(&self, player: usize, stage: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        self.stage_expansion(player, stage, x, u).value
    }

    fn stage_expansion(
        &self,
        player: usize,
        stage: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> StageExpansion {
        let model = &self.players[player];
        stage_cost(
            player * STATE_DIM,
            x,
            u,
            &self.others(player, stage, x),
            &self.track,
            &model.cost,
            &model.gg,
        )
    }

    fn terminal_cost(&self, player: usize, x: &DVector<f64>) -> f64 {
        self.terminal_expansion(player, x).value
    }

    fn terminal_expansion(&self, player: usize, x: &DVector<f64>) -> TerminalExpansion {
        let params = &self.players[player].cost;
        let mut e = terminal_cost(player, x, STATE_DIM, params);
        // predicted opponents' progress is a constant here
        for pred in &self.exogenous {
            let [s, _] = pred[self.horizon.min(pred.len() - 1)];
            e.value += params.competition * s;
        }
        e
    }

    fn position_indices(&self) -> Vec<(usize, usize)> {
        (0..self.players.len())
            .map(|i| (i * STATE_DIM + vehicle::S, i * STATE_DIM + vehicle::N))
            .collect()
    }
}
