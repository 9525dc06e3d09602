use log::warn;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ScenarioConfig;
use crate::ilq::{self, OperatingPoint, SolutionConcept, SolverParams};
use crate::racing::{PlayerModel, RacingGame, VehicleState, INPUT_DIM};

/// How a player plans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    /// Predict the others at constant velocity, then solve a single-player
    /// problem against the prediction.
    Sequential,
    /// Solve the joint game for its open-loop Nash equilibrium.
    GameOpenLoop,
    /// Solve the joint game for its feedback Nash equilibrium.
    GameFeedback,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [
        PlannerKind::Sequential,
        PlannerKind::GameOpenLoop,
        PlannerKind::GameFeedback,
    ];

    pub fn is_game(self) -> bool {
        !matches!(self, PlannerKind::Sequential)
    }

    pub fn label(self) -> &'static str {
        match self {
            PlannerKind::Sequential => "sequential",
            PlannerKind::GameOpenLoop => "game-open-loop",
            PlannerKind::GameFeedback => "game-feedback",
        }
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| format!("unknown planner kind `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerSpec {
    pub kind: PlannerKind,
    pub solver: SolverParams,
}

impl PlannerSpec {
    /// Solver parameters with the mode implied by the planner kind.
    pub fn effective_params(&self) -> SolverParams {
        let mode = match self.kind {
            PlannerKind::GameOpenLoop => SolutionConcept::OpenLoop,
            PlannerKind::GameFeedback | PlannerKind::Sequential => SolutionConcept::Feedback,
        };
        SolverParams {
            mode,
            ..self.solver.clone()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Set when the solver failed and the previous plan was reused.
    pub failure: Option<String>,
}

/// Result of one planning step.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    /// Planned inputs of the planning player, `K` stages.
    pub inputs: Vec<DVector<f64>>,
    pub diagnostics: PlanDiagnostics,
    /// Inputs of every modeled player (`[k][i]`), used to warm-start the
    /// next step.
    pub warm_start: Vec<Vec<DVector<f64>>>,
    /// Planned trajectory of the planner's own model, if the solve succeeded.
    pub plan: Option<OperatingPoint>,
    /// Index of the planning player inside `plan`'s joint state.
    pub own_index: usize,
}

/// Constant-velocity straight-line prediction of a vehicle's `(s, n)` over
/// `horizon + 1` stages. Accelerations are ignored.
pub fn predict_constant_velocity(state: &VehicleState, horizon: usize, time_step: f64) -> Vec<[f64; 2]> {
    let (sin, cos) = state.chi.sin_cos();
    (0..=horizon)
        .map(|k| {
            let t = k as f64 * time_step;
            [state.s + state.v * cos * t, state.n + state.v * sin * t]
        })
        .collect()
}

fn player_model(scenario: &ScenarioConfig, i: usize) -> PlayerModel {
    PlayerModel {
        cost: scenario.players[i].cost.clone(),
        gg: scenario.players[i].gg.clone(),
    }
}

/// Builds the game a player solves: the single-player problem against
/// constant-velocity predictions for `Sequential`, the full joint game
/// otherwise. Returns the game and the player's index inside it.
pub fn planning_game(
    player: usize,
    states: &[VehicleState],
    kind: PlannerKind,
    scenario: &ScenarioConfig,
) -> (RacingGame, usize) {
    if kind.is_game() {
        let models = (0..states.len()).map(|j| player_model(scenario, j)).collect();
        (
            RacingGame::new(scenario.track.clone(), models, scenario.time_step, scenario.horizon),
            player,
        )
    } else {
        let predictions = states
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != player)
            .map(|(_, s)| predict_constant_velocity(s, scenario.horizon, scenario.time_step))
            .collect();
        let game = RacingGame::new(
            scenario.track.clone(),
            vec![player_model(scenario, player)],
            scenario.time_step,
            scenario.horizon,
        )
        .with_exogenous(predictions);
        (game, 0)
    }
}

/// Plans for `player` from the current joint state.
///
/// `warm_start` holds the previous solution already shifted to the current
/// time (inputs of every player modeled by this planner). A failed solve is
/// downgraded to a warning and the warm start's own inputs are returned as
/// the plan.
pub fn plan_step(
    player: usize,
    states: &[VehicleState],
    warm_start: Option<Vec<Vec<DVector<f64>>>>,
    spec: &PlannerSpec,
    scenario: &ScenarioConfig,
) -> PlanOutcome {
    let (game, own) = planning_game(player, states, spec.kind, scenario);
    let x0 = if spec.kind.is_game() {
        RacingGame::joint_state(states)
    } else {
        RacingGame::joint_state(&states[player..=player])
    };
    let fallback = warm_start.clone().unwrap_or_else(|| ilq::zero_inputs(&game));
    match ilq::solve(&game, &x0, warm_start, &spec.effective_params()) {
        Ok(result) => {
            let op = result.operating_point;
            PlanOutcome {
                inputs: op.player_inputs(own),
                diagnostics: PlanDiagnostics {
                    iterations: result.iterations,
                    converged: result.converged,
                    failure: None,
                },
                warm_start: op.inputs.clone(),
                plan: Some(op),
                own_index: own,
            }
        }
        Err(err) => {
            warn!("planner of player {player} failed ({err}); reusing previous plan");
            PlanOutcome {
                inputs: fallback.iter().map(|u| u[own].clone()).collect(),
                diagnostics: PlanDiagnostics {
                    iterations: 0,
                    converged: false,
                    failure: Some(err.to_string()),
                },
                warm_start: fallback,
                plan: None,
                own_index: own,
            }
        }
    }
}

/// Drops the first `steps` stages and pads the tail with zero jerk.
pub fn shift_inputs(inputs: &[Vec<DVector<f64>>], steps: usize) -> Vec<Vec<DVector<f64>>> {
    let horizon = inputs.len();
    let players = inputs.first().map_or(0, Vec::len);
    inputs
        .iter()
        .skip(steps)
        .cloned()
        .chain(std::iter::repeat_with(|| vec![DVector::zeros(INPUT_DIM); players]))
        .take(horizon)
        .collect()
}
