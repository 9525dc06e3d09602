//! Moving-horizon closed-loop simulation.
//!
//! Every player re-plans from the current joint state at a fixed interval
//! with its own solver instance, executes the beginning of its plan through
//! the exact model dynamics, and the loop repeats. Planners never share
//! solutions.

pub mod log;
pub mod planner;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use self::log::{overtaking_time, Event, Outcome, ReplanRecord, SimLog, SimSummary};
pub use planner::{
    plan_step, planning_game, predict_constant_velocity, shift_inputs, PlanDiagnostics,
    PlanOutcome, PlannerKind, PlannerSpec,
};

use crate::error::{Error, Result};
use crate::ilq::SolverParams;
use crate::racing::{joint_dynamics, ControlInput, CostParams, GGDiamond, RacingGame, Track, VehicleState};

/// One participant of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSetup {
    pub initial: VehicleState,
    pub planner: PlannerKind,
    #[serde(default)]
    pub cost: CostParams,
    pub gg: GGDiamond,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub track: Track,
    pub players: Vec<PlayerSetup>,
    pub solver: SolverParams,
    /// Planning horizon `K` (stages).
    pub horizon: usize,
    /// Integration and planning step (s).
    pub time_step: f64,
    /// Time between re-plans (s), a multiple of `time_step`.
    pub replan_interval: f64,
    /// Maximum simulated time (s).
    pub duration: f64,
    /// Longitudinal lead (m) that completes an overtake.
    pub overtake_gap: f64,
    /// Extra time simulated after an overtake completes (s).
    pub overtake_margin: f64,
    /// Player expected to overtake.
    pub overtaker: usize,
    /// Player being overtaken.
    pub target: usize,
}

impl Default for ScenarioConfig {
    /// Head-to-head on a straight: the ego (player 0) leads by 50 m at its
    /// top speed of 30 m/s; the opponent follows at its top speed of 40 m/s.
    fn default() -> Self {
        Self {
            track: Track::default(),
            players: vec![
                PlayerSetup {
                    initial: VehicleState::new(50.0, 30.0, 0.0),
                    planner: PlannerKind::GameOpenLoop,
                    cost: CostParams::default(),
                    gg: GGDiamond::with_top_speed(30.0),
                },
                PlayerSetup {
                    initial: VehicleState::new(0.0, 40.0, 0.5),
                    planner: PlannerKind::Sequential,
                    cost: CostParams::default(),
                    gg: GGDiamond::with_top_speed(40.0),
                },
            ],
            solver: SolverParams::default(),
            horizon: 40,
            time_step: 0.1,
            replan_interval: 0.1,
            duration: 20.0,
            overtake_gap: 20.0,
            overtake_margin: 5.0,
            overtaker: 1,
            target: 0,
        }
    }
}

impl ScenarioConfig {
    /// Number of integration steps between re-plans.
    pub fn replan_steps(&self) -> Result<usize> {
        let ratio = self.replan_interval / self.time_step;
        let steps = ratio.round();
        if !(steps >= 1.0) || (ratio - steps).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "replan interval {} is not a positive multiple of the time step {}",
                self.replan_interval, self.time_step
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.track.validate()?;
        self.solver.validate()?;
        if self.players.is_empty() {
            return Err(Error::Config("scenario has no players".into()));
        }
        if self.horizon == 0 || !(self.time_step > 0.0) || !(self.duration > 0.0) {
            return Err(Error::Config("horizon, time step and duration must be positive".into()));
        }
        self.replan_steps()?;
        if self.overtaker >= self.players.len() || self.target >= self.players.len() {
            return Err(Error::Config("overtaker/target index out of range".into()));
        }
        for (i, p) in self.players.iter().enumerate() {
            p.cost
                .validate()
                .and_then(|_| p.gg.validate())
                .and_then(|_| p.initial.check(&self.track))
                .map_err(|e| Error::Config(format!("player {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn planner_spec(&self, player: usize) -> PlannerSpec {
        PlannerSpec {
            kind: self.players[player].planner,
            solver: self.solver.clone(),
        }
    }

    pub fn initial_states(&self) -> Vec<VehicleState> {
        self.players.iter().map(|p| p.initial).collect()
    }

    /// The same scenario reflected across the centerline.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.track.width_left = self.track.width_right.clone();
        out.track.width_right = self.track.width_left.clone();
        for p in &mut out.players {
            p.initial.n = -p.initial.n;
            p.initial.chi = -p.initial.chi;
            p.initial.ay = -p.initial.ay;
        }
        out
    }
}

/// Axis-aligned overlap test in track coordinates; returns the first
/// colliding pair `(i, j)`, `i < j`. `geometry` gives each vehicle's
/// `(length, width)`.
pub fn detect_collision(states: &[VehicleState], geometry: &[(f64, f64)]) -> Option<(usize, usize)> {
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let length = 0.5 * (geometry[i].0 + geometry[j].0);
            let width = 0.5 * (geometry[i].1 + geometry[j].1);
            if (states[i].s - states[j].s).abs() < length && (states[i].n - states[j].n).abs() < width {
                return Some((i, j));
            }
        }
    }
    None
}

/// Executes a scenario in closed loop.
///
/// The seed is recorded in the log; the simulation itself is deterministic.
pub fn run_scenario(scenario: &ScenarioConfig, seed: u64) -> Result<SimLog> {
    scenario.validate()?;
    let players = scenario.players.len();
    let dt = scenario.time_step;
    let replan_steps = scenario.replan_steps()?;
    let total_steps = (scenario.duration / dt).round() as usize;
    let geometry: Vec<(f64, f64)> = scenario
        .players
        .iter()
        .map(|p| (p.cost.vehicle_length, p.cost.vehicle_width))
        .collect();
    let specs: Vec<PlannerSpec> = (0..players).map(|i| scenario.planner_spec(i)).collect();

    let mut log = SimLog::new(players, dt, seed);
    let mut states = scenario.initial_states();
    let mut warm: Vec<Option<Vec<Vec<DVector<f64>>>>> = vec![None; players];
    let mut plans: Vec<Vec<DVector<f64>>> = vec![Vec::new(); players];
    let mut plan_cursor = 0;
    let mut stop_at: Option<usize> = None;

    if let Some(pair) = detect_collision(&states, &geometry) {
        log.push_state(0.0, states.clone());
        log.events.push(Event::Collision { time: 0.0, pair });
        log.outcome = Outcome::Collision;
        return Ok(log.finish(scenario));
    }

    for step in 0..total_steps {
        let t = step as f64 * dt;
        if step % replan_steps == 0 {
            for i in 0..players {
                let outcome = plan_step(i, &states, warm[i].take(), &specs[i], scenario);
                log.replans.push(ReplanRecord {
                    time: t,
                    player: i,
                    diagnostics: outcome.diagnostics.clone(),
                });
                plans[i] = outcome.inputs;
                warm[i] = Some(shift_inputs(&outcome.warm_start, replan_steps));
            }
            plan_cursor = 0;
        }

        let inputs: Vec<DVector<f64>> = plans
            .iter()
            .map(|p| p.get(plan_cursor).cloned().unwrap_or_else(|| DVector::zeros(2)))
            .collect();
        plan_cursor += 1;

        log.push_step(
            t,
            states.clone(),
            inputs.iter().map(|u| ControlInput { jx: u[0], jy: u[1] }).collect(),
        );

        let x = RacingGame::joint_state(&states);
        let next = match joint_dynamics(&x, &inputs, &scenario.track) {
            Ok(dx) => x + dx * dt,
            Err(err) => {
                log.anomalies.push(format!("t = {t:.3}: {err}"));
                log.outcome = Outcome::InvalidState;
                return Ok(log.finish(scenario));
            }
        };
        states = RacingGame::vehicle_states(&next);
        let t_next = (step + 1) as f64 * dt;

        if let Err(err) = states.iter().try_for_each(|s| s.check(&scenario.track)) {
            log.push_state(t_next, states.clone());
            log.anomalies.push(format!("t = {t_next:.3}: {err}"));
            log.outcome = Outcome::InvalidState;
            return Ok(log.finish(scenario));
        }
        if let Some(pair) = detect_collision(&states, &geometry) {
            log.push_state(t_next, states.clone());
            log.events.push(Event::Collision { time: t_next, pair });
            log.outcome = Outcome::Collision;
            return Ok(log.finish(scenario));
        }
        let (j, i) = (scenario.overtaker, scenario.target);
        if stop_at.is_none() && states[j].s - states[i].s >= scenario.overtake_gap {
            log.events.push(Event::OvertakeComplete {
                time: t_next,
                overtaker: j,
                target: i,
            });
            let margin = (scenario.overtake_margin / dt).round() as usize;
            stop_at = Some(step + 1 + margin);
        }
        if stop_at == Some(step + 1) {
            log.push_state(t_next, states.clone());
            log.outcome = Outcome::Overtaken;
            return Ok(log.finish(scenario));
        }
    }
    log.push_state(total_steps as f64 * dt, states);
    log.outcome = if stop_at.is_some() {
        Outcome::Overtaken
    } else {
        Outcome::Timeout
    };
    Ok(log.finish(scenario))
}
