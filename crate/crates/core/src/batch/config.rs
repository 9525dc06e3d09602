//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "track": { "length": 600, "width_left": [[0, 6]], "width_right": [[0, 6]] },
//!   "players": [ { "initial": { "s": 50, "v": 30 }, "planner": "game-feedback",
//!                  "gg": { ... } }, ... ],
//!   "solver": { "max_iters": 50 },
//!   "simulation": { "horizon": 40 },
//!   "batch": { "samples": 20, "ratios": [1, 10] }
//! }
//! ```
//!
//! Every section and field is optional and falls back to the library
//! defaults; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BatchSpec, SamplingRule};
use crate::error::{Error, Result};
use crate::ilq::{SolutionConcept, SolverParams};
use crate::racing::Track;
use crate::sim::{PlannerKind, PlayerSetup, ScenarioConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    pub horizon: usize,
    pub time_step: f64,
    pub replan_interval: f64,
    pub duration: f64,
    pub overtake_gap: f64,
    pub overtake_margin: f64,
    pub overtaker: usize,
    pub target: usize,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        Self {
            horizon: s.horizon,
            time_step: s.time_step,
            replan_interval: s.replan_interval,
            duration: s.duration,
            overtake_gap: s.overtake_gap,
            overtake_margin: s.overtake_margin,
            overtaker: s.overtaker,
            target: s.target,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSettings {
    pub ego_planners: Vec<PlannerKind>,
    pub opponent_planners: Vec<PlannerKind>,
    /// Opponent-to-ego collision weight ratios of the batch.
    pub ratios: Vec<f64>,
    pub samples: usize,
    pub sampling: SamplingRule,
    pub seed: u64,
    /// Ratios of the `sweep` study.
    pub sweep_ratios: Vec<f64>,
}

impl Default for BatchSettings {
    fn default() -> Self {
        Self {
            ego_planners: PlannerKind::ALL.to_vec(),
            opponent_planners: PlannerKind::ALL.to_vec(),
            ratios: vec![1.0, 10.0],
            samples: 20,
            sampling: SamplingRule::UpperHalf,
            seed: 0,
            sweep_ratios: vec![1.0, 10.0, 100.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub track: Track,
    pub players: Vec<PlayerSetup>,
    pub solver: SolverParams,
    pub simulation: SimulationSettings,
    pub batch: BatchSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        Self {
            track: s.track,
            players: s.players,
            solver: s.solver,
            simulation: SimulationSettings::default(),
            batch: BatchSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn scenario(&self) -> ScenarioConfig {
        let sim = &self.simulation;
        ScenarioConfig {
            track: self.track.clone(),
            players: self.players.clone(),
            solver: self.solver.clone(),
            horizon: sim.horizon,
            time_step: sim.time_step,
            replan_interval: sim.replan_interval,
            duration: sim.duration,
            overtake_gap: sim.overtake_gap,
            overtake_margin: sim.overtake_margin,
            overtaker: sim.overtaker,
            target: sim.target,
        }
    }

    pub fn batch_spec(&self) -> BatchSpec {
        BatchSpec {
            base: self.scenario(),
            ego_planners: self.batch.ego_planners.clone(),
            opponent_planners: self.batch.opponent_planners.clone(),
            ratios: self.batch.ratios.clone(),
            samples: self.batch.samples,
            sampling: self.batch.sampling.clone(),
            seed: self.batch.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario().validate()?;
        if self.batch.samples == 0 {
            return Err(Error::Config("batch.samples must be at least 1".into()));
        }
        if self.batch.ratios.iter().chain(&self.batch.sweep_ratios).any(|r| !(*r > 0.0)) {
            return Err(Error::Config("cost ratios must be positive".into()));
        }
        Ok(())
    }

    /// Forces one solution concept: the solver mode and every game-theoretic
    /// planner (players and batch matrix) switch to it.
    pub fn force_mode(&mut self, mode: SolutionConcept) {
        let game = match mode {
            SolutionConcept::OpenLoop => PlannerKind::GameOpenLoop,
            SolutionConcept::Feedback => PlannerKind::GameFeedback,
        };
        let swap = |k: PlannerKind| if k.is_game() { game } else { k };
        self.solver.mode = mode;
        for p in &mut self.players {
            p.planner = swap(p.planner);
        }
        for list in [&mut self.batch.ego_planners, &mut self.batch.opponent_planners] {
            let mut out: Vec<PlannerKind> = Vec::new();
            for k in list.iter().map(|&k| swap(k)) {
                if !out.contains(&k) {
                    out.push(k);
                }
            }
            *list = out;
        }
    }
}
