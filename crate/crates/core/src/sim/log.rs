use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::planner::PlanDiagnostics;
use super::ScenarioConfig;
use crate::racing::{joint_dynamics, ControlInput, RacingGame, Track, VehicleState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Event {
    Collision { time: f64, pair: (usize, usize) },
    OvertakeComplete { time: f64, overtaker: usize, target: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    #[default]
    Running,
    /// The overtake completed and the margin after it elapsed.
    Overtaken,
    Collision,
    /// Duration reached without a completed overtake.
    Timeout,
    /// A vehicle left the model's validity region.
    InvalidState,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Running => "running",
            Outcome::Overtaken => "overtaken",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
            Outcome::InvalidState => "invalid-state",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    pub time: f64,
    pub player: usize,
    pub diagnostics: PlanDiagnostics,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub outcome: Outcome,
    /// Interpolated time at which the overtaker's lead reached the gap.
    pub overtake_time: Option<f64>,
    pub collision: bool,
    pub replans: usize,
    pub converged_replans: usize,
    pub failed_replans: usize,
}

/// Time series of a closed-loop run. Row `k` holds the joint state at
/// `times[k]` and the inputs applied over the following step; the inputs of
/// the final row are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub players: usize,
    pub time_step: f64,
    pub seed: u64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<VehicleState>>,
    pub inputs: Vec<Vec<ControlInput>>,
    pub replans: Vec<ReplanRecord>,
    pub events: Vec<Event>,
    pub anomalies: Vec<String>,
    pub outcome: Outcome,
    pub summary: SimSummary,
}

impl SimLog {
    pub fn new(players: usize, time_step: f64, seed: u64) -> Self {
        Self {
            players,
            time_step,
            seed,
            times: Vec::new(),
            states: Vec::new(),
            inputs: Vec::new(),
            replans: Vec::new(),
            events: Vec::new(),
            anomalies: Vec::new(),
            outcome: Outcome::Running,
            summary: SimSummary::default(),
        }
    }

    pub(crate) fn push_step(&mut self, time: f64, states: Vec<VehicleState>, inputs: Vec<ControlInput>) {
        self.times.push(time);
        self.states.push(states);
        self.inputs.push(inputs);
    }

    pub(crate) fn push_state(&mut self, time: f64, states: Vec<VehicleState>) {
        let n = states.len();
        self.push_step(time, states, vec![ControlInput::default(); n]);
    }

    pub(crate) fn finish(mut self, scenario: &ScenarioConfig) -> Self {
        let overtake = overtaking_time(&self, scenario.overtaker, scenario.target, scenario.overtake_gap);
        self.summary = SimSummary {
            outcome: self.outcome,
            overtake_time: overtake,
            collision: self.collision().is_some(),
            replans: self.replans.len(),
            converged_replans: self.replans.iter().filter(|r| r.diagnostics.converged).count(),
            failed_replans: self
                .replans
                .iter()
                .filter(|r| r.diagnostics.failure.is_some())
                .count(),
        };
        self
    }

    pub fn collision(&self) -> Option<(f64, (usize, usize))> {
        self.events.iter().find_map(|e| match e {
            Event::Collision { time, pair } => Some((*time, *pair)),
            _ => None,
        })
    }

    /// Progress, speed and lateral position of one player over time.
    pub fn track_of(&self, player: usize) -> impl Iterator<Item = &VehicleState> + '_ {
        self.states.iter().map(move |s| &s[player])
    }

    pub fn min_speed(&self, player: usize) -> f64 {
        self.track_of(player).map(|s| s.v).fold(f64::INFINITY, f64::min)
    }

    pub fn max_lateral_deviation(&self, player: usize) -> f64 {
        let n0 = self.states.first().map_or(0.0, |s| s[player].n);
        self.track_of(player).map(|s| (s.n - n0).abs()).fold(0.0, f64::max)
    }

    /// Largest difference between the logged states and a forward-Euler
    /// replay of the logged inputs from the first logged state.
    pub fn replay_error(&self, track: &Track) -> f64 {
        let Some(first) = self.states.first() else {
            return 0.0;
        };
        let mut x = RacingGame::joint_state(first);
        let mut worst: f64 = 0.0;
        for k in 1..self.states.len() {
            let u: Vec<_> = self.inputs[k - 1]
                .iter()
                .map(|c| nalgebra::DVector::from_vec(vec![c.jx, c.jy]))
                .collect();
            match joint_dynamics(&x, &u, track) {
                Ok(dx) => x += dx * self.time_step,
                Err(_) => return f64::INFINITY,
            }
            let logged = RacingGame::joint_state(&self.states[k]);
            worst = worst.max((&x - logged).amax());
        }
        worst
    }

    pub fn csv_header(players: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for i in 1..=players {
            for name in ["s", "V", "n", "chi", "ax", "ay", "jx", "jy"] {
                h.push(format!("{name}_{i}"));
            }
        }
        h
    }

    /// One row per time step: `t`, then `s, V, n, chi, ax, ay, jx, jy` per
    /// player.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header(self.players))?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            for (s, u) in self.states[k].iter().zip(&self.inputs[k]) {
                row.extend(s.to_array().iter().map(f64::to_string));
                row.push(u.jx.to_string());
                row.push(u.jy.to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Key-value summary block.
    pub fn summary_text(&self) -> String {
        let s = &self.summary;
        let mut out = String::new();
        let _ = writeln!(out, "outcome = {}", s.outcome.label());
        let _ = writeln!(
            out,
            "overtake_time = {}",
            s.overtake_time.map_or_else(|| "none".to_string(), |t| t.to_string())
        );
        let _ = writeln!(out, "collision = {}", s.collision);
        if let Some((t, (i, j))) = self.collision() {
            let _ = writeln!(out, "collision_time = {t}");
            let _ = writeln!(out, "collision_pair = {},{}", i + 1, j + 1);
        }
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "replans = {}", s.replans);
        let _ = writeln!(out, "converged_replans = {}", s.converged_replans);
        let _ = writeln!(out, "failed_replans = {}", s.failed_replans);
        for p in 0..self.players {
            let iters: Vec<String> = self
                .replans
                .iter()
                .filter(|r| r.player == p)
                .map(|r| r.diagnostics.iterations.to_string())
                .collect();
            let _ = writeln!(out, "iterations_{} = {}", p + 1, iters.join(","));
        }
        for a in &self.anomalies {
            let _ = writeln!(out, "anomaly = {a}");
        }
        out
    }
}

/// First time at which `overtaker` leads `target` by at least `gap`,
/// linearly interpolated between log samples.
pub fn overtaking_time(log: &SimLog, overtaker: usize, target: usize, gap: f64) -> Option<f64> {
    let lead = |k: usize| log.states[k][overtaker].s - log.states[k][target].s;
    if log.states.is_empty() {
        return None;
    }
    if lead(0) >= gap {
        return Some(log.times[0]);
    }
    (1..log.states.len()).find_map(|k| {
        let (d0, d1) = (lead(k - 1), lead(k));
        (d1 >= gap).then(|| {
            let frac = (gap - d0) / (d1 - d0);
            log.times[k - 1] + frac * (log.times[k] - log.times[k - 1])
        })
    })
}
