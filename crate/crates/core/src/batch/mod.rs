//! Monte Carlo batches over planner pairings and collision-cost ratios,
//! collision-cost sweeps, and their export.

pub mod config;
pub mod export;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{BatchSettings, ExperimentConfig, SimulationSettings};
pub use export::{
    export_batch, export_log, export_plan, export_sweep, histogram, read_records_csv,
    render_table, ExportFormat, HistogramBin, HISTOGRAM_BIN_WIDTH,
};

use crate::error::{Error, Result};
use crate::racing::{RacingGame, Track, STATE_DIM};
use crate::sim::{plan_step, run_scenario, Outcome, PlannerKind, ScenarioConfig};

/// How initial lateral positions are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields, from = "SamplingRepr")]
pub enum SamplingRule {
    /// Uniform over `0 <= n_ego < n_opponent <= w_left - w_veh / 2`.
    UpperHalf,
    /// Every sample uses the same positions.
    Fixed { ego: f64, opponent: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum SamplingRepr {
    UpperHalf {},
    Fixed { ego: f64, opponent: f64 },
}

impl From<SamplingRepr> for SamplingRule {
    fn from(r: SamplingRepr) -> Self {
        match r {
            SamplingRepr::UpperHalf {} => Self::UpperHalf,
            SamplingRepr::Fixed { ego, opponent } => Self::Fixed { ego, opponent },
        }
    }
}

/// Draws `count` pairs `(n_ego, n_opponent)`.
///
/// `UpperHalf` samples i.i.d. uniformly on the triangle by rejection from
/// the enclosing square; the narrowest left width of the track is used.
pub fn sample_starts(
    rule: &SamplingRule,
    count: usize,
    seed: u64,
    track: &Track,
    vehicle_width: f64,
) -> Result<Vec<(f64, f64)>> {
    match *rule {
        SamplingRule::Fixed { ego, opponent } => Ok(vec![(ego, opponent); count]),
        SamplingRule::UpperHalf => {
            let upper = track.width_left.min_value() - 0.5 * vehicle_width;
            if !(upper > 0.0) {
                return Err(Error::Config(format!(
                    "no admissible lateral start region (upper bound {upper})"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let a: f64 = rng.gen_range(0.0..=upper);
                let b: f64 = rng.gen_range(0.0..=upper);
                if a < b {
                    out.push((a, b));
                }
            }
            Ok(out)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchSpec {
    /// Scenario with player 0 as ego and player 1 as opponent.
    pub base: ScenarioConfig,
    pub ego_planners: Vec<PlannerKind>,
    pub opponent_planners: Vec<PlannerKind>,
    /// Opponent-to-ego collision weight ratios.
    pub ratios: Vec<f64>,
    pub samples: usize,
    pub sampling: SamplingRule,
    pub seed: u64,
}

impl BatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        if self.ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("cost ratios must be positive".into()));
        }
        if self.base.players.len() != 2 {
            return Err(Error::Config("batches need exactly two players".into()));
        }
        self.base.validate()
    }

    /// Scenario of one cell and sample.
    pub fn scenario(&self, ego: PlannerKind, opponent: PlannerKind, ratio: f64, start: (f64, f64)) -> ScenarioConfig {
        let mut sc = self.base.clone();
        sc.players[0].planner = ego;
        sc.players[1].planner = opponent;
        sc.players[1].cost.collision = ratio * sc.players[0].cost.collision;
        sc.players[0].initial.n = start.0;
        sc.players[1].initial.n = start.1;
        sc
    }
}

/// Outcome of one simulated sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub ratio: f64,
    pub ego: PlannerKind,
    pub opponent: PlannerKind,
    pub sample: usize,
    pub ego_n0: f64,
    pub opponent_n0: f64,
    pub outcome: Outcome,
    pub overtake_time: Option<f64>,
    pub collision: bool,
    pub replans: usize,
    pub converged_replans: usize,
    pub failed_replans: usize,
    pub opponent_min_speed: f64,
    pub ego_max_lateral: f64,
    /// Error message when the scenario could not be run at all.
    pub error: Option<String>,
}

/// Aggregate of one (ratio, ego, opponent) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub ratio: f64,
    pub ego: PlannerKind,
    pub opponent: PlannerKind,
    pub samples: usize,
    /// Samples with a completed overtake.
    pub completed: usize,
    /// Mean over completed overtakes only.
    pub mean_overtake_time: Option<f64>,
    pub collisions: usize,
    pub collision_probability: f64,
    pub replans: usize,
    pub converged_replans: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub cells: Vec<CellSummary>,
    pub records: Vec<SampleRecord>,
}

impl BatchResult {
    pub fn cell(&self, ratio: f64, ego: PlannerKind, opponent: PlannerKind) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.ratio == ratio && c.ego == ego && c.opponent == opponent)
    }

    /// Fraction of planning steps, over all samples, that converged.
    pub fn converged_fraction(&self) -> f64 {
        let (conv, total) = self
            .records
            .iter()
            .fold((0, 0), |(c, t), r| (c + r.converged_replans, t + r.replans));
        if total == 0 {
            1.0
        } else {
            conv as f64 / total as f64
        }
    }
}

/// Groups per-sample records into cells, in first-appearance order.
pub fn aggregate(records: &[SampleRecord]) -> Vec<CellSummary> {
    let mut cells: Vec<CellSummary> = Vec::new();
    for r in records {
        let idx = match cells
            .iter()
            .position(|c| c.ratio == r.ratio && c.ego == r.ego && c.opponent == r.opponent)
        {
            Some(i) => i,
            None => {
                cells.push(CellSummary {
                    ratio: r.ratio,
                    ego: r.ego,
                    opponent: r.opponent,
                    samples: 0,
                    completed: 0,
                    mean_overtake_time: None,
                    collisions: 0,
                    collision_probability: 0.0,
                    replans: 0,
                    converged_replans: 0,
                });
                cells.len() - 1
            }
        };
        let c = &mut cells[idx];
        c.samples += 1;
        c.collisions += usize::from(r.collision);
        c.replans += r.replans;
        c.converged_replans += r.converged_replans;
        if let Some(t) = r.overtake_time {
            c.completed += 1;
            c.mean_overtake_time = Some(c.mean_overtake_time.unwrap_or(0.0) + t);
        }
    }
    for c in &mut cells {
        c.mean_overtake_time = c.mean_overtake_time.map(|sum| sum / c.completed as f64);
        c.collision_probability = c.collisions as f64 / c.samples as f64;
    }
    cells
}

/// Runs every (ratio, ego, opponent, sample) combination. Samples share the
/// same starting positions across cells; results do not depend on the
/// number of worker threads.
pub fn run_batch(spec: &BatchSpec) -> Result<BatchResult> {
    spec.validate()?;
    let width = spec
        .base
        .players
        .iter()
        .map(|p| p.cost.vehicle_width)
        .fold(0.0, f64::max);
    let starts = sample_starts(&spec.sampling, spec.samples, spec.seed, &spec.base.track, width)?;

    let mut jobs = Vec::new();
    for &ratio in &spec.ratios {
        for &ego in &spec.ego_planners {
            for &opponent in &spec.opponent_planners {
                for (sample, &start) in starts.iter().enumerate() {
                    jobs.push((ratio, ego, opponent, sample, start));
                }
            }
        }
    }

    let records: Vec<SampleRecord> = jobs
        .par_iter()
        .map(|&(ratio, ego, opponent, sample, start)| {
            let scenario = spec.scenario(ego, opponent, ratio, start);
            let mut record = SampleRecord {
                ratio,
                ego,
                opponent,
                sample,
                ego_n0: start.0,
                opponent_n0: start.1,
                outcome: Outcome::InvalidState,
                overtake_time: None,
                collision: false,
                replans: 0,
                converged_replans: 0,
                failed_replans: 0,
                opponent_min_speed: f64::NAN,
                ego_max_lateral: f64::NAN,
                error: None,
            };
            match run_scenario(&scenario, spec.seed.wrapping_add(sample as u64)) {
                Ok(log) => {
                    record.outcome = log.summary.outcome;
                    record.overtake_time = log.summary.overtake_time;
                    record.collision = log.summary.collision;
                    record.replans = log.summary.replans;
                    record.converged_replans = log.summary.converged_replans;
                    record.failed_replans = log.summary.failed_replans;
                    record.opponent_min_speed = log.min_speed(1);
                    record.ego_max_lateral = log.max_lateral_deviation(0);
                }
                Err(err) => record.error = Some(err.to_string()),
            }
            record
        })
        .collect();

    Ok(BatchResult {
        cells: aggregate(&records),
        records,
    })
}

/// One point of a collision-cost sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ratio: f64,
    /// Largest `|n_k - n_0|` of the ego's first plan.
    pub max_lateral_deviation: f64,
    /// Planned ego `(s, n)` path.
    pub path: Vec<[f64; 2]>,
}

/// First planning step of the ego (player 0) for each opponent-to-ego
/// collision weight ratio.
pub fn run_sweep(base: &ScenarioConfig, ratios: &[f64]) -> Result<Vec<SweepPoint>> {
    base.validate()?;
    if ratios.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Config("cost ratios must be positive".into()));
    }
    ratios
        .iter()
        .map(|&ratio| {
            let mut sc = base.clone();
            sc.players[1].cost.collision = ratio * sc.players[0].cost.collision;
            let outcome = plan_step(0, &sc.initial_states(), None, &sc.planner_spec(0), &sc);
            let plan = outcome.plan.ok_or_else(|| {
                Error::Planning(
                    outcome
                        .diagnostics
                        .failure
                        .unwrap_or_else(|| "no plan".into()),
                )
            })?;
            let off = outcome.own_index * STATE_DIM;
            let path: Vec<[f64; 2]> = plan.states.iter().map(|x| [x[off], x[off + 2]]).collect();
            let n0 = path[0][1];
            let max_lateral_deviation = path.iter().map(|p| (p[1] - n0).abs()).fold(0.0, f64::max);
            Ok(SweepPoint {
                ratio,
                max_lateral_deviation,
                path,
            })
        })
        .collect()
}

/// Joint planned trajectory of one planning step, as vehicle states per
/// stage.
pub fn plan_trajectory(
    scenario: &ScenarioConfig,
    player: usize,
) -> Result<(crate::sim::PlanOutcome, Vec<Vec<crate::racing::VehicleState>>)> {
    scenario.validate()?;
    if player >= scenario.players.len() {
        return Err(Error::Config(format!("player {player} out of range")));
    }
    let outcome = plan_step(
        player,
        &scenario.initial_states(),
        None,
        &scenario.planner_spec(player),
        scenario,
    );
    let states = match &outcome.plan {
        Some(op) => op.states.iter().map(RacingGame::vehicle_states).collect(),
        None => {
            return Err(Error::Planning(
                outcome.diagnostics.failure.clone().unwrap_or_else(|| "no plan".into()),
            ))
        }
    };
    Ok((outcome, states))
}
