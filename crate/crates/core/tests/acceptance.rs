//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not turned into a failing exit status;
//! the process only exits non-zero when the run itself breaks.

mod common;

use std::time::Instant;

use common::*;
use rand::Rng;

use ilqgames::batch::{export_batch, run_batch, run_sweep, BatchResult, BatchSpec, ExportFormat, SamplingRule};
use ilqgames::ilq::{backward_pass, forward_pass, rollout, zero_inputs, GameDefinition, SolverParams};
use ilqgames::lq::{solve_feedback, solve_lqr};
use ilqgames::racing::RacingGame;
use ilqgames::sim::{planning_game, run_scenario, PlannerKind, PlannerSpec, ScenarioConfig};

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn lqr_oracle() -> (f64, f64) {
    let mut r = rng(101);
    let clock = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (n, m, k) = (r.gen_range(1..=6), r.gen_range(1..=2), r.gen_range(1..=20));
        let game = random_game(&mut r, 1, n, m, k);
        let (strategy, _) = solve_feedback(&game).unwrap();
        for (stage, (gain, ff)) in riccati_oracle(&game).iter().enumerate() {
            worst = worst.max(rel_err(strategy.gain(0, stage), gain));
            worst = worst.max(rel_err_vec(strategy.feedforward(0, stage), ff));
        }
    }
    (worst, clock.elapsed().as_secs_f64())
}

fn open_loop_oracle_check() -> (f64, f64, f64) {
    let mut r = rng(102);
    let clock = Instant::now();
    let (mut stationarity, mut dense): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let players = r.gen_range(2..=3);
        let (n, m, k) = (r.gen_range(1..=4), r.gen_range(1..=2), r.gen_range(1..=5));
        let game = random_game(&mut r, players, n, m, k);
        let dx0 = uniform_vec(&mut r, n, 1.0);
        let us = open_loop_inputs(&game, &dx0);
        for i in 0..players {
            for g in own_input_gradient(&game, i, &dx0, &us) {
                stationarity = stationarity.max(g.amax());
            }
        }
        for (a, b) in us.iter().flatten().zip(open_loop_oracle(&game, &dx0).iter().flatten()) {
            dense = dense.max(rel_err_vec(a, b));
        }
    }
    (stationarity, dense, clock.elapsed().as_secs_f64())
}

fn feedback_nash_check() -> f64 {
    let mut r = rng(103);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (n, m, k) = (r.gen_range(1..=4), r.gen_range(1..=2), r.gen_range(1..=8));
        let game = random_game(&mut r, 2, n, m, k);
        let (strategy, _) = solve_feedback(&game).unwrap();
        for i in 0..2 {
            let lqr = solve_lqr(&induced_problem(&game, &strategy, i)).unwrap();
            for stage in 0..k {
                let (gain, ff) = split_augmented(lqr.strategy.gain(0, stage));
                let total = ff + lqr.strategy.feedforward(0, stage);
                worst = worst.max(rel_err(strategy.gain(i, stage), &gain));
                worst = worst.max(rel_err_vec(strategy.feedforward(i, stage), &total));
            }
        }
    }
    worst
}

/// Worst dynamic-feasibility error over every forward pass of the iLQ loop
/// on each planner's first planning problem.
fn forward_pass_feasibility() -> f64 {
    let scenario = ScenarioConfig::default();
    let states = scenario.initial_states();
    let mut worst: f64 = 0.0;
    for kind in PlannerKind::ALL {
        let (game, _) = planning_game(0, &states, kind, &scenario);
        let x0 = RacingGame::joint_state(&states[..game.num_players()]);
        let params = PlannerSpec { kind, solver: SolverParams::default() }.effective_params();
        let mut op = rollout(&game, &x0, zero_inputs(&game)).unwrap();
        for _ in 0..params.max_iters {
            let strategy = backward_pass(&game, &op, &params).unwrap();
            op = forward_pass(&game, &op, &strategy, params.step_size).unwrap();
            worst = worst.max(op.feasibility_error(&game).unwrap());
        }
    }
    worst
}

fn replay_check() -> f64 {
    let mut worst: f64 = 0.0;
    for ego in PlannerKind::ALL {
        for opponent in PlannerKind::ALL {
            let mut scenario = ScenarioConfig { duration: 4.0, ..ScenarioConfig::default() };
            scenario.players[0].planner = ego;
            scenario.players[1].planner = opponent;
            scenario.players[1].initial.n = 1.0;
            let log = run_scenario(&scenario, 0).unwrap();
            worst = worst.max(log.replay_error(&scenario.track));
        }
    }
    worst
}

fn batch_bytes(spec: &BatchSpec) -> Vec<Vec<u8>> {
    let dir = tempfile::tempdir().unwrap();
    let paths = export_batch(&run_batch(spec).unwrap(), ExportFormat::Csv, dir.path()).unwrap();
    paths.iter().map(|p| std::fs::read(p).unwrap()).collect()
}

fn matrix_spec(ratios: Vec<f64>, samples: usize, sampling: SamplingRule) -> BatchSpec {
    BatchSpec {
        base: ScenarioConfig::default(),
        ego_planners: PlannerKind::ALL.to_vec(),
        opponent_planners: PlannerKind::ALL.to_vec(),
        ratios,
        samples,
        sampling,
        seed: 0,
    }
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or("--".into(), |t| format!("{t:.2} s"))
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut report = Report { failures: 0 };
    let total = Instant::now();

    let (err, secs) = lqr_oracle();
    report.line(
        "1 LQR oracle equivalence",
        err <= 1e-9 && secs < 1.0,
        format!("max relative error {err:.1e} (tol 1e-9), {secs:.3} s (limit 1 s)"),
    );

    let (stat, dense, secs) = open_loop_oracle_check();
    report.line(
        "2 open-loop stationarity oracle",
        stat <= 1e-6 && dense <= 1e-6 && secs < 5.0,
        format!("max own-input gradient {stat:.1e}, dense-solve relative error {dense:.1e} (tol 1e-6), {secs:.3} s (limit 5 s)"),
    );

    let err = feedback_nash_check();
    report.line(
        "3 feedback Nash property",
        err <= 1e-6,
        format!("max relative deviation from induced LQR {err:.1e} (tol 1e-6)"),
    );

    let audit = audit::run(104, 100);
    let (name, worst) = audit.iter().copied().fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    report.line(
        "4 derivative audits",
        worst <= 1e-4,
        format!("{} derivative families at 100 points, worst {worst:.1e} ({name}) (tol 1e-4)", audit.len()),
    );

    let feas = forward_pass_feasibility();
    let replay = replay_check();
    let det_spec = BatchSpec {
        base: ScenarioConfig { duration: 3.0, ..ScenarioConfig::default() },
        ..matrix_spec(vec![1.0, 10.0], 2, SamplingRule::UpperHalf)
    };
    let identical = batch_bytes(&det_spec) == batch_bytes(&det_spec);
    report.line(
        "5 feasibility and determinism",
        feas <= 1e-12 && replay <= 1e-12 && identical,
        format!("forward-pass deviation {feas:.1e}, log replay deviation {replay:.1e} (tol 1e-12), seeded batch byte-identical: {identical}"),
    );

    let clock = Instant::now();
    let base = ScenarioConfig::default();
    let game_ego = run_sweep(&base, &[1.0, 10.0, 100.0]).unwrap();
    let mut seq_base = base.clone();
    seq_base.players[0].planner = PlannerKind::Sequential;
    let seq_ego = run_sweep(&seq_base, &[1.0, 10.0, 100.0]).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let dev = |pts: &[ilqgames::batch::SweepPoint]| pts.iter().map(|p| p.max_lateral_deviation).collect::<Vec<_>>();
    let (g, s) = (dev(&game_ego), dev(&seq_ego));
    let decreasing = g.windows(2).all(|w| w[1] < w[0]);
    let flat = s.iter().all(|v| (v - s[0]).abs() <= 1e-9);
    report.line(
        "6 interaction-awareness trend",
        decreasing && flat && secs < 60.0,
        format!(
            "open-loop ego max |dn| {:.4}/{:.4}/{:.4} m, sequential ego {:.6}/{:.6}/{:.6} m at ratios 1/10/100, {secs:.1} s (limit 60 s)",
            g[0], g[1], g[2], s[0], s[1], s[2]
        ),
    );

    let clock = Instant::now();
    let batch = run_batch(&matrix_spec(vec![1.0, 10.0], 20, SamplingRule::UpperHalf)).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    for line in ilqgames::batch::render_table(&batch).lines() {
        println!("    {line}");
    }
    criterion_7(&mut report, &batch, secs);

    let blocking = run_batch(&BatchSpec {
        ego_planners: vec![PlannerKind::GameOpenLoop, PlannerKind::GameFeedback],
        opponent_planners: vec![PlannerKind::Sequential],
        ..matrix_spec(vec![10.0], 1, SamplingRule::Fixed { ego: 2.5, opponent: 3.0 })
    })
    .unwrap();
    let (ol, fb) = (&blocking.records[0], &blocking.records[1]);
    let later = match (ol.overtake_time, fb.overtake_time) {
        (Some(a), Some(b)) => b > a,
        (Some(_), None) => !fb.collision,
        _ => false,
    };
    report.line(
        "8 blocking regression",
        later && fb.opponent_min_speed < ol.opponent_min_speed,
        format!(
            "overtake time open-loop {} vs feedback {}, opponent min speed {:.2} vs {:.2} m/s",
            fmt_time(ol.overtake_time),
            fmt_time(fb.overtake_time),
            ol.opponent_min_speed,
            fb.opponent_min_speed
        ),
    );

    let fraction = batch.converged_fraction();
    let errors = batch.records.iter().filter(|r| r.error.is_some()).count();
    report.line(
        "9 solver robustness",
        fraction >= 0.95 && errors == 0,
        format!("{:.2}% of planning steps converged (min 95%), {errors} aborted samples", 100.0 * fraction),
    );

    println!(
        "acceptance: {} failing criteria, {:.0} s total",
        report.failures,
        total.elapsed().as_secs_f64()
    );
}

fn criterion_7(report: &mut Report, batch: &BatchResult, secs: f64) {
    use PlannerKind::*;
    let cell = |ratio, ego, opp| batch.cell(ratio, ego, opp).expect("cell present");
    let games = [GameOpenLoop, GameFeedback];

    let mut a_pass = secs < 600.0;
    let mut a_detail = Vec::new();
    for ratio in [1.0, 10.0] {
        let base = cell(ratio, Sequential, Sequential).collision_probability;
        for ego in games {
            let p = cell(ratio, ego, Sequential).collision_probability;
            a_pass &= p < base;
            a_detail.push(format!("ratio {ratio}: {} {:.0}% vs {:.0}%", ego.label(), 100.0 * p, 100.0 * base));
        }
    }
    report.line(
        "7a collision rate with game-theoretic ego",
        a_pass,
        format!("{} (batch {secs:.0} s, limit 600 s)", a_detail.join(", ")),
    );

    let mut b_pass = true;
    let mut b_detail = Vec::new();
    for ratio in [1.0, 10.0] {
        for k in games {
            let c = cell(ratio, k, k);
            b_pass &= c.collisions == 0;
            b_detail.push(format!("ratio {ratio} {}: {}", k.label(), c.collisions));
        }
    }
    report.line("7b no collisions with a shared concept", b_pass, b_detail.join(", "));

    let base = cell(10.0, Sequential, Sequential).mean_overtake_time;
    let ol = cell(10.0, GameOpenLoop, Sequential).mean_overtake_time;
    let fb = cell(10.0, GameFeedback, Sequential).mean_overtake_time;
    let c_pass = match (base, ol, fb) {
        (Some(b), Some(o), Some(f)) => o > b && f > b && f >= o,
        _ => false,
    };
    report.line(
        "7c overtaking delayed at ratio 10",
        c_pass,
        format!(
            "mean overtaking time vs sequential opponent: both sequential {}, open-loop ego {}, feedback ego {}",
            fmt_time(base),
            fmt_time(ol),
            fmt_time(fb)
        ),
    );
}
