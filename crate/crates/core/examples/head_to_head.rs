//! Closed-loop race between two planners.
//!
//! cargo run --release --example head_to_head -- [ego] [opponent] [n_ego] [n_opponent]
//! with planners `sequential`, `game-open-loop` or `game-feedback`.

use std::fs::File;

use ilqgames::sim::{run_scenario, PlannerKind, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());

    let mut scenario = ScenarioConfig::default();
    scenario.players[0].planner = arg(0, "game-feedback").parse::<PlannerKind>()?;
    scenario.players[1].planner = arg(1, "sequential").parse::<PlannerKind>()?;
    scenario.players[0].initial.n = arg(2, "2.5").parse()?;
    scenario.players[1].initial.n = arg(3, "3.0").parse()?;
    scenario.players[1].cost.collision = 10.0 * scenario.players[0].cost.collision;

    let log = run_scenario(&scenario, 0)?;
    println!("{:>5} {:>24} {:>24}", "t", "ego (s, n, V)", "opponent (s, n, V)");
    for (t, s) in log.times.iter().zip(&log.states).step_by(10) {
        println!(
            "{t:5.1} ({:7.1}, {:5.2}, {:5.2}) ({:7.1}, {:5.2}, {:5.2})",
            s[0].s, s[0].n, s[0].v, s[1].s, s[1].n, s[1].v
        );
    }
    print!("{}", log.summary_text());

    let path = std::env::temp_dir().join("head_to_head.csv");
    log.write_csv(File::create(&path)?)?;
    println!("trajectory written to {}", path.display());
    Ok(())
}
