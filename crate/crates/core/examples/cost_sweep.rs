//! How far the ego swerves in its first plan as the opponent's collision
//! weight grows relative to its own.

use ilqgames::batch::run_sweep;
use ilqgames::sim::{PlannerKind, ScenarioConfig};

fn main() -> ilqgames::Result<()> {
    let ratios: Vec<f64> = (0..=8).map(|i| 10f64.powf(i as f64 * 0.25)).collect();
    println!("{:>8} {:>16} {:>16} {:>16}", "ratio", "sequential", "game-open-loop", "game-feedback");
    let mut columns = Vec::new();
    for kind in PlannerKind::ALL {
        let mut base = ScenarioConfig::default();
        base.players[0].planner = kind;
        columns.push(run_sweep(&base, &ratios)?);
    }
    for (row, ratio) in ratios.iter().enumerate() {
        println!(
            "{ratio:8.2} {:14.4} m {:14.4} m {:14.4} m",
            columns[0][row].max_lateral_deviation,
            columns[1][row].max_lateral_deviation,
            columns[2][row].max_lateral_deviation
        );
    }
    Ok(())
}
