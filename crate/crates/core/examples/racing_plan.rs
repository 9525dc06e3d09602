//! One planning step of the racing game: the same initial situation solved
//! by each planner, with the iLQ convergence history.

use ilqgames::ilq::{solve, GameDefinition};
use ilqgames::racing::{RacingGame, STATE_DIM};
use ilqgames::sim::{planning_game, PlannerKind, PlannerSpec, ScenarioConfig};

fn main() -> ilqgames::Result<()> {
    let scenario = ScenarioConfig::default();
    let states = scenario.initial_states();
    println!(
        "ego at s = {} m, V = {} m/s; opponent at s = {} m, V = {} m/s, n = {} m",
        states[0].s, states[0].v, states[1].s, states[1].v, states[1].n
    );

    for kind in PlannerKind::ALL {
        let (game, own) = planning_game(0, &states, kind, &scenario);
        let x0 = RacingGame::joint_state(&states[..game.num_players()]);
        let params = PlannerSpec { kind, solver: scenario.solver.clone() }.effective_params();
        let result = solve(&game, &x0, None, &params)?;

        let changes: Vec<String> = result.changes.iter().step_by(5).map(|c| format!("{c:.3}")).collect();
        println!("\n{kind}: {} iterations, converged = {}", result.iterations, result.converged);
        println!("  trajectory change every 5th iteration: {}", changes.join(" "));
        println!("  total costs: {:?}", result.costs.iter().map(|c| format!("{c:.2}")).collect::<Vec<_>>());
        let off = own * STATE_DIM;
        for (k, x) in result.operating_point.states.iter().enumerate().step_by(10) {
            println!("  t = {:.1} s: s = {:7.2} m, n = {:6.3} m, V = {:5.2} m/s", k as f64 * game.time_step(), x[off], x[off + 2], x[off + 1]);
        }
    }
    Ok(())
}
