//! Two players steering their own integrator state. Player 1 wants to stay
//! at the origin but also close to player 2; player 2 only wants to reach 1.
//! The open-loop and feedback Nash equilibria of the same game differ.

use ilqgames::lq::{simulate_strategy, solve_feedback, solve_lqr, solve_open_loop, trajectory_cost, LqGame, LqStage};
use nalgebra::{dmatrix, dvector, DMatrix, DVector};

fn main() -> ilqgames::Result<()> {
    let dt = 0.1;
    let horizon = 30;
    let coupling = 2.0;

    let mut stage = LqStage::zeros(
        DMatrix::identity(2, 2),
        vec![dmatrix![dt; 0.0], dmatrix![0.0; dt]],
    );
    stage.state_hess = vec![
        dmatrix![1.0 + coupling, -coupling; -coupling, coupling],
        dmatrix![0.0, 0.0; 0.0, 1.0],
    ];
    stage.state_grad = vec![DVector::zeros(2), dvector![0.0, -1.0]];
    stage.input_hess[0][0] = dmatrix![0.1];
    stage.input_hess[1][1] = dmatrix![0.1];
    let game = LqGame {
        terminal_hess: stage.state_hess.clone(),
        terminal_grad: stage.state_grad.clone(),
        stages: vec![stage; horizon],
    };
    game.validate()?;

    let x0 = dvector![0.0, 0.0];
    let (feedback, _) = solve_feedback(&game)?;
    let (fb_states, fb_inputs) = simulate_strategy(&game, &feedback, &x0);
    let (open_loop, _, ol_states) = solve_open_loop(&game, &x0)?;
    let (_, ol_inputs) = simulate_strategy(&game, &open_loop, &x0);

    println!("stage-0 feedback gains: K1 = {:.4}, K2 = {:.4}", feedback.gain(0, 0), feedback.gain(1, 0));
    println!("{:>5} {:>16} {:>16}", "t", "feedback x", "open-loop x");
    for k in (0..=horizon).step_by(5) {
        let (f, o) = (&fb_states[k], &ol_states[k]);
        println!("{:5.1} ({:6.3}, {:6.3}) ({:6.3}, {:6.3})", k as f64 * dt, f[0], f[1], o[0], o[1]);
    }
    for i in 0..2 {
        println!(
            "player {} cost: feedback {:.4}, open-loop {:.4}",
            i + 1,
            trajectory_cost(&game, i, &fb_states, &fb_inputs),
            trajectory_cost(&game, i, &ol_states, &ol_inputs)
        );
    }

    // a one-player game is an LQR problem
    let solo = LqGame {
        stages: game
            .stages
            .iter()
            .map(|s| {
                let mut one = LqStage::zeros(s.a.clone(), vec![s.b[0].clone()]);
                one.state_hess = vec![s.state_hess[0].clone()];
                one.input_hess[0][0] = s.input_hess[0][0].clone();
                one
            })
            .collect(),
        terminal_hess: vec![game.terminal_hess[0].clone()],
        terminal_grad: vec![DVector::zeros(2)],
    };
    let lqr = solve_lqr(&solo)?;
    let (single, _) = solve_feedback(&solo)?;
    println!(
        "LQR vs one-player game, stage-0 gain gap: {:.2e}",
        (lqr.strategy.gain(0, 0) - single.gain(0, 0)).amax()
    );
    Ok(())
}
