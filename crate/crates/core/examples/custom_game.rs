//! The solver works on any game that implements `GameDefinition`. Here two
//! unicycles at constant speed steer by turn rate: the pursuer minimizes its
//! distance to the evader, the evader holds a lane and avoids contact.

use ilqgames::ilq::{solve, GameDefinition, SolutionConcept, SolverParams, StageExpansion, TerminalExpansion};
use nalgebra::{DMatrix, DVector};

const SPEED: [f64; 2] = [6.0, 5.0];
const TURN_WEIGHT: f64 = 1.0;
const LANE: f64 = 2.0;

struct Chase {
    horizon: usize,
}

impl GameDefinition for Chase {
    fn num_players(&self) -> usize {
        2
    }
    fn state_dim(&self) -> usize {
        6
    }
    fn input_dim(&self, _player: usize) -> usize {
        1
    }
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn time_step(&self) -> f64 {
        0.1
    }

    // per player: (px, py, heading)
    fn vector_field(&self, _k: usize, x: &DVector<f64>, u: &[DVector<f64>]) -> ilqgames::Result<DVector<f64>> {
        let mut dx = DVector::zeros(6);
        for i in 0..2 {
            let th = x[3 * i + 2];
            dx[3 * i] = SPEED[i] * th.cos();
            dx[3 * i + 1] = SPEED[i] * th.sin();
            dx[3 * i + 2] = u[i][0];
        }
        Ok(dx)
    }

    fn vector_field_jacobians(
        &self,
        _k: usize,
        x: &DVector<f64>,
        _u: &[DVector<f64>],
    ) -> ilqgames::Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        let mut a = DMatrix::zeros(6, 6);
        let mut b = vec![DMatrix::zeros(6, 1), DMatrix::zeros(6, 1)];
        for i in 0..2 {
            let th = x[3 * i + 2];
            a[(3 * i, 3 * i + 2)] = -SPEED[i] * th.sin();
            a[(3 * i + 1, 3 * i + 2)] = SPEED[i] * th.cos();
            b[i][(3 * i + 2, 0)] = 1.0;
        }
        Ok((a, b))
    }

    fn stage_cost(&self, i: usize, k: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        self.stage_expansion(i, k, x, u).value
    }

    fn stage_expansion(&self, i: usize, _k: usize, x: &DVector<f64>, u: &DVector<f64>) -> StageExpansion {
        let mut e = StageExpansion {
            value: 0.5 * TURN_WEIGHT * u[0] * u[0],
            grad_x: DVector::zeros(6),
            hess_x: DMatrix::zeros(6, 6),
            grad_u: DVector::from_element(1, TURN_WEIGHT * u[0]),
            hess_u: DMatrix::from_element(1, 1, TURN_WEIGHT),
        };
        let d = [x[0] - x[3], x[1] - x[4]];
        if i == 0 {
            // 1/2 |p1 - p2|^2
            e.value += 0.5 * (d[0] * d[0] + d[1] * d[1]);
            for (a, sa) in [(0, 1.0), (3, -1.0)] {
                for c in 0..2 {
                    e.grad_x[a + c] += sa * d[c];
                    for (b, sb) in [(0, 1.0), (3, -1.0)] {
                        e.hess_x[(a + c, b + c)] += sa * sb;
                    }
                }
            }
        } else {
            let off = x[4] - LANE;
            e.value += 0.5 * off * off;
            e.grad_x[4] += off;
            e.hess_x[(4, 4)] += 1.0;
            // 10 exp(-|d|^2 / 4)
            let c = 10.0 * (-(d[0] * d[0] + d[1] * d[1]) / 4.0).exp();
            e.value += c;
            let g = [-d[0] / 2.0, -d[1] / 2.0];
            for (a, sa) in [(0, 1.0), (3, -1.0)] {
                for p in 0..2 {
                    e.grad_x[a + p] += sa * c * g[p];
                    for (b, sb) in [(0, 1.0), (3, -1.0)] {
                        for q in 0..2 {
                            let h = c * (g[p] * g[q] - if p == q { 0.5 } else { 0.0 });
                            e.hess_x[(a + p, b + q)] += sa * sb * h;
                        }
                    }
                }
            }
        }
        e
    }

    fn terminal_cost(&self, _i: usize, _x: &DVector<f64>) -> f64 {
        0.0
    }

    fn terminal_expansion(&self, _i: usize, _x: &DVector<f64>) -> TerminalExpansion {
        TerminalExpansion { value: 0.0, grad: DVector::zeros(6), hess: DMatrix::zeros(6, 6) }
    }

    fn position_indices(&self) -> Vec<(usize, usize)> {
        vec![(0, 1), (3, 4)]
    }
}

fn main() -> ilqgames::Result<()> {
    let game = Chase { horizon: 30 };
    let x0 = DVector::from_vec(vec![0.0, -3.0, 0.0, 5.0, 0.0, 0.0]);
    for mode in [SolutionConcept::OpenLoop, SolutionConcept::Feedback] {
        let params = SolverParams { mode, max_iters: 200, ..SolverParams::default() };
        let result = solve(&game, &x0, None, &params)?;
        println!("{mode:?}: {} iterations, converged = {}", result.iterations, result.converged);
        for (k, x) in result.operating_point.states.iter().enumerate().step_by(10) {
            println!(
                "  t = {:.1}: pursuer ({:5.2}, {:5.2}), evader ({:5.2}, {:5.2})",
                k as f64 * 0.1,
                x[0],
                x[1],
                x[3],
                x[4]
            );
        }
    }
    Ok(())
}
