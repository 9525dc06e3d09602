//! Finite-horizon N-player linear-quadratic dynamic games.
//!
//! Each player `i` minimizes
//!
//! ```text
//! J^i = 1/2 sum_k [ dx' Q^i dx + 2 q^i' dx + sum_j (du^j' R^ij du^j + 2 r^ij' du^j) ]
//!     + 1/2 dx_K' Q_K^i dx_K + q_K^i' dx_K
//! ```
//!
//! subject to `dx_{k+1} = A dx_k + sum_j B^j du^j_k`. Strategies are affine,
//! `du^i_k = -K^i_k dx_k - k^i_k`.
//!
//! Three solvers are provided: the feedback Nash equilibrium (coupled Riccati
//! recursion), the open-loop Nash equilibrium, and a plain single-player
//! Riccati solver that shares no code with the other two.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition-number threshold above which a stage system is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// One stage of an LQ game.
#[derive(Clone, Debug, PartialEq)]
pub struct LqStage {
    pub a: DMatrix<f64>,
    /// Input matrix per player.
    pub b: Vec<DMatrix<f64>>,
    /// State Hessian per player.
    pub state_hess: Vec<DMatrix<f64>>,
    /// State gradient per player.
    pub state_grad: Vec<DVector<f64>>,
    /// `input_hess[i][j]`: Hessian of player i's cost w.r.t. player j's input.
    pub input_hess: Vec<Vec<DMatrix<f64>>>,
    /// `input_grad[i][j]`: gradient of player i's cost w.r.t. player j's input.
    pub input_grad: Vec<Vec<DVector<f64>>>,
}

impl LqStage {
    /// A stage with zero costs and the given dynamics.
    pub fn zeros(a: DMatrix<f64>, b: Vec<DMatrix<f64>>) -> Self {
        let n = a.nrows();
        let players = b.len();
        let dims: Vec<usize> = b.iter().map(|b| b.ncols()).collect();
        Self {
            a,
            b,
            state_hess: vec![DMatrix::zeros(n, n); players],
            state_grad: vec![DVector::zeros(n); players],
            input_hess: (0..players)
                .map(|_| dims.iter().map(|&m| DMatrix::zeros(m, m)).collect())
                .collect(),
            input_grad: (0..players)
                .map(|_| dims.iter().map(|&m| DVector::zeros(m)).collect())
                .collect(),
        }
    }
}

/// A finite-horizon LQ game: `K` stages plus per-player terminal costs.
#[derive(Clone, Debug, PartialEq)]
pub struct LqGame {
    pub stages: Vec<LqStage>,
    pub terminal_hess: Vec<DMatrix<f64>>,
    pub terminal_grad: Vec<DVector<f64>>,
}

impl LqGame {
    pub fn num_players(&self) -> usize {
        self.terminal_hess.len()
    }

    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn state_dim(&self) -> usize {
        self.terminal_grad.first().map_or(0, |q| q.len())
    }

    /// Input dimension of each player.
    pub fn input_dims(&self) -> Vec<usize> {
        self.stages
            .first()
            .map(|s| s.b.iter().map(|b| b.ncols()).collect())
            .unwrap_or_default()
    }

    /// Checks that every matrix has consistent dimensions.
    pub fn validate(&self) -> Result<()> {
        let players = self.num_players();
        let n = self.state_dim();
        if players == 0 {
            return Err(Error::Dimension("game has no players".into()));
        }
        if self.terminal_grad.len() != players {
            return Err(Error::Dimension("terminal gradient count differs from player count".into()));
        }
        for i in 0..players {
            if self.terminal_hess[i].shape() != (n, n) || self.terminal_grad[i].len() != n {
                return Err(Error::Dimension(format!("terminal cost of player {i}")));
            }
        }
        let dims = self.input_dims();
        for (k, stage) in self.stages.iter().enumerate() {
            let bad = |what: &str| Err(Error::Dimension(format!("stage {k}: {what}")));
            if stage.a.shape() != (n, n) {
                return bad("A");
            }
            if stage.b.len() != players
                || stage.state_hess.len() != players
                || stage.state_grad.len() != players
                || stage.input_hess.len() != players
                || stage.input_grad.len() != players
            {
                return bad("per-player arrays");
            }
            for i in 0..players {
                if stage.b[i].shape() != (n, dims[i]) {
                    return bad("B");
                }
                if stage.state_hess[i].shape() != (n, n) || stage.state_grad[i].len() != n {
                    return bad("state cost");
                }
                if stage.input_hess[i].len() != players || stage.input_grad[i].len() != players {
                    return bad("input cost arrays");
                }
                for j in 0..players {
                    if stage.input_hess[i][j].shape() != (dims[j], dims[j])
                        || stage.input_grad[i][j].len() != dims[j]
                    {
                        return bad("input cost");
                    }
                }
            }
        }
        Ok(())
    }
}

/// Per-stage, per-player affine strategies `du = -K dx - k`, stored
/// stage-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineStrategy {
    pub gains: Vec<Vec<DMatrix<f64>>>,
    pub feedforward: Vec<Vec<DVector<f64>>>,
}

impl AffineStrategy {
    /// All-zero strategies for the given dimensions.
    pub fn zeros(horizon: usize, state_dim: usize, input_dims: &[usize]) -> Self {
        Self {
            gains: (0..horizon)
                .map(|_| input_dims.iter().map(|&m| DMatrix::zeros(m, state_dim)).collect())
                .collect(),
            feedforward: (0..horizon)
                .map(|_| input_dims.iter().map(|&m| DVector::zeros(m)).collect())
                .collect(),
        }
    }

    pub fn gain(&self, player: usize, stage: usize) -> &DMatrix<f64> {
        &self.gains[stage][player]
    }

    pub fn feedforward(&self, player: usize, stage: usize) -> &DVector<f64> {
        &self.feedforward[stage][player]
    }

    pub fn horizon(&self) -> usize {
        self.gains.len()
    }

    pub fn num_players(&self) -> usize {
        self.gains.first().map_or(0, Vec::len)
    }

    /// Control deviation of `player` at `stage` for state deviation `dx`.
    pub fn apply(&self, player: usize, stage: usize, dx: &DVector<f64>) -> DVector<f64> {
        -(self.gain(player, stage) * dx) - self.feedforward(player, stage)
    }
}

/// Value functions of the feedback recursion.
#[derive(Clone, Debug)]
pub struct FeedbackRecursion {
    /// `value_hess[k][i]`, `k = 0..=K`.
    pub value_hess: Vec<Vec<DMatrix<f64>>>,
    /// `value_grad[k][i]`, `k = 0..=K`.
    pub value_grad: Vec<Vec<DVector<f64>>>,
    /// Closed-loop transition `A - sum_j B^j K^j` per stage.
    pub closed_loop: Vec<DMatrix<f64>>,
    /// Closed-loop offset `-sum_j B^j k^j` per stage.
    pub offset: Vec<DVector<f64>>,
}

/// Costate recursion of the open-loop solution.
#[derive(Clone, Debug)]
pub struct OpenLoopRecursion {
    /// `costate_hess[k][i]` (`M`), `k = 0..=K`.
    pub costate_hess: Vec<Vec<DMatrix<f64>>>,
    /// `costate_grad[k][i]` (`m`), `k = 0..=K`.
    pub costate_grad: Vec<Vec<DVector<f64>>>,
    /// `Lambda_k^{-1}` per stage.
    pub lambda_inv: Vec<DMatrix<f64>>,
}

/// Inverse of a small square matrix with a 1-norm condition check.
pub(crate) fn checked_inverse(m: &DMatrix<f64>, stage: usize) -> Result<DMatrix<f64>> {
    let inv = m.clone().lu().try_inverse().ok_or(Error::SingularSystem {
        stage,
        condition: f64::INFINITY,
    })?;
    let condition = norm1(m) * norm1(&inv);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::SingularSystem { stage, condition });
    }
    Ok(inv)
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn offsets(dims: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(dims.len());
    let mut acc = 0;
    for &m in dims {
        out.push(acc);
        acc += m;
    }
    out
}

/// Feedback Nash equilibrium of an LQ game.
///
/// At every stage the N coupled gain equations are stacked into one block
/// system over `(K^1, ..., K^N)`; its inverse is reused for the feedforward
/// terms, which share the same left-hand side.
pub fn solve_feedback(game: &LqGame) -> Result<(AffineStrategy, FeedbackRecursion)> {
    game.validate()?;
    let players = game.num_players();
    let horizon = game.horizon();
    let n = game.state_dim();
    let dims = game.input_dims();
    let offs = offsets(&dims);
    let total: usize = dims.iter().sum();

    let mut strategy = AffineStrategy::zeros(horizon, n, &dims);
    let mut value_hess = vec![Vec::new(); horizon + 1];
    let mut value_grad = vec![Vec::new(); horizon + 1];
    let mut closed_loop = vec![DMatrix::zeros(n, n); horizon];
    let mut offset = vec![DVector::zeros(n); horizon];
    value_hess[horizon] = game.terminal_hess.clone();
    value_grad[horizon] = game.terminal_grad.clone();

    for k in (0..horizon).rev() {
        let stage = &game.stages[k];
        let p_next = &value_hess[k + 1];
        let pv_next = &value_grad[k + 1];

        let mut lhs = DMatrix::zeros(total, total);
        let mut rhs_gain = DMatrix::zeros(total, n);
        let mut rhs_ff = DVector::zeros(total);
        for i in 0..players {
            let bt_p = stage.b[i].transpose() * &p_next[i];
            for j in 0..players {
                let mut block = &bt_p * &stage.b[j];
                if i == j {
                    block += &stage.input_hess[i][i];
                }
                lhs.view_mut((offs[i], offs[j]), (dims[i], dims[j]))
                    .copy_from(&block);
            }
            rhs_gain
                .view_mut((offs[i], 0), (dims[i], n))
                .copy_from(&(&bt_p * &stage.a));
            rhs_ff
                .rows_mut(offs[i], dims[i])
                .copy_from(&(stage.b[i].transpose() * &pv_next[i] + &stage.input_grad[i][i]));
        }

        let inv = checked_inverse(&lhs, k)?;
        let gains = &inv * rhs_gain;
        let ff = &inv * rhs_ff;

        let mut f = stage.a.clone();
        let mut beta = DVector::zeros(n);
        for i in 0..players {
            let gi = gains.rows(offs[i], dims[i]).into_owned();
            let fi = ff.rows(offs[i], dims[i]).into_owned();
            f -= &stage.b[i] * &gi;
            beta -= &stage.b[i] * &fi;
            strategy.gains[k][i] = gi;
            strategy.feedforward[k][i] = fi;
        }

        let mut hess_k = Vec::with_capacity(players);
        let mut grad_k = Vec::with_capacity(players);
        for i in 0..players {
            let pf = &p_next[i] * &f;
            let mut p = &stage.state_hess[i] + f.transpose() * pf;
            let mut pv = &stage.state_grad[i] + f.transpose() * (&pv_next[i] + &p_next[i] * &beta);
            for j in 0..players {
                let kj = &strategy.gains[k][j];
                let kjt = kj.transpose();
                let rij = &stage.input_hess[i][j];
                p += &kjt * rij * kj;
                pv += &kjt * (rij * &strategy.feedforward[k][j] - &stage.input_grad[i][j]);
            }
            let sym = (&p + p.transpose()) * 0.5;
            hess_k.push(sym);
            grad_k.push(pv);
        }
        value_hess[k] = hess_k;
        value_grad[k] = grad_k;
        closed_loop[k] = f;
        offset[k] = beta;
    }

    Ok((
        strategy,
        FeedbackRecursion {
            value_hess,
            value_grad,
            closed_loop,
            offset,
        },
    ))
}

/// Open-loop Nash equilibrium of an LQ game, starting from state deviation
/// `dx0`.
///
/// Returns strategies with all gains zero, the costate recursion, and the
/// equilibrium state-deviation trajectory (`K + 1` entries). Only the own
/// input costs `R^ii`, `r^ii` enter.
pub fn solve_open_loop(
    game: &LqGame,
    dx0: &DVector<f64>,
) -> Result<(AffineStrategy, OpenLoopRecursion, Vec<DVector<f64>>)> {
    game.validate()?;
    let players = game.num_players();
    let horizon = game.horizon();
    let n = game.state_dim();
    if dx0.len() != n {
        return Err(Error::Dimension(format!(
            "initial deviation has length {}, expected {n}",
            dx0.len()
        )));
    }
    let dims = game.input_dims();

    let mut costate_hess = vec![Vec::new(); horizon + 1];
    let mut costate_grad = vec![Vec::new(); horizon + 1];
    let mut lambda_inv = vec![DMatrix::zeros(n, n); horizon];
    let mut drift = vec![DVector::zeros(n); horizon];
    let mut r_inv: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(horizon);
    costate_hess[horizon] = game.terminal_hess.clone();
    costate_grad[horizon] = game.terminal_grad.clone();

    for k in (0..horizon).rev() {
        let stage = &game.stages[k];
        let m_next = &costate_hess[k + 1];
        let mv_next = &costate_grad[k + 1];

        let mut lambda = DMatrix::identity(n, n);
        let mut w = DVector::zeros(n);
        let mut inv_k = Vec::with_capacity(players);
        for j in 0..players {
            let rj = positive_definite_inverse(&stage.input_hess[j][j], k)?;
            let b_rinv = &stage.b[j] * &rj;
            lambda += &b_rinv * stage.b[j].transpose() * &m_next[j];
            w += &b_rinv * (stage.b[j].transpose() * &mv_next[j] + &stage.input_grad[j][j]);
            inv_k.push(rj);
        }
        let l_inv = checked_inverse(&lambda, k)?;

        let at = stage.a.transpose();
        let mut hess_k = Vec::with_capacity(players);
        let mut grad_k = Vec::with_capacity(players);
        for i in 0..players {
            let ml = &m_next[i] * &l_inv;
            grad_k.push(&at * (&mv_next[i] - &ml * &w) + &stage.state_grad[i]);
            hess_k.push(&stage.state_hess[i] + &at * ml * &stage.a);
        }
        costate_hess[k] = hess_k;
        costate_grad[k] = grad_k;
        lambda_inv[k] = l_inv;
        drift[k] = w;
        r_inv.push(inv_k);
    }
    r_inv.reverse();

    let mut strategy = AffineStrategy::zeros(horizon, n, &dims);
    let mut traj = Vec::with_capacity(horizon + 1);
    traj.push(dx0.clone());
    for k in 0..horizon {
        let stage = &game.stages[k];
        let next = &lambda_inv[k] * (&stage.a * &traj[k] - &drift[k]);
        for i in 0..players {
            let costate = &costate_hess[k + 1][i] * &next + &costate_grad[k + 1][i];
            strategy.feedforward[k][i] =
                &r_inv[k][i] * (stage.b[i].transpose() * costate + &stage.input_grad[i][i]);
        }
        traj.push(next);
    }

    Ok((
        strategy,
        OpenLoopRecursion {
            costate_hess,
            costate_grad,
            lambda_inv,
        },
        traj,
    ))
}

fn positive_definite_inverse(m: &DMatrix<f64>, stage: usize) -> Result<DMatrix<f64>> {
    match Cholesky::new(m.clone()) {
        Some(chol) => Ok(chol.inverse()),
        None => Err(Error::SingularSystem {
            stage,
            condition: f64::INFINITY,
        }),
    }
}

/// Single-player solution with value functions.
#[derive(Clone, Debug)]
pub struct LqrSolution {
    pub strategy: AffineStrategy,
    /// `P_k`, `k = 0..=K`.
    pub value_hess: Vec<DMatrix<f64>>,
    /// `p_k`, `k = 0..=K`.
    pub value_grad: Vec<DVector<f64>>,
}

/// Single-player LQR via the difference Riccati equation (with linear terms).
///
/// Kept separate from [`solve_feedback`]: it factors `R + B'PB` by Cholesky
/// and updates `P` in the classic `Q + A'PA - A'PB K` form.
pub fn solve_lqr(game: &LqGame) -> Result<LqrSolution> {
    game.validate()?;
    if game.num_players() != 1 {
        return Err(Error::Dimension(format!(
            "solve_lqr needs exactly one player, got {}",
            game.num_players()
        )));
    }
    let horizon = game.horizon();
    let n = game.state_dim();
    let m = game.input_dims()[0];
    let mut gains = vec![DMatrix::zeros(m, n); horizon];
    let mut ff = vec![DVector::zeros(m); horizon];
    let mut value_hess = vec![DMatrix::zeros(n, n); horizon + 1];
    let mut value_grad = vec![DVector::zeros(n); horizon + 1];
    value_hess[horizon] = game.terminal_hess[0].clone();
    value_grad[horizon] = game.terminal_grad[0].clone();

    for k in (0..horizon).rev() {
        let st = &game.stages[k];
        let (a, b) = (&st.a, &st.b[0]);
        let p = &value_hess[k + 1];
        let pv = &value_grad[k + 1];
        let pb = p * b;
        let h = &st.input_hess[0][0] + b.transpose() * &pb;
        let chol = Cholesky::new(h).ok_or(Error::SingularSystem {
            stage: k,
            condition: f64::INFINITY,
        })?;
        let gain = chol.solve(&(pb.transpose() * a));
        let feed = chol.solve(&(b.transpose() * pv + &st.input_grad[0][0]));
        let atpb = a.transpose() * &pb;
        let next = &st.state_hess[0] + a.transpose() * p * a - &atpb * &gain;
        value_hess[k] = (&next + next.transpose()) * 0.5;
        value_grad[k] = &st.state_grad[0] + a.transpose() * pv - &atpb * &feed;
        gains[k] = gain;
        ff[k] = feed;
    }

    Ok(LqrSolution {
        strategy: AffineStrategy {
            gains: gains.into_iter().map(|g| vec![g]).collect(),
            feedforward: ff.into_iter().map(|f| vec![f]).collect(),
        },
        value_hess,
        value_grad,
    })
}

/// Rolls the linear dynamics forward under affine strategies from `dx0`.
/// Returns state deviations (`K + 1`) and per-stage input deviations.
pub fn simulate_strategy(
    game: &LqGame,
    strategy: &AffineStrategy,
    dx0: &DVector<f64>,
) -> (Vec<DVector<f64>>, Vec<Vec<DVector<f64>>>) {
    let mut xs = Vec::with_capacity(game.horizon() + 1);
    let mut us = Vec::with_capacity(game.horizon());
    xs.push(dx0.clone());
    for (k, stage) in game.stages.iter().enumerate() {
        let x = &xs[k];
        let uk: Vec<DVector<f64>> = (0..game.num_players())
            .map(|i| strategy.apply(i, k, x))
            .collect();
        let mut next = &stage.a * x;
        for (b, u) in stage.b.iter().zip(&uk) {
            next += b * u;
        }
        xs.push(next);
        us.push(uk);
    }
    (xs, us)
}

/// Quadratic cost of `player` along a trajectory (constant term omitted).
pub fn trajectory_cost(
    game: &LqGame,
    player: usize,
    xs: &[DVector<f64>],
    us: &[Vec<DVector<f64>>],
) -> f64 {
    let mut total = 0.0;
    for (k, stage) in game.stages.iter().enumerate() {
        let x = &xs[k];
        total += 0.5 * x.dot(&(&stage.state_hess[player] * x)) + stage.state_grad[player].dot(x);
        for (j, u) in us[k].iter().enumerate() {
            total += 0.5 * u.dot(&(&stage.input_hess[player][j] * u))
                + stage.input_grad[player][j].dot(u);
        }
    }
    let x = &xs[game.horizon()];
    total + 0.5 * x.dot(&(&game.terminal_hess[player] * x)) + game.terminal_grad[player].dot(x)
}
