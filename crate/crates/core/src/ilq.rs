//! Iterative linear-quadratic game solver.
//!
//! Each iteration linearizes the dynamics and quadratizes the players' costs
//! around the current operating point, solves the resulting LQ game for the
//! requested equilibrium concept, and rolls the exact nonlinear dynamics
//! forward under the damped strategy update.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lq::{self, AffineStrategy, LqGame, LqStage};

/// Minimum eigenvalue enforced on the input Hessians `R^ii`.
pub const MIN_INPUT_EIGENVALUE: f64 = 1e-6;

/// Second-order expansion of a stage cost in the joint state and the owning
/// player's input.
#[derive(Clone, Debug)]
pub struct StageExpansion {
    pub value: f64,
    pub grad_x: DVector<f64>,
    pub hess_x: DMatrix<f64>,
    pub grad_u: DVector<f64>,
    pub hess_u: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct TerminalExpansion {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// A discrete-time N-player game with continuous-time dynamics discretized
/// by forward Euler.
pub trait GameDefinition {
    fn num_players(&self) -> usize;
    fn state_dim(&self) -> usize;
    fn input_dim(&self, player: usize) -> usize;
    fn horizon(&self) -> usize;
    fn time_step(&self) -> f64;

    /// Continuous-time joint vector field at `stage`.
    fn vector_field(&self, stage: usize, x: &DVector<f64>, u: &[DVector<f64>])
        -> Result<DVector<f64>>;

    /// Jacobians of the vector field w.r.t. the joint state and each
    /// player's input.
    fn vector_field_jacobians(
        &self,
        stage: usize,
        x: &DVector<f64>,
        u: &[DVector<f64>],
    ) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)>;

    fn stage_cost(&self, player: usize, stage: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64;

    fn stage_expansion(
        &self,
        player: usize,
        stage: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> StageExpansion;

    fn terminal_cost(&self, player: usize, x: &DVector<f64>) -> f64;

    fn terminal_expansion(&self, player: usize, x: &DVector<f64>) -> TerminalExpansion;

    /// Indices of each player's (progress, lateral) position in the joint
    /// state, used by the convergence metric.
    fn position_indices(&self) -> Vec<(usize, usize)>;

    /// One forward-Euler step of the dynamics.
    fn step(&self, stage: usize, x: &DVector<f64>, u: &[DVector<f64>]) -> Result<DVector<f64>> {
        Ok(x + self.vector_field(stage, x, u)? * self.time_step())
    }

    fn input_dims(&self) -> Vec<usize> {
        (0..self.num_players()).map(|i| self.input_dim(i)).collect()
    }
}

/// Nominal trajectory: `K + 1` joint states and per-stage inputs
/// (`inputs[k][i]`).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatingPoint {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<Vec<DVector<f64>>>,
}

impl OperatingPoint {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    /// Input sequence of one player.
    pub fn player_inputs(&self, player: usize) -> Vec<DVector<f64>> {
        self.inputs.iter().map(|u| u[player].clone()).collect()
    }

    /// Largest deviation from exact dynamic feasibility.
    pub fn feasibility_error<G: GameDefinition + ?Sized>(&self, game: &G) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 0..self.horizon() {
            let next = game.step(k, &self.states[k], &self.inputs[k])?;
            worst = worst.max((next - &self.states[k + 1]).amax());
        }
        Ok(worst)
    }
}

/// Zero inputs for every player and stage.
pub fn zero_inputs<G: GameDefinition + ?Sized>(game: &G) -> Vec<Vec<DVector<f64>>> {
    let dims = game.input_dims();
    (0..game.horizon())
        .map(|_| dims.iter().map(|&m| DVector::zeros(m)).collect())
        .collect()
}

/// Rolls the exact dynamics forward from `x0` under `inputs`.
pub fn rollout<G: GameDefinition + ?Sized>(
    game: &G,
    x0: &DVector<f64>,
    inputs: Vec<Vec<DVector<f64>>>,
) -> Result<OperatingPoint> {
    if inputs.len() != game.horizon() {
        return Err(Error::Dimension(format!(
            "{} input stages, horizon is {}",
            inputs.len(),
            game.horizon()
        )));
    }
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.clone());
    for (k, u) in inputs.iter().enumerate() {
        let next = game.step(k, &states[k], u)?;
        states.push(next);
    }
    Ok(OperatingPoint { states, inputs })
}

/// Equilibrium concept solved for at each iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionConcept {
    OpenLoop,
    Feedback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub mode: SolutionConcept,
    /// Forward-pass step size `eta`, `0 < eta <= 1`.
    pub step_size: f64,
    pub max_iters: usize,
    /// Convergence tolerance on [`trajectory_change`] (m).
    pub conv_tol: f64,
    /// Eigenvalue floor for the state Hessians.
    pub regularization: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            mode: SolutionConcept::Feedback,
            step_size: 0.1,
            max_iters: 50,
            conv_tol: 0.01,
            regularization: 0.0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "step size must lie in (0, 1], got {}",
                self.step_size
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        if !(self.conv_tol >= 0.0) || !(self.regularization >= 0.0) {
            return Err(Error::InvalidParameter(
                "tolerance and regularization must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub operating_point: OperatingPoint,
    pub strategy: AffineStrategy,
    pub converged: bool,
    pub iterations: usize,
    /// Trajectory change after each iteration.
    pub changes: Vec<f64>,
    /// Total cost of each player at the returned operating point.
    pub costs: Vec<f64>,
}

/// Discrete-time dynamics matrices along the operating point:
/// `A_k = I + dt * df/dx`, `B_k^i = dt * df/du^i`. Costs are left at zero.
pub fn linearize<G: GameDefinition + ?Sized>(
    game: &G,
    op: &OperatingPoint,
) -> Result<Vec<LqStage>> {
    let dt = game.time_step();
    let n = game.state_dim();
    (0..op.horizon())
        .map(|k| {
            let (jx, ju) = game.vector_field_jacobians(k, &op.states[k], &op.inputs[k])?;
            let a = DMatrix::identity(n, n) + jx * dt;
            let b = ju.into_iter().map(|b| b * dt).collect();
            Ok(LqStage::zeros(a, b))
        })
        .collect()
}

/// Per-player quadratic cost pieces.
#[derive(Clone, Debug)]
pub struct CostApproximation {
    /// `[k][i]`
    pub state_hess: Vec<Vec<DMatrix<f64>>>,
    pub state_grad: Vec<Vec<DVector<f64>>>,
    pub input_hess: Vec<Vec<DMatrix<f64>>>,
    pub input_grad: Vec<Vec<DVector<f64>>>,
    pub terminal_hess: Vec<DMatrix<f64>>,
    pub terminal_grad: Vec<DVector<f64>>,
}

/// Quadratic cost approximation along the operating point. State Hessians
/// are projected onto `{eig >= regularization}`, input Hessians onto
/// `{eig >= MIN_INPUT_EIGENVALUE}`.
pub fn quadratize<G: GameDefinition + ?Sized>(
    game: &G,
    op: &OperatingPoint,
    regularization: f64,
) -> CostApproximation {
    let players = game.num_players();
    let horizon = op.horizon();
    let mut out = CostApproximation {
        state_hess: Vec::with_capacity(horizon),
        state_grad: Vec::with_capacity(horizon),
        input_hess: Vec::with_capacity(horizon),
        input_grad: Vec::with_capacity(horizon),
        terminal_hess: Vec::with_capacity(players),
        terminal_grad: Vec::with_capacity(players),
    };
    for k in 0..horizon {
        let mut qh = Vec::with_capacity(players);
        let mut qg = Vec::with_capacity(players);
        let mut rh = Vec::with_capacity(players);
        let mut rg = Vec::with_capacity(players);
        for i in 0..players {
            let e = game.stage_expansion(i, k, &op.states[k], &op.inputs[k][i]);
            qh.push(project_psd(&e.hess_x, regularization));
            qg.push(e.grad_x);
            rh.push(project_psd(&e.hess_u, MIN_INPUT_EIGENVALUE));
            rg.push(e.grad_u);
        }
        out.state_hess.push(qh);
        out.state_grad.push(qg);
        out.input_hess.push(rh);
        out.input_grad.push(rg);
    }
    let last = &op.states[horizon];
    for i in 0..players {
        let e = game.terminal_expansion(i, last);
        out.terminal_hess.push(project_psd(&e.hess, regularization));
        out.terminal_grad.push(e.grad);
    }
    out
}

/// Combines dynamics and cost approximations into one LQ game. Cross-player
/// input costs are zero.
pub fn assemble(mut stages: Vec<LqStage>, costs: CostApproximation) -> LqGame {
    for (k, stage) in stages.iter_mut().enumerate() {
        stage.state_hess = costs.state_hess[k].clone();
        stage.state_grad = costs.state_grad[k].clone();
        for i in 0..stage.b.len() {
            stage.input_hess[i][i] = costs.input_hess[k][i].clone();
            stage.input_grad[i][i] = costs.input_grad[k][i].clone();
        }
    }
    LqGame {
        stages,
        terminal_hess: costs.terminal_hess,
        terminal_grad: costs.terminal_grad,
    }
}

/// Entries smaller than this fraction of the largest magnitude are treated
/// as zero by [`project_psd`].
pub const PSD_NEGLIGIBLE: f64 = 1e-30;

/// Symmetrizes `m` and raises every eigenvalue below `floor` to `floor`.
///
/// With a zero floor only the rows/columns that carry non-negligible entries
/// are decomposed; the remaining eigenvalues are zero up to the negligible
/// entries, which are passed through unchanged.
pub fn project_psd(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let n = sym.nrows();
    let scale = sym.amax();
    if scale == 0.0 && floor <= 0.0 {
        return sym;
    }
    let tiny = scale * PSD_NEGLIGIBLE;
    let support: Vec<usize> = if floor > 0.0 {
        (0..n).collect()
    } else {
        (0..n)
            .filter(|&r| sym.row(r).iter().any(|&v| v.abs() > tiny))
            .collect()
    };
    // decompose a well-scaled copy with negligible entries flushed to zero
    let unit = if scale > 0.0 { scale } else { 1.0 };
    let sub = sym
        .select_rows(&support)
        .select_columns(&support)
        .map(|v| if v.abs() > tiny { v / unit } else { 0.0 });
    let eig = SymmetricEigen::new(sub);
    if eig.eigenvalues.iter().all(|&l| l * unit >= floor) {
        return sym;
    }
    let floored = eig.eigenvalues.map(|l| (l * unit).max(floor));
    let rebuilt = &eig.eigenvectors
        * DMatrix::from_diagonal(&floored)
        * eig.eigenvectors.transpose();
    let mut out = if floor > 0.0 {
        DMatrix::zeros(n, n)
    } else {
        sym.clone()
    };
    for (a, &ra) in support.iter().enumerate() {
        for (b, &rb) in support.iter().enumerate() {
            out[(ra, rb)] = 0.5 * (rebuilt[(a, b)] + rebuilt[(b, a)]);
        }
    }
    out
}

/// Damped forward pass:
/// `u_new = u - K (x_new - x) - eta k`, `x_new` from the exact dynamics.
pub fn forward_pass<G: GameDefinition + ?Sized>(
    game: &G,
    op: &OperatingPoint,
    strategy: &AffineStrategy,
    step_size: f64,
) -> Result<OperatingPoint> {
    let horizon = op.horizon();
    if strategy.horizon() != horizon || strategy.num_players() != game.num_players() {
        return Err(Error::Dimension("strategy does not match operating point".into()));
    }
    let mut states = Vec::with_capacity(horizon + 1);
    let mut inputs = Vec::with_capacity(horizon);
    states.push(op.states[0].clone());
    for k in 0..horizon {
        let dx = &states[k] - &op.states[k];
        let uk: Vec<DVector<f64>> = (0..game.num_players())
            .map(|i| {
                &op.inputs[k][i] - strategy.gain(i, k) * &dx - strategy.feedforward(i, k) * step_size
            })
            .collect();
        let next = game.step(k, &states[k], &uk)?;
        states.push(next);
        inputs.push(uk);
    }
    Ok(OperatingPoint { states, inputs })
}

/// Largest Euclidean distance between corresponding player positions of two
/// state trajectories.
pub fn trajectory_change(
    a: &OperatingPoint,
    b: &OperatingPoint,
    positions: &[(usize, usize)],
) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(xa, xb)| {
            positions
                .iter()
                .map(move |&(s, n)| (xa[s] - xb[s]).hypot(xa[n] - xb[n]))
        })
        .fold(0.0, f64::max)
}

/// Total cost of every player along the operating point.
pub fn total_costs<G: GameDefinition + ?Sized>(game: &G, op: &OperatingPoint) -> Vec<f64> {
    let horizon = op.horizon();
    (0..game.num_players())
        .map(|i| {
            let running: f64 = (0..horizon)
                .map(|k| game.stage_cost(i, k, &op.states[k], &op.inputs[k][i]))
                .sum();
            running + game.terminal_cost(i, &op.states[horizon])
        })
        .collect()
}

/// Solves the LQ approximation around `op` for the requested concept.
pub fn backward_pass<G: GameDefinition + ?Sized>(
    game: &G,
    op: &OperatingPoint,
    params: &SolverParams,
) -> Result<AffineStrategy> {
    let lq_game = assemble(linearize(game, op)?, quadratize(game, op, params.regularization));
    match params.mode {
        SolutionConcept::Feedback => Ok(lq::solve_feedback(&lq_game)?.0),
        SolutionConcept::OpenLoop => {
            let dx0 = DVector::zeros(game.state_dim());
            Ok(lq::solve_open_loop(&lq_game, &dx0)?.0)
        }
    }
}

/// Runs the iterative LQ game solver from `x0`.
///
/// `warm_start` supplies initial input sequences (`[k][i]`); zero inputs are
/// used otherwise. Hitting `max_iters` is not an error: the last feasible
/// operating point is returned with `converged == false`.
pub fn solve<G: GameDefinition + ?Sized>(
    game: &G,
    x0: &DVector<f64>,
    warm_start: Option<Vec<Vec<DVector<f64>>>>,
    params: &SolverParams,
) -> Result<SolveResult> {
    params.validate()?;
    if x0.len() != game.state_dim() {
        return Err(Error::Dimension(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            game.state_dim()
        )));
    }
    let positions = game.position_indices();
    let inputs = warm_start.unwrap_or_else(|| zero_inputs(game));
    let mut op = rollout(game, x0, inputs)?;
    let mut strategy = AffineStrategy::zeros(game.horizon(), game.state_dim(), &game.input_dims());
    let mut changes = Vec::new();
    let mut converged = false;

    while changes.len() < params.max_iters {
        strategy = backward_pass(game, &op, params)?;
        let next = forward_pass(game, &op, &strategy, params.step_size)?;
        let change = trajectory_change(&op, &next, &positions);
        op = next;
        changes.push(change);
        if change <= params.conv_tol {
            converged = true;
            break;
        }
    }

    let costs = total_costs(game, &op);
    Ok(SolveResult {
        iterations: changes.len(),
        operating_point: op,
        strategy,
        converged,
        changes,
        costs,
    })
}

/// Single-player view of a game in which every other player's inputs are
/// fixed exogenous sequences. The joint state is kept; only `player`
/// optimizes.
pub struct UnilateralGame<'a, G: GameDefinition + ?Sized> {
    inner: &'a G,
    player: usize,
    frozen: Vec<Vec<DVector<f64>>>,
}

impl<'a, G: GameDefinition + ?Sized> UnilateralGame<'a, G> {
    /// `frozen[k]` holds all players' inputs at stage `k`; the entry of
    /// `player` is ignored.
    pub fn new(inner: &'a G, player: usize, frozen: Vec<Vec<DVector<f64>>>) -> Self {
        Self {
            inner,
            player,
            frozen,
        }
    }

    fn joint_inputs(&self, stage: usize, own: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let mut u = self.frozen[stage].clone();
        u[self.player] = own[0].clone();
        u
    }
}

impl<G: GameDefinition + ?Sized> GameDefinition for UnilateralGame<'_, G> {
    fn num_players(&self) -> usize {
        1
    }
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }
    fn input_dim(&self, _player: usize) -> usize {
        self.inner.input_dim(self.player)
    }
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }
    fn time_step(&self) -> f64 {
        self.inner.time_step()
    }

    fn vector_field(
        &self,
        stage: usize,
        x: &DVector<f64>,
        u: &[DVector<f64>],
    ) -> Result<DVector<f64>> {
        self.inner.vector_field(stage, x, &self.joint_inputs(stage, u))
    }

    fn vector_field_jacobians(
        &self,
        stage: usize,
        x: &DVector<f64>,
        u: &[DVector<f64>],
    ) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        let (jx, mut ju) = self
            .inner
            .vector_field_jacobians(stage, x, &self.joint_inputs(stage, u))?;
        Ok((jx, vec![ju.swap_remove(self.player)]))
    }

    fn step(&self, stage: usize, x: &DVector<f64>, u: &[DVector<f64>]) -> Result<DVector<f64>> {
        self.inner.step(stage, x, &self.joint_inputs(stage, u))
    }

    fn stage_cost(&self, _p: usize, stage: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        self.inner.stage_cost(self.player, stage, x, u)
    }

    fn stage_expansion(
        &self,
        _p: usize,
        stage: usize,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> StageExpansion {
        self.inner.stage_expansion(self.player, stage, x, u)
    }

    fn terminal_cost(&self, _p: usize, x: &DVector<f64>) -> f64 {
        self.inner.terminal_cost(self.player, x)
    }

    fn terminal_expansion(&self, _p: usize, x: &DVector<f64>) -> TerminalExpansion {
        self.inner.terminal_expansion(self.player, x)
    }

    fn position_indices(&self) -> Vec<(usize, usize)> {
        self.inner.position_indices()
    }
}
