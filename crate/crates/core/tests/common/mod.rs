#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ilqgames::ilq::{GameDefinition, StageExpansion, TerminalExpansion};
use ilqgames::lq::{solve_open_loop, AffineStrategy, LqGame, LqStage};
use ilqgames::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.gen_range(-1.0..1.0))
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| scale * rng.gen_range(-1.0..1.0))
}

pub fn psd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let l = uniform(rng, n, n, 1.0);
    l.transpose() * l * scale
}

pub fn pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    psd(rng, n, 0.5) + DMatrix::identity(n, n) * 0.5
}

/// Random LQ game with PSD state costs, PD own-input costs and PSD cross
/// input costs.
pub fn random_game(rng: &mut ChaCha8Rng, players: usize, n: usize, m: usize, horizon: usize) -> LqGame {
    let stages = (0..horizon)
        .map(|_| {
            let a = DMatrix::identity(n, n) + uniform(rng, n, n, 0.4);
            let b = (0..players).map(|_| uniform(rng, n, m, 1.0)).collect();
            let mut st = LqStage::zeros(a, b);
            for i in 0..players {
                st.state_hess[i] = psd(rng, n, 0.5);
                st.state_grad[i] = uniform_vec(rng, n, 1.0);
                for j in 0..players {
                    st.input_hess[i][j] = if i == j { pd(rng, m) } else { psd(rng, m, 0.2) };
                    st.input_grad[i][j] = uniform_vec(rng, m, 1.0);
                }
            }
            st
        })
        .collect();
    LqGame {
        stages,
        terminal_hess: (0..players).map(|_| psd(rng, n, 0.5)).collect(),
        terminal_grad: (0..players).map(|_| uniform_vec(rng, n, 1.0)).collect(),
    }
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

pub fn rel_err_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Single-player difference Riccati recursion written in Joseph form:
/// `P = Q + K'RK + (A - BK)' P (A - BK)`. Returns `(K_k, k_k)` per stage.
pub fn riccati_oracle(game: &LqGame) -> Vec<(DMatrix<f64>, DVector<f64>)> {
    let mut p = game.terminal_hess[0].clone();
    let mut pv = game.terminal_grad[0].clone();
    let mut out = Vec::new();
    for st in game.stages.iter().rev() {
        let (a, b) = (&st.a, &st.b[0]);
        let (r, rv) = (&st.input_hess[0][0], &st.input_grad[0][0]);
        let s = r + b.transpose() * &p * b;
        let lu = s.clone().lu();
        let gain = lu.solve(&(b.transpose() * &p * a)).expect("regular");
        let ff = lu.solve(&(b.transpose() * &pv + rv)).expect("regular");
        let closed = a - b * &gain;
        let new_pv = &st.state_grad[0] + gain.transpose() * r * &ff - gain.transpose() * rv
            + closed.transpose() * (&pv - &p * b * &ff);
        let new_p = &st.state_hess[0] + gain.transpose() * r * &gain + closed.transpose() * &p * &closed;
        p = (&new_p + new_p.transpose()) * 0.5;
        pv = new_pv;
        out.push((gain, ff));
    }
    out.reverse();
    out
}

/// Open-loop Nash inputs from one dense linear system: every player's
/// gradient of its total cost w.r.t. its own stacked inputs, others'
/// inputs entering linearly, set to zero simultaneously. Returns
/// `u[k][i]`.
pub fn open_loop_oracle(game: &LqGame, dx0: &DVector<f64>) -> Vec<Vec<DVector<f64>>> {
    let players = game.num_players();
    let horizon = game.horizon();
    let n = game.state_dim();
    let dims = game.input_dims();
    let col_off: Vec<usize> = (0..players)
        .map(|i| dims[..i].iter().sum::<usize>() * horizon)
        .collect();
    let total: usize = dims.iter().sum::<usize>() * horizon;
    let idx = |i: usize, k: usize| col_off[i] + k * dims[i];

    // x_k = free_k + G_k u
    let mut free = vec![dx0.clone()];
    let mut g = vec![DMatrix::zeros(n, total)];
    for (k, st) in game.stages.iter().enumerate() {
        free.push(&st.a * &free[k]);
        let mut gk = &st.a * &g[k];
        for i in 0..players {
            gk.view_mut((0, idx(i, k)), (n, dims[i])).copy_from(&st.b[i]);
        }
        g.push(gk);
    }

    let mut lhs = DMatrix::zeros(total, total);
    let mut rhs = DVector::zeros(total);
    for i in 0..players {
        let rows: Vec<usize> = (0..horizon).flat_map(|k| (0..dims[i]).map(move |c| idx(i, k) + c)).collect();
        let mut grad_lin = DMatrix::zeros(total, total);
        let mut grad_const = DVector::zeros(total);
        for k in 0..=horizon {
            let (q, qv) = if k < horizon {
                (&game.stages[k].state_hess[i], &game.stages[k].state_grad[i])
            } else {
                (&game.terminal_hess[i], &game.terminal_grad[i])
            };
            let gt = g[k].transpose();
            grad_lin += &gt * q * &g[k];
            grad_const += &gt * (q * &free[k] + qv);
        }
        for k in 0..horizon {
            let st = &game.stages[k];
            let o = idx(i, k);
            let mut block = grad_lin.view_mut((o, o), (dims[i], dims[i]));
            block += &st.input_hess[i][i];
            let mut c = grad_const.rows_mut(o, dims[i]);
            c += &st.input_grad[i][i];
        }
        for &r in &rows {
            lhs.row_mut(r).copy_from(&grad_lin.row(r));
            rhs[r] = -grad_const[r];
        }
    }
    let u = lhs.lu().solve(&rhs).expect("stationarity system is regular");
    (0..horizon)
        .map(|k| (0..players).map(|i| u.rows(idx(i, k), dims[i]).into_owned()).collect())
        .collect()
}

/// The single-player problem faced by `player` when every other player
/// follows `strategy`. The affine offset is carried by an extra constant
/// state appended to the state vector, so the induced optimal strategy
/// reads `u = -[K k] [x; 1]`.
pub fn induced_problem(game: &LqGame, strategy: &AffineStrategy, player: usize) -> LqGame {
    let n = game.state_dim();
    let m = game.input_dims()[player];
    let aug = |mat: &DMatrix<f64>, vec: &DVector<f64>| {
        let mut out = DMatrix::zeros(n + 1, n + 1);
        out.view_mut((0, 0), (n, n)).copy_from(mat);
        out.view_mut((0, n), (n, 1)).copy_from(vec);
        out.view_mut((n, 0), (1, n)).copy_from(&vec.transpose());
        out
    };
    let stages = game
        .stages
        .iter()
        .enumerate()
        .map(|(k, st)| {
            let mut a = DMatrix::zeros(n + 1, n + 1);
            let mut closed = st.a.clone();
            let mut offset = DVector::zeros(n);
            let mut q = st.state_hess[player].clone();
            let mut qv = st.state_grad[player].clone();
            for j in 0..game.num_players() {
                if j == player {
                    continue;
                }
                let (kj, ffj) = (strategy.gain(j, k), strategy.feedforward(j, k));
                closed -= &st.b[j] * kj;
                offset -= &st.b[j] * ffj;
                let (r, rv) = (&st.input_hess[player][j], &st.input_grad[player][j]);
                q += kj.transpose() * r * kj;
                qv += kj.transpose() * r * ffj - kj.transpose() * rv;
            }
            a.view_mut((0, 0), (n, n)).copy_from(&closed);
            a.view_mut((0, n), (n, 1)).copy_from(&offset);
            a[(n, n)] = 1.0;
            let mut b = DMatrix::zeros(n + 1, m);
            b.view_mut((0, 0), (n, m)).copy_from(&st.b[player]);
            let mut out = LqStage::zeros(a, vec![b]);
            out.state_hess[0] = aug(&q, &qv);
            out.state_grad[0] = DVector::zeros(n + 1);
            out.input_hess[0][0] = st.input_hess[player][player].clone();
            out.input_grad[0][0] = st.input_grad[player][player].clone();
            out
        })
        .collect();
    LqGame {
        stages,
        terminal_hess: vec![aug(&game.terminal_hess[player], &game.terminal_grad[player])],
        terminal_grad: vec![DVector::zeros(n + 1)],
    }
}

/// Splits an augmented gain `[K k]` into its state and offset parts.
pub fn split_augmented(gain: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = gain.ncols() - 1;
    (gain.columns(0, n).into_owned(), gain.column(n).into_owned())
}

pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

pub fn fd_jacobian(f: impl Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let rows = f(x).len();
    let mut out = DMatrix::zeros(rows, x.len());
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        out.set_column(i, &((f(&xp) - f(&xm)) / (2.0 * h)));
    }
    out
}

/// Relative error with an absolute floor for vanishing references.
pub fn fd_err(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    (analytic - numeric).norm() / numeric.norm().max(1e-3)
}

/// Linear dynamics `x' = F x + sum G_i u_i` with quadratic costs
/// `1/2 x'Qx + q'x + 1/2 u'Ru + r'u`; its LQ approximation is exact.
pub struct LinearQuadraticGame {
    pub flow: DMatrix<f64>,
    pub inputs: Vec<DMatrix<f64>>,
    pub q: Vec<DMatrix<f64>>,
    pub qv: Vec<DVector<f64>>,
    pub r: Vec<DMatrix<f64>>,
    pub rv: Vec<DVector<f64>>,
    pub terminal: Vec<DMatrix<f64>>,
    pub terminal_grad: Vec<DVector<f64>>,
    pub dt: f64,
    pub horizon: usize,
}

impl LinearQuadraticGame {
    pub fn random(rng: &mut ChaCha8Rng, players: usize, n: usize, m: usize, horizon: usize) -> Self {
        Self {
            flow: uniform(rng, n, n, 1.0),
            inputs: (0..players).map(|_| uniform(rng, n, m, 1.0)).collect(),
            q: (0..players).map(|_| psd(rng, n, 1.0)).collect(),
            qv: (0..players).map(|_| uniform_vec(rng, n, 1.0)).collect(),
            r: (0..players).map(|_| pd(rng, m)).collect(),
            rv: (0..players).map(|_| uniform_vec(rng, m, 1.0)).collect(),
            terminal: (0..players).map(|_| psd(rng, n, 1.0)).collect(),
            terminal_grad: (0..players).map(|_| uniform_vec(rng, n, 1.0)).collect(),
            dt: 0.1,
            horizon,
        }
    }
}

impl GameDefinition for LinearQuadraticGame {
    fn num_players(&self) -> usize {
        self.inputs.len()
    }
    fn state_dim(&self) -> usize {
        self.flow.nrows()
    }
    fn input_dim(&self, player: usize) -> usize {
        self.inputs[player].ncols()
    }
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn time_step(&self) -> f64 {
        self.dt
    }
    fn vector_field(&self, _k: usize, x: &DVector<f64>, u: &[DVector<f64>]) -> Result<DVector<f64>> {
        let mut out = &self.flow * x;
        for (g, ui) in self.inputs.iter().zip(u) {
            out += g * ui;
        }
        Ok(out)
    }
    fn vector_field_jacobians(
        &self,
        _k: usize,
        _x: &DVector<f64>,
        _u: &[DVector<f64>],
    ) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        Ok((self.flow.clone(), self.inputs.clone()))
    }
    fn stage_cost(&self, i: usize, k: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        self.stage_expansion(i, k, x, u).value
    }
    fn stage_expansion(&self, i: usize, _k: usize, x: &DVector<f64>, u: &DVector<f64>) -> StageExpansion {
        StageExpansion {
            value: 0.5 * x.dot(&(&self.q[i] * x)) + self.qv[i].dot(x) + 0.5 * u.dot(&(&self.r[i] * u)) + self.rv[i].dot(u),
            grad_x: &self.q[i] * x + &self.qv[i],
            hess_x: self.q[i].clone(),
            grad_u: &self.r[i] * u + &self.rv[i],
            hess_u: self.r[i].clone(),
        }
    }
    fn terminal_cost(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.terminal_expansion(i, x).value
    }
    fn terminal_expansion(&self, i: usize, x: &DVector<f64>) -> TerminalExpansion {
        TerminalExpansion {
            value: 0.5 * x.dot(&(&self.terminal[i] * x)) + self.terminal_grad[i].dot(x),
            grad: &self.terminal[i] * x + &self.terminal_grad[i],
            hess: self.terminal[i].clone(),
        }
    }
    fn position_indices(&self) -> Vec<(usize, usize)> {
        vec![(0, 1)]
    }
}

/// Adjoint gradient of player `i`'s total cost w.r.t. its own inputs along
/// the trajectory generated by `us` from `dx0`.
pub fn own_input_gradient(game: &LqGame, i: usize, dx0: &DVector<f64>, us: &[Vec<DVector<f64>>]) -> Vec<DVector<f64>> {
    let mut xs = vec![dx0.clone()];
    for (k, st) in game.stages.iter().enumerate() {
        let mut next = &st.a * &xs[k];
        for (b, u) in st.b.iter().zip(&us[k]) {
            next += b * u;
        }
        xs.push(next);
    }
    let horizon = game.horizon();
    let mut lambda = &game.terminal_hess[i] * &xs[horizon] + &game.terminal_grad[i];
    let mut grads = vec![DVector::zeros(0); horizon];
    for k in (0..horizon).rev() {
        let st = &game.stages[k];
        grads[k] = &st.input_hess[i][i] * &us[k][i] + &st.input_grad[i][i] + st.b[i].transpose() * &lambda;
        lambda = &st.state_hess[i] * &xs[k] + &st.state_grad[i] + st.a.transpose() * &lambda;
    }
    grads
}

pub fn open_loop_inputs(game: &LqGame, dx0: &DVector<f64>) -> Vec<Vec<DVector<f64>>> {
    let (strategy, _, _) = solve_open_loop(game, dx0).unwrap();
    (0..game.horizon())
        .map(|k| (0..game.num_players()).map(|i| -strategy.feedforward(i, k)).collect())
        .collect()
}

pub mod audit {
    use super::*;
    use ilqgames::racing::{
        collision_term, CostParams, GGDiamond, PlayerModel, Profile, RacingGame, Track, STATE_DIM,
    };

    pub const MARGIN: f64 = 1e-3;
    const H: f64 = 1e-5;

    pub fn track() -> Track {
        Track {
            length: 600.0,
            curvature: Profile::new(vec![0.0, 200.0, 400.0, 600.0], vec![0.0, 0.01, -0.005, 0.002]).unwrap(),
            width_left: Profile::new(vec![0.0, 300.0, 600.0], vec![6.0, 5.0, 6.5]).unwrap(),
            width_right: Profile::new(vec![0.0, 300.0, 600.0], vec![6.0, 6.5, 5.0]).unwrap(),
        }
    }

    pub fn diamond() -> GGDiamond {
        GGDiamond {
            speeds: vec![0.0, 15.0, 30.0, 45.0],
            ax_max: vec![6.0, 5.0, 2.5, 0.0],
            ax_min: vec![15.0, 14.0, 13.0, 12.0],
            ay_max: vec![12.0, 12.5, 11.0, 10.0],
            v_max: 45.0,
        }
    }

    pub fn game() -> RacingGame {
        let players = vec![
            PlayerModel { cost: CostParams { jerk_weight: [[0.02, 0.005], [0.005, 0.01]], ..CostParams::default() }, gg: diamond() },
            PlayerModel {
                cost: CostParams { collision: 10.0, vehicle_length: 4.0, vehicle_width: 1.8, ..CostParams::default() },
                gg: diamond(),
            },
        ];
        RacingGame::new(track(), players, 0.1, 4).with_exogenous(vec![vec![[100.0, 1.0]; 5]])
    }

    fn far(x: f64, knots: &[f64]) -> bool {
        knots.iter().all(|k| (x - k).abs() >= MARGIN)
    }

    /// Whether every indicator and kink is at least `MARGIN` away from the
    /// vehicle block starting at `off`.
    pub fn away_from_kinks(x: &DVector<f64>, off: usize, game: &RacingGame, player: usize) -> bool {
        let t = &game.track;
        let gg = &game.players[player].gg;
        let (s, v, n, ax, ay) = (x[off], x[off + 1], x[off + 2], x[off + 4], x[off + 5]);
        let lim = gg.limits(v);
        let h = (ax / lim.ax_min).powi(2) + (ay / lim.ay_max).powi(2);
        far(s, t.curvature.knots())
            && far(s, t.width_left.knots())
            && far(s, t.width_right.knots())
            && far(v, &gg.speeds)
            && far(v, &[gg.v_max])
            && (n - t.width_left.value(s)).abs() >= MARGIN
            && (-n - t.width_right.value(s)).abs() >= MARGIN
            && (ax - lim.ax_max).abs() >= MARGIN
            && (h - 1.0).abs() >= MARGIN
    }

    pub fn sample_point(r: &mut ChaCha8Rng, game: &RacingGame) -> (DVector<f64>, Vec<DVector<f64>>) {
        loop {
            let mut x = DVector::zeros(STATE_DIM * game.players.len());
            for i in 0..game.players.len() {
                let off = i * STATE_DIM;
                x[off] = r.gen_range(10.0..590.0);
                x[off + 1] = r.gen_range(5.0..44.0);
                x[off + 2] = r.gen_range(-7.0..7.0);
                x[off + 3] = r.gen_range(-0.3..0.3);
                x[off + 4] = r.gen_range(-16.0..8.0);
                x[off + 5] = r.gen_range(-14.0..14.0);
            }
            // bring the players close enough for the collision term to matter
            if r.gen_bool(0.7) {
                x[STATE_DIM] = x[0] + r.gen_range(-8.0..8.0);
                x[STATE_DIM + 2] = x[2] + r.gen_range(-3.0..3.0);
            }
            if (0..game.players.len()).all(|i| away_from_kinks(&x, i * STATE_DIM, game, i)) {
                let u = (0..game.players.len()).map(|_| uniform_vec(r, 2, 5.0)).collect();
                return (x, u);
            }
        }
    }

    /// Worst relative finite-difference error of each analytic derivative
    /// family over `points` random points.
    pub fn run(seed: u64, points: usize) -> Vec<(&'static str, f64)> {
        let game = game();
        let mut r = rng(seed);
        let mut worst = vec![
            ("dynamics state jacobian", 0.0f64),
            ("dynamics input jacobian", 0.0),
            ("stage cost state gradient", 0.0),
            ("stage cost state hessian", 0.0),
            ("stage cost input gradient", 0.0),
            ("stage cost input hessian", 0.0),
            ("terminal cost gradient", 0.0),
            ("terminal cost hessian", 0.0),
            ("gg limit slopes", 0.0),
            ("collision term gradient", 0.0),
            ("collision term hessian", 0.0),
        ];
        let mut record = |slot: usize, err: f64| worst[slot].1 = worst[slot].1.max(err);
        for _ in 0..points {
            let (x, u) = sample_point(&mut r, &game);
            let (jx, ju) = game.vector_field_jacobians(0, &x, &u).unwrap();
            let f = |xx: &DVector<f64>| game.vector_field(0, xx, &u).unwrap();
            record(0, fd_err(&jx, &fd_jacobian(f, &x, H)));
            for i in 0..u.len() {
                let fu = |ui: &DVector<f64>| {
                    let mut uu = u.clone();
                    uu[i] = ui.clone();
                    game.vector_field(0, &x, &uu).unwrap()
                };
                record(1, fd_err(&ju[i], &fd_jacobian(fu, &u[i], H)));
            }
            for i in 0..game.players.len() {
                let e = game.stage_expansion(i, 0, &x, &u[i]);
                let value = |xx: &DVector<f64>| game.stage_cost(i, 0, xx, &u[i]);
                let grad = |xx: &DVector<f64>| game.stage_expansion(i, 0, xx, &u[i]).grad_x;
                record(2, fd_err(&as_col(&e.grad_x), &as_col(&fd_gradient(value, &x, H))));
                record(3, fd_err(&e.hess_x, &fd_jacobian(grad, &x, H)));
                let value_u = |uu: &DVector<f64>| game.stage_cost(i, 0, &x, uu);
                let grad_u = |uu: &DVector<f64>| game.stage_expansion(i, 0, &x, uu).grad_u;
                record(4, fd_err(&as_col(&e.grad_u), &as_col(&fd_gradient(value_u, &u[i], H))));
                record(5, fd_err(&e.hess_u, &fd_jacobian(grad_u, &u[i], H)));

                let t = game.terminal_expansion(i, &x);
                let tv = |xx: &DVector<f64>| game.terminal_cost(i, xx);
                let tg = |xx: &DVector<f64>| game.terminal_expansion(i, xx).grad;
                record(6, fd_err(&as_col(&t.grad), &as_col(&fd_gradient(tv, &x, H))));
                record(7, fd_err(&t.hess, &fd_jacobian(tg, &x, H)));

                let gg = &game.players[i].gg;
                let v = x[i * STATE_DIM + 1];
                let lim = gg.limits(v);
                let num = |vv: f64| {
                    let (p, m) = (gg.limits(vv + H), gg.limits(vv - H));
                    [(p.ax_max - m.ax_max), (p.ax_min - m.ax_min), (p.ay_max - m.ay_max)].map(|d| d / (2.0 * H))
                };
                let analytic = DMatrix::from_row_slice(3, 1, &[lim.d_ax_max, lim.d_ax_min, lim.d_ay_max]);
                record(8, fd_err(&analytic, &DMatrix::from_row_slice(3, 1, &num(v))));

                let params = &game.players[i].cost;
                let d = DVector::from_vec(vec![x[0] - x[STATE_DIM], x[2] - x[STATE_DIM + 2]]);
                let (_, g, h) = collision_term(d[0], d[1], params);
                let cv = |dd: &DVector<f64>| collision_term(dd[0], dd[1], params).0;
                let cg = |dd: &DVector<f64>| {
                    let (_, g, _) = collision_term(dd[0], dd[1], params);
                    DVector::from_vec(g.to_vec())
                };
                let g = DMatrix::from_row_slice(2, 1, &g);
                let h = DMatrix::from_row_slice(2, 2, &[h[0][0], h[0][1], h[1][0], h[1][1]]);
                record(9, fd_err(&g, &as_col(&fd_gradient(cv, &d, H))));
                record(10, fd_err(&h, &fd_jacobian(cg, &d, H)));
            }
        }
        worst
    }

    fn as_col(v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v.as_slice())
    }
}
