//! Iterative linear-quadratic dynamic games (iLQGames) for N players, with
//! a head-to-head racing domain, a receding-horizon simulator, and a Monte
//! Carlo experiment harness.
//!
//! * [`lq`]: exact open-loop and feedback Nash solutions of LQ games.
//! * [`ilq`]: the iterative solver for nonlinear games.
//! * [`racing`]: point-mass racing dynamics, gg limits and costs.
//! * [`sim`]: moving-horizon closed-loop simulation.
//! * [`batch`]: configuration files, batch runs, sweeps and export.

pub mod batch;
pub mod error;
pub mod ilq;
pub mod lq;
pub mod racing;
pub mod sim;

pub use error::{Error, Result};
