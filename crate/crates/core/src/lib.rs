//! Optimistic self-play learning for episodic two-player zero-sum linear
//! mixture Markov games.
//!
//! The crate is organised bottom-up:
//!
//! - [`game_model`]: instances, validation, constructors and JSON I/O.
//! - [`linalg`]: weighted covariance recursions and ridge solves.
//! - [`equilibrium`]: a dense simplex LP core, ε-CCE and zero-sum matrix games.
//! - [`learner`]: the optimistic value-targeted regression learner for
//!   simultaneous-move and turn-based games.
//! - [`evaluation`]: exact best-response and Nash oracles, regret accounting
//!   and event monitors.
//! - [`harness`]: experiment configuration, multi-seed runs and CSV/JSON output.

pub mod equilibrium;
pub mod error;
pub mod evaluation;
pub mod game_model;
pub mod harness;
pub mod learner;
pub mod linalg;

pub use error::{Error, Result};
