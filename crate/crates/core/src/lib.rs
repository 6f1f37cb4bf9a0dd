//! Tracking a randomly jumping magnetic field with a continuously monitored
//! spin.
//!
//! The field is a hidden Markov chain (Ehrenfest dog-flea model) whose state
//! sets the spin detuning. [`truthsim`] produces a synthetic homodyne record,
//! [`filter`] estimates the field causally from it, and [`retro`] adds the
//! backward effect-matrix pass for smoothed estimates. [`harness`] ties the
//! pieces into seeded experiments and parameter sweeps.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod filter;
pub mod harness;
pub mod io;
pub mod markov;
pub mod model;
pub mod qmat;
pub mod retro;
pub mod truthsim;

pub use error::{Error, Result};
pub use filter::{posterior, run_forward, BlockState, FilterModel, PosteriorTrace};
pub use harness::{beta_sweep, run_one, ExperimentConfig, RunMetrics, TraceMetrics};
pub use markov::{Direction, HmmSpec, TruthTrajectory};
pub use model::{default_params, DetuningGrid, ModelParams, SpinOperators};
pub use qmat::{CMat2, Herm2, C64};
pub use retro::{pqs_posterior, run_pqs, PqsRun};
pub use truthsim::{generate, HomodyneRecord};
