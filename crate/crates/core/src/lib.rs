//! Distributed dual subgradient tracking (DUST) for online convex
//! optimization with a globally coupled inequality constraint over
//! time-varying, unbalanced directed networks.
//!
//! The crate is organized around the round engine in [`dust`]:
//!
//! - [`graph`]: round graphs, column-stochastic mixing matrices and
//!   B-connected sequence generators.
//! - [`problem`]: projectable local sets, affine coupling constraints,
//!   time-varying cost oracles and the plug-in EV charging scenario.
//! - [`dust`]: node state, step schedules and the synchronous round update.
//! - [`oracle`]: centralized reference solvers used to evaluate regret.
//! - [`metrics`]: dynamic regret, cumulative violation, consensus
//!   diagnostics and the conservative theory constants.
//! - [`format`]: the versioned text format for instances and state dumps.

pub mod dust;
pub mod error;
pub mod format;
pub mod graph;
pub mod metrics;
pub mod oracle;
pub mod problem;
pub mod rng;

pub use error::{Error, Result};

/// Dense real vector used for decisions, duals and constraint values.
pub type Vector = nalgebra::DVector<f64>;
/// Dense real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
