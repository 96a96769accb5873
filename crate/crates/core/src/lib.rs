//! Simulation library for decentralized nonconvex stochastic optimization
//! under heavy-tailed gradient noise.
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`] builds communication graphs and doubly stochastic mixing
//!   matrices and computes their spectral gap.
//! * [`noise`] provides counter-based random streams and the Gaussian,
//!   Student-t and alpha-stable noise samplers.
//! * [`objective`] holds the tokenized regression dataset, the Tukey biweight
//!   loss, the scalar quadratic counterexample and the per-node stochastic
//!   oracle.
//! * [`optim`] is the synchronous round engine for GT-NSGDm and the baseline
//!   methods, plus the theoretical hyperparameter schedules.
//! * [`metrics`] computes the evaluation quantities and reads/writes traces.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod metrics;
pub mod noise;
pub mod objective;
pub mod optim;
pub mod topology;
pub mod vecops;

pub use error::{Error, Result};
