//! Generalization bounds for graph-dependent data.
//!
//! The crate covers the whole pipeline: graphs and their power graphs,
//! d-stable fractional partitions (exact and constructive), mixing profiles
//! and field models with certified profiles, the sheltered online-learning
//! game and its regret accounting, closed-form concentration and PAC-Bayes
//! bounds, and Monte Carlo certification of the probabilistic claims.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod ext;
pub mod graph;
pub mod mixing;
pub mod online;
pub mod partitions;
pub mod rng;

pub use error::{Error, Result};
