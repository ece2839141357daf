//! Simulator for decentralized federated learning over a LEO satellite
//! constellation connected by optical inter-satellite links.
//!
//! The crate is organised bottom-up:
//!
//! - [`topology`]: 2D-torus constellation graph and orbital geometry
//! - [`linkmodel`]: optical link budget, pointing error and packet success
//! - [`links`]: per-link success probabilities for a constellation
//! - [`mixing`]: mixing matrices and their spectral analysis
//! - [`training`]: synthetic tasks, data partitioning and local optimizers
//! - [`consensus`]: orbit reduce and gossip with self-compensation
//! - [`baselines`]: torus-gossip baselines with retransmission
//! - [`experiment`]: full runs, metrics, result files and sweeps
//!
//! All randomness is derived from a single seed via [`seeding::StreamKey`].

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod consensus;
pub mod error;
pub mod experiment;
pub mod linkmodel;
pub mod links;
pub mod mixing;
pub mod seeding;
pub mod topology;
pub mod training;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use experiment::{run_experiment, RoundMetrics, Simulation};
pub use seeding::StreamKey;
pub use training::ModelVector;
