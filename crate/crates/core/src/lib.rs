//! Simulation, training and ensemble pruning of diffractive optical
//! classifiers.
//!
//! The crate is organised bottom-up:
//!
//! * [`optics`] scalar wave propagation, thin elements and detector readout,
//!   each with its adjoint.
//! * [`frontend`] input encoding and the feature-engineering filters placed
//!   either on the object plane or in the Fourier plane of a 4-f relay.
//! * [`network`] the five-layer diffractive classifier, its differential
//!   scores, loss and exact reverse-mode gradients.
//! * [`trainer`] Adam, the learning-rate schedule and pool training.
//! * [`data`] CIFAR-10 binary ingestion and split bookkeeping.
//! * [`ensemble`] score caches, weighted voting and iterative pruning.

pub mod data;
pub mod ensemble;
mod error;
pub mod format;
pub mod frontend;
pub mod network;
pub mod optics;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};

/// Number of classes in CIFAR-10.
pub const CLASS_COUNT: usize = 10;
