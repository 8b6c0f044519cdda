//! Forward Ising inference with a criticality-ordered recurrent mean field.
//!
//! The crate is organised around a handful of modules:
//!
//! * [`ising`]: model representation, energies, exact enumeration, Gibbs
//!   reference sampling and matrix norms.
//! * [`ordering`]: the maximum-spanning-tree spin order plus random and
//!   inverse control orders.
//! * [`rnn`] and [`cormf`]: the recurrent autoregressive distribution, its
//!   score-function gradient estimator and the training loop.
//! * [`nmf`]: the fully factorised naive mean-field baseline.
//! * [`bounds`]: the analytic free-energy error bounds.
//! * [`datasets`]: seeded generators for the benchmark instances.

#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod cormf;
pub mod datasets;
mod error;
pub mod ising;
pub mod nmf;
pub mod optim;
pub mod ordering;
pub mod rng;
pub mod rnn;

pub use error::{Error, Result};
pub use ising::{IsingModel, SampleSet, SpinConfiguration};
pub use ordering::SpinOrder;
pub use rnn::RnnMeanField;
