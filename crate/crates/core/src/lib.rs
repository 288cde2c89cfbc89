//! Sparse support recovery from ensembles of random Gaussian measurements.
//!
//! The recovery path needs no optimization solver: each coordinate of the
//! signal is estimated by the median of back-projections `Aᵀb` over
//! independent sensing matrices, a noise floor is read off the median
//! measurement energy, and the support is decided by counting how often each
//! back-projected coordinate clears that floor.
//!
//! Module map:
//! - [`numerics`]: dense kernels, seeded Gaussian streams, median selection.
//! - [`sensing`]: signals, sensing ensembles, measurements, binary fixtures.
//! - [`recovery`]: median recovery, noise-floor suppression, support counting.
//! - [`baselines`]: OMP, BIHT and normalized BIHT comparators.
//! - [`harness`]: trial generation, accuracy/timing metrics, CSV reports.

pub mod baselines;
pub mod error;
pub mod exec;
pub mod harness;
pub mod numerics;
pub mod recovery;
pub mod sensing;

pub use error::{Error, Result};
pub use exec::Execution;
