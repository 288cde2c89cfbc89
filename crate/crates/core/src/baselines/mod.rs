//! Comparators: OMP for conventional compressed sensing, BIHT and normalized
//! BIHT for 1-bit compressed sensing. Each solve uses a single sensing matrix
//! and runs single-threaded.

mod iht;
mod omp;

pub use iht::{biht, hard_threshold, nbiht, IhtState, OneBitMeasurements, sign_quantize};
pub use omp::{omp, OmpState};

use crate::error::{Error, Result};

fn check_budget(s_budget: usize, k: usize, n: usize) -> Result<()> {
    if s_budget > k.min(n) {
        return Err(Error::InvalidParameter(format!(
            "sparsity budget {s_budget} exceeds min(k, n) = {}",
            k.min(n)
        )));
    }
    Ok(())
}
