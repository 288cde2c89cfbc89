//! Dense linear-algebra primitives, seeded Gaussian streams and selection.

mod matrix;
mod rng;
mod select;

pub use matrix::{dot, matvec, matvec_transposed, squared_norm, DenseMatrix, DenseVector};
pub use matrix::{matvec_transposed_with, matvec_with};
pub use rng::{sample_gaussian_matrix, SeededGaussianSource};
pub use select::median;
