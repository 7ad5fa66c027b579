//! Probability matrices, divergences and the planted-pair data model.

mod dataset;
mod matrix;

pub use dataset::{generate_dataset, generate_dataset_with, DatasetPair, PackedPoints};
pub use matrix::{
    kl_extended, kl_vector, mutual_information, NonnegMatrix, ProbabilityMatrix,
    MATRIX_SUM_TOLERANCE,
};
pub(crate) use matrix::kl_raw;
