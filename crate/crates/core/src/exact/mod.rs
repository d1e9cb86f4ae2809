//! Exact rational scalars, vectors and matrices, plus the integer kernels
//! (Hermite normal form, saturated integer kernels, integer square roots)
//! the lattice code is built on.

mod integer;
mod matrix;
mod rational;

pub use integer::{
    clear_denominators, common_denominator, hnf, hnf_basis, integer_kernel, isqrt_ceil,
    isqrt_floor, primitive_vec, IntMatrix,
};
pub use matrix::{
    add_vec, dot, int_vec, is_zero_vec, scale_vec, sub_vec, QVec, RationalMatrix, Rref,
};
pub use rational::Rational;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("negative input")]
    NegativeInput,
}

/// Parses a comma-separated list of rationals such as `"1/2, -3"`.
pub fn parse_qvec(s: &str) -> Result<QVec, ExactError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect()
}
