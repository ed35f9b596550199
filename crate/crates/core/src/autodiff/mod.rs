//! Dense linear algebra with hand-derived backward passes.
//!
//! There is no tape: each forward operation has a matching `*_backward`
//! that callers chain by hand. [`grad_check`] compares any analytic
//! gradient against central differences.

mod gradcheck;
mod matrix;
mod ops;

pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use matrix::{axpy, dot, matmul, matmul_backward, Matrix};
pub use ops::{
    cross_entropy, cross_entropy_softmax_backward, sigmoid, sigmoid_backward, softmax,
    softmax_backward, tanh, tanh_backward, PROBABILITY_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutodiffError {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("target {target} out of range for {len} classes")]
    TargetOutOfRange { target: usize, len: usize },
}
