//! Dense real linear algebra.
//!
//! Everything the solver needs lives here: row-major matrices, the LU
//! factorization used for the indefinite Hessian, Cholesky factors of
//! negative definite matrices, triangular solves, Givens rotations and a
//! rank test. Kernels report their arithmetic to [`ops`].

mod cholesky;
mod eigen;
mod givens;
mod lu;
mod matrix;
pub mod ops;
mod rank;

use thiserror::Error;

pub use cholesky::{
    invert_upper, is_negative_definite, is_positive_definite, neg_def_cholesky, solve_lower,
    solve_upper, solve_upper_transpose,
};
pub use eigen::symmetric_eigen;
pub use givens::{givens_apply_sequence, Givens};
pub use lu::LuFactor;
pub use matrix::{axpy, dot, norm2, norm_inf, sub_vec, DenseMatrix};
pub use ops::OpCounter;
pub use rank::{has_full_row_rank, row_rank};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("matrix is not negative definite (pivot {pivot} = {value:e})")]
    NotNegativeDefinite { pivot: usize, value: f64 },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}
