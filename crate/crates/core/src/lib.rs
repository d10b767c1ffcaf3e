//! Dual active-set solver for minimax quadratic programs
//!
//! ```text
//!     min_x max_y  ½ zᵀ G z + cᵀ z   s.t.  A x + B y + h <= 0,   z = (x, y)
//! ```
//!
//! with `G22` negative definite. Besides the solver the crate ships an
//! independent verifier and brute-force oracle, random instance generators
//! with planted solutions, an adversarial portfolio application and a
//! benchmark harness.

pub mod bench;
pub mod dense;
pub mod factor;
pub mod fixtures;
pub mod generator;
pub mod portfolio;
pub mod problem;
pub mod solver;
pub mod verify;

pub use dense::{DenseMatrix, OpCounter};
pub use factor::{FactorError, FactorState, StepVectors};
pub use problem::{MinimaxQP, ProblemError, ProblemFile};
pub use solver::{solve, SelectionRule, SolveError, SolveOptions, SolveOutcome, SPair, StepKind, Termination};
