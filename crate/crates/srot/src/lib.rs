//! Semi-relaxed optimal transport toolkit.
//!
//! The semi-relaxed problem keeps the target-marginal constraint of optimal
//! transport exactly and replaces the source-marginal constraint with a
//! squared penalty:
//!
//! ```text
//! minimize  <T, C> + 1/(2 lambda) * ||T 1_n - a||^2
//! subject to  T >= 0,  T^T 1_m = b
//! ```
//!
//! The feasible set is a product of scaled simplices (one per column), which
//! makes Frank-Wolfe methods cheap: the per-column linear minimization oracle
//! is an argmin over a gradient vector. This crate provides:
//!
//! - [`problem`]: problem/plan types, objective, gradients, the LMO, and the
//!   duality-gap machinery (linearization gap == Lagrangian gap).
//! - [`solvers`]: Frank-Wolfe and block-coordinate Frank-Wolfe with decay or
//!   exact line-search stepsizes, away/pairwise directions, and uniform,
//!   permutation, or gap-adaptive column sampling.
//! - [`baselines`]: projected gradient, FISTA, an exact transportation-simplex
//!   LP solver, and a gap-certified reference optimum.
//! - [`metrics`]: the evaluation metrics (objective, gap, marginal error,
//!   sparsity, matrix/value error vs. the LP plan) and per-epoch traces.
//! - [`color`]: k-means image quantization, PPM I/O, and the color-transfer
//!   pipeline built on top of the solver.
//! - [`oracle`]: brute-force reference computations (vertex enumeration,
//!   finite differences, grid search, basis enumeration) used by the
//!   verification suites; deliberately independent of the fast paths.
//! - [`gen`]: seeded random instance generators.

pub mod baselines;
pub mod color;
pub mod error;
pub mod gen;
pub mod metrics;
pub mod oracle;
pub mod problem;
pub mod solvers;

pub use error::SrotError;
pub use problem::{Atom, GapReport, SemiRelaxedProblem, TransportPlan};
pub use solvers::{Algorithm, Sampling, Solution, SolverOptions, StepRule, Variant};
