//! Rate-distortion and capacity-cost computation on characteristic bipartite
//! graphs.
//!
//! Lossy computing with two-sided side information and channels with
//! two-sided state are both instances of one problem: minimize
//! `I(U;V) - I(U;W)` over a conditional `q(u|v)` supported on an edge set,
//! subject to an expected loss budget. [`UnifiedProblem`] holds such an
//! instance, [`graph`] shrinks it without changing the optimum, and
//! [`solve`] runs alternating minimization with a Newton-updated multiplier.

pub mod deflation;
pub mod error;
pub mod graph;
pub mod measures;
pub mod oracle;
pub mod problem;
pub mod problems;
pub mod solver;
pub mod weights;

pub use deflation::{deflate_step, DeflationOptions};
pub use error::{Error, Result};
pub use measures::{loss_bounds, loss_bounds_with_rd, LossBounds, Regime};
pub use problem::{build_unified_problem, EdgeSpec, Sense, UnifiedProblem};
pub use solver::{solve, solve_sweep, SolveOptions, SolveResult, Strategy};
pub use weights::{EdgeWeight, ReverseChannel};
