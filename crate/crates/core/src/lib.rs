//! Solution paths for the fused lasso signal approximator
//!
//! ```text
//! minimise ½ Σ (y_k − β_k)² + λ1 Σ |β_k| + λ2 Σ_{(k,l) ∈ E} |β_k − β_l|
//! ```
//!
//! over all `λ2 ≥ 0` at once. The path is piecewise linear in `λ2`, and any
//! `λ1` is recovered from the `λ1 = 0` solution by soft-thresholding.
//!
//! * [`chain`]: the 1-D case, where only fusions happen, stored as a fusion tree.
//! * [`general`]: any penalty graph; fused sets may also split, decided by a
//!   maximum-flow problem per set.
//! * [`oracle`]: an independent iterative solver and a KKT checker used to
//!   validate both engines.
//!
//! ```
//! use flsa::{chain::solve_path_1d, general::{solve_path_general, SolveOptions}, PenaltyGraph};
//!
//! let y = [0.0, 1.0, 2.0];
//! let tree = solve_path_1d(&y).unwrap();
//! assert_eq!(tree.eval(0.5).unwrap(), vec![0.5, 1.0, 1.5]);
//!
//! let g = PenaltyGraph::chain(3).unwrap();
//! let path = solve_path_general(&y, &g, SolveOptions::exact()).unwrap();
//! assert_eq!(path.eval(2.0).unwrap(), vec![1.0, 1.0, 1.0]);
//! ```

pub mod chain;
pub mod error;
pub mod general;
pub mod graph;
pub mod io;
pub mod maxflow;
pub mod oracle;
mod queue;
pub mod simulate;
pub mod trajectory;

pub use chain::{solve_path_1d, PathTree};
pub use error::{FlsaError, Result};
pub use general::{solve_path_general, GeneralPathStore, SolveOptions};
pub use graph::PenaltyGraph;
pub use trajectory::soft_threshold;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/one-dimensional.md")]
    struct OneDimensional;
    #[doc = include_str!("../../../book/src/general-graphs.md")]
    struct GeneralGraphs;
    #[doc = include_str!("../../../book/src/max-flow.md")]
    struct MaxFlow;
    #[doc = include_str!("../../../book/src/approximation.md")]
    struct Approximation;
    #[doc = include_str!("../../../book/src/verification.md")]
    struct Verification;
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
