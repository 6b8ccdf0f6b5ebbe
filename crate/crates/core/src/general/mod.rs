//! Exact λ2 path on an arbitrary penalty graph, with an optional cap on the
//! size of sets that may still split.

mod engine;
mod flow;
mod store;

pub use engine::{solve_path_general, FusedSet, PathEngine, SolveOptions, TauEdge, TOL_EVENT};
pub use flow::{
    build_flow_graph, certify_or_split, compute_pushes, slope_general, tau_tolerance, violation_time, Certification,
    LocalEdge, Push,
};
pub use store::{Anchor, Diagnostics, GeneralPathStore, PathEvent};

#[cfg(test)]
mod tests;
