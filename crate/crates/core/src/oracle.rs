//! Independent reference solver and optimality checker.
//!
//! The oracle solves the dual of the `λ1 = 0` problem,
//!
//! ```text
//!     min_z ½‖y − Dᵀz‖²   subject to  |z_e| ≤ λ2,
//! ```
//!
//! where `D` has one row per edge `(k, l)` with `+1` at `k` and `−1` at `l`,
//! by plain projected gradient with step `1 / (2·max_degree)`. The primal
//! point is `β = y − Dᵀz`, and the duality gap
//! `Σ_e |g_e|·(λ2 − sign(g_e)·z_e)` with `g = Dβ` bounds the distance to the
//! optimum: `‖β − β*‖₂ ≤ sqrt(2·gap)`. It shares no code with the path
//! engines apart from the graph type and the max-flow routine used by
//! [`check_kkt`].

use crate::error::{invalid, FlsaError, Result};
use crate::graph::PenaltyGraph;
use crate::maxflow::{Capacity, FlowNetwork};
use crate::trajectory::soft_threshold;

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    /// Target bound on `‖β − β*‖₂`; iteration stops once `sqrt(2·gap) ≤ tol`
    /// or the gap reaches its rounding floor.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 10_000_000 }
    }
}

/// Projected-gradient iterate on the edge variables.
#[derive(Clone, Debug)]
pub struct DualState<'a> {
    y: &'a [f64],
    graph: &'a PenaltyGraph,
    lambda2: f64,
    step: f64,
    pub z: Vec<f64>,
}

impl<'a> DualState<'a> {
    pub fn new(y: &'a [f64], graph: &'a PenaltyGraph, lambda2: f64) -> Self {
        let lipschitz = 2.0 * graph.max_degree().max(1) as f64;
        Self { y, graph, lambda2, step: 1.0 / lipschitz, z: vec![0.0; graph.edge_count()] }
    }

    /// `β = y − Dᵀz`.
    pub fn primal(&self) -> Vec<f64> {
        let mut beta = self.y.to_vec();
        for (&(k, l), &z) in self.graph.edges().iter().zip(&self.z) {
            beta[k] -= z;
            beta[l] += z;
        }
        beta
    }

    /// `½‖y − Dᵀz‖²`.
    pub fn objective(&self) -> f64 {
        0.5 * self.primal().iter().map(|b| b * b).sum::<f64>()
    }

    /// Duality gap at the current iterate; always non-negative.
    pub fn gap(&self, beta: &[f64]) -> f64 {
        self.graph
            .edges()
            .iter()
            .zip(&self.z)
            .map(|(&(k, l), &z)| {
                let g = beta[k] - beta[l];
                g.abs() * (self.lambda2 - g.signum() * z).max(0.0)
            })
            .sum()
    }

    /// One projected gradient step given the current primal point.
    pub fn step_from(&mut self, beta: &[f64]) {
        let (step, bound) = (self.step, self.lambda2);
        for (z, g) in self.z.iter_mut().zip(self.graph.edges().iter().map(|&(k, l)| beta[k] - beta[l])) {
            *z = (*z + step * g).clamp(-bound, bound);
        }
    }

    pub fn step(&mut self) {
        let beta = self.primal();
        self.step_from(&beta);
    }
}

#[derive(Clone, Debug)]
pub struct OracleSolution {
    /// Solution for `λ1 = 0`.
    pub beta: Vec<f64>,
    pub dual: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
}

fn check_problem(y: &[f64], graph: &PenaltyGraph, lambda2: f64) -> Result<()> {
    if y.len() != graph.n() {
        return invalid(format!("signal has {} values but graph has {} nodes", y.len(), graph.n()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return invalid("signal contains non-finite values");
    }
    if !(lambda2 >= 0.0 && lambda2.is_finite()) {
        return invalid(format!("lambda2 must be finite and non-negative, got {lambda2}"));
    }
    Ok(())
}

/// Solves the `λ1 = 0` problem to the requested accuracy.
pub fn oracle_solve_dual(y: &[f64], graph: &PenaltyGraph, lambda2: f64, opts: OracleOptions) -> Result<OracleSolution> {
    check_problem(y, graph, lambda2)?;
    if !(opts.tol > 0.0) {
        return invalid(format!("oracle tolerance must be positive, got {}", opts.tol));
    }
    let mut state = DualState::new(y, graph, lambda2);
    if lambda2 == 0.0 || graph.edge_count() == 0 {
        return Ok(OracleSolution { beta: y.to_vec(), dual: state.z, iterations: 0, gap: 0.0 });
    }
    // Edges inside a plateau contribute rounding noise of order ε·|β|·λ2 to
    // the gap, so targets below that floor are unreachable.
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = 8.0 * graph.edge_count() as f64 * lambda2 * f64::EPSILON * scale;
    let target = (0.5 * opts.tol * opts.tol).max(floor);
    let mut beta = state.primal();
    let mut gap = state.gap(&beta);
    let mut iterations = 0;
    while gap > target {
        if iterations >= opts.max_iter {
            return Err(FlsaError::Convergence { iterations, residual: gap });
        }
        state.step_from(&beta);
        beta = state.primal();
        iterations += 1;
        // The gap costs as much as a step; checking it every few steps is enough.
        if iterations % 16 == 0 {
            gap = state.gap(&beta);
        }
    }
    Ok(OracleSolution { beta, dual: state.z, iterations, gap })
}

/// Reference solution at `(λ1, λ2)`: dual projected gradient for `λ2`, then
/// soft-thresholding by `λ1`.
pub fn oracle_solve(y: &[f64], graph: &PenaltyGraph, lambda2: f64, lambda1: f64, tol: f64) -> Result<Vec<f64>> {
    if !(lambda1 >= 0.0 && lambda1.is_finite()) {
        return invalid(format!("lambda1 must be finite and non-negative, got {lambda1}"));
    }
    let sol = oracle_solve_dual(y, graph, lambda2, OracleOptions { tol, ..Default::default() })?;
    Ok(soft_threshold(&sol.beta, lambda1))
}

/// Outcome of [`check_kkt`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KktReport {
    /// Largest unmet demand over all plateaus.
    pub max_infeasibility: f64,
    pub plateaus: usize,
}

/// Measures how far `beta` is from satisfying the optimality conditions at
/// `lambda2` (with `λ1 = 0`). Neighbors closer than `1e-9·max(1, |β|)` are
/// treated as fused.
pub fn check_kkt(y: &[f64], graph: &PenaltyGraph, beta: &[f64], lambda2: f64) -> Result<KktReport> {
    let scale = beta.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    check_kkt_with_tol(y, graph, beta, lambda2, 1e-9 * scale)
}

/// Like [`check_kkt`] with an explicit plateau tolerance.
///
/// On edges joining different values the subgradient is forced to the sign
/// of the difference. What remains on each plateau is a demand per node that
/// the plateau's internal edges must route with `|τ| ≤ λ2`; that is a flow
/// feasibility problem, and the unmet part of it is the infeasibility.
pub fn check_kkt_with_tol(
    y: &[f64],
    graph: &PenaltyGraph,
    beta: &[f64],
    lambda2: f64,
    plateau_tol: f64,
) -> Result<KktReport> {
    check_problem(y, graph, lambda2)?;
    if beta.len() != y.len() {
        return invalid("candidate and signal differ in length");
    }
    let n = y.len();
    let same = |k: usize, l: usize| (beta[k] - beta[l]).abs() <= plateau_tol;

    let mut plateau = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if plateau[start] != usize::MAX {
            continue;
        }
        let id = members.len();
        plateau[start] = id;
        let mut group = vec![start];
        let mut i = 0;
        while i < group.len() {
            let k = group[i];
            for &(l, _) in graph.neighbors(k) {
                if plateau[l] == usize::MAX && same(k, l) {
                    plateau[l] = id;
                    group.push(l);
                }
            }
            i += 1;
        }
        members.push(group);
    }

    let mut demand: Vec<f64> = (0..n).map(|k| y[k] - beta[k]).collect();
    for &(k, l) in graph.edges() {
        if plateau[k] != plateau[l] {
            let t = (beta[k] - beta[l]).signum();
            demand[k] -= lambda2 * t;
            demand[l] += lambda2 * t;
        }
    }

    let mut local = vec![usize::MAX; n];
    let mut worst = 0.0_f64;
    for group in &members {
        for (i, &k) in group.iter().enumerate() {
            local[k] = i;
        }
        let mut net = FlowNetwork::new(group.len());
        let (mut supply, mut need) = (0.0, 0.0);
        for &k in group {
            let d = demand[k];
            if d > 0.0 {
                supply += d;
                net.add_source_edge(local[k], d)?;
            } else if d < 0.0 {
                need -= d;
                net.add_sink_edge(local[k], -d)?;
            }
            for &(l, _) in graph.neighbors(k) {
                if k < l && plateau[l] == plateau[k] {
                    let cap = Capacity::Finite(lambda2);
                    net.add_edge(local[k], local[l], cap, cap)?;
                }
            }
        }
        let routed = if supply > 0.0 && need > 0.0 { net.max_flow()?.value } else { 0.0 };
        worst = worst.max(f64::max(supply, need) - routed);
    }
    Ok(KktReport { max_infeasibility: worst, plateaus: members.len() })
}
