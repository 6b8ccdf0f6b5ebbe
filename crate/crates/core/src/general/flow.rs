//! Per-set certification: slopes, pushes, the flow network over a fused
//! set, and the split/violation rules derived from its maximum flow.

use crate::error::{invariant, Result};
use crate::maxflow::{Capacity, FlowNetwork, TOL_FLOW};

/// Tolerance for treating `τ` as sitting on `±λ2`.
pub fn tau_tolerance(lambda2: f64) -> f64 {
    1e-9 * lambda2.max(1.0)
}

/// `−(Σ t) / |F|` from the summed boundary signs of a set.
pub(crate) fn slope_from_signs(sign_sum: i64, size: usize) -> f64 {
    if sign_sum == 0 {
        0.0
    } else {
        -(sign_sum as f64) / size as f64
    }
}

/// Slope of a fused set with value `set_beta` and `size` members.
/// `boundary_betas` holds, for every edge leaving the set, the value on the
/// far side. A neighbor with the same value means a fusion was missed.
pub fn slope_general(set_beta: f64, size: usize, boundary_betas: &[f64]) -> Result<f64> {
    let mut sum = 0i64;
    for &b in boundary_betas {
        if b == set_beta {
            return invariant(format!("neighbor value {b} equals the set value; grouping is not valid"));
        }
        sum += if set_beta > b { 1 } else { -1 };
    }
    Ok(slope_from_signs(sum, size))
}

/// Per-member push `p_k = −Σ_{external} t_kl − slope` and the set's slope.
#[derive(Clone, Debug, PartialEq)]
pub struct Push {
    pub values: Vec<f64>,
    pub slope: f64,
}

impl Push {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `external[k]` is the sum of `t_kl` over the edges leaving member `k`
/// (each `±1`). Pushes are formed as `(Σ_j external[j] − |F|·external[k]) / |F|`
/// so that the only rounding is the final division.
pub fn compute_pushes(external: &[i64]) -> Push {
    let size = external.len() as i64;
    let total: i64 = external.iter().sum();
    let values = external
        .iter()
        .map(|&a| (total - size * a) as f64 / size as f64)
        .collect();
    Push { values, slope: slope_from_signs(total, external.len()) }
}

/// An edge inside a fused set in local numbering; `tau` is oriented `u → v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalEdge {
    pub u: usize,
    pub v: usize,
    pub tau: f64,
}

/// Flow network of a fused set. Arc `i` corresponds to `edges[i]`; source and
/// sink arcs follow.
pub fn build_flow_graph(edges: &[LocalEdge], pushes: &[f64], lambda2: f64) -> Result<FlowNetwork> {
    let tol = tau_tolerance(lambda2);
    let mut net = FlowNetwork::new(pushes.len());
    for e in edges {
        if e.tau.abs() > lambda2 + tol {
            return invariant(format!(
                "tau {} on edge ({}, {}) outside [-{lambda2}, {lambda2}]",
                e.tau, e.u, e.v
            ));
        }
        let upper = if e.tau >= lambda2 - tol { Capacity::Finite(1.0) } else { Capacity::Unbounded };
        let lower = if e.tau <= -lambda2 + tol { Capacity::Finite(1.0) } else { Capacity::Unbounded };
        net.add_edge(e.u, e.v, upper, lower)?;
    }
    for (k, &p) in pushes.iter().enumerate() {
        if p > 0.0 {
            net.add_source_edge(k, p)?;
        } else if p < 0.0 {
            net.add_sink_edge(k, -p)?;
        }
    }
    Ok(net)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certification {
    /// Rates `∂τ/∂λ2` per local edge, oriented like the edge.
    Certified { rates: Vec<f64> },
    /// Residual-reachable members and the rest, in local numbering.
    Split { reachable: Vec<usize>, rest: Vec<usize> },
}

/// Solves the set's flow problem: a saturating flow certifies the set and
/// gives the τ rates; otherwise the set splits along the residual cut.
pub fn certify_or_split(edges: &[LocalEdge], pushes: &[f64], lambda2: f64) -> Result<Certification> {
    let net = build_flow_graph(edges, pushes, lambda2)?;
    let res = net.max_flow()?;
    let rates = || res.flows[..edges.len()].to_vec();
    if res.saturated {
        return Ok(Certification::Certified { rates: rates() });
    }
    let (reachable, rest): (Vec<usize>, Vec<usize>) = (0..pushes.len()).partition(|&k| res.reachable[k]);
    if reachable.is_empty() || rest.is_empty() {
        // Deficit below the augmentation threshold: numerically saturated.
        return Ok(Certification::Certified { rates: rates() });
    }
    Ok(Certification::Split { reachable, rest })
}

/// Earliest `λ2` at which some `τ` would leave `[−λ2, λ2]` under its current
/// rate, with the index of that edge. `edges` holds `(τ(lambda_now), rate)`.
pub fn violation_time(edges: &[(f64, f64)], lambda_now: f64) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, &(tau, rate)) in edges.iter().enumerate() {
        if rate.abs() <= 1.0 + TOL_FLOW {
            continue;
        }
        let gap = (rate.signum() * lambda_now - tau).abs();
        let v = (gap / (rate.abs() - 1.0) + lambda_now).max(lambda_now);
        if best.map_or(true, |(b, _)| v < b) {
            best = Some((v, i));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_cases() {
        assert_eq!(slope_general(1.0, 3, &[]).unwrap(), 0.0);
        // singleton below both neighbors rises at rate 2
        assert_eq!(slope_general(0.0, 1, &[1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(slope_general(1.0, 1, &[0.0, 2.0]).unwrap(), 0.0);
        assert_eq!(slope_general(1.0, 4, &[3.0, -1.0, -2.0]).unwrap(), -0.25);
        assert!(slope_general(1.0, 2, &[1.0]).is_err());
    }

    #[test]
    fn pushes_cases() {
        let single = compute_pushes(&[-2]);
        assert_eq!(single.values, vec![0.0]);
        assert_eq!(single.slope, 2.0);
        // chain interval of 5 below both neighbors
        let p = compute_pushes(&[-1, 0, 0, 0, -1]);
        assert_eq!(p.slope, 0.4);
        assert_eq!(p.values[0], 1.0 - 2.0 / 5.0);
        assert_eq!(p.values[4], 1.0 - 2.0 / 5.0);
        assert!(p.values[1..4].iter().all(|&v| v == -2.0 / 5.0));
        assert!(p.sum().abs() < 1e-12);
        let q = compute_pushes(&[3, -1, 0, 2, -2, 1, 0]);
        assert!(q.sum().abs() < 1e-12);
    }

    #[test]
    fn chain_monotone_case_certifies() {
        // β_{k0−1} above, β_{k0+|F|} below: one unit from one end to the other
        let edges: Vec<_> = (0..3).map(|i| LocalEdge { u: i, v: i + 1, tau: 0.0 }).collect();
        let p = compute_pushes(&[-1, 0, 0, 1]);
        assert_eq!(p.slope, 0.0);
        let net = build_flow_graph(&edges, &p.values, 0.5).unwrap();
        assert_eq!(net.source_arcs().len(), 1);
        assert_eq!(net.sink_arcs().len(), 1);
        match certify_or_split(&edges, &p.values, 0.5).unwrap() {
            Certification::Certified { rates } => assert_eq!(rates, vec![1.0, 1.0, 1.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn interior_tau_means_unbounded_capacity() {
        let edges = [LocalEdge { u: 0, v: 1, tau: 0.1 }, LocalEdge { u: 1, v: 2, tau: -0.2 }];
        let net = build_flow_graph(&edges, &[1.5, 0.0, -1.5], 0.5).unwrap();
        assert!(net.arcs()[..2].iter().all(|a| a.forward == Capacity::Unbounded && a.backward == Capacity::Unbounded));
        assert!(matches!(certify_or_split(&edges, &[1.5, 0.0, -1.5], 0.5).unwrap(), Certification::Certified { .. }));
        let bad = [LocalEdge { u: 0, v: 1, tau: 0.6 }];
        assert!(build_flow_graph(&bad, &[0.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn split_on_bottleneck() {
        // τ at +λ on the only edge caps the flow 0 → 1 at one unit
        let edges = [LocalEdge { u: 0, v: 1, tau: 0.5 }];
        match certify_or_split(&edges, &[1.5, -1.5], 0.5).unwrap() {
            Certification::Split { reachable, rest } => {
                assert_eq!(reachable, vec![0]);
                assert_eq!(rest, vec![1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn violation_cases() {
        assert_eq!(violation_time(&[(0.2, 1.0), (-0.1, -0.5)], 1.0), None);
        assert_eq!(violation_time(&[(0.0, 3.0)], 1.0), Some((1.5, 0)));
        assert_eq!(violation_time(&[(-1.0, 2.0), (0.0, 3.0)], 1.0), Some((1.5, 1)));
        assert_eq!(violation_time(&[(-1.0, 2.0)], 1.0), Some((3.0, 0)));
        // τ(λ) = −1 + 2(λ − 1) reaches +λ at λ = 3
        let lam: f64 = 3.0;
        assert!((-1.0 + 2.0 * (lam - 1.0) - lam).abs() < 1e-15);
    }
}
