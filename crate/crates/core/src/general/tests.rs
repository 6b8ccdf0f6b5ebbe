use super::*;
use crate::chain::solve_path_1d;
use crate::graph::PenaltyGraph;
use crate::maxflow::FlowNetwork;
use crate::oracle::{check_kkt, oracle_solve};

fn exact(y: &[f64], g: &PenaltyGraph) -> GeneralPathStore {
    solve_path_general(y, g, SolveOptions::exact().checked()).unwrap()
}

#[test]
fn three_point_ramp_fuses_twice_at_one() {
    let g = PenaltyGraph::chain(3).unwrap();
    let path = exact(&[0.0, 1.0, 2.0], &g);
    assert_eq!(path.fusion_lambdas(), vec![1.0, 1.0]);
    assert_eq!(path.split_count(), 0);
    assert_eq!(path.eval(0.25).unwrap(), vec![0.25, 1.0, 1.75]);
    assert_eq!(path.eval(3.0).unwrap(), vec![1.0; 3]);
}

#[test]
fn constant_signal_fuses_at_zero() {
    let g = PenaltyGraph::grid(3, 3).unwrap();
    let path = exact(&[0.7; 9], &g);
    assert_eq!(path.fusion_lambdas(), vec![0.0; 8]);
    assert_eq!(path.eval(0.0).unwrap(), vec![0.7; 9]);
    assert_eq!(path.eval(5.0).unwrap(), vec![0.7; 9]);
}

#[test]
fn isolated_nodes_never_move() {
    let g = PenaltyGraph::from_edge_list(3, &[]).unwrap();
    let path = exact(&[1.0, -2.0, 3.0], &g);
    assert!(path.events().is_empty());
    assert_eq!(path.eval(10.0).unwrap(), vec![1.0, -2.0, 3.0]);
}

#[test]
fn matches_chain_engine() {
    let mut state = 17u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
    };
    for n in [2usize, 3, 7, 20, 64] {
        let y: Vec<f64> = (0..n).map(|_| next()).collect();
        let tree = solve_path_1d(&y).unwrap();
        let path = exact(&y, &PenaltyGraph::chain(n).unwrap());
        assert_eq!(path.split_count(), 0);
        let mut a = tree.breakpoints();
        let mut b = path.fusion_lambdas();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
        for &lam in &[0.0, 0.01, 0.1, 0.5, 1.0, 3.0] {
            let u = tree.eval(lam).unwrap();
            let v = path.eval(lam).unwrap();
            let d = u.iter().zip(&v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(d < 1e-9, "n={n} lam={lam} diff={d}");
        }
    }
}

#[test]
fn four_cycle_saturation_threshold() {
    // cycle 0-1-2-3-0, pushes (+a, −a, +a, −a), every τ at the bound that
    // limits flow out of the positive nodes
    let edges = [
        LocalEdge { u: 0, v: 1, tau: 1.0 },
        LocalEdge { u: 1, v: 2, tau: -1.0 },
        LocalEdge { u: 2, v: 3, tau: 1.0 },
        LocalEdge { u: 3, v: 0, tau: -1.0 },
    ];
    for &a in &[0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
        let pushes = [a, -a, a, -a];
        let net: FlowNetwork = build_flow_graph(&edges, &pushes, 1.0).unwrap();
        assert_eq!((net.source_arcs().len(), net.sink_arcs().len()), (2, 2));
        let flow = net.max_flow().unwrap();
        let cut = net.min_cut_value_bruteforce().unwrap();
        assert!((flow.value - cut).abs() < 1e-12);
        // two unit edges leave each positive node
        assert_eq!(flow.saturated, a <= 2.0, "a={a}");
        let interior: Vec<LocalEdge> = edges.iter().map(|e| LocalEdge { tau: 0.0, ..*e }).collect();
        assert!(matches!(certify_or_split(&interior, &pushes, 1.0).unwrap(), Certification::Certified { .. }));
    }
}

#[test]
fn violation_examples() {
    assert_eq!(violation_time(&[(0.0, 3.0)], 1.0).map(|v| v.0), Some(1.5));
    assert_eq!(violation_time(&[(-1.0, 2.0)], 1.0).map(|v| v.0), Some(3.0));
}

#[test]
fn cross_pattern_splits_and_matches_oracle() {
    // bright plus-shaped blob on a dark background with a dim corner
    let (rows, cols) = (5, 5);
    let mut y = vec![0.0; rows * cols];
    for k in [2, 7, 10, 11, 12, 13, 14, 17, 22] {
        y[k] = 2.0;
    }
    y[0] = 1.1;
    y[24] = -0.4;
    y[12] = 2.6;
    let g = PenaltyGraph::grid(rows, cols).unwrap();
    let path = exact(&y, &g);
    let d = path.diagnostics();
    assert!(d.max_tau_excess <= 1e-8, "{d:?}");
    assert!(d.max_sign_violation <= 1e-9, "{d:?}");
    assert!(d.max_mass_error <= 1e-9, "{d:?}");
    for &lam in &[0.05, 0.2, 0.35, 0.6, 1.0, 2.0] {
        let beta = path.eval(lam).unwrap();
        let reference = oracle_solve(&y, &g, lam, 0.0, 1e-8).unwrap();
        let diff = beta.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "lam={lam} diff={diff}");
        assert!(check_kkt(&y, &g, &beta, lam).unwrap().max_infeasibility < 1e-9);
    }
}

#[test]
fn cap_of_one_only_fuses() {
    let g = PenaltyGraph::grid(4, 4).unwrap();
    let y: Vec<f64> = (0..16).map(|k| ((k * 7) % 5) as f64 - 2.0).collect();
    let approx = solve_path_general(&y, &g, SolveOptions::with_cap(1)).unwrap();
    assert_eq!(approx.split_count(), 0);
    assert_eq!(approx.fusion_lambdas().len(), 15);
    let full = solve_path_general(&y, &g, SolveOptions::with_cap(17)).unwrap();
    assert_eq!(full, solve_path_general(&y, &g, SolveOptions::exact()).unwrap());
}

#[test]
fn bad_input() {
    let g = PenaltyGraph::chain(3).unwrap();
    assert!(solve_path_general(&[1.0, 2.0], &g, SolveOptions::exact()).is_err());
    assert!(solve_path_general(&[1.0, f64::NAN, 2.0], &g, SolveOptions::exact()).is_err());
    assert!(solve_path_general(&[1.0, 2.0, 3.0], &g, SolveOptions::with_cap(0)).is_err());
}

#[test]
fn anchors_round_trip() {
    let g = PenaltyGraph::grid(3, 4).unwrap();
    let y: Vec<f64> = (0..12).map(|k| (k as f64 * 1.3).sin()).collect();
    let path = exact(&y, &g);
    let back = GeneralPathStore::from_anchors_csv(&path.anchors_csv()).unwrap();
    for &lam in &[0.0, 0.1, 0.4, 2.0] {
        assert_eq!(back.eval(lam).unwrap(), path.eval(lam).unwrap());
    }
    assert!(path.events_csv().starts_with("lambda,kind,set_a,set_b\n"));
}
