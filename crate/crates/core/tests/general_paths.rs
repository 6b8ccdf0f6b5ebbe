use flsa::general::{solve_path_general, PathEngine, PathEvent, SolveOptions};
use flsa::oracle::{check_kkt, oracle_solve};
use flsa::PenaltyGraph;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> PenaltyGraph {
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                // mix both orientations
                pairs.push(if rng.gen_bool(0.5) { (u, v) } else { (v, u) });
            }
        }
    }
    PenaltyGraph::from_edge_list(n, &pairs).unwrap()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_against_oracle(y: &[f64], g: &PenaltyGraph, label: &str) {
    let path = solve_path_general(y, g, SolveOptions::exact().checked()).unwrap_or_else(|e| panic!("{label}: {e}"));
    let d = path.diagnostics();
    assert!(d.max_tau_excess <= 1e-8, "{label}: {d:?}");
    assert!(d.max_sign_violation <= 1e-9, "{label}: {d:?}");
    assert!(path.max_anchor_jump() <= 1e-9, "{label}");
    let mut lams: Vec<f64> = path.breakpoints();
    lams.dedup();
    let mids: Vec<f64> = lams.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    for lam in mids.iter().copied().chain([0.0, 0.3, 1.0, 4.0]) {
        let beta = path.eval(lam).unwrap();
        let kkt = check_kkt(y, g, &beta, lam).unwrap();
        assert!(kkt.max_infeasibility <= 1e-7, "{label} lambda2 {lam}: {kkt:?}");
    }
    for lam in [0.05, 0.2, 0.7, 2.0] {
        let beta = path.eval(lam).unwrap();
        let reference = oracle_solve(y, g, lam, 0.0, 1e-8).unwrap();
        let diff = sup_diff(&beta, &reference);
        assert!(diff <= 1e-6, "{label} lambda2 {lam}: {diff:e}");
    }
}

#[test]
fn random_graphs_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..60 {
        let n = rng.gen_range(2..=14);
        let p = rng.gen_range(0.1..0.6);
        let g = random_graph(&mut rng, n, p);
        let y: Vec<f64> = (0..n)
            .map(|_| if trial % 4 == 0 { rng.gen_range(0..3) as f64 } else { rng.gen_range(-2.0..2.0) })
            .collect();
        check_against_oracle(&y, &g, &format!("trial {trial}"));
    }
}

#[test]
fn grids_with_ties_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..20 {
        let (r, c) = (rng.gen_range(1..=6), rng.gen_range(2..=6));
        let y: Vec<f64> = (0..r * c).map(|_| rng.gen_range(0..4) as f64 * 0.5).collect();
        check_against_oracle(&y, &PenaltyGraph::grid(r, c).unwrap(), &format!("grid trial {trial}"));
    }
}

#[test]
fn some_grids_split() {
    let mut total = 0;
    for seed in 0..10 {
        let sim = flsa::simulate::simulate_2d(10, seed);
        let g = PenaltyGraph::grid(10, 10).unwrap();
        total += solve_path_general(&sim.noisy, &g, SolveOptions::exact()).unwrap().split_count();
    }
    assert!(total > 0);
}

#[test]
fn stepping_reports_increasing_breakpoints() {
    let g = PenaltyGraph::grid(4, 4).unwrap();
    let y: Vec<f64> = (0..16).map(|k| ((k * 37 % 11) as f64).sqrt()).collect();
    let mut engine = PathEngine::new(&y, &g, SolveOptions::exact()).unwrap();
    let mut last = 0.0;
    let mut steps = 0;
    while let Some(lam) = engine.step().unwrap() {
        assert!(lam >= last);
        assert_eq!(engine.lambda(), lam);
        let covered: usize = engine.live_sets().map(|(_, s)| s.size()).sum();
        assert_eq!(covered, 16);
        last = lam;
        steps += 1;
    }
    assert_eq!(engine.live_sets().count(), 1);
    let store = engine.finish().unwrap();
    assert_eq!(store.diagnostics().breakpoints, steps);
    assert!(store.events().iter().all(|e| e.lambda() <= last));
    // one set left: every fusion and split accounted for
    let fusions = store.events().iter().filter(|e| matches!(e, PathEvent::Fuse { .. })).count();
    let parts: usize = store
        .events()
        .iter()
        .map(|e| match e {
            PathEvent::Split { parts, .. } => parts.len() - 1,
            _ => 0,
        })
        .sum();
    assert_eq!(fusions, 15 + parts);
}

#[test]
fn disconnected_components_keep_their_means() {
    let g = PenaltyGraph::from_edge_list(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
    let y = [1.0, 2.0, 6.0, -1.0, 1.0];
    let path = solve_path_general(&y, &g, SolveOptions::exact().checked()).unwrap();
    assert_eq!(path.eval(100.0).unwrap(), vec![3.0, 3.0, 3.0, 0.0, 0.0]);
    assert!(path.diagnostics().max_mass_error < 1e-12);
}

#[test]
fn cap_freezes_large_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = PenaltyGraph::grid(8, 8).unwrap();
    let y: Vec<f64> = flsa::simulate::simulate_2d(8, 3).noisy;
    let exact = solve_path_general(&y, &g, SolveOptions::exact()).unwrap();
    for cap in [1usize, 2, 4, 16, 65] {
        let approx = solve_path_general(&y, &g, SolveOptions::with_cap(cap)).unwrap();
        let lam = rng.gen_range(0.0..0.5);
        let a = approx.eval(lam).unwrap();
        let b = exact.eval(lam).unwrap();
        // approximate paths still conserve mass and stay close
        let mass: f64 = a.iter().sum::<f64>() - y.iter().sum::<f64>();
        assert!(mass.abs() < 1e-9, "cap {cap}");
        assert!(sup_diff(&a, &b) < 1.0, "cap {cap}");
        if cap > 64 {
            assert_eq!(approx, exact);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn small_graphs_satisfy_kkt(seed in 0u64..10_000, n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, 0.5);
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let path = solve_path_general(&y, &g, SolveOptions::exact()).unwrap();
        for lam in [0.1, 0.5, 1.5] {
            let beta = path.eval(lam).unwrap();
            prop_assert!(check_kkt(&y, &g, &beta, lam).unwrap().max_infeasibility <= 1e-7);
        }
    }
}
