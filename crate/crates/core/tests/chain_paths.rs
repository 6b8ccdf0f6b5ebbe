use flsa::chain::{check_subgradient_1d, solve_path_1d, PathTree};
use flsa::oracle::oracle_solve;
use flsa::trajectory::soft_threshold;
use flsa::PenaltyGraph;
use proptest::prelude::*;

fn signal() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(-5.0f64..5.0, 1..40),
        // small integers produce ties and simultaneous meetings
        prop::collection::vec((-2i32..3).prop_map(f64::from), 1..40),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matches_oracle(y in signal(), frac in 0.0f64..1.3) {
        let tree = solve_path_1d(&y).unwrap();
        let last = tree.breakpoints().last().copied().unwrap_or(0.0);
        let lam = frac * last.max(0.1);
        let beta = tree.eval(lam).unwrap();
        let g = PenaltyGraph::chain(y.len()).unwrap();
        let reference = oracle_solve(&y, &g, lam, 0.0, 1e-8).unwrap();
        for (a, b) in beta.iter().zip(&reference) {
            prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
        prop_assert!(check_subgradient_1d(&y, &beta, lam).max() <= 1e-9);
    }

    #[test]
    fn fusion_count_and_mass(y in signal()) {
        let tree = solve_path_1d(&y).unwrap();
        prop_assert_eq!(tree.breakpoints().len(), y.len() - 1);
        prop_assert!(tree.is_monotone());
        let total: f64 = y.iter().sum();
        let root = &tree.nodes()[tree.root()];
        prop_assert_eq!(root.slope, 0.0);
        prop_assert!((root.beta_at_creation * y.len() as f64 - total).abs() <= 1e-9 * (1.0 + total.abs()));
        for lam in [0.0, 0.3, 2.0] {
            let beta = tree.eval(lam).unwrap();
            prop_assert!((beta.iter().sum::<f64>() - total).abs() <= 1e-9 * y.len() as f64);
        }
    }

    #[test]
    fn leaf_climb_agrees_with_pass(y in signal(), lam in 0.0f64..3.0) {
        let tree = solve_path_1d(&y).unwrap();
        let all = tree.eval(lam).unwrap();
        for (k, v) in all.iter().enumerate() {
            prop_assert_eq!(v.to_bits(), tree.eval_leaf(k, lam).to_bits());
        }
    }

    #[test]
    fn csv_round_trip_is_exact(y in signal()) {
        let tree = solve_path_1d(&y).unwrap();
        let back = PathTree::from_csv(&tree.to_csv()).unwrap();
        prop_assert_eq!(&back, &tree);
    }

    #[test]
    fn l1_is_soft_thresholding(y in signal(), lam in 0.0f64..2.0, l1 in 0.0f64..2.0) {
        let tree = solve_path_1d(&y).unwrap();
        prop_assert_eq!(tree.eval_with_l1(lam, l1).unwrap(), soft_threshold(&tree.eval(lam).unwrap(), l1));
    }
}

#[test]
fn plateau_then_merge() {
    // two flat blocks: each block is fused from the start, then they meet
    let y = [1.0, 1.0, 1.0, 4.0, 4.0];
    let tree = solve_path_1d(&y).unwrap();
    let b = tree.breakpoints();
    assert_eq!(&b[..3], &[0.0, 0.0, 0.0]);
    // slopes ±1/3 and ∓1/2 close a gap of 3 at λ2 = 3.6
    assert!((b[3] - 3.6).abs() < 1e-12);
    let beta = tree.eval(5.0).unwrap();
    assert!(beta.iter().all(|&v| (v - 2.2).abs() < 1e-12));
}

#[test]
fn rejects_malformed_csv() {
    assert!(PathTree::from_csv("lambda,child_left,child_right,beta_at_creation,slope\n0,1,,2,0\n").is_err());
    assert!(PathTree::from_csv("lambda,child_left,child_right,beta_at_creation,slope\nx,,,1,0\n").is_err());
    assert!(PathTree::from_csv("").is_err());
}
