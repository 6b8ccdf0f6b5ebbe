use flsa::maxflow::{Capacity, FlowNetwork};
use proptest::prelude::*;

fn network() -> impl Strategy<Value = (usize, Vec<(usize, usize, Option<u8>, Option<u8>)>, Vec<u8>)> {
    (1usize..7).prop_flat_map(|n| {
        let arcs = prop::collection::vec(
            (0..n, 0..n, prop::option::weighted(0.8, 0u8..6), prop::option::weighted(0.8, 0u8..6)),
            0..12,
        );
        let terminals = prop::collection::vec(0u8..12, n);
        (Just(n), arcs, terminals)
    })
}

fn cap(c: Option<u8>) -> Capacity {
    c.map_or(Capacity::Unbounded, |v| Capacity::Finite(f64::from(v)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flow_equals_min_cut((n, arcs, terminals) in network()) {
        let mut net = FlowNetwork::new(n);
        for (u, v, a, b) in arcs {
            if u != v {
                net.add_edge(u, v, cap(a), cap(b)).unwrap();
            }
        }
        for (k, &t) in terminals.iter().enumerate() {
            // 0..6 feeds from the source, 6..12 drains to the sink
            if t < 6 {
                net.add_source_edge(k, f64::from(t)).unwrap();
            } else {
                net.add_sink_edge(k, f64::from(t - 6)).unwrap();
            }
        }
        let res = net.max_flow().unwrap();
        prop_assert_eq!(res.value, net.min_cut_value_bruteforce().unwrap());
        // conservation at every interior node
        for k in 0..n {
            prop_assert!(res.net_outflow(&net, k).abs() < 1e-12);
        }
        // the residual-reachable side is a minimum cut
        prop_assert!(res.reachable[net.source()]);
        prop_assert!(!res.reachable[net.sink()]);
    }
}
