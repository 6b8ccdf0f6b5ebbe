use flsa::io::{fmt_f64, parse_matrix, parse_signal};
use flsa::{FlsaError, PenaltyGraph};

#[test]
fn edge_list_round_trip() {
    let g = PenaltyGraph::grid(3, 4).unwrap();
    let back = PenaltyGraph::parse_edge_list(&g.to_edge_list()).unwrap();
    assert_eq!(back, g);
}

#[test]
fn edge_list_errors_carry_line_numbers() {
    let text = "# comment\n3 2\n0 1\n1 x\n";
    match PenaltyGraph::parse_edge_list(text) {
        Err(FlsaError::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
    assert!(PenaltyGraph::parse_edge_list("2 1\n0 2\n").is_err());
    assert!(PenaltyGraph::parse_edge_list("2 1\n1 1\n").is_err());
}

#[test]
fn signal_and_matrix_parsing() {
    assert_eq!(parse_signal("1\n2.5\n\n-3e-1\n").unwrap(), vec![1.0, 2.5, -0.3]);
    assert_eq!(parse_matrix("1,2\n3,4\n").unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    assert!(matches!(parse_matrix("1,2\n3\n"), Err(FlsaError::Parse { line: 2, .. })));
    assert!(parse_signal("1\nnan\n").is_err());
}

#[test]
fn float_format_round_trips() {
    for v in [0.1, -1.0 / 3.0, 1e-300, 123456789.123456789, 0.0, f64::MIN_POSITIVE] {
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}
