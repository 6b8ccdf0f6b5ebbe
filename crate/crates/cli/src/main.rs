mod args;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use flsa::general::{solve_path_general, Anchor, GeneralPathStore, PathEvent, SolveOptions};
use flsa::io::{fmt_f64, parse_matrix, parse_signal};
use flsa::oracle::oracle_solve;
use flsa::simulate::{simulate_1d, simulate_grid};
use flsa::{solve_path_1d, FlsaError, PathTree, PenaltyGraph};
use serde::Serialize;

use args::{Cli, Format, GraphSpec, Mode};

const EXIT_VERIFY: u8 = 8;

enum Failure {
    Flsa(FlsaError),
    Verify(String),
}

impl From<FlsaError> for Failure {
    fn from(e: FlsaError) -> Self {
        Failure::Flsa(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Flsa(e.into())
    }
}

type Run<T> = Result<T, Failure>;

fn invalid<T>(msg: impl Into<String>) -> Run<T> {
    Err(FlsaError::InvalidArgument(msg.into()).into())
}

fn exit_code(e: &FlsaError) -> u8 {
    match e {
        FlsaError::InvalidArgument(_) => 3,
        FlsaError::Io(_) => 4,
        FlsaError::Parse { .. } => 5,
        FlsaError::Invariant(_) => 6,
        FlsaError::Convergence { .. } => 7,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Flsa(e)) => {
            eprintln!("flsa: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("flsa: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}

fn run(cli: &Cli) -> Run<()> {
    if !(cli.lambda1 >= 0.0) || !cli.lambda1.is_finite() {
        return invalid(format!("lambda1 must be finite and non-negative, got {}", cli.lambda1));
    }
    match cli.mode {
        Mode::Solve => solve(cli),
        Mode::PathDump => path_dump(cli),
        Mode::Simulate => simulate(cli),
        Mode::Bench => bench(cli),
        Mode::Verify => verify(cli),
    }
}

fn read(path: &Path) -> Run<String> {
    fs::read_to_string(path).map_err(|e| {
        FlsaError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))).into()
    })
}

fn emit(cli: &Cli, text: &str) -> Run<()> {
    match &cli.output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn build_graph(spec: &GraphSpec, n: Option<usize>) -> Run<PenaltyGraph> {
    Ok(match spec {
        GraphSpec::Chain => PenaltyGraph::chain(n.unwrap_or(0))?,
        GraphSpec::Grid { rows, cols } => PenaltyGraph::grid(*rows, *cols)?,
        GraphSpec::EdgeList(path) => PenaltyGraph::parse_edge_list(&read(path)?)?,
    })
}

/// Signal and graph from `--input` and `--graph`.
fn load_problem(cli: &Cli) -> Run<(Vec<f64>, PenaltyGraph)> {
    let Some(input) = &cli.input else {
        return invalid("--input is required in this mode");
    };
    let text = read(input)?;
    let y = match cli.graph {
        GraphSpec::Grid { rows, cols } => {
            let m = parse_matrix(&text)?;
            let flat: Vec<f64> = m.iter().flatten().copied().collect();
            let matches_shape = m.len() == rows && m.first().map_or(false, |r| r.len() == cols);
            if !matches_shape && flat.len() != rows * cols {
                return invalid(format!("input has {} values, grid {rows}x{cols} needs {}", flat.len(), rows * cols));
            }
            flat
        }
        _ => parse_signal(&text)?,
    };
    let graph = build_graph(&cli.graph, Some(y.len()))?;
    if graph.n() != y.len() {
        return invalid(format!("input has {} values but the graph has {} nodes", y.len(), graph.n()));
    }
    Ok((y, graph))
}

enum Solved {
    Chain(PathTree),
    General(GeneralPathStore),
}

impl Solved {
    fn eval(&self, lambda2: f64, lambda1: f64) -> flsa::Result<Vec<f64>> {
        match self {
            Solved::Chain(t) => t.eval_with_l1(lambda2, lambda1),
            Solved::General(s) => s.eval_with_l1(lambda2, lambda1),
        }
    }

    fn breakpoints(&self) -> usize {
        match self {
            Solved::Chain(t) => t.breakpoints().len(),
            Solved::General(s) => s.breakpoints().len(),
        }
    }
}

/// The 1-D engine on chains (a cap has no effect there: chains never
/// split), the general engine otherwise.
fn solve_path(cli: &Cli, y: &[f64], graph: &PenaltyGraph) -> Run<Solved> {
    Ok(match cli.graph {
        GraphSpec::Chain => Solved::Chain(solve_path_1d(y)?),
        _ => {
            let opts = SolveOptions { cap: cli.cap, check_invariants: false };
            Solved::General(solve_path_general(y, graph, opts)?)
        }
    })
}

#[derive(Serialize)]
struct SolutionRow {
    lambda: f64,
    node: usize,
    beta: f64,
}

fn solution_rows(solved: &Solved, cli: &Cli) -> Run<Vec<SolutionRow>> {
    let mut rows = Vec::new();
    for &lambda in &cli.lambda2.0 {
        let beta = solved.eval(lambda, cli.lambda1)?;
        rows.extend(beta.into_iter().enumerate().map(|(node, beta)| SolutionRow { lambda, node, beta }));
    }
    Ok(rows)
}

fn render_rows(rows: &[SolutionRow], format: Format) -> String {
    match format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut out = String::from("lambda,node,beta\n");
            for r in rows {
                out.push_str(&format!("{},{},{}\n", fmt_f64(r.lambda), r.node, fmt_f64(r.beta)));
            }
            out
        }
    }
}

fn solve(cli: &Cli) -> Run<()> {
    let solved = match &cli.path {
        Some(dump) => {
            let text = read(dump)?;
            match cli.graph {
                GraphSpec::Chain => Solved::Chain(PathTree::from_csv(&text)?),
                _ => Solved::General(GeneralPathStore::from_anchors_csv(&text)?),
            }
        }
        None => {
            let (y, graph) = load_problem(cli)?;
            solve_path(cli, &y, &graph)?
        }
    };
    emit(cli, &render_rows(&solution_rows(&solved, cli)?, cli.format))
}

fn anchors_path(events: &Path) -> PathBuf {
    let mut name = events.as_os_str().to_owned();
    name.push(".anchors.csv");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct NodeRecord {
    lambda: f64,
    child_left: Option<usize>,
    child_right: Option<usize>,
    beta_at_creation: f64,
    slope: f64,
}

#[derive(Serialize)]
struct EventRecord<'a> {
    lambda: f64,
    kind: &'a str,
    sets: Vec<usize>,
}

#[derive(Serialize)]
struct AnchorRecord {
    node: usize,
    lambda: f64,
    beta: f64,
    slope: f64,
}

fn path_dump(cli: &Cli) -> Run<()> {
    let (y, graph) = load_problem(cli)?;
    match solve_path(cli, &y, &graph)? {
        Solved::Chain(tree) => {
            let text = match cli.format {
                Format::Csv => tree.to_csv(),
                Format::Json => {
                    let nodes: Vec<NodeRecord> = tree
                        .nodes()
                        .iter()
                        .map(|n| NodeRecord {
                            lambda: n.lambda_created,
                            child_left: n.children.map(|c| c.0),
                            child_right: n.children.map(|c| c.1),
                            beta_at_creation: n.beta_at_creation,
                            slope: n.slope,
                        })
                        .collect();
                    to_json(&serde_json::json!({ "nodes": nodes }))
                }
            };
            emit(cli, &text)
        }
        Solved::General(store) => match cli.format {
            Format::Json => {
                let events: Vec<EventRecord> = store
                    .events()
                    .iter()
                    .map(|e| match e {
                        PathEvent::Fuse { lambda, a, b, into } => {
                            EventRecord { lambda: *lambda, kind: "fuse", sets: vec![*a, *b, *into] }
                        }
                        PathEvent::Split { lambda, from, parts } => {
                            let mut sets = vec![*from];
                            sets.extend(parts);
                            EventRecord { lambda: *lambda, kind: "split", sets }
                        }
                        PathEvent::Recert { lambda, set } => {
                            EventRecord { lambda: *lambda, kind: "recert", sets: vec![*set] }
                        }
                    })
                    .collect();
                let anchors: Vec<AnchorRecord> = (0..store.len())
                    .flat_map(|k| {
                        store.anchors(k).iter().map(move |&Anchor { lambda, beta, slope }| AnchorRecord {
                            node: k,
                            lambda,
                            beta,
                            slope,
                        })
                    })
                    .collect();
                emit(cli, &to_json(&serde_json::json!({ "events": events, "anchors": anchors })))
            }
            Format::Csv => match &cli.output {
                Some(path) => {
                    fs::write(path, store.events_csv())?;
                    fs::write(anchors_path(path), store.anchors_csv())?;
                    Ok(())
                }
                None => emit(cli, &format!("{}\n{}", store.events_csv(), store.anchors_csv())),
            },
        },
    }
}

#[derive(Serialize)]
struct SimulationRecord<'a> {
    rows: usize,
    cols: usize,
    seed: u64,
    clean: &'a [f64],
    noisy: &'a [f64],
}

fn simulate(cli: &Cli) -> Run<()> {
    let sim = match cli.graph {
        GraphSpec::Chain => {
            if cli.size == 0 {
                return invalid("--size must be at least 1");
            }
            simulate_1d(cli.size, cli.seed)
        }
        GraphSpec::Grid { rows, cols } => {
            if rows == 0 || cols == 0 {
                return invalid("grid dimensions must be positive");
            }
            simulate_grid(rows, cols, cli.seed)
        }
        GraphSpec::EdgeList(_) => return invalid("simulate needs --graph chain or grid=RxC"),
    };
    let text = match cli.format {
        Format::Json => to_json(&SimulationRecord {
            rows: sim.rows,
            cols: sim.cols,
            seed: cli.seed,
            clean: &sim.clean,
            noisy: &sim.noisy,
        }),
        Format::Csv => {
            let mut out = String::new();
            for row in sim.noisy.chunks(sim.cols) {
                let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
                if matches!(cli.graph, GraphSpec::Chain) {
                    out.push_str(&cells.join("\n"));
                } else {
                    out.push_str(&cells.join(","));
                }
                out.push('\n');
            }
            out
        }
    };
    emit(cli, &text)
}

#[derive(Serialize)]
struct BenchReport {
    nodes: usize,
    edges: usize,
    breakpoints: usize,
    load_seconds: f64,
    solve_seconds: f64,
    eval_seconds: f64,
    lambdas: usize,
}

fn bench(cli: &Cli) -> Run<()> {
    let start = Instant::now();
    let (y, graph) = if cli.input.is_some() {
        load_problem(cli)?
    } else {
        let sim = match cli.graph {
            GraphSpec::Grid { rows, cols } => simulate_grid(rows, cols, cli.seed),
            GraphSpec::Chain => simulate_1d(cli.size.max(1), cli.seed),
            GraphSpec::EdgeList(_) => return invalid("bench on an edge list needs --input"),
        };
        let graph = build_graph(&cli.graph, Some(sim.noisy.len()))?;
        (sim.noisy, graph)
    };
    let load_seconds = start.elapsed().as_secs_f64();
    let t = Instant::now();
    let solved = solve_path(cli, &y, &graph)?;
    let solve_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    for &l in &cli.lambda2.0 {
        solved.eval(l, cli.lambda1)?;
    }
    let report = BenchReport {
        nodes: graph.n(),
        edges: graph.edge_count(),
        breakpoints: solved.breakpoints(),
        load_seconds,
        solve_seconds,
        eval_seconds: t.elapsed().as_secs_f64(),
        lambdas: cli.lambda2.0.len(),
    };
    let text = match cli.format {
        Format::Json => to_json(&report),
        Format::Csv => format!(
            "phase,seconds\nload,{:.6}\nsolve,{:.6}\neval,{:.6}\n# nodes {} edges {} breakpoints {} lambdas {}\n",
            report.load_seconds,
            report.solve_seconds,
            report.eval_seconds,
            report.nodes,
            report.edges,
            report.breakpoints,
            report.lambdas
        ),
    };
    emit(cli, &text)
}

#[derive(Serialize)]
struct VerifyReport {
    tol: f64,
    max_sup_norm: f64,
    per_lambda: Vec<(f64, f64)>,
}

fn verify(cli: &Cli) -> Run<()> {
    if !(cli.tol > 0.0) {
        return invalid(format!("verify tolerance must be positive, got {}", cli.tol));
    }
    let (y, graph) = load_problem(cli)?;
    let solved = solve_path(cli, &y, &graph)?;
    let oracle_tol = (0.01 * cli.tol).min(1e-7);
    let mut per_lambda = Vec::new();
    for &l in &cli.lambda2.0 {
        let path = solved.eval(l, cli.lambda1)?;
        let reference = oracle_solve(&y, &graph, l, cli.lambda1, oracle_tol)?;
        let err = path.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        per_lambda.push((l, err));
    }
    let max_sup_norm = per_lambda.iter().map(|p| p.1).fold(0.0, f64::max);
    let text = match cli.format {
        Format::Json => to_json(&VerifyReport { tol: cli.tol, max_sup_norm, per_lambda }),
        Format::Csv => {
            let mut out = String::from("lambda,sup_norm\n");
            for (l, e) in &per_lambda {
                out.push_str(&format!("{},{}\n", fmt_f64(*l), fmt_f64(*e)));
            }
            out.push_str(&format!("# max sup-norm {max_sup_norm:e} (tolerance {:e})\n", cli.tol));
            out
        }
    };
    emit(cli, &text)?;
    if max_sup_norm > cli.tol {
        return Err(Failure::Verify(format!("max sup-norm {max_sup_norm:e} exceeds tolerance {:e}", cli.tol)));
    }
    Ok(())
}
