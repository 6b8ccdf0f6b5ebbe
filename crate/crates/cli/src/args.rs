use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSpec {
    Chain,
    Grid { rows: usize, cols: usize },
    EdgeList(PathBuf),
}

impl FromStr for GraphSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "chain" {
            return Ok(GraphSpec::Chain);
        }
        if let Some(dims) = s.strip_prefix("grid=") {
            let (r, c) = dims.split_once(['x', 'X']).ok_or_else(|| format!("expected grid=RxC, got '{s}'"))?;
            let rows = r.parse().map_err(|_| format!("bad row count '{r}'"))?;
            let cols = c.parse().map_err(|_| format!("bad column count '{c}'"))?;
            return Ok(GraphSpec::Grid { rows, cols });
        }
        if let Some(path) = s.strip_prefix("edgelist=") {
            return Ok(GraphSpec::EdgeList(PathBuf::from(path)));
        }
        Err(format!("unknown graph '{s}'; use chain, grid=RxC or edgelist=FILE"))
    }
}

/// Either an explicit comma-separated list or `lo:hi:count`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lambdas(pub Vec<f64>);

impl FromStr for Lambdas {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| -> Result<f64, String> {
            let v: f64 = t.trim().parse().map_err(|_| format!("'{t}' is not a number"))?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(format!("lambda2 must be finite and non-negative, got {t}"));
            }
            Ok(v)
        };
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [lo, hi, count] => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                let count: usize = count.trim().parse().map_err(|_| format!("bad count '{count}'"))?;
                if count == 0 {
                    return Err("range count must be at least 1".into());
                }
                if hi < lo {
                    return Err(format!("range end {hi} is below its start {lo}"));
                }
                if count == 1 {
                    vec![lo]
                } else {
                    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
                }
            }
            [list] => list.split(',').map(num).collect::<Result<_, _>>()?,
            _ => return Err(format!("expected a list or lo:hi:count, got '{s}'")),
        };
        Ok(Lambdas(values))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Solutions at the requested λ2 values
    Solve,
    /// The whole path: fusion tree (chain) or events and anchors (other graphs)
    PathDump,
    /// Synthetic data from the painted-rectangle recipe
    Simulate,
    /// Wall times per phase
    Bench,
    /// Compare against the iterative oracle
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Solution paths of the fused lasso signal approximator.
#[derive(Debug, Parser)]
#[command(name = "flsa", version)]
pub struct Cli {
    /// chain, grid=RxC or edgelist=FILE
    #[arg(long, default_value = "chain")]
    pub graph: GraphSpec,

    /// Signal file: one value per line, or CSV rows for grids
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Evaluate a saved path dump instead of solving (solve mode)
    #[arg(long, value_name = "FILE")]
    pub path: Option<PathBuf>,

    /// λ2 values: comma-separated list or lo:hi:count
    #[arg(long, default_value = "0:1:11")]
    pub lambda2: Lambdas,

    #[arg(long, default_value_t = 0.0)]
    pub lambda1: f64,

    /// Sets of this size or larger are never split (approximate path)
    #[arg(long)]
    pub cap: Option<usize>,

    #[arg(long, value_enum, default_value_t = Mode::Solve)]
    pub mode: Mode,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Signal length for simulate and bench on a chain
    #[arg(long, default_value_t = 1000)]
    pub size: usize,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file (stdout when absent)
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Largest acceptable sup-norm error in verify mode
    #[arg(long, env = "FLSA_TOL", default_value_t = 1e-5)]
    pub tol: f64,
}
