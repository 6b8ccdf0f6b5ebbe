//! Undirected penalty graphs over coefficient indices.
//!
//! Every edge `(k, l)` contributes `λ2·|β_k − β_l|` to the loss. Nodes are
//! 0-based. Edges are stored once with `k < l`; each node keeps a list of
//! `(neighbor, edge id)` pairs.

use std::collections::BTreeSet;

use crate::error::{invalid, FlsaError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PenaltyGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl PenaltyGraph {
    /// The 1-D chain `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("chain graph needs at least one node");
        }
        Ok(Self::from_sorted_edges(n, (0..n - 1).map(|i| (i, i + 1)).collect()))
    }

    /// A `rows × cols` 4-neighbor grid; node `(r, c)` has index `r·cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid(format!("grid dimensions must be positive, got {rows}x{cols}"));
        }
        let mut edges = Vec::with_capacity(rows * (cols - 1) + (rows - 1) * cols);
        for r in 0..rows {
            for c in 0..cols {
                let k = r * cols + c;
                if c + 1 < cols {
                    edges.push((k, k + 1));
                }
                if r + 1 < rows {
                    edges.push((k, k + cols));
                }
            }
        }
        edges.sort_unstable();
        Ok(Self::from_sorted_edges(rows * cols, edges))
    }

    /// Builds a graph from arbitrary pairs: endpoints are normalized to
    /// `k < l` and duplicates dropped. Self-loops and out-of-range endpoints
    /// are rejected.
    pub fn from_edge_list(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return invalid(format!("edge ({a}, {b}) has an endpoint outside 0..{n}"));
            }
            if a == b {
                return invalid(format!("edge ({a}, {b}) is a self-loop"));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self::from_sorted_edges(n, set.into_iter().collect()))
    }

    fn from_sorted_edges(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (id, &(k, l)) in edges.iter().enumerate() {
            adjacency[k].push((l, id));
            adjacency[l].push((k, id));
        }
        Self { n, edges, adjacency }
    }

    /// Parses the edge-list text format: a header line `n m` followed by `m`
    /// lines `k l`. Blank lines and lines starting with `#` are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(FlsaError::Parse {
            line: 1,
            message: "missing 'n m' header".into(),
        })?;
        let (n, m) = parse_pair(hline, header)?;
        let mut pairs = Vec::with_capacity(m);
        for (line, body) in lines {
            pairs.push(parse_pair(line, body)?);
        }
        if pairs.len() != m {
            return Err(FlsaError::Parse {
                line: hline,
                message: format!("header announces {m} edges, found {}", pairs.len()),
            });
        }
        Self::from_edge_list(n, &pairs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> (usize, usize) {
        self.edges[id]
    }

    /// `(neighbor, edge id)` pairs incident to `k`.
    pub fn neighbors(&self, k: usize) -> &[(usize, usize)] {
        &self.adjacency[k]
    }

    pub fn degree(&self, k: usize) -> usize {
        self.adjacency[k].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Connected-component label per node, labels numbered in order of the
    /// smallest node they contain.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(k) = stack.pop() {
                for &(l, _) in &self.adjacency[k] {
                    if label[l] == usize::MAX {
                        label[l] = next;
                        stack.push(l);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Renders the edge-list text format accepted by [`parse_edge_list`](Self::parse_edge_list).
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for (k, l) in &self.edges {
            out.push_str(&format!("{k} {l}\n"));
        }
        out
    }
}

fn parse_pair(line: usize, body: &str) -> Result<(usize, usize)> {
    let mut it = body.split_whitespace();
    let mut next = || -> Result<usize> {
        let tok = it.next().ok_or_else(|| FlsaError::Parse {
            line,
            message: "expected two integers".into(),
        })?;
        tok.parse().map_err(|_| FlsaError::Parse {
            line,
            message: format!("'{tok}' is not a non-negative integer"),
        })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(FlsaError::Parse {
            line,
            message: "expected exactly two integers".into(),
        });
    }
    Ok((a, b))
}
