//! Maximum flow with unbounded capacities and residual reachability.
//!
//! Networks have `m` interior nodes `0..m`, a source `m` and a sink `m + 1`.
//! Every arc carries a capacity in each direction; a single signed flow value
//! per arc records the net flow from `from` to `to`. The solver is
//! shortest-augmenting-path (Edmonds–Karp) on the explicit residual graph.

use std::collections::VecDeque;

use crate::error::{invalid, invariant, Result};

/// Relative tolerance for declaring a source arc saturated.
pub const TOL_FLOW: f64 = 1e-9;

/// Largest interior size accepted by the exhaustive min-cut oracle.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Capacity {
    Finite(f64),
    Unbounded,
}

impl Capacity {
    fn minus(self, used: f64) -> Capacity {
        match self {
            Capacity::Finite(c) => Capacity::Finite(c - used),
            Capacity::Unbounded => Capacity::Unbounded,
        }
    }

    fn exceeds(self, eps: f64) -> bool {
        match self {
            Capacity::Finite(c) => c > eps,
            Capacity::Unbounded => true,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Capacity::Finite(c) => Some(c),
            Capacity::Unbounded => None,
        }
    }
}

impl From<f64> for Capacity {
    fn from(c: f64) -> Self {
        Capacity::Finite(c)
    }
}

#[derive(Clone, Debug)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub forward: Capacity,
    pub backward: Capacity,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork {
    interior: usize,
    arcs: Vec<Arc>,
    source_arcs: Vec<usize>,
    sink_arcs: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    /// Net flow per arc, positive in the `from → to` direction.
    pub flows: Vec<f64>,
    pub value: f64,
    /// Every source arc carries its full capacity.
    pub saturated: bool,
    /// Nodes reachable from the source in the final residual graph, indexed
    /// like the network (interior, then source, then sink).
    pub reachable: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(interior: usize) -> Self {
        Self {
            interior,
            arcs: Vec::new(),
            source_arcs: Vec::new(),
            sink_arcs: Vec::new(),
        }
    }

    pub fn interior_count(&self) -> usize {
        self.interior
    }

    pub fn source(&self) -> usize {
        self.interior
    }

    pub fn sink(&self) -> usize {
        self.interior + 1
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn source_arcs(&self) -> &[usize] {
        &self.source_arcs
    }

    pub fn sink_arcs(&self) -> &[usize] {
        &self.sink_arcs
    }

    /// Adds an arc between two interior nodes with a capacity per direction.
    pub fn add_edge(&mut self, u: usize, v: usize, cap_uv: Capacity, cap_vu: Capacity) -> Result<usize> {
        if u >= self.interior || v >= self.interior || u == v {
            return invalid(format!("bad interior arc ({u}, {v}) in network of {} nodes", self.interior));
        }
        check_capacity(cap_uv)?;
        check_capacity(cap_vu)?;
        self.arcs.push(Arc { from: u, to: v, forward: cap_uv, backward: cap_vu });
        Ok(self.arcs.len() - 1)
    }

    /// Source arc `r → v` with capacity `cap` and no back-capacity.
    pub fn add_source_edge(&mut self, v: usize, cap: f64) -> Result<usize> {
        if v >= self.interior {
            return invalid(format!("source arc to non-interior node {v}"));
        }
        check_capacity(Capacity::Finite(cap))?;
        self.arcs.push(Arc {
            from: self.source(),
            to: v,
            forward: Capacity::Finite(cap),
            backward: Capacity::Finite(0.0),
        });
        self.source_arcs.push(self.arcs.len() - 1);
        Ok(self.arcs.len() - 1)
    }

    /// Sink arc `u → s` with capacity `cap` and no back-capacity.
    pub fn add_sink_edge(&mut self, u: usize, cap: f64) -> Result<usize> {
        if u >= self.interior {
            return invalid(format!("sink arc from non-interior node {u}"));
        }
        check_capacity(Capacity::Finite(cap))?;
        self.arcs.push(Arc {
            from: u,
            to: self.sink(),
            forward: Capacity::Finite(cap),
            backward: Capacity::Finite(0.0),
        });
        self.sink_arcs.push(self.arcs.len() - 1);
        Ok(self.arcs.len() - 1)
    }

    fn residual(&self, flows: &[f64], arc: usize, forward: bool) -> Capacity {
        let a = &self.arcs[arc];
        if forward {
            a.forward.minus(flows[arc])
        } else {
            a.backward.minus(-flows[arc])
        }
    }

    fn augment_eps(&self) -> f64 {
        let scale = self
            .arcs
            .iter()
            .flat_map(|a| [a.forward.finite(), a.backward.finite()])
            .flatten()
            .fold(1.0_f64, f64::max);
        1e-12 * scale
    }

    fn adjacency(&self) -> Vec<Vec<(usize, bool)>> {
        let mut adj = vec![Vec::new(); self.interior + 2];
        for (id, a) in self.arcs.iter().enumerate() {
            adj[a.from].push((id, true));
            adj[a.to].push((id, false));
        }
        adj
    }

    /// Residual BFS from the source; returns the predecessor arc per node.
    fn bfs(
        &self,
        adj: &[Vec<(usize, bool)>],
        flows: &[f64],
        eps: f64,
        pred: &mut [Option<(usize, bool)>],
        seen: &mut [bool],
    ) {
        seen.iter_mut().for_each(|s| *s = false);
        pred.iter_mut().for_each(|p| *p = None);
        let mut queue = VecDeque::new();
        seen[self.source()] = true;
        queue.push_back(self.source());
        while let Some(u) = queue.pop_front() {
            for &(arc, at_from) in &adj[u] {
                let a = &self.arcs[arc];
                let v = if at_from { a.to } else { a.from };
                if seen[v] || !self.residual(flows, arc, at_from).exceeds(eps) {
                    continue;
                }
                seen[v] = true;
                pred[v] = Some((arc, at_from));
                if v == self.sink() {
                    return;
                }
                queue.push_back(v);
            }
        }
    }

    /// Computes a maximum flow, its saturation status and the final residual
    /// reachable set.
    pub fn max_flow(&self) -> Result<FlowResult> {
        let nodes = self.interior + 2;
        let adj = self.adjacency();
        let eps = self.augment_eps();
        let mut flows = vec![0.0; self.arcs.len()];
        let mut pred = vec![None; nodes];
        let mut seen = vec![false; nodes];
        let guard = 10 * nodes * (self.arcs.len() + 1) + 1000;
        let mut rounds = 0;
        loop {
            self.bfs(&adj, &flows, eps, &mut pred, &mut seen);
            if !seen[self.sink()] {
                break;
            }
            rounds += 1;
            if rounds > guard {
                return invariant("max-flow augmentation did not terminate");
            }
            let mut bottleneck = f64::INFINITY;
            let mut v = self.sink();
            while let Some((arc, fwd)) = pred[v] {
                if let Capacity::Finite(r) = self.residual(&flows, arc, fwd) {
                    bottleneck = bottleneck.min(r);
                }
                let a = &self.arcs[arc];
                v = if fwd { a.from } else { a.to };
            }
            if !bottleneck.is_finite() {
                return invalid("network admits unbounded flow");
            }
            let mut v = self.sink();
            while let Some((arc, fwd)) = pred[v] {
                let a = &self.arcs[arc];
                if fwd {
                    flows[arc] += bottleneck;
                    v = a.from;
                } else {
                    flows[arc] -= bottleneck;
                    v = a.to;
                }
            }
        }
        let value = self.source_arcs.iter().map(|&a| flows[a]).sum();
        let saturated = self.source_arcs.iter().all(|&a| {
            let cap = self.arcs[a].forward.finite().unwrap_or(0.0);
            cap - flows[a] <= TOL_FLOW * cap.max(1.0)
        });
        Ok(FlowResult { flows, value, saturated, reachable: seen })
    }

    /// Minimum `r/s` cut capacity by enumerating every subset of interior
    /// nodes placed on the source side. Returns `f64::INFINITY` when every cut
    /// crosses an unbounded arc.
    pub fn min_cut_value_bruteforce(&self) -> Result<f64> {
        if self.interior > BRUTE_FORCE_LIMIT {
            return invalid(format!(
                "brute-force min cut limited to {BRUTE_FORCE_LIMIT} interior nodes, got {}",
                self.interior
            ));
        }
        let on_source_side = |mask: u32, node: usize| {
            if node == self.source() {
                true
            } else if node == self.sink() {
                false
            } else {
                mask >> node & 1 == 1
            }
        };
        let mut best = f64::INFINITY;
        'masks: for mask in 0..(1u32 << self.interior) {
            let mut cut = 0.0;
            for a in &self.arcs {
                let crossing = match (on_source_side(mask, a.from), on_source_side(mask, a.to)) {
                    (true, false) => a.forward,
                    (false, true) => a.backward,
                    _ => continue,
                };
                match crossing {
                    Capacity::Finite(c) => cut += c,
                    Capacity::Unbounded => continue 'masks,
                }
            }
            best = best.min(cut);
        }
        Ok(best)
    }
}

impl FlowResult {
    /// Net flow leaving `node` (negative for net inflow).
    pub fn net_outflow(&self, net: &FlowNetwork, node: usize) -> f64 {
        net.arcs
            .iter()
            .zip(&self.flows)
            .map(|(a, &f)| {
                if a.from == node {
                    f
                } else if a.to == node {
                    -f
                } else {
                    0.0
                }
            })
            .sum()
    }
}

fn check_capacity(c: Capacity) -> Result<()> {
    match c {
        Capacity::Finite(v) if !(v.is_finite() && v >= 0.0) => {
            invalid(format!("capacity must be finite and non-negative, got {v}"))
        }
        _ => Ok(()),
    }
}
