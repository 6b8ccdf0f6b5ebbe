//! Event loop for the λ2 path on an arbitrary penalty graph.
//!
//! Coefficients live in fused sets that share one affine trajectory. A set
//! changes only at breakpoints: two adjacent sets meet and fuse, or the flow
//! problem of a set stops being feasible and the set splits along a minimum
//! cut. Between breakpoints every certified set carries the rates of its
//! internal `τ` values, which tells when the next certification is due.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet, VecDeque};

use crate::error::{invalid, invariant, Result};
use crate::graph::PenaltyGraph;
use crate::trajectory::{meeting_time, Trajectory};

use super::flow::{certify_or_split, compute_pushes, slope_from_signs, violation_time, Certification, LocalEdge};
use super::store::{Anchor, GeneralPathStore, PathEvent};

/// Events closer than this are processed as one breakpoint.
pub const TOL_EVENT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Sets of at least this many coefficients are frozen: they still fuse
    /// but are never certified or split. `None` gives the exact path.
    pub cap: Option<usize>,
    /// Record residual diagnostics and verify the set partition at every
    /// breakpoint. Costs `O(n + |E|)` per breakpoint.
    pub check_invariants: bool,
}

impl SolveOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn with_cap(cap: usize) -> Self {
        Self { cap: Some(cap), check_invariants: false }
    }

    pub fn checked(mut self) -> Self {
        self.check_invariants = true;
        self
    }
}

/// `τ` on one internal edge, oriented like the graph edge:
/// `τ(λ2) = tau_ref + rate · (λ2 − FusedSet::tau_lambda)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauEdge {
    pub edge: usize,
    pub tau_ref: f64,
    pub rate: f64,
}

#[derive(Clone, Debug)]
pub struct FusedSet {
    /// Sorted node indices.
    pub members: Vec<usize>,
    pub trajectory: Trajectory,
    pub frozen: bool,
    pub certified: bool,
    pub tau: Vec<TauEdge>,
    pub tau_lambda: f64,
    /// Bumped whenever the flow problem is re-solved.
    pub flow_version: u32,
}

impl FusedSet {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn tau_at(&self, i: usize, lambda2: f64) -> f64 {
        let t = &self.tau[i];
        t.tau_ref + t.rate * (lambda2 - self.tau_lambda)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum EventKind {
    Hit { a: usize, b: usize },
    Violation { set: usize, flow_version: u32 },
}

#[derive(Clone, Copy, Debug)]
struct Queued {
    lambda: f64,
    kind: EventKind,
}

impl Queued {
    fn key(&self) -> (u8, usize, usize) {
        match self.kind {
            EventKind::Hit { a, b } => (0, a, b),
            EventKind::Violation { set, flow_version } => (1, set, flow_version as usize),
        }
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lambda.total_cmp(&other.lambda).then_with(|| self.key().cmp(&other.key()))
    }
}

fn order_of(a: f64, b: f64) -> i8 {
    match a.partial_cmp(&b) {
        Some(Ordering::Greater) => 1,
        Some(Ordering::Less) => -1,
        _ => 0,
    }
}

pub struct PathEngine<'a> {
    y: &'a [f64],
    graph: &'a PenaltyGraph,
    opts: SolveOptions,
    sets: Vec<Option<FusedSet>>,
    node_set: Vec<usize>,
    /// `sign(β_u − β_v)` for edge `(u, v)` while it crosses two sets.
    edge_sign: Vec<i8>,
    heap: BinaryHeap<Reverse<Queued>>,
    lambda: f64,
    store: GeneralPathStore,
    components: Vec<usize>,
    component_mass: Vec<f64>,
    scratch: Vec<usize>,
}

enum Outcome {
    Certified,
    Split(Vec<usize>, Vec<usize>),
}

impl<'a> PathEngine<'a> {
    pub fn new(y: &'a [f64], graph: &'a PenaltyGraph, opts: SolveOptions) -> Result<Self> {
        let n = graph.n();
        if y.len() != n {
            return invalid(format!("signal has {} values but the graph has {n} nodes", y.len()));
        }
        if n == 0 {
            return invalid("empty signal");
        }
        if let Some(k) = y.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value at index {k}"));
        }
        if opts.cap == Some(0) {
            return invalid("cap must be at least 1");
        }
        let edge_sign = graph.edges().iter().map(|&(u, v)| order_of(y[u], y[v])).collect();
        let components = graph.components();
        let ncomp = components.iter().max().map_or(0, |&c| c + 1);
        let mut component_mass = vec![0.0; ncomp];
        for (k, &c) in components.iter().enumerate() {
            component_mass[c] += y[k];
        }
        let mut engine = Self {
            y,
            graph,
            opts,
            sets: Vec::with_capacity(2 * n),
            node_set: (0..n).collect(),
            edge_sign,
            heap: BinaryHeap::new(),
            lambda: 0.0,
            store: GeneralPathStore::new(n),
            components,
            component_mass,
            scratch: vec![usize::MAX; n],
        };
        for k in 0..n {
            let slope = slope_from_signs(engine.external_signs(k, k).iter().sum(), 1);
            engine.sets.push(Some(FusedSet {
                members: vec![k],
                trajectory: Trajectory::new(0.0, y[k], slope),
                frozen: opts.cap.map_or(false, |c| c <= 1),
                certified: true,
                tau: Vec::new(),
                tau_lambda: 0.0,
                flow_version: 0,
            }));
            engine.store.push_anchor(k, Anchor { lambda: 0.0, beta: y[k], slope });
        }
        for k in 0..n {
            engine.schedule_hits(k, |b| b > k);
        }
        Ok(engine)
    }

    /// Current λ2: the last processed breakpoint.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn live_sets(&self) -> impl Iterator<Item = (usize, &FusedSet)> {
        self.sets.iter().enumerate().filter_map(|(i, s)| s.as_ref().map(|s| (i, s)))
    }

    pub fn set_of(&self, node: usize) -> usize {
        self.node_set[node]
    }

    pub fn store(&self) -> &GeneralPathStore {
        &self.store
    }

    fn set(&self, id: usize) -> &FusedSet {
        self.sets[id].as_ref().expect("live set")
    }

    fn live(&self, id: usize) -> bool {
        self.sets[id].is_some()
    }

    /// `t` of edge `e` seen from its endpoint `k`.
    fn t_from(&self, k: usize, e: usize) -> i64 {
        let s = i64::from(self.edge_sign[e]);
        if self.graph.edge(e).0 == k {
            s
        } else {
            -s
        }
    }

    /// Per-member sums of `t` over edges leaving set `id`; `k` is used when
    /// `id` is not yet materialised (singletons at start-up).
    fn external_signs(&self, id: usize, k: usize) -> Vec<i64> {
        let single = [k];
        let members: &[usize] = match self.sets.get(id) {
            Some(Some(s)) => &s.members,
            _ => &single,
        };
        members
            .iter()
            .map(|&m| {
                self.graph
                    .neighbors(m)
                    .iter()
                    .filter(|&&(l, _)| self.node_set[l] != id)
                    .map(|&(_, e)| self.t_from(m, e))
                    .sum()
            })
            .collect()
    }

    /// Adjacent sets with `sign(β_id − β_b)`; `0` when edges disagree or tie.
    fn neighbor_orders(&self, id: usize) -> Vec<(usize, i32)> {
        let mut out = Vec::new();
        for &m in &self.set(id).members {
            for &(l, e) in self.graph.neighbors(m) {
                let b = self.node_set[l];
                if b != id {
                    out.push((b, self.t_from(m, e) as i32));
                }
            }
        }
        out.sort_unstable();
        let mut merged: Vec<(usize, i32)> = Vec::with_capacity(out.len());
        for (b, t) in out {
            match merged.last_mut() {
                Some(last) if last.0 == b => {
                    if last.1 != t {
                        last.1 = 0;
                    }
                }
                _ => merged.push((b, t)),
            }
        }
        merged
    }

    fn schedule_hits(&mut self, id: usize, filter: impl Fn(usize) -> bool) {
        let ta = self.set(id).trajectory;
        for (b, order) in self.neighbor_orders(id) {
            if !filter(b) {
                continue;
            }
            if let Some(h) = meeting_time(&ta, &self.set(b).trajectory, order, self.lambda) {
                let (a, b) = (id.min(b), id.max(b));
                self.heap.push(Reverse(Queued { lambda: h, kind: EventKind::Hit { a, b } }));
            }
        }
    }

    fn schedule_violation(&mut self, id: usize) {
        let set = self.set(id);
        if set.frozen || !set.certified || set.tau.is_empty() {
            return;
        }
        let lam = self.lambda;
        let edges: Vec<(f64, f64)> =
            (0..set.tau.len()).map(|i| (set.tau_at(i, lam).clamp(-lam, lam), set.tau[i].rate)).collect();
        if let Some((v, _)) = violation_time(&edges, lam) {
            let kind = EventKind::Violation { set: id, flow_version: set.flow_version };
            self.heap.push(Reverse(Queued { lambda: v, kind }));
        }
    }

    fn valid(&self, q: &Queued) -> bool {
        match q.kind {
            EventKind::Hit { a, b } => self.live(a) && self.live(b),
            EventKind::Violation { set, flow_version } => {
                self.sets[set].as_ref().map_or(false, |s| s.flow_version == flow_version)
            }
        }
    }

    fn touching_neighbor(&self, id: usize, lam: f64) -> Option<usize> {
        let ta = self.set(id).trajectory;
        self.neighbor_orders(id).into_iter().find_map(|(b, order)| {
            let h = meeting_time(&ta, &self.set(b).trajectory, order, lam)?;
            (h <= lam + TOL_EVENT).then_some(b)
        })
    }

    fn fuse(&mut self, a: usize, b: usize, lam: f64) -> usize {
        let sa = self.sets[a].take().expect("live set");
        let sb = self.sets[b].take().expect("live set");
        let (va, vb) = (sa.trajectory.at(lam), sb.trajectory.at(lam));
        let (na, nb) = (sa.size() as f64, sb.size() as f64);
        let beta = if va == vb { va } else { (na * va + nb * vb) / (na + nb) };
        let mut members = Vec::with_capacity(sa.size() + sb.size());
        members.extend_from_slice(&sa.members);
        members.extend_from_slice(&sb.members);
        members.sort_unstable();
        let frozen = self.opts.cap.map_or(false, |c| members.len() >= c);
        let mut tau = Vec::new();
        if !frozen {
            for s in [&sa, &sb] {
                for i in 0..s.tau.len() {
                    let t = s.tau_at(i, lam).clamp(-lam, lam);
                    tau.push(TauEdge { edge: s.tau[i].edge, tau_ref: t, rate: 0.0 });
                }
            }
            for &k in &sa.members {
                for &(l, e) in self.graph.neighbors(k) {
                    if self.node_set[l] == b {
                        tau.push(TauEdge { edge: e, tau_ref: f64::from(self.edge_sign[e]) * lam, rate: 0.0 });
                    }
                }
            }
        }
        let id = self.sets.len();
        for &m in &members {
            self.node_set[m] = id;
        }
        self.sets.push(Some(FusedSet {
            members,
            trajectory: Trajectory::new(lam, beta, 0.0),
            frozen,
            certified: false,
            tau,
            tau_lambda: lam,
            flow_version: 0,
        }));
        self.refresh_slope(id);
        self.store.events.push(PathEvent::Fuse { lambda: lam, a, b, into: id });
        self.store.diagnostics.fusions += 1;
        id
    }

    fn refresh_slope(&mut self, id: usize) {
        let sum: i64 = self.external_signs(id, 0).iter().sum();
        let s = self.sets[id].as_mut().expect("live set");
        s.trajectory.slope = slope_from_signs(sum, s.members.len());
    }

    fn certify(&mut self, id: usize, lam: f64) -> Result<Outcome> {
        let external = self.external_signs(id, 0);
        let push = compute_pushes(&external);
        let set = self.sets[id].as_ref().expect("live set");
        if push.slope != set.trajectory.slope {
            return invariant(format!("set {id}: slope {} disagrees with pushes {}", set.trajectory.slope, push.slope));
        }
        for (i, &m) in set.members.iter().enumerate() {
            self.scratch[m] = i;
        }
        let mut excess: f64 = 0.0;
        let edges: Vec<LocalEdge> = (0..set.tau.len())
            .map(|i| {
                let (u, v) = self.graph.edge(set.tau[i].edge);
                let t = set.tau_at(i, lam);
                excess = excess.max(t.abs() - lam);
                LocalEdge { u: self.scratch[u], v: self.scratch[v], tau: t.clamp(-lam, lam) }
            })
            .collect();
        let diag = &mut self.store.diagnostics;
        diag.max_tau_excess = diag.max_tau_excess.max(excess);
        diag.max_push_sum = diag.max_push_sum.max(push.sum().abs());
        match certify_or_split(&edges, &push.values, lam)? {
            Certification::Certified { rates } => {
                let s = self.sets[id].as_mut().expect("live set");
                for ((t, e), r) in s.tau.iter_mut().zip(&edges).zip(rates) {
                    t.tau_ref = e.tau;
                    t.rate = r;
                }
                s.tau_lambda = lam;
                s.certified = true;
                s.flow_version += 1;
                Ok(Outcome::Certified)
            }
            Certification::Split { reachable, rest } => {
                let set = self.set(id);
                let r = reachable.iter().map(|&i| set.members[i]).collect();
                let s = rest.iter().map(|&i| set.members[i]).collect();
                Ok(Outcome::Split(r, s))
            }
        }
    }

    /// Splits set `id` into the connected pieces of `r` and of `s`, with `r`
    /// above `s` on every cut edge. Returns the new ids of both sides.
    fn split(&mut self, id: usize, r: &[usize], s: &[usize], lam: f64) -> Result<(Vec<usize>, Vec<usize>)> {
        let f = self.sets[id].take().expect("live set");
        let beta = f.trajectory.at(lam);
        const R: usize = 0;
        const S: usize = 1;
        for &k in r {
            self.scratch[k] = R;
        }
        for &k in s {
            self.scratch[k] = S;
        }
        let tol = 1e-6 * lam.max(1.0);
        let mut inner: Vec<TauEdge> = Vec::new();
        for i in 0..f.tau.len() {
            let e = f.tau[i].edge;
            let (u, v) = self.graph.edge(e);
            let t = f.tau_at(i, lam).clamp(-lam, lam);
            if self.scratch[u] == self.scratch[v] {
                inner.push(TauEdge { edge: e, tau_ref: t, rate: 0.0 });
            } else {
                let sign: i8 = if self.scratch[u] == R { 1 } else { -1 };
                if f64::from(sign) * t < lam - tol {
                    return invariant(format!("cut edge {e} of set {id} has tau {t} below the bound at {lam}"));
                }
                self.edge_sign[e] = sign;
            }
        }
        // Connected pieces of each side; nodes of F are detached first so that
        // `node_set` can mark pieces as they are discovered.
        let first_new = self.sets.len();
        for &k in &f.members {
            self.node_set[k] = usize::MAX;
        }
        let mut parts: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        let mut queue = VecDeque::new();
        for (side, nodes) in [(R, r), (S, s)] {
            for &start in nodes {
                if self.node_set[start] != usize::MAX {
                    continue;
                }
                let pid = self.sets.len();
                let mut members = vec![start];
                self.node_set[start] = pid;
                queue.push_back(start);
                while let Some(k) = queue.pop_front() {
                    for &(l, _) in self.graph.neighbors(k) {
                        if self.node_set[l] == usize::MAX && self.scratch[l] == side && f.members.binary_search(&l).is_ok()
                        {
                            self.node_set[l] = pid;
                            members.push(l);
                            queue.push_back(l);
                        }
                    }
                }
                members.sort_unstable();
                self.sets.push(Some(FusedSet {
                    members,
                    trajectory: Trajectory::new(lam, beta, 0.0),
                    frozen: false,
                    certified: false,
                    tau: Vec::new(),
                    tau_lambda: lam,
                    flow_version: 0,
                }));
                parts[side].push(pid);
            }
        }
        for t in inner {
            let pid = self.node_set[self.graph.edge(t.edge).0];
            self.sets[pid].as_mut().expect("live set").tau.push(t);
        }
        for pid in first_new..self.sets.len() {
            self.refresh_slope(pid);
        }
        let all: Vec<usize> = (first_new..self.sets.len()).collect();
        self.store.events.push(PathEvent::Split { lambda: lam, from: id, parts: all });
        self.store.diagnostics.splits += 1;
        let [rp, sp] = parts;
        Ok((rp, sp))
    }

    /// Processes the next breakpoint. Returns its λ2, or `None` when the
    /// path is complete.
    pub fn step(&mut self) -> Result<Option<f64>> {
        let first = loop {
            match self.heap.pop() {
                None => return Ok(None),
                Some(Reverse(q)) if self.valid(&q) => break q,
                Some(_) => {}
            }
        };
        let lam = first.lambda.max(self.lambda);
        if self.opts.check_invariants && lam > self.lambda {
            self.check_at(0.5 * (self.lambda + lam));
        }
        self.lambda = lam;

        let mut fuse_work: Vec<usize> = Vec::new();
        let mut cert_work: Vec<usize> = Vec::new();
        let mut recert: Vec<usize> = Vec::new();
        let mut take = |q: Queued| match q.kind {
            EventKind::Hit { a, b } => fuse_work.extend([b, a]),
            EventKind::Violation { set, .. } => {
                cert_work.push(set);
                recert.push(set);
            }
        };
        take(first);
        while let Some(Reverse(q)) = self.heap.peek() {
            if q.lambda > lam + TOL_EVENT {
                break;
            }
            let q = *q;
            self.heap.pop();
            if self.valid(&q) {
                take(q);
            }
        }

        let limit = 4 * self.y.len() + 16;
        let mut iterations = 0usize;
        let mut created: Vec<usize> = Vec::new();
        let mut split_sides: HashSet<(usize, usize)> = HashSet::new();
        loop {
            while let Some(a) = fuse_work.pop() {
                if !self.live(a) {
                    continue;
                }
                if let Some(b) = self.touching_neighbor(a, lam) {
                    iterations += 1;
                    if iterations > limit {
                        return invariant(format!("no fixed point after {iterations} changes at lambda {lam}"));
                    }
                    if split_sides.contains(&(a.min(b), a.max(b))) {
                        return invariant(format!("sets {a} and {b} split and re-fused at lambda {lam}"));
                    }
                    let c = self.fuse(a, b, lam);
                    created.push(c);
                    fuse_work.push(c);
                    cert_work.push(c);
                }
            }
            if cert_work.is_empty() {
                break;
            }
            let mut batch = std::mem::take(&mut cert_work);
            batch.sort_unstable();
            batch.dedup();
            for id in batch {
                if !self.live(id) || self.set(id).frozen {
                    continue;
                }
                match self.certify(id, lam)? {
                    Outcome::Certified => {
                        if recert.contains(&id) && !created.contains(&id) {
                            self.store.events.push(PathEvent::Recert { lambda: lam, set: id });
                            self.store.diagnostics.recertifications += 1;
                        }
                    }
                    Outcome::Split(r, s) => {
                        iterations += 1;
                        if iterations > limit {
                            return invariant(format!("no fixed point after {iterations} changes at lambda {lam}"));
                        }
                        let (rp, sp) = self.split(id, &r, &s, lam)?;
                        for &x in &rp {
                            for &y in &sp {
                                split_sides.insert((x.min(y), x.max(y)));
                            }
                        }
                        for p in rp.into_iter().chain(sp) {
                            created.push(p);
                            fuse_work.push(p);
                            cert_work.push(p);
                        }
                    }
                }
            }
        }

        created.retain(|&c| self.live(c));
        for &c in &created {
            let t = self.set(c).trajectory;
            let anchor = Anchor { lambda: lam, beta: t.beta_ref, slope: t.slope };
            for i in 0..self.set(c).members.len() {
                let m = self.set(c).members[i];
                self.store.push_anchor(m, anchor);
            }
        }
        for &c in &created {
            self.schedule_hits(c, |_| true);
            self.schedule_violation(c);
        }
        recert.sort_unstable();
        recert.dedup();
        for id in recert {
            if self.live(id) && !created.contains(&id) {
                self.schedule_violation(id);
            }
        }
        self.store.diagnostics.breakpoints += 1;
        if self.opts.check_invariants {
            self.check_partition(&created)?;
            self.check_at(lam);
        }
        Ok(Some(lam))
    }

    /// Records `τ` bounds, cross-edge orders and component masses at `lam`
    /// under the current grouping.
    fn check_at(&mut self, lam: f64) {
        let mut tau_excess: f64 = 0.0;
        let mut mass = vec![0.0; self.component_mass.len()];
        for (_, s) in self.live_sets() {
            if s.certified && !s.frozen {
                for i in 0..s.tau.len() {
                    tau_excess = tau_excess.max(s.tau_at(i, lam).abs() - lam);
                }
            }
            let beta = s.trajectory.at(lam);
            mass[self.components[s.members[0]]] += beta * s.size() as f64;
        }
        let mut sign_violation: f64 = 0.0;
        for (e, &(u, v)) in self.graph.edges().iter().enumerate() {
            let (a, b) = (self.node_set[u], self.node_set[v]);
            if a == b {
                continue;
            }
            let d = self.set(a).trajectory.at(lam) - self.set(b).trajectory.at(lam);
            let s = f64::from(self.edge_sign[e]);
            let bad = if s == 0.0 { d.abs() } else { (-s * d).max(0.0) };
            sign_violation = sign_violation.max(bad);
        }
        let mass_error = mass.iter().zip(&self.component_mass).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let diag = &mut self.store.diagnostics;
        diag.max_tau_excess = diag.max_tau_excess.max(tau_excess);
        diag.max_sign_violation = diag.max_sign_violation.max(sign_violation);
        diag.max_mass_error = diag.max_mass_error.max(mass_error);
    }

    fn check_partition(&mut self, created: &[usize]) -> Result<()> {
        let total: usize = self.live_sets().map(|(_, s)| s.size()).sum();
        if total != self.y.len() {
            return invariant(format!("live sets cover {total} of {} nodes", self.y.len()));
        }
        for &c in created {
            let members = &self.set(c).members;
            if let Some(&m) = members.iter().find(|&&m| self.node_set[m] != c) {
                return invariant(format!("node {m} listed in set {c} but mapped to {}", self.node_set[m]));
            }
            // connectivity inside the set
            let mut seen = vec![false; members.len()];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(i) = stack.pop() {
                for &(l, _) in self.graph.neighbors(members[i]) {
                    if self.node_set[l] == c {
                        let j = members.binary_search(&l).expect("member");
                        if !seen[j] {
                            seen[j] = true;
                            count += 1;
                            stack.push(j);
                        }
                    }
                }
            }
            if count != members.len() {
                return invariant(format!("set {c} is not connected"));
            }
        }
        Ok(())
    }

    /// Runs to the end of the path.
    pub fn finish(mut self) -> Result<GeneralPathStore> {
        while self.step()?.is_some() {}
        if let Some((id, s)) = self.live_sets().find(|(_, s)| s.trajectory.slope != 0.0) {
            return invariant(format!("set {id} still moving (slope {}) after the last event", s.trajectory.slope));
        }
        Ok(self.store)
    }
}

/// Full λ2 path of the fused lasso on `graph` at `λ1 = 0`.
pub fn solve_path_general(y: &[f64], graph: &PenaltyGraph, opts: SolveOptions) -> Result<GeneralPathStore> {
    PathEngine::new(y, graph, opts)?.finish()
}
