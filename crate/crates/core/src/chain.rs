//! Exact λ2 path for the 1-D chain.
//!
//! Adjacent intervals only ever fuse as λ2 grows, so the path is a sequence
//! of exactly `n − 1` fusions. Each interval's slope is fixed by the order
//! relations with its two neighbors, and those relations are fixed by the
//! data until the interval fuses. The path is kept as a binary fusion tree:
//! leaves are coefficients, every internal node is a fusion.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{invalid, invariant, FlsaError, Result};
use crate::io::fmt_f64;
use crate::queue::MonotoneQueue;
use crate::trajectory::{meeting_time, soft_threshold, Trajectory};

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub lambda_created: f64,
    pub beta_at_creation: f64,
    pub slope: f64,
    pub children: Option<(usize, usize)>,
    pub parent: Option<usize>,
}

impl TreeNode {
    pub fn trajectory(&self) -> Trajectory {
        Trajectory::new(self.lambda_created, self.beta_at_creation, self.slope)
    }
}

/// Binary fusion tree. Nodes `0..n` are the leaves; internal node `n + i` is
/// the `i`-th fusion, so parents always have larger indices than children
/// and internal nodes appear in non-decreasing `lambda_created` order.
#[derive(Clone, Debug, PartialEq)]
pub struct PathTree {
    nodes: Vec<TreeNode>,
    leaves: usize,
}

const NONE: u32 = u32::MAX;

/// A live interval of fused coefficients, stored at the index of its first
/// coefficient `lo`; the right neighbor therefore starts at `hi + 1`.
#[derive(Clone, Copy, Debug)]
struct FusedInterval {
    trajectory: Trajectory,
    hi: u32,
    /// Start of the left neighbor, or `NONE`.
    left: u32,
    tree_node: u32,
    /// Bumped whenever the boundary to the right neighbor is rescheduled or
    /// the interval dies; queued events carry the stamp they were made with.
    stamp: u32,
}

/// Candidate fusion of the interval starting at `left` with its right
/// neighbor. Stale once the interval's stamp has moved on.
#[derive(Clone, Copy, Debug)]
struct HittingEvent {
    left: u32,
    stamp: u32,
}

fn order(a: f64, b: f64) -> i32 {
    match a.partial_cmp(&b) {
        Some(Ordering::Greater) => 1,
        Some(Ordering::Less) => -1,
        _ => 0,
    }
}

struct ChainSolver<'a> {
    y: &'a [f64],
    intervals: Vec<FusedInterval>,
    nodes: Vec<TreeNode>,
    queue: MonotoneQueue<HittingEvent>,
}

impl ChainSolver<'_> {
    /// `sign(β_k − β_{k+1})` across the boundary after coefficient `k`. The
    /// order of two adjacent intervals cannot change without fusing them, so
    /// it is always the order of the data at that boundary.
    fn boundary(&self, k: usize) -> i32 {
        order(self.y[k], self.y[k + 1])
    }

    fn slope(&self, lo: usize, hi: usize) -> f64 {
        let n = self.y.len();
        let mut signs = 0;
        if lo > 0 {
            signs -= self.boundary(lo - 1);
        }
        if hi + 1 < n {
            signs += self.boundary(hi);
        }
        if signs == 0 {
            0.0
        } else {
            -f64::from(signs) / (hi - lo + 1) as f64
        }
    }

    /// Invalidates queued events for the boundary right of `left` and queues
    /// its new meeting time, if any.
    fn schedule(&mut self, left: usize, lambda_now: f64) {
        let a = &mut self.intervals[left];
        a.stamp = a.stamp.wrapping_add(1);
        let a = *a;
        let right = a.hi as usize + 1;
        if right >= self.y.len() {
            return;
        }
        let b = &self.intervals[right];
        if let Some(lambda) = meeting_time(&a.trajectory, &b.trajectory, self.boundary(right - 1), lambda_now) {
            self.queue.push(lambda, HittingEvent { left: left as u32, stamp: a.stamp });
        }
    }

    fn fuse(&mut self, left: usize, lambda: f64) {
        let a = self.intervals[left];
        let right = a.hi as usize + 1;
        let b = self.intervals[right];
        let (va, vb) = (a.trajectory.at(lambda), b.trajectory.at(lambda));
        let na = (right - left) as f64;
        let nb = (b.hi as usize + 1 - right) as f64;
        let beta = if va == vb { va } else { (na * va + nb * vb) / (na + nb) };
        let hi = b.hi as usize;
        let slope = self.slope(left, hi);
        let node = self.nodes.len();
        self.nodes.push(TreeNode {
            lambda_created: lambda,
            beta_at_creation: beta,
            slope,
            children: Some((a.tree_node as usize, b.tree_node as usize)),
            parent: None,
        });
        self.nodes[a.tree_node as usize].parent = Some(node);
        self.nodes[b.tree_node as usize].parent = Some(node);

        let dead = &mut self.intervals[right];
        dead.stamp = dead.stamp.wrapping_add(1);
        let merged = &mut self.intervals[left];
        merged.hi = hi as u32;
        merged.trajectory = Trajectory::new(lambda, beta, slope);
        merged.tree_node = node as u32;
        if hi + 1 < self.y.len() {
            self.intervals[hi + 1].left = left as u32;
        }
    }
}

/// Computes the full λ2 path (with `λ1 = 0`) of the 1-D fused lasso signal
/// approximator in `O(n log n)`.
pub fn solve_path_1d(y: &[f64]) -> Result<PathTree> {
    let n = y.len();
    if n == 0 {
        return invalid("signal is empty");
    }
    if n >= NONE as usize {
        return invalid(format!("signal of length {n} is too long"));
    }
    if let Some(k) = y.iter().position(|v| !v.is_finite()) {
        return invalid(format!("signal value {k} is not finite"));
    }
    let mut solver = ChainSolver {
        y,
        intervals: Vec::with_capacity(n),
        nodes: Vec::with_capacity(2 * n - 1),
        queue: MonotoneQueue::new(),
    };
    for k in 0..n {
        let slope = solver.slope(k, k);
        solver.nodes.push(TreeNode {
            lambda_created: 0.0,
            beta_at_creation: y[k],
            slope,
            children: None,
            parent: None,
        });
        solver.intervals.push(FusedInterval {
            trajectory: Trajectory::new(0.0, y[k], slope),
            hi: k as u32,
            left: if k == 0 { NONE } else { k as u32 - 1 },
            tree_node: k as u32,
            stamp: 0,
        });
    }
    for k in 0..n.saturating_sub(1) {
        solver.schedule(k, 0.0);
    }

    let mut fusions = 0;
    while let Some((lambda, ev)) = solver.queue.pop() {
        let left = ev.left as usize;
        if solver.intervals[left].stamp != ev.stamp {
            continue;
        }
        solver.fuse(left, lambda);
        fusions += 1;
        let l = solver.intervals[left].left;
        if l != NONE {
            solver.schedule(l as usize, lambda);
        }
        solver.schedule(left, lambda);
    }
    if fusions != n - 1 {
        return invariant(format!("chain of {n} finished after {fusions} fusions"));
    }
    Ok(PathTree { nodes: solver.nodes, leaves: n })
}

impl PathTree {
    /// Number of coefficients.
    pub fn len(&self) -> usize {
        self.leaves
    }

    pub fn is_empty(&self) -> bool {
        self.leaves == 0
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Fusion values in the order the fusions happened.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.nodes[self.leaves..].iter().map(|n| n.lambda_created).collect()
    }

    /// Value of coefficient `k` at `lambda2`: climb from the leaf while the
    /// parent already exists at `lambda2`, then interpolate.
    pub fn eval_leaf(&self, k: usize, lambda2: f64) -> f64 {
        let mut node = k;
        while let Some(p) = self.nodes[node].parent {
            if self.nodes[p].lambda_created > lambda2 {
                break;
            }
            node = p;
        }
        self.nodes[node].trajectory().at(lambda2)
    }

    /// Whole solution vector at `lambda2`.
    ///
    /// Instead of climbing from every leaf this makes one pass over the nodes
    /// from the root down, which is `O(n)` regardless of the tree's shape; the
    /// values are identical to [`eval_leaf`](Self::eval_leaf).
    pub fn eval(&self, lambda2: f64) -> Result<Vec<f64>> {
        check_lambda(lambda2)?;
        let mut value = vec![0.0; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            value[i] = match node.parent {
                Some(p) if self.nodes[p].lambda_created <= lambda2 => value[p],
                _ => node.trajectory().at(lambda2),
            };
        }
        value.truncate(self.leaves);
        Ok(value)
    }

    /// Largest jump in any coefficient's path where two intervals fuse:
    /// children evaluated at the fusion against the fused value.
    pub fn max_continuity_gap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for node in &self.nodes[self.leaves..] {
            if let Some((a, b)) = node.children {
                for c in [a, b] {
                    let v = self.nodes[c].trajectory().at(node.lambda_created);
                    worst = worst.max((v - node.beta_at_creation).abs());
                }
            }
        }
        worst
    }

    /// Every fusion happens no earlier than the fusions that built its
    /// children, and fusions are stored in non-decreasing λ2.
    pub fn is_monotone(&self) -> bool {
        let internal = &self.nodes[self.leaves..];
        internal.windows(2).all(|w| w[0].lambda_created <= w[1].lambda_created)
            && internal.iter().all(|node| {
                node.children.map_or(false, |(a, b)| {
                    self.nodes[a].lambda_created <= node.lambda_created
                        && self.nodes[b].lambda_created <= node.lambda_created
                })
            })
    }

    /// Solutions at several λ2 values; output order follows the input.
    pub fn eval_many(&self, lambdas: &[f64]) -> Result<Vec<Vec<f64>>> {
        lambdas.iter().map(|&l| self.eval(l)).collect()
    }

    /// Solution at `(λ1, λ2)` by soft-thresholding the `λ1 = 0` path.
    pub fn eval_with_l1(&self, lambda2: f64, lambda1: f64) -> Result<Vec<f64>> {
        if !(lambda1 >= 0.0) {
            return invalid(format!("lambda1 must be non-negative, got {lambda1}"));
        }
        Ok(soft_threshold(&self.eval(lambda2)?, lambda1))
    }

    /// Path dump, one row per node in index order:
    /// `lambda,child_left,child_right,beta_at_creation,slope`. Leaves have
    /// empty child columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,child_left,child_right,beta_at_creation,slope\n");
        for node in &self.nodes {
            let (l, r) = match node.children {
                Some((l, r)) => (l.to_string(), r.to_string()),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(
                out,
                "{},{l},{r},{},{}",
                fmt_f64(node.lambda_created),
                fmt_f64(node.beta_at_creation),
                fmt_f64(node.slope)
            );
        }
        out
    }

    /// Rebuilds a tree from [`to_csv`](Self::to_csv) output.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut leaves = 0;
        for (i, line) in text.lines().enumerate().skip(1) {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let perr = |message: String| FlsaError::Parse { line: line_no, message };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 5 {
                return Err(perr(format!("expected 5 columns, found {}", cols.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| perr(format!("'{s}' is not a number")));
            let idx = |s: &str| s.parse::<usize>().map_err(|_| perr(format!("'{s}' is not a node index")));
            let children = match (cols[1], cols[2]) {
                ("", "") => None,
                (l, r) => Some((idx(l)?, idx(r)?)),
            };
            if children.is_none() {
                if leaves != nodes.len() {
                    return Err(perr("leaf rows must precede internal rows".into()));
                }
                leaves += 1;
            }
            nodes.push(TreeNode {
                lambda_created: num(cols[0])?,
                beta_at_creation: num(cols[3])?,
                slope: num(cols[4])?,
                children,
                parent: None,
            });
        }
        if leaves == 0 || nodes.len() != 2 * leaves - 1 {
            return invalid(format!("{} rows do not form a complete fusion tree", nodes.len()));
        }
        for i in 0..nodes.len() {
            if let Some((l, r)) = nodes[i].children {
                for c in [l, r] {
                    if c >= i || nodes[c].parent.is_some() {
                        return invalid(format!("node {i} has invalid child {c}"));
                    }
                    nodes[c].parent = Some(i);
                }
            }
        }
        Ok(Self { nodes, leaves })
    }
}

fn check_lambda(lambda2: f64) -> Result<()> {
    if lambda2 >= 0.0 && lambda2.is_finite() {
        Ok(())
    } else {
        invalid(format!("lambda2 must be finite and non-negative, got {lambda2}"))
    }
}

/// Violations of the chain optimality conditions for a candidate `beta`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SubgradientReport {
    /// `max (|τ_{k,k+1}| − λ2)⁺`.
    pub bound_violation: f64,
    /// `max |τ_{k,k+1} − λ2·sign(β_k − β_{k+1})|` over unequal neighbors.
    pub sign_violation: f64,
    /// `|τ_{n−1,n}|`, which must vanish.
    pub boundary_residual: f64,
}

impl SubgradientReport {
    pub fn max(&self) -> f64 {
        self.bound_violation.max(self.sign_violation).max(self.boundary_residual)
    }
}

/// Reconstructs the subgradient variables of a chain solution by forward
/// recursion and reports how far they are from feasible. Neighbors within
/// `1e-9·max(1, |β|)` of each other count as fused.
pub fn check_subgradient_1d(y: &[f64], beta: &[f64], lambda2: f64) -> SubgradientReport {
    let scale = beta.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    check_subgradient_1d_with_tol(y, beta, lambda2, 1e-9 * scale)
}

pub fn check_subgradient_1d_with_tol(y: &[f64], beta: &[f64], lambda2: f64, equal_tol: f64) -> SubgradientReport {
    assert_eq!(y.len(), beta.len(), "signal and candidate differ in length");
    let mut report = SubgradientReport::default();
    let mut tau = 0.0;
    for k in 0..y.len() {
        tau += y[k] - beta[k];
        if k + 1 == y.len() {
            report.boundary_residual = tau.abs();
            break;
        }
        report.bound_violation = report.bound_violation.max(tau.abs() - lambda2);
        let diff = beta[k] - beta[k + 1];
        if diff.abs() > equal_tol {
            let want = lambda2 * diff.signum();
            report.sign_violation = report.sign_violation.max((tau - want).abs());
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_closed_form() {
        let tree = solve_path_1d(&[0.0, 3.0]).unwrap();
        assert_eq!(tree.breakpoints(), vec![1.5]);
        assert_eq!(tree.eval(1.0).unwrap(), vec![1.0, 2.0]);
        assert_eq!(tree.eval(0.0).unwrap(), vec![0.0, 3.0]);
        assert_eq!(tree.eval(1.5).unwrap(), vec![1.5, 1.5]);
        assert_eq!(tree.eval(7.0).unwrap(), vec![1.5, 1.5]);
        assert_eq!(tree.nodes()[2].slope, 0.0);
    }

    #[test]
    fn constant_signal_fuses_at_zero() {
        let y = [2.5; 7];
        let tree = solve_path_1d(&y).unwrap();
        assert!(tree.breakpoints().iter().all(|&l| l == 0.0));
        for lambda in [0.0, 0.3, 10.0] {
            assert_eq!(tree.eval(lambda).unwrap(), y.to_vec());
        }
    }

    #[test]
    fn simultaneous_meeting() {
        // all three meet at λ2 = 1
        let tree = solve_path_1d(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(tree.breakpoints(), vec![1.0, 1.0]);
        assert_eq!(tree.eval(0.5).unwrap(), vec![0.5, 1.0, 1.5]);
        assert_eq!(tree.eval(2.0).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn single_coefficient() {
        let tree = solve_path_1d(&[4.0]).unwrap();
        assert_eq!(tree.len(), 1);
        assert!(tree.breakpoints().is_empty());
        assert_eq!(tree.eval(3.0).unwrap(), vec![4.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_path_1d(&[]).is_err());
        assert!(solve_path_1d(&[1.0, f64::NAN]).is_err());
        let tree = solve_path_1d(&[1.0, 2.0]).unwrap();
        assert!(tree.eval(-0.1).is_err());
        assert!(tree.eval_with_l1(0.1, -1.0).is_err());
    }

    #[test]
    fn leaf_climb_agrees_with_pass() {
        let y = [0.3, -1.2, 2.2, 2.1, 0.0, 5.0, -3.0, 1.0];
        let tree = solve_path_1d(&y).unwrap();
        let mut lambdas = tree.breakpoints();
        lambdas.extend([0.0, 0.05, 0.77, 1.9, 40.0]);
        for l in lambdas {
            let all = tree.eval(l).unwrap();
            for (k, v) in all.iter().enumerate() {
                assert_eq!(*v, tree.eval_leaf(k, l));
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let y = [0.25, 1.0 / 3.0, -2.0, 7.5, 7.5, 0.1];
        let tree = solve_path_1d(&y).unwrap();
        let back = PathTree::from_csv(&tree.to_csv()).unwrap();
        assert_eq!(back, tree);
    }

    #[test]
    fn subgradient_report() {
        let y = [0.0, 1.0, 2.0, 3.0];
        let r = check_subgradient_1d(&y, &y, 0.5);
        assert!(r.sign_violation >= 0.5 - 1e-15);
        let mean = [1.5; 4];
        assert!(check_subgradient_1d(&y, &mean, 2.0).max() < 1e-12);
        // λ2 too small for full fusion: cumulative residual exceeds the bound
        assert!(check_subgradient_1d(&y, &mean, 1.0).bound_violation > 0.9);
    }
}
