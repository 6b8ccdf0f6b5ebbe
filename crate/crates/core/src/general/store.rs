//! Piecewise-linear storage of a general-graph path.

use std::fmt::Write as _;

use crate::error::{invalid, FlsaError, Result};
use crate::io::fmt_f64;
use crate::trajectory::{soft_threshold, Trajectory};

/// Start of a linear piece of one coefficient's path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    pub lambda: f64,
    pub beta: f64,
    pub slope: f64,
}

impl Anchor {
    pub fn trajectory(&self) -> Trajectory {
        Trajectory::new(self.lambda, self.beta, self.slope)
    }
}

/// Structural change recorded by the engine. Set ids are never reused.
#[derive(Clone, Debug, PartialEq)]
pub enum PathEvent {
    Fuse { lambda: f64, a: usize, b: usize, into: usize },
    Split { lambda: f64, from: usize, parts: Vec<usize> },
    /// The flow problem of `set` was re-solved without a change of membership.
    Recert { lambda: f64, set: usize },
}

impl PathEvent {
    pub fn lambda(&self) -> f64 {
        match *self {
            PathEvent::Fuse { lambda, .. } | PathEvent::Split { lambda, .. } | PathEvent::Recert { lambda, .. } => {
                lambda
            }
        }
    }
}

/// Counters and worst residuals gathered while the path is built. Residual
/// fields stay at zero unless invariant checking is switched on.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub breakpoints: usize,
    pub fusions: usize,
    pub splits: usize,
    pub recertifications: usize,
    /// `max(|τ| − λ2)` over certified sets, at breakpoints and midpoints.
    pub max_tau_excess: f64,
    /// Worst disagreement between a cross-edge sign and the actual order.
    pub max_sign_violation: f64,
    /// Worst `|Σ β − Σ y|` over connected components.
    pub max_mass_error: f64,
    /// Worst `|Σ p_k|` over certified sets.
    pub max_push_sum: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralPathStore {
    pub(crate) anchors: Vec<Vec<Anchor>>,
    pub(crate) events: Vec<PathEvent>,
    pub(crate) diagnostics: Diagnostics,
}

impl GeneralPathStore {
    pub(crate) fn new(n: usize) -> Self {
        Self { anchors: vec![Vec::new(); n], events: Vec::new(), diagnostics: Diagnostics::default() }
    }

    /// Appends a piece for node `k`, replacing the last one if it starts at
    /// the same λ2.
    pub(crate) fn push_anchor(&mut self, k: usize, anchor: Anchor) {
        let list = &mut self.anchors[k];
        match list.last_mut() {
            Some(last) if last.lambda >= anchor.lambda => *last = anchor,
            _ => list.push(anchor),
        }
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn anchors(&self, k: usize) -> &[Anchor] {
        &self.anchors[k]
    }

    pub fn events(&self) -> &[PathEvent] {
        &self.events
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Distinct λ2 values at which the grouping changed, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .events
            .iter()
            .filter(|e| !matches!(e, PathEvent::Recert { .. }))
            .map(PathEvent::lambda)
            .collect();
        out.dedup();
        out
    }

    /// λ2 of every fusion in the order they happened.
    pub fn fusion_lambdas(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter_map(|e| match e {
                PathEvent::Fuse { lambda, .. } => Some(*lambda),
                _ => None,
            })
            .collect()
    }

    pub fn split_count(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, PathEvent::Split { .. })).count()
    }

    /// Largest jump in any coefficient's path between consecutive pieces.
    pub fn max_anchor_jump(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for list in &self.anchors {
            for w in list.windows(2) {
                worst = worst.max((w[0].trajectory().at(w[1].lambda) - w[1].beta).abs());
            }
        }
        worst
    }

    pub fn eval_node(&self, k: usize, lambda2: f64) -> f64 {
        let list = &self.anchors[k];
        let i = list.partition_point(|a| a.lambda <= lambda2).max(1) - 1;
        list[i].trajectory().at(lambda2)
    }

    pub fn eval(&self, lambda2: f64) -> Result<Vec<f64>> {
        if !(lambda2 >= 0.0) || !lambda2.is_finite() {
            return invalid(format!("lambda2 must be finite and non-negative, got {lambda2}"));
        }
        Ok((0..self.len()).map(|k| self.eval_node(k, lambda2)).collect())
    }

    pub fn eval_with_l1(&self, lambda2: f64, lambda1: f64) -> Result<Vec<f64>> {
        if !(lambda1 >= 0.0) || !lambda1.is_finite() {
            return invalid(format!("lambda1 must be finite and non-negative, got {lambda1}"));
        }
        Ok(soft_threshold(&self.eval(lambda2)?, lambda1))
    }

    /// Event log as `lambda,kind,set_a,set_b`. A split writes one row per
    /// resulting part; a recertification leaves `set_b` empty.
    pub fn events_csv(&self) -> String {
        let mut out = String::from("lambda,kind,set_a,set_b\n");
        for e in &self.events {
            match e {
                PathEvent::Fuse { lambda, a, b, .. } => {
                    let _ = writeln!(out, "{},fuse,{a},{b}", fmt_f64(*lambda));
                }
                PathEvent::Split { lambda, from, parts } => {
                    for p in parts {
                        let _ = writeln!(out, "{},split,{from},{p}", fmt_f64(*lambda));
                    }
                }
                PathEvent::Recert { lambda, set } => {
                    let _ = writeln!(out, "{},recert,{set},", fmt_f64(*lambda));
                }
            }
        }
        out
    }

    /// Every piece of every coefficient as `node,lambda,beta,slope`.
    pub fn anchors_csv(&self) -> String {
        let mut out = String::from("node,lambda,beta,slope\n");
        for (k, list) in self.anchors.iter().enumerate() {
            for a in list {
                let _ = writeln!(out, "{k},{},{},{}", fmt_f64(a.lambda), fmt_f64(a.beta), fmt_f64(a.slope));
            }
        }
        out
    }

    /// Rebuilds an evaluable store from [`anchors_csv`](Self::anchors_csv)
    /// output. The event log and diagnostics are not part of that format.
    pub fn from_anchors_csv(text: &str) -> Result<Self> {
        let mut anchors: Vec<Vec<Anchor>> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || line_no == 1 && line.starts_with("node") {
                continue;
            }
            let parse_err = |message: String| FlsaError::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(parse_err(format!("expected 4 fields, found {}", fields.len())));
            }
            let k: usize = fields[0].trim().parse().map_err(|e| parse_err(format!("node: {e}")))?;
            let mut vals = [0.0f64; 3];
            for (slot, f) in vals.iter_mut().zip(&fields[1..]) {
                *slot = f.trim().parse().map_err(|e| parse_err(format!("{f:?}: {e}")))?;
                if !slot.is_finite() {
                    return Err(parse_err(format!("non-finite value {f:?}")));
                }
            }
            if k >= anchors.len() {
                if k != anchors.len() {
                    return Err(parse_err(format!("node {k} out of order")));
                }
                anchors.push(Vec::new());
            }
            if k + 1 != anchors.len() {
                return Err(parse_err(format!("node {k} out of order")));
            }
            let list = &mut anchors[k];
            if list.last().map_or(false, |a| a.lambda >= vals[0]) {
                return Err(parse_err(format!("anchors for node {k} not increasing in lambda")));
            }
            list.push(Anchor { lambda: vals[0], beta: vals[1], slope: vals[2] });
        }
        if anchors.is_empty() {
            return invalid("no anchors found");
        }
        Ok(Self { anchors, events: Vec::new(), diagnostics: Diagnostics::default() })
    }
}
