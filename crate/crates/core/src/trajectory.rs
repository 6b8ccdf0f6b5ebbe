//! Affine coefficient trajectories and the two pointwise formulas shared by
//! both path engines: meeting times and soft-thresholding.

/// `β(λ2) = beta_ref + slope · (λ2 − lambda_ref)`, valid until the owning
/// fused set changes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trajectory {
    pub lambda_ref: f64,
    pub beta_ref: f64,
    pub slope: f64,
}

impl Trajectory {
    pub fn new(lambda_ref: f64, beta_ref: f64, slope: f64) -> Self {
        Self { lambda_ref, beta_ref, slope }
    }

    #[inline]
    pub fn at(&self, lambda2: f64) -> f64 {
        self.beta_ref + self.slope * (lambda2 - self.lambda_ref)
    }
}

/// Value of `λ2` at which two trajectories take the same value, provided it
/// lies strictly after `lambda_now`. Parallel trajectories never meet.
pub fn hitting_time(a: &Trajectory, b: &Trajectory, lambda_now: f64) -> Option<f64> {
    let closing = b.slope - a.slope;
    if closing == 0.0 {
        return None;
    }
    let h = (a.at(lambda_now) - b.at(lambda_now)) / closing + lambda_now;
    (h > lambda_now).then_some(h)
}

/// Meeting time for two adjacent fused sets whose relative order is known.
///
/// `order` is `sign(β_a − β_b)` just before `lambda_now` (`0` when the order
/// is undetermined because the sets already coincide). Returns `None` when
/// the sets do not approach each other, or are parallel and apart; otherwise
/// the meeting time, clamped to `lambda_now` so that rounding can never
/// schedule a meeting in the past.
pub(crate) fn meeting_time(a: &Trajectory, b: &Trajectory, order: i32, lambda_now: f64) -> Option<f64> {
    if order == 0 {
        return Some(lambda_now);
    }
    let closing = a.slope - b.slope;
    if closing == 0.0 {
        // Parallel sets that already coincide (after a simultaneous meeting
        // with a third set) stay together; otherwise they never meet.
        let (va, vb) = (a.at(lambda_now), b.at(lambda_now));
        let tol = 1e-12 * va.abs().max(vb.abs()).max(1.0);
        return ((va - vb).abs() <= tol).then_some(lambda_now);
    }
    if f64::from(order) * closing > 0.0 {
        return None;
    }
    // Evaluate at the later anchor so the result does not depend on when it
    // is computed.
    let at = a.lambda_ref.max(b.lambda_ref);
    let h = at + (a.at(at) - b.at(at)) / -closing;
    Some(h.max(lambda_now))
}

/// `sign(v) · (|v| − λ1)⁺`.
#[inline]
pub fn soft_threshold_value(v: f64, lambda1: f64) -> f64 {
    let shrunk = v.abs() - lambda1;
    if shrunk > 0.0 {
        shrunk.copysign(v)
    } else {
        0.0
    }
}

/// Elementwise soft-thresholding; maps the `λ1 = 0` solution to any `λ1 ≥ 0`.
pub fn soft_threshold(beta: &[f64], lambda1: f64) -> Vec<f64> {
    if lambda1 == 0.0 {
        return beta.to_vec();
    }
    beta.iter().map(|&v| soft_threshold_value(v, lambda1)).collect()
}
