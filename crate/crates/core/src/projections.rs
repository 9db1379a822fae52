//! Exact Euclidean projectors onto simple closed convex sets.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, ViError};
use crate::linalg::{dot, norm, norm_l1, norm_sq};

/// Relative feasibility tolerance used by [`ProjectorSpec::contains`].
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetKind {
    /// `{x : ‖x‖₁ ≤ radius}`
    L1Ball { radius: f64 },
    /// `{x : lo ≤ x ≤ hi}`; bounds may be infinite.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{x : ‖x − center‖ ≤ radius}`
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : ⟨a, x⟩ ≤ b}`
    Halfspace { a: Vec<f64>, b: f64 },
    FullSpace,
}

impl SetKind {
    pub fn name(&self) -> &'static str {
        match self {
            SetKind::L1Ball { .. } => "l1_ball",
            SetKind::Box { .. } => "box",
            SetKind::Ball { .. } => "ball",
            SetKind::Halfspace { .. } => "halfspace",
            SetKind::FullSpace => "full_space",
        }
    }
}

/// A feasible set together with its ambient dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorSpec {
    dim: usize,
    kind: SetKind,
}

impl ProjectorSpec {
    pub fn new(dim: usize, kind: SetKind) -> Result<Self> {
        if dim == 0 {
            return Err(ViError::InvalidInput("dimension must be positive".into()));
        }
        match &kind {
            SetKind::L1Ball { radius } => {
                if !(*radius > 0.0) {
                    return Err(ViError::InvalidInput(format!("l1 radius must be positive, got {radius}")));
                }
            }
            SetKind::Box { lo, hi } => {
                check_dim(dim, lo.len())?;
                check_dim(dim, hi.len())?;
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(ViError::InvalidInput("box requires lo <= hi componentwise".into()));
                }
            }
            SetKind::Ball { center, radius } => {
                check_dim(dim, center.len())?;
                if !(*radius > 0.0) {
                    return Err(ViError::InvalidInput(format!("ball radius must be positive, got {radius}")));
                }
            }
            SetKind::Halfspace { a, b } => {
                check_dim(dim, a.len())?;
                if norm_sq(a) == 0.0 || !b.is_finite() {
                    return Err(ViError::InvalidInput("halfspace normal must be nonzero".into()));
                }
            }
            SetKind::FullSpace => {}
        }
        Ok(Self { dim, kind })
    }

    pub fn l1_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, SetKind::L1Ball { radius })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::new(lo.len(), SetKind::Box { lo, hi })
    }

    /// `[lo, hi]^dim`
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(center.len(), SetKind::Ball { center, radius })
    }

    pub fn halfspace(a: Vec<f64>, b: f64) -> Result<Self> {
        Self::new(a.len(), SetKind::Halfspace { a, b })
    }

    pub fn full_space(dim: usize) -> Result<Self> {
        Self::new(dim, SetKind::FullSpace)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    /// Euclidean projection of `v`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, v.len())?;
        let mut out = v.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    /// Projects `v` in place. The caller guarantees `v.len() == self.dim()`.
    pub fn project_in_place(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        match &self.kind {
            SetKind::L1Ball { radius } => l1_ball_in_place(v, *radius),
            SetKind::Box { lo, hi } => {
                for ((x, l), h) in v.iter_mut().zip(lo).zip(hi) {
                    *x = x.max(*l).min(*h);
                }
            }
            SetKind::Ball { center, radius } => {
                let r = v.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>().sqrt();
                if r > *radius {
                    let s = radius / r;
                    for (x, c) in v.iter_mut().zip(center) {
                        *x = c + s * (*x - c);
                    }
                }
            }
            SetKind::Halfspace { a, b } => {
                let excess = dot(a, v) - b;
                if excess > 0.0 {
                    let s = excess / norm_sq(a);
                    for (x, ai) in v.iter_mut().zip(a) {
                        *x -= s * ai;
                    }
                }
            }
            SetKind::FullSpace => {}
        }
    }

    /// Membership test with a relative tolerance of [`MEMBERSHIP_TOL`].
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let tol = MEMBERSHIP_TOL;
        match &self.kind {
            SetKind::L1Ball { radius } => norm_l1(x) <= radius * (1.0 + tol),
            SetKind::Box { lo, hi } => x
                .iter()
                .zip(lo)
                .zip(hi)
                .all(|((v, l), h)| *v >= l - tol * (1.0 + l.abs()) && *v <= h + tol * (1.0 + h.abs())),
            SetKind::Ball { center, radius } => {
                let r = x.iter().zip(center).map(|(v, c)| (v - c) * (v - c)).sum::<f64>().sqrt();
                r <= radius * (1.0 + tol)
            }
            SetKind::Halfspace { a, b } => dot(a, x) <= b + tol * (1.0 + b.abs() + norm(a) * norm(x)),
            SetKind::FullSpace => true,
        }
    }
}

/// Projection onto `{x : ‖x‖₁ ≤ t}` by soft-thresholding at the level
/// returned by [`l1_threshold`].
pub fn project_l1_ball(v: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(ViError::InvalidInput(format!("l1 radius must be positive, got {t}")));
    }
    let mut out = v.to_vec();
    l1_ball_in_place(&mut out, t);
    Ok(out)
}

/// Threshold θ ≥ 0 with Σ max(|v_i| − θ, 0) = t, or 0 when `v` is already feasible.
///
/// Active-set iteration: start from all magnitudes, set θ to the level that
/// would exhaust the budget on the current set, and drop entries at or below
/// θ until the set stops shrinking, so the loop ends after at most `n`
/// passes, usually a handful.
pub fn l1_threshold(v: &[f64], t: f64) -> f64 {
    let total = norm_l1(v);
    if total <= t {
        return 0.0;
    }
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    // Both starting values are below the answer; each pass moves the level
    // up to the average excess of the entries above it.
    let mut theta = ((total - t) / v.len() as f64).max(max - t);
    let mut last = usize::MAX;
    loop {
        let (sum, count) = mass_above(v, theta);
        // In exact arithmetic the set only shrinks; rounding can let an entry
        // back in, so stop as soon as it stops shrinking.
        if count == 0 || count >= last {
            break;
        }
        theta = (sum - t) / count as f64;
        last = count;
    }
    theta.max(0.0)
}

/// Sum and count of the magnitudes strictly above `theta`.
fn mass_above(v: &[f64], theta: f64) -> (f64, usize) {
    let mut sum = [0.0f64; 8];
    let mut count = [0usize; 8];
    let chunks = v.chunks_exact(8);
    let rest = chunks.remainder();
    for c in chunks {
        for i in 0..8 {
            let m = c[i].abs();
            let on = m > theta;
            sum[i] += if on { m } else { 0.0 };
            count[i] += on as usize;
        }
    }
    let mut s = ((sum[0] + sum[4]) + (sum[1] + sum[5])) + ((sum[2] + sum[6]) + (sum[3] + sum[7]));
    let mut n: usize = count.iter().sum();
    for x in rest {
        if x.abs() > theta {
            s += x.abs();
            n += 1;
        }
    }
    (s, n)
}

fn l1_ball_in_place(v: &mut [f64], t: f64) {
    let theta = l1_threshold(v, t);
    if theta == 0.0 && norm_l1(v) <= t {
        return;
    }
    for x in v.iter_mut() {
        let m = x.abs() - theta;
        *x = if m > 0.0 { x.signum() * m } else { 0.0 };
    }
    // Rounding in θ can leave the sum a few ulps above t.
    let s = norm_l1(v);
    if s > t {
        let f = t / s;
        v.iter_mut().for_each(|x| *x *= f);
    }
}

/// Worst value of `⟨v − P(v), P(v) − y⟩` over feasible `samples`.
///
/// A correct projector gives a nonnegative result; returns `+∞` for no samples.
pub fn check_variational_inequality_of_projection(
    spec: &ProjectorSpec,
    v: &[f64],
    samples: &[Vec<f64>],
) -> Result<f64> {
    let p = spec.project(v)?;
    let r: Vec<f64> = v.iter().zip(&p).map(|(a, b)| a - b).collect();
    let mut worst = f64::INFINITY;
    for y in samples {
        check_dim(spec.dim(), y.len())?;
        let g: f64 = r.iter().zip(p.iter().zip(y)).map(|(ri, (pi, yi))| ri * (pi - yi)).sum();
        worst = worst.min(g);
    }
    Ok(worst)
}
