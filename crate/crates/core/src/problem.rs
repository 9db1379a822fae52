//! The variational inequality interface consumed by every solver.

use crate::error::{check_dim, Result};
use crate::projections::ProjectorSpec;

/// A monotone variational inequality `VI(C, F)`: find `x* ∈ C` with
/// `⟨F(x*), x − x*⟩ ≥ 0` for all `x ∈ C`.
///
/// Implementors provide the mapping, an exact projector onto `C`, and a
/// membership predicate. Evaluation writes into caller-owned buffers so the
/// inner loops do not allocate.
pub trait ViProblem: Send + Sync {
    fn dim(&self) -> usize;

    /// `out = F(x)`.
    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    /// Replaces `v` with `P_C(v)`.
    fn project_in_place(&self, v: &mut [f64]);

    /// Whether `x ∈ C` up to the set's tolerance.
    fn contains(&self, x: &[f64]) -> bool;

    /// A known Lipschitz constant of `F`, if any.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }

    /// `‖F(x) − F(y)‖` when it can be computed more cheaply than a full
    /// evaluation of `F(y)`. The step-size search calls this on every trial
    /// and only evaluates `F(y)` for the accepted one. `None` falls back to
    /// evaluating `F(y)`.
    ///
    /// When the true value exceeds `cutoff` an implementation may return any
    /// lower bound that also exceeds `cutoff`.
    fn mapping_difference_norm(&self, _x: &[f64], _y: &[f64], _cutoff: f64) -> Option<f64> {
        None
    }

    /// Objective value for problems that come from an optimization model.
    fn objective(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.project_in_place(&mut out);
        out
    }
}

/// A problem assembled from a closure and a [`ProjectorSpec`].
pub struct FnProblem<F> {
    set: ProjectorSpec,
    mapping: F,
    lipschitz: Option<f64>,
}

impl<F> FnProblem<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(set: ProjectorSpec, mapping: F) -> Self {
        Self { set, mapping, lipschitz: None }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn set(&self) -> &ProjectorSpec {
        &self.set
    }
}

impl<F> ViProblem for FnProblem<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.mapping)(x, out)
    }

    fn project_in_place(&self, v: &mut [f64]) {
        self.set.project_in_place(v)
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.set.contains(x)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// `F(x) = s·x` on `set`; the workhorse of the small hand-checked examples.
pub fn scaled_identity(set: ProjectorSpec, s: f64) -> FnProblem<impl Fn(&[f64], &mut [f64]) + Send + Sync> {
    FnProblem::new(set, move |x: &[f64], out: &mut [f64]| {
        for (o, v) in out.iter_mut().zip(x) {
            *o = s * v;
        }
    })
    .with_lipschitz(s.abs())
}

/// Euclidean norm of the step `x_next − x_prev`.
pub fn residual(x_prev: &[f64], x_next: &[f64]) -> Result<f64> {
    check_dim(x_prev.len(), x_next.len())?;
    Ok(crate::linalg::dist(x_prev, x_next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ViError;

    #[test]
    fn residual_examples() {
        assert_eq!(residual(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(residual(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(residual(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 5.0);
        assert_eq!(residual(&[1.0], &[0.0, 0.0]), Err(ViError::DimensionMismatch { expected: 1, got: 2 }));
    }

    #[test]
    fn fn_problem_delegates() {
        let p = scaled_identity(ProjectorSpec::cube(2, 0.0, 1.0).unwrap(), 2.0);
        assert_eq!(p.eval(&[1.0, -1.0]), vec![2.0, -2.0]);
        assert_eq!(p.project(&[3.0, -1.0]), vec![1.0, 0.0]);
        assert!(p.contains(&[0.5, 0.5]));
        assert_eq!(p.lipschitz_hint(), Some(2.0));
        assert_eq!(p.objective(&[0.0, 0.0]), None);
    }
}
