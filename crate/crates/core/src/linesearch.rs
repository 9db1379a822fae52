//! Backtracking selection of the step β.
//!
//! The accepted step is the largest `β = σ·r^m`, `m = 0, 1, 2, …`, for which
//! the predictor `y(β)` satisfies `β‖F(x) − F(y)‖ ≤ ν‖x − y‖`. Every
//! iteration restarts from `σ`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ViError};
use crate::linalg::{dist, norm};
use crate::problem::ViProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    /// First trial step.
    pub sigma: f64,
    /// Backtracking factor in (0, 1).
    pub backtrack: f64,
    /// Condition constant in (0, 1).
    pub nu: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self { sigma: 5.0, backtrack: 0.9, nu: 0.7, max_backtracks: 100 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub beta: f64,
    /// Predictor at the accepted step.
    pub y: Vec<f64>,
    /// `F(y)`.
    pub fy: Vec<f64>,
    /// Number of rejected trials `m`.
    pub trials: usize,
    /// `x − y` vanished: the base point is a fixed point of the predictor.
    pub degenerate: bool,
    /// `β‖F(x) − F(y)‖ / ‖x − y‖` at the accepted step (0 when degenerate).
    pub ratio: f64,
}

/// Backtracks on `y = P_C(x − βF(x))`.
pub fn backtrack_beta(x: &[f64], problem: &dyn ViProblem, params: &LineSearchParams) -> Result<LineSearchOutcome> {
    let fx = problem.eval(x);
    let tol = 1e-14 * (1.0 + norm(x));
    let (out, ()) = backtrack_with(x, &fx, problem, params, tol, |beta, y| {
        for ((yi, xi), fi) in y.iter_mut().zip(x).zip(&fx) {
            *yi = xi - beta * fi;
        }
        problem.project_in_place(y);
    })?;
    Ok(out)
}

/// Generic backtracking driver.
///
/// `predictor(β, y)` writes the trial point into `y` and may return side
/// information (for example an inner-perturbation clip) which is handed back
/// for the accepted trial.
pub(crate) fn backtrack_with<T, P>(
    x: &[f64],
    fx: &[f64],
    problem: &dyn ViProblem,
    params: &LineSearchParams,
    degenerate_tol: f64,
    mut predictor: P,
) -> Result<(LineSearchOutcome, T)>
where
    P: FnMut(f64, &mut [f64]) -> T,
{
    let n = x.len();
    let mut y = vec![0.0; n];
    let mut fy = vec![0.0; n];
    let mut beta = params.sigma;
    for m in 0..=params.max_backtracks {
        let side = predictor(beta, &mut y);
        let gap = dist(x, &y);
        if gap <= degenerate_tol {
            problem.eval_into(&y, &mut fy);
            let out = LineSearchOutcome { beta, y, fy, trials: m, degenerate: true, ratio: 0.0 };
            return Ok((out, side));
        }
        let fast = problem.mapping_difference_norm(x, &y, params.nu * gap / beta);
        let df = match fast {
            Some(df) => df,
            None => {
                problem.eval_into(&y, &mut fy);
                dist(fx, &fy)
            }
        };
        if beta * df <= params.nu * gap {
            if fast.is_some() {
                problem.eval_into(&y, &mut fy);
            }
            let out = LineSearchOutcome { beta, y, fy, trials: m, degenerate: false, ratio: beta * df / gap };
            return Ok((out, side));
        }
        if m < params.max_backtracks {
            beta *= params.backtrack;
        }
    }
    Err(ViError::StepSizeFailure { trials: params.max_backtracks, beta })
}

/// Evaluates the predictor once at a prescribed step.
pub(crate) fn fixed_step<T, P>(
    x: &[f64],
    fx: &[f64],
    problem: &dyn ViProblem,
    beta: f64,
    degenerate_tol: f64,
    mut predictor: P,
) -> (LineSearchOutcome, T)
where
    P: FnMut(f64, &mut [f64]) -> T,
{
    let n = x.len();
    let mut y = vec![0.0; n];
    let side = predictor(beta, &mut y);
    let mut fy = vec![0.0; n];
    problem.eval_into(&y, &mut fy);
    let gap = dist(x, &y);
    let degenerate = gap <= degenerate_tol;
    let ratio = if degenerate { 0.0 } else { beta * dist(fx, &fy) / gap };
    (LineSearchOutcome { beta, y, fy, trials: 0, degenerate, ratio }, side)
}
