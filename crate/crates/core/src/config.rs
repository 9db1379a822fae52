use serde::{Deserialize, Serialize};

use crate::error::{Result, ViError};
use crate::linesearch::LineSearchParams;

/// Parameters shared by every solver.
///
/// Defaults follow the sparse-recovery experiments: initial trial step 5,
/// backtracking factor 0.9, step condition constant 0.7 and relaxation 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Relaxation factor, in (0, 2).
    pub gamma: f64,
    /// Step-size condition constant, in (0, 1).
    pub nu: f64,
    /// Bound on inner perturbations of the projected variants, relative to
    /// `‖x − y‖`. `None` selects `0.99·min(ν, 1 − ν)`.
    pub mu: Option<f64>,
    /// First trial step of the backtracking search.
    pub sigma_ls: f64,
    /// Backtracking factor, in (0, 1).
    pub rho_ls: f64,
    pub max_backtracks: usize,
    /// Stop once `‖x^{k+1} − x^k‖ ≤ epsilon`.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Absolute threshold below which the contraction direction counts as
    /// zero. `None` means `1e-14·(1 + ‖x‖)`.
    pub degenerate_tol: Option<f64>,
    /// Skip the line search and use this step everywhere.
    pub fixed_beta: Option<f64>,
    /// Keep `x` and `y` in every trace record. Needed by the post-hoc audits.
    pub record_points: bool,
    /// Mark the report as an audit failure when a runtime audit fails.
    pub strict_audits: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            nu: 0.7,
            mu: None,
            sigma_ls: 5.0,
            rho_ls: 0.9,
            max_backtracks: 100,
            epsilon: 1e-6,
            max_iter: 100_000,
            degenerate_tol: None,
            fixed_beta: None,
            record_points: true,
            strict_audits: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ViError::Config(msg));
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return bad(format!("gamma must lie in (0, 2), got {}", self.gamma));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return bad(format!("nu must lie in (0, 1), got {}", self.nu));
        }
        if !(self.rho_ls > 0.0 && self.rho_ls < 1.0) {
            return bad(format!("backtracking factor must lie in (0, 1), got {}", self.rho_ls));
        }
        if !(self.sigma_ls > 0.0 && self.sigma_ls.is_finite()) {
            return bad(format!("initial trial step must be positive, got {}", self.sigma_ls));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if self.max_backtracks == 0 {
            return bad("max_backtracks must be positive".into());
        }
        if let Some(mu) = self.mu {
            if !(mu >= 0.0 && mu < 1.0 - self.nu) {
                return bad(format!("mu must lie in [0, 1 - nu) = [0, {}), got {mu}", 1.0 - self.nu));
            }
        }
        if let Some(tol) = self.degenerate_tol {
            if !(tol > 0.0) {
                return bad(format!("degenerate_tol must be positive, got {tol}"));
            }
        }
        if let Some(b) = self.fixed_beta {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("fixed beta must be positive, got {b}"));
            }
        }
        Ok(())
    }

    /// The inner-perturbation bound actually used.
    pub fn mu_effective(&self) -> f64 {
        self.mu.unwrap_or_else(|| 0.99 * self.nu.min(1.0 - self.nu))
    }

    pub fn degenerate_threshold(&self, x_norm: f64) -> f64 {
        self.degenerate_tol.unwrap_or(1e-14 * (1.0 + x_norm))
    }

    pub fn line_search(&self) -> LineSearchParams {
        LineSearchParams {
            sigma: self.sigma_ls,
            backtrack: self.rho_ls,
            nu: self.nu,
            max_backtracks: self.max_backtracks,
        }
    }
}
