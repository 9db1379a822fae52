//! Per-iteration records and the final report of a solve.

use serde::{Deserialize, Serialize};

use crate::algorithms::AlgorithmId;

/// Snapshot of one completed step `x^k → x^{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// The new iterate `x^{k+1}` (empty when points are not recorded).
    pub x: Vec<f64>,
    /// The feasible predictor (`y^k`, or `y^k − e₁^k` for the first
    /// outer-perturbed method). Empty when points are not recorded.
    pub y: Vec<f64>,
    /// Base point of the contraction when it differs from `x^k`
    /// (`x^k + λ_k v^k` or `x^k + α_k(x^k − x^{k−1})`).
    pub w: Option<Vec<f64>>,
    /// Outer perturbation added to the predictor, kept for the corrected
    /// rate bound.
    pub e1: Option<Vec<f64>>,
    pub beta: f64,
    pub rho: f64,
    /// Inertial weight (α, α⁽¹⁾ or 0).
    pub alpha: f64,
    /// Second inertial weight α⁽²⁾ (0 when unused).
    pub alpha2: f64,
    /// λ_k for bounded perturbations (0 otherwise).
    pub lambda: f64,
    /// `‖x^k − x^{k−1}‖` seen by the inertial rule (0 when unused).
    pub delta_norm: f64,
    /// `‖d‖` of the contraction direction.
    pub d_norm: f64,
    /// `β‖F(base) − F(y)‖ / ‖base − y‖` at the accepted step.
    pub ls_ratio: f64,
    /// Rejected line-search trials.
    pub trials: usize,
    /// The inner perturbation was shrunk to respect its bound.
    pub clipped: bool,
    /// `‖x^{k+1} − x^k‖`
    pub residual: f64,
    pub objective: Option<f64>,
    /// (‖e₁‖ or λ‖v‖ or α‖Δ‖, ‖e₂‖ or α⁽²⁾‖Δ‖)
    pub perturbation_norms: (f64, f64),
}

impl IterationRecord {
    /// Weight of `y` in the ergodic average: `ρβ`, or `β` for methods
    /// without a contraction factor.
    pub fn ergodic_weight(&self) -> f64 {
        if self.rho.is_finite() {
            self.rho * self.beta
        } else {
            self.beta
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// The contraction direction vanished: the current point solves the VI.
    DegenerateStep,
    AuditFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::DegenerateStep => "degenerate_step",
            SolveStatus::AuditFailure => "audit_failure",
        }
    }

    /// Converged by the residual rule or by reaching an exact fixed point.
    pub fn is_converged(self) -> bool {
        matches!(self, SolveStatus::Converged | SolveStatus::DegenerateStep)
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one runtime audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub name: String,
    pub passed: bool,
    /// Largest violation observed; 0 or negative when the audit has slack.
    pub worst_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicPoint {
    pub y: Vec<f64>,
    pub upsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: AlgorithmId,
    pub status: SolveStatus,
    pub x0: Vec<f64>,
    pub x_final: Vec<f64>,
    pub trace: Vec<IterationRecord>,
    pub ergodic: Option<ErgodicPoint>,
    pub audits: Vec<AuditResult>,
    /// γ used by the steps.
    pub gamma: f64,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.trace.last().map(|r| r.residual)
    }

    pub fn min_rho(&self) -> Option<f64> {
        self.trace.iter().map(|r| r.rho).filter(|r| r.is_finite()).reduce(f64::min)
    }

    pub fn audits_passed(&self) -> bool {
        self.audits.iter().all(|a| a.passed)
    }

    /// `x^k` for `k = 0..=len` (requires recorded points).
    pub fn iterate(&self, k: usize) -> &[f64] {
        if k == 0 {
            &self.x0
        } else {
            &self.trace[k - 1].x
        }
    }
}
