//! One step function per method: the extragradient baseline, the two
//! projection-and-contraction methods, and their outer-perturbed,
//! bounded-perturbed and inertial variants.
//!
//! All contraction steps share the same skeleton. At a base point `w`
//! (`x^k`, `x^k + λv` or `x^k + αΔ`) the predictor `y = P_C(w − βF(w))` is
//! found by backtracking, then
//!
//! ```text
//! d = (w − y) − β(F(w) − F(y)),   ρ = ⟨w − y, d⟩ / ‖d‖²
//! ```
//!
//! and the update is either `w − γρd` (family I) or `P_C(w − γρβF(y))`
//! (family II).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{check_dim, Result, ViError};
use crate::linalg::{dist, dot, norm, norm_sq};
use crate::linesearch::{backtrack_with, fixed_step, LineSearchOutcome};
use crate::perturbations::validate_remark56;
use crate::problem::ViProblem;
use crate::trace::IterationRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmId {
    #[serde(rename = "eg")]
    Extragradient,
    #[serde(rename = "pc1")]
    Pc1,
    #[serde(rename = "pc2")]
    Pc2,
    #[serde(rename = "pc1-op")]
    Pc1Op,
    #[serde(rename = "pc2-op")]
    Pc2Op,
    #[serde(rename = "pc1-bp")]
    Pc1Bp,
    #[serde(rename = "pc2-bp")]
    Pc2Bp,
    #[serde(rename = "ipc1-1")]
    Ipc1One,
    #[serde(rename = "ipc2-1")]
    Ipc2One,
    #[serde(rename = "ipc1-2")]
    Ipc1Two,
    #[serde(rename = "ipc2-2")]
    Ipc2Two,
    #[serde(rename = "ipc1-r56")]
    Ipc1Remark56,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 12] = [
        AlgorithmId::Extragradient,
        AlgorithmId::Pc1,
        AlgorithmId::Pc2,
        AlgorithmId::Pc1Op,
        AlgorithmId::Pc2Op,
        AlgorithmId::Pc1Bp,
        AlgorithmId::Pc2Bp,
        AlgorithmId::Ipc1One,
        AlgorithmId::Ipc2One,
        AlgorithmId::Ipc1Two,
        AlgorithmId::Ipc2Two,
        AlgorithmId::Ipc1Remark56,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::Extragradient => "eg",
            AlgorithmId::Pc1 => "pc1",
            AlgorithmId::Pc2 => "pc2",
            AlgorithmId::Pc1Op => "pc1-op",
            AlgorithmId::Pc2Op => "pc2-op",
            AlgorithmId::Pc1Bp => "pc1-bp",
            AlgorithmId::Pc2Bp => "pc2-bp",
            AlgorithmId::Ipc1One => "ipc1-1",
            AlgorithmId::Ipc2One => "ipc2-1",
            AlgorithmId::Ipc1Two => "ipc1-2",
            AlgorithmId::Ipc2Two => "ipc2-2",
            AlgorithmId::Ipc1Remark56 => "ipc1-r56",
        }
    }

    /// Display label used in tables ("PC I", "iPC II-2", ...).
    pub fn label(self) -> &'static str {
        match self {
            AlgorithmId::Extragradient => "EG",
            AlgorithmId::Pc1 => "PC I",
            AlgorithmId::Pc2 => "PC II",
            AlgorithmId::Pc1Op => "PC I-OP",
            AlgorithmId::Pc2Op => "PC II-OP",
            AlgorithmId::Pc1Bp => "PC I-BP",
            AlgorithmId::Pc2Bp => "PC II-BP",
            AlgorithmId::Ipc1One => "iPC I-1",
            AlgorithmId::Ipc2One => "iPC II-1",
            AlgorithmId::Ipc1Two => "iPC I-2",
            AlgorithmId::Ipc2Two => "iPC II-2",
            AlgorithmId::Ipc1Remark56 => "iPC I",
        }
    }

    /// Methods whose update is `w − γρd` rather than a projection.
    pub fn is_family_one(self) -> bool {
        matches!(
            self,
            AlgorithmId::Pc1
                | AlgorithmId::Pc1Op
                | AlgorithmId::Pc1Bp
                | AlgorithmId::Ipc1One
                | AlgorithmId::Ipc1Two
                | AlgorithmId::Ipc1Remark56
        )
    }

    /// Methods that perturb the predictor inside the projection and must keep
    /// the perturbation below `μ‖x − y‖`.
    pub fn has_inner_perturbation(self) -> bool {
        matches!(self, AlgorithmId::Pc2Op | AlgorithmId::Ipc2One)
    }

    pub fn is_inertial(self) -> bool {
        matches!(
            self,
            AlgorithmId::Ipc1One
                | AlgorithmId::Ipc2One
                | AlgorithmId::Ipc1Two
                | AlgorithmId::Ipc2Two
                | AlgorithmId::Ipc1Remark56
        )
    }

    /// The unperturbed method a variant reduces to.
    pub fn base(self) -> AlgorithmId {
        match self {
            AlgorithmId::Extragradient => AlgorithmId::Extragradient,
            a if a.is_family_one() => AlgorithmId::Pc1,
            _ => AlgorithmId::Pc2,
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = ViError;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| ViError::Config(format!("unknown algorithm id {s:?}")))
    }
}

/// Iterate `x^k`, the previous iterate (inertial methods) and `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub x: Vec<f64>,
    pub x_prev: Option<Vec<f64>>,
    pub k: usize,
}

impl StepState {
    pub fn new(x0: Vec<f64>) -> Self {
        Self { x: x0, x_prev: None, k: 0 }
    }

    pub fn advance(&self, x_next: Vec<f64>) -> Self {
        Self { x: x_next, x_prev: Some(self.x.clone()), k: self.k + 1 }
    }

    /// `x^k − x^{k−1}`, zero when there is no history.
    pub fn displacement(&self) -> Vec<f64> {
        match &self.x_prev {
            Some(p) => self.x.iter().zip(p).map(|(a, b)| a - b).collect(),
            None => vec![0.0; self.x.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Moved { x: Vec<f64>, record: IterationRecord },
    /// The contraction direction vanished at `point`, which solves the VI.
    Degenerate { point: Vec<f64> },
}

impl StepOutcome {
    pub fn record(&self) -> Option<&IterationRecord> {
        match self {
            StepOutcome::Moved { record, .. } => Some(record),
            StepOutcome::Degenerate { .. } => None,
        }
    }

    pub fn point(&self) -> &[f64] {
        match self {
            StepOutcome::Moved { x, .. } => x,
            StepOutcome::Degenerate { point } => point,
        }
    }
}

/// Shrink attempts before the inner perturbation is dropped.
const MAX_CLIP_ROUNDS: usize = 60;

struct Prediction {
    fw: Vec<f64>,
    ls: LineSearchOutcome,
    /// Inner perturbation actually applied.
    e1: Option<Vec<f64>>,
    clipped: bool,
}

/// Runs the line search (or the fixed step) on `P_C(w − βF(w) [+ e₁])`.
fn predict(
    w: &[f64],
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    inner: Option<(&[f64], f64)>,
) -> Result<Prediction> {
    let mut fw = vec![0.0; w.len()];
    problem.eval_into(w, &mut fw);
    let tol = cfg.degenerate_threshold(norm(w));
    match inner {
        None => {
            let pred = |beta: f64, y: &mut [f64]| {
                for ((yi, wi), fi) in y.iter_mut().zip(w).zip(&fw) {
                    *yi = wi - beta * fi;
                }
                problem.project_in_place(y);
            };
            let ls = match cfg.fixed_beta {
                Some(beta) => fixed_step(w, &fw, problem, beta, tol, pred).0,
                None => backtrack_with(w, &fw, problem, &cfg.line_search(), tol, pred)?.0,
            };
            Ok(Prediction { fw, ls, e1: None, clipped: false })
        }
        Some((e1, mu)) => {
            let e1_norm = norm(e1);
            let pred = |beta: f64, y: &mut [f64]| {
                let mut scale = 1.0;
                let mut clipped = false;
                let fill = |scale: f64, y: &mut [f64]| {
                    for (((yi, wi), fi), ei) in y.iter_mut().zip(w).zip(&fw).zip(e1) {
                        *yi = wi - beta * fi + scale * ei;
                    }
                    problem.project_in_place(y);
                };
                fill(scale, y);
                let mut rounds = 0;
                loop {
                    let gap = dist(w, y);
                    if scale * e1_norm <= mu * gap {
                        break;
                    }
                    clipped = true;
                    rounds += 1;
                    scale = if rounds >= MAX_CLIP_ROUNDS || gap == 0.0 {
                        0.0
                    } else {
                        // Fixed-point iteration on s ↦ μ‖w − y(s)‖/‖e₁‖ with a
                        // small safety margin.
                        (0.999 * mu * gap / e1_norm).min(scale)
                    };
                    fill(scale, y);
                    if scale == 0.0 {
                        break;
                    }
                }
                (scale, clipped)
            };
            let (ls, (scale, clipped)) = match cfg.fixed_beta {
                Some(beta) => fixed_step(w, &fw, problem, beta, tol, pred),
                None => backtrack_with(w, &fw, problem, &cfg.line_search(), tol, pred)?,
            };
            let applied = e1.iter().map(|e| scale * e).collect();
            Ok(Prediction { fw, ls, e1: Some(applied), clipped })
        }
    }
}

struct Contraction {
    d: Vec<f64>,
    d_norm: f64,
    rho: f64,
}

/// `d = (w − y) − β(F(w) − F(y)) [+ e₁]` and `ρ = ⟨w − y, d⟩/‖d‖²`.
fn contraction(w: &[f64], p: &Prediction) -> Contraction {
    let beta = p.ls.beta;
    let mut d: Vec<f64> = w
        .iter()
        .zip(&p.ls.y)
        .zip(p.fw.iter().zip(&p.ls.fy))
        .map(|((wi, yi), (fwi, fyi))| (wi - yi) - beta * (fwi - fyi))
        .collect();
    if let Some(e1) = &p.e1 {
        for (di, ei) in d.iter_mut().zip(e1) {
            *di += ei;
        }
    }
    let dd = norm_sq(&d);
    let gap: Vec<f64> = w.iter().zip(&p.ls.y).map(|(a, b)| a - b).collect();
    let rho = dot(&gap, &d) / dd;
    Contraction { d_norm: dd.sqrt(), d, rho }
}

fn base_record(k: usize, x_old: &[f64], x_new: &[f64], p: &Prediction, c: Option<&Contraction>) -> IterationRecord {
    IterationRecord {
        k,
        x: x_new.to_vec(),
        y: p.ls.y.clone(),
        w: None,
        e1: None,
        beta: p.ls.beta,
        rho: c.map_or(f64::NAN, |c| c.rho),
        alpha: 0.0,
        alpha2: 0.0,
        lambda: 0.0,
        delta_norm: 0.0,
        d_norm: c.map_or(0.0, |c| c.d_norm),
        ls_ratio: p.ls.ratio,
        trials: p.ls.trials,
        clipped: p.clipped,
        residual: dist(x_old, x_new),
        objective: None,
        perturbation_norms: (0.0, 0.0),
    }
}

#[derive(Clone, Copy)]
enum Update {
    /// `w − γρd`
    Contract,
    /// `P_C(w − γρβF(y))`
    Project,
}

struct Inner<'a> {
    e1: &'a [f64],
    mu: f64,
}

/// The shared contraction step at base point `w`; `x` is the current iterate
/// (used for the residual).
fn pc_at(
    state: &StepState,
    w: &[f64],
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    update: Update,
    inner: Option<Inner<'_>>,
    e2: Option<&[f64]>,
) -> Result<Option<(Vec<f64>, IterationRecord)>> {
    let p = predict(w, problem, cfg, inner.as_ref().map(|i| (i.e1, i.mu)))?;
    if p.ls.degenerate {
        return Ok(None);
    }
    let c = contraction(w, &p);
    if !(c.d_norm > cfg.degenerate_threshold(norm(w))) {
        return Ok(None);
    }
    let gamma = cfg.gamma;
    let mut x_new: Vec<f64> = match update {
        Update::Contract => w.iter().zip(&c.d).map(|(wi, di)| wi - gamma * c.rho * di).collect(),
        Update::Project => {
            let s = gamma * c.rho * p.ls.beta;
            w.iter().zip(&p.ls.fy).map(|(wi, fi)| wi - s * fi).collect()
        }
    };
    if let Some(e2) = e2 {
        for (xi, ei) in x_new.iter_mut().zip(e2) {
            *xi += ei;
        }
    }
    if let Update::Project = update {
        problem.project_in_place(&mut x_new);
    }
    let mut rec = base_record(state.k, &state.x, &x_new, &p, Some(&c));
    rec.e1 = p.e1.clone();
    rec.perturbation_norms = (p.e1.as_deref().map_or(0.0, norm), e2.map_or(0.0, norm));
    Ok(Some((x_new, rec)))
}

fn check_state(state: &StepState, problem: &dyn ViProblem) -> Result<()> {
    check_dim(problem.dim(), state.x.len())?;
    if let Some(p) = &state.x_prev {
        check_dim(problem.dim(), p.len())?;
    }
    Ok(())
}

fn finish(res: Option<(Vec<f64>, IterationRecord)>, point: &[f64]) -> StepOutcome {
    match res {
        Some((x, record)) => StepOutcome::Moved { x, record },
        None => StepOutcome::Degenerate { point: point.to_vec() },
    }
}

/// `y = P_C(x − βF(x))`, `x' = P_C(x − βF(y))`.
pub fn extragradient_step(state: &StepState, problem: &dyn ViProblem, cfg: &SolverConfig) -> Result<StepOutcome> {
    check_state(state, problem)?;
    let x = &state.x;
    let p = predict(x, problem, cfg, None)?;
    if p.ls.degenerate {
        return Ok(StepOutcome::Degenerate { point: x.clone() });
    }
    let beta = p.ls.beta;
    let mut x_new: Vec<f64> = x.iter().zip(&p.ls.fy).map(|(xi, fi)| xi - beta * fi).collect();
    problem.project_in_place(&mut x_new);
    let record = base_record(state.k, x, &x_new, &p, None);
    Ok(StepOutcome::Moved { x: x_new, record })
}

pub fn pc1_step(state: &StepState, problem: &dyn ViProblem, cfg: &SolverConfig) -> Result<StepOutcome> {
    check_state(state, problem)?;
    let res = pc_at(state, &state.x, problem, cfg, Update::Contract, None, None)?;
    Ok(finish(res, &state.x))
}

pub fn pc2_step(state: &StepState, problem: &dyn ViProblem, cfg: &SolverConfig) -> Result<StepOutcome> {
    check_state(state, problem)?;
    let res = pc_at(state, &state.x, problem, cfg, Update::Project, None, None)?;
    Ok(finish(res, &state.x))
}

/// Family I with outer errors: the predictor is `P_C(x − βF(x)) + e₁` and the
/// update gains `+ e₂`.
///
/// The direction is built from `x − y + e₁` and `F(y − e₁)`, both of which
/// only involve the feasible point `y − e₁ = P_C(x − βF(x))`; the line search
/// therefore runs on that point and the record stores it as `y`.
pub fn pc1_op_step(
    state: &StepState,
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    e1: &[f64],
    e2: &[f64],
) -> Result<StepOutcome> {
    check_state(state, problem)?;
    check_dim(state.x.len(), e1.len())?;
    check_dim(state.x.len(), e2.len())?;
    let res = pc_at(state, &state.x, problem, cfg, Update::Contract, None, Some(e2))?;
    Ok(finish(
        res.map(|(x, mut rec)| {
            rec.e1 = Some(e1.to_vec());
            rec.perturbation_norms.0 = norm(e1);
            (x, rec)
        }),
        &state.x,
    ))
}

/// Family II with outer errors: `y = P_C(x − βF(x) + e₁)` with `e₁` shrunk
/// until `‖e₁‖ ≤ μ‖x − y‖`, `d` gains `+ e₁` and the update is
/// `P_C(x − γρβF(y) + e₂)`.
pub fn pc2_op_step(
    state: &StepState,
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    e1: &[f64],
    e2: &[f64],
) -> Result<StepOutcome> {
    check_state(state, problem)?;
    check_dim(state.x.len(), e1.len())?;
    check_dim(state.x.len(), e2.len())?;
    let inner = Inner { e1, mu: cfg.mu_effective() };
    let res = pc_at(state, &state.x, problem, cfg, Update::Project, Some(inner), Some(e2))?;
    Ok(finish(res, &state.x))
}

fn shifted(x: &[f64], s: f64, v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(a, b)| a + s * b).collect()
}

fn bp_step(
    state: &StepState,
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    lambda: f64,
    v: &[f64],
    update: Update,
) -> Result<StepOutcome> {
    check_state(state, problem)?;
    check_dim(state.x.len(), v.len())?;
    if !(lambda >= 0.0) {
        return Err(ViError::InvalidInput(format!("lambda must be nonnegative, got {lambda}")));
    }
    let w = shifted(&state.x, lambda, v);
    let res = pc_at(state, &w, problem, cfg, update, None, None)?;
    Ok(finish(
        res.map(|(x, mut rec)| {
            rec.lambda = lambda;
            rec.perturbation_norms.0 = lambda * norm(v);
            rec.w = Some(w.clone());
            (x, rec)
        }),
        &w,
    ))
}

/// Family I at the displaced point `w = x + λv`.
pub fn pc1_bp_step(
    state: &StepState,
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    lambda: f64,
    v: &[f64],
) -> Result<StepOutcome> {
    bp_step(state, problem, cfg, lambda, v, Update::Contract)
}

/// Family II at the displaced point `w = x + λv`.
pub fn pc2_bp_step(
    state: &StepState,
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    lambda: f64,
    v: &[f64],
) -> Result<StepOutcome> {
    bp_step(state, problem, cfg, lambda, v, Update::Project)
}

fn tag_inertia(rec: &mut IterationRecord, a1: f64, a2: f64, delta_norm: f64) {
    rec.alpha = a1;
    rec.alpha2 = a2;
    rec.delta_norm = delta_norm;
    rec.perturbation_norms = (a1 * delta_norm, a2 * delta_norm);
}

/// Family I with `e₁ = α⁽¹⁾Δ`, `e₂ = α⁽²⁾Δ`, `Δ = x^k − x^{k−1}`.
pub fn ipc1_1_step(
    state: &StepState,
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    alpha1: f64,
    alpha2: f64,
) -> Result<StepOutcome> {
    check_state(state, problem)?;
    let delta = state.displacement();
    let dn = norm(&delta);
    let e1: Vec<f64> = delta.iter().map(|d| alpha1 * d).collect();
    let e2: Vec<f64> = delta.iter().map(|d| alpha2 * d).collect();
    let out = pc1_op_step(state, problem, cfg, &e1, &e2)?;
    Ok(match out {
        StepOutcome::Moved { x, mut record } => {
            tag_inertia(&mut record, alpha1, alpha2, dn);
            StepOutcome::Moved { x, record }
        }
        d => d,
    })
}

/// Family II with `e₁ = α⁽¹⁾Δ`, `e₂ = α⁽²⁾Δ`. `α⁽¹⁾` is shrunk when
/// `α⁽¹⁾‖Δ‖ > μ‖x − y‖`; the record carries the weight actually used.
pub fn ipc2_1_step(
    state: &StepState,
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    alpha1: f64,
    alpha2: f64,
) -> Result<StepOutcome> {
    check_state(state, problem)?;
    let delta = state.displacement();
    let dn = norm(&delta);
    let e1: Vec<f64> = delta.iter().map(|d| alpha1 * d).collect();
    let e2: Vec<f64> = delta.iter().map(|d| alpha2 * d).collect();
    let out = pc2_op_step(state, problem, cfg, &e1, &e2)?;
    Ok(match out {
        StepOutcome::Moved { x, mut record } => {
            let a1 = if record.clipped {
                record.e1.as_deref().map_or(0.0, norm) / dn
            } else {
                alpha1
            };
            tag_inertia(&mut record, a1, alpha2, dn);
            StepOutcome::Moved { x, record }
        }
        d => d,
    })
}

fn inertial_bp(
    state: &StepState,
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    alpha: f64,
    update: Update,
) -> Result<StepOutcome> {
    check_state(state, problem)?;
    let delta = state.displacement();
    let dn = norm(&delta);
    let out = bp_step(state, problem, cfg, alpha, &delta, update)?;
    Ok(match out {
        StepOutcome::Moved { x, mut record } => {
            record.lambda = 0.0;
            tag_inertia(&mut record, alpha, 0.0, dn);
            StepOutcome::Moved { x, record }
        }
        d => d,
    })
}

/// Family I at `w = x^k + α(x^k − x^{k−1})`.
pub fn ipc1_2_step(state: &StepState, problem: &dyn ViProblem, cfg: &SolverConfig, alpha: f64) -> Result<StepOutcome> {
    inertial_bp(state, problem, cfg, alpha, Update::Contract)
}

/// Family II at `w = x^k + α(x^k − x^{k−1})`.
pub fn ipc2_2_step(state: &StepState, problem: &dyn ViProblem, cfg: &SolverConfig, alpha: f64) -> Result<StepOutcome> {
    inertial_bp(state, problem, cfg, alpha, Update::Project)
}

/// [`ipc1_2_step`] with constant inertia, after checking that
/// `(α, σ, δ, γ)` is admissible.
pub fn ipc1_remark56_step(
    state: &StepState,
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    alpha_const: f64,
    sigma_r: f64,
    delta_r: f64,
) -> Result<StepOutcome> {
    let gamma_max = validate_remark56(alpha_const, sigma_r, delta_r)?;
    if cfg.gamma > gamma_max {
        return Err(ViError::Config(format!(
            "gamma {} exceeds the admissible cap {gamma_max} for alpha {alpha_const}, sigma {sigma_r}, delta {delta_r}",
            cfg.gamma
        )));
    }
    let alpha = if state.x_prev.is_some() { alpha_const } else { 0.0 };
    ipc1_2_step(state, problem, cfg, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{scaled_identity, FnProblem};
    use crate::projections::ProjectorSpec;

    fn half() -> SolverConfig {
        SolverConfig { fixed_beta: Some(0.5), ..Default::default() }
    }

    fn line() -> impl ViProblem {
        scaled_identity(ProjectorSpec::full_space(1).unwrap(), 1.0)
    }

    fn halfline() -> impl ViProblem {
        FnProblem::new(ProjectorSpec::boxed(vec![0.0], vec![f64::INFINITY]).unwrap(), |x: &[f64], o: &mut [f64]| {
            o[0] = x[0] + 2.0
        })
    }

    fn moved(o: StepOutcome) -> (Vec<f64>, IterationRecord) {
        match o {
            StepOutcome::Moved { x, record } => (x, record),
            d => panic!("expected a move, got {d:?}"),
        }
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-14, "{a} vs {b}");
    }

    #[test]
    fn ids_round_trip() {
        for a in AlgorithmId::ALL {
            assert_eq!(a.as_str().parse::<AlgorithmId>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.as_str()));
        }
        assert!("pc3".parse::<AlgorithmId>().is_err());
    }

    #[test]
    fn extragradient_examples() {
        let s = StepState::new(vec![1.0]);
        let (x, r) = moved(extragradient_step(&s, &line(), &half()).unwrap());
        close(r.y[0], 0.5);
        close(x[0], 0.75);

        let zero = StepState::new(vec![0.0]);
        assert!(matches!(extragradient_step(&zero, &line(), &half()).unwrap(), StepOutcome::Degenerate { .. }));

        let single = scaled_identity(ProjectorSpec::cube(2, 0.0, 0.0).unwrap(), 1.0);
        let (x, _) = moved(extragradient_step(&StepState::new(vec![3.0, -2.0]), &single, &half()).unwrap());
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn pc1_examples() {
        let (x, r) = moved(pc1_step(&StepState::new(vec![1.0]), &line(), &half()).unwrap());
        close(r.y[0], 0.5);
        close(r.d_norm, 0.25);
        close(r.rho, 2.0);
        close(x[0], 0.5);
        assert!(matches!(pc1_step(&StepState::new(vec![0.0]), &line(), &half()).unwrap(), StepOutcome::Degenerate { .. }));

        let c = FnProblem::new(ProjectorSpec::full_space(1).unwrap(), |_x: &[f64], o: &mut [f64]| o[0] = 2.0);
        let (x, r) = moved(pc1_step(&StepState::new(vec![1.0]), &c, &half()).unwrap());
        close(r.rho, 1.0);
        close(x[0], 1.0 - 0.5 * 2.0);
    }

    #[test]
    fn pc2_examples() {
        let (x, _) = moved(pc2_step(&StepState::new(vec![1.0]), &line(), &half()).unwrap());
        close(x[0], 0.5);
        assert!(matches!(pc2_step(&StepState::new(vec![0.0]), &line(), &half()).unwrap(), StepOutcome::Degenerate { .. }));
        // F(x) = x + 2 on [0, ∞): y = 0, ρ = 2, 1 − 2·0.5·2 < 0 is clamped.
        let (x, r) = moved(pc2_step(&StepState::new(vec![1.0]), &halfline(), &half()).unwrap());
        close(r.rho, 2.0);
        assert_eq!(x[0], 0.0);
    }

    #[test]
    fn pc1_op_examples() {
        let s = StepState::new(vec![1.0]);
        let (base, _) = moved(pc1_step(&s, &line(), &half()).unwrap());
        let (x, _) = moved(pc1_op_step(&s, &line(), &half(), &[0.0], &[0.0]).unwrap());
        assert_eq!(x, base);
        let (x, _) = moved(pc1_op_step(&s, &line(), &half(), &[0.0], &[0.1]).unwrap());
        close(x[0], 0.6);
        let (x, r) = moved(pc1_op_step(&s, &line(), &half(), &[1e-12], &[0.0]).unwrap());
        assert!((x[0] - base[0]).abs() < 1e-10);
        assert_eq!(r.e1, Some(vec![1e-12]));
    }

    #[test]
    fn pc2_op_examples() {
        let s = StepState::new(vec![1.0]);
        let (base, _) = moved(pc2_step(&s, &line(), &half()).unwrap());
        let (x, _) = moved(pc2_op_step(&s, &line(), &half(), &[0.0], &[0.0]).unwrap());
        assert_eq!(x, base);
        let (x, _) = moved(pc2_op_step(&s, &line(), &half(), &[0.0], &[0.1]).unwrap());
        close(x[0], 0.6);
    }

    #[test]
    fn pc2_op_clips_inner_perturbation() {
        let s = StepState::new(vec![1.0]);
        let cfg = SolverConfig { mu: Some(0.2), nu: 0.5, ..Default::default() };
        let (_, r) = moved(pc2_op_step(&s, &line(), &cfg, &[10.0], &[0.0]).unwrap());
        assert!(r.clipped);
        let e1 = norm(r.e1.as_deref().unwrap());
        let gap = (1.0 - r.y[0]).abs();
        assert!(e1 <= 0.2 * gap * (1.0 + 1e-12), "{e1} vs {gap}");
        let bound = (1.0 - 0.5 - 0.2) / (1.0 + 0.25 + 0.04 + 0.4 + 0.2);
        assert!(r.rho >= bound - 1e-10);
    }

    #[test]
    fn bp_examples() {
        let s = StepState::new(vec![1.0]);
        let (base1, _) = moved(pc1_step(&s, &line(), &half()).unwrap());
        let (base2, _) = moved(pc2_step(&s, &line(), &half()).unwrap());
        assert_eq!(moved(pc1_bp_step(&s, &line(), &half(), 0.0, &[1.0]).unwrap()).0, base1);
        assert_eq!(moved(pc1_bp_step(&s, &line(), &half(), 0.7, &[0.0]).unwrap()).0, base1);
        assert_eq!(moved(pc2_bp_step(&s, &line(), &half(), 0.0, &[1.0]).unwrap()).0, base2);

        let (x, r) = moved(pc1_bp_step(&s, &line(), &half(), 0.1, &[1.0]).unwrap());
        close(r.y[0], 0.55);
        close(r.d_norm, 0.275);
        close(r.rho, 2.0);
        close(x[0], 0.55);
        let w = r.w.unwrap()[0];
        close(w, 1.1);
        close(x[0], w - r.rho * 0.275);

        let (x, _) = moved(pc2_bp_step(&s, &line(), &half(), 0.1, &[1.0]).unwrap());
        close(x[0], 0.55);
        let (x, _) = moved(pc2_bp_step(&s, &halfline(), &half(), 0.1, &[1.0]).unwrap());
        assert_eq!(x[0], 0.0);
    }

    #[test]
    fn inertial_one_examples() {
        let fresh = StepState::new(vec![1.0]);
        let (base1, _) = moved(pc1_step(&fresh, &line(), &half()).unwrap());
        let (base2, _) = moved(pc2_step(&fresh, &line(), &half()).unwrap());
        let hist = StepState { x: vec![1.0], x_prev: Some(vec![2.0]), k: 1 };
        assert_eq!(moved(ipc1_1_step(&hist, &line(), &half(), 0.0, 0.0).unwrap()).0, base1);
        assert_eq!(moved(ipc2_1_step(&hist, &line(), &half(), 0.0, 0.0).unwrap()).0, base2);
        let still = StepState { x: vec![1.0], x_prev: Some(vec![1.0]), k: 1 };
        assert_eq!(moved(ipc1_1_step(&still, &line(), &half(), 0.4, 0.4).unwrap()).0, base1);

        let (x, r) = moved(ipc1_1_step(&hist, &line(), &half(), 0.0, 0.4).unwrap());
        close(x[0], 0.1);
        assert_eq!(r.alpha2, 0.4);
        let (x, _) = moved(ipc2_1_step(&hist, &line(), &half(), 0.0, 0.4).unwrap());
        close(x[0], 0.1);
    }

    #[test]
    fn inertial_one_guard_shrinks_alpha() {
        let hist = StepState { x: vec![1.0], x_prev: Some(vec![2.0]), k: 1 };
        let cfg = SolverConfig { fixed_beta: Some(0.5), mu: Some(0.2), ..Default::default() };
        let (_, r) = moved(ipc2_1_step(&hist, &line(), &cfg, 0.9, 0.0).unwrap());
        assert!(r.clipped);
        let gap = (1.0 - r.y[0]).abs();
        assert!(r.alpha < 0.9);
        assert!(r.alpha * 1.0 <= 0.2 * gap * (1.0 + 1e-12));
    }

    #[test]
    fn inertial_two_examples() {
        let fresh = StepState::new(vec![1.0]);
        let (base1, _) = moved(pc1_step(&fresh, &line(), &half()).unwrap());
        let (base2, _) = moved(pc2_step(&fresh, &line(), &half()).unwrap());
        let hist = StepState { x: vec![1.0], x_prev: Some(vec![0.9]), k: 1 };
        assert_eq!(moved(ipc1_2_step(&hist, &line(), &half(), 0.0).unwrap()).0, base1);
        assert_eq!(moved(ipc2_2_step(&hist, &line(), &half(), 0.0).unwrap()).0, base2);
        let (x, r) = moved(ipc1_2_step(&hist, &line(), &half(), 0.8).unwrap());
        close(r.w.as_ref().unwrap()[0], 1.08);
        close(x[0], 0.54);
        let (x, _) = moved(ipc2_2_step(&hist, &line(), &half(), 0.8).unwrap());
        close(x[0], 0.54);
        let still = StepState { x: vec![1.0], x_prev: Some(vec![1.0]), k: 1 };
        assert_eq!(moved(ipc1_2_step(&still, &line(), &half(), 0.8).unwrap()).0, base1);
    }

    #[test]
    fn remark56_examples() {
        let fresh = StepState::new(vec![1.0]);
        let (base1, _) = moved(pc1_step(&fresh, &line(), &half()).unwrap());
        let hist = StepState { x: vec![1.0], x_prev: Some(vec![0.9]), k: 2 };
        let cfg = SolverConfig { gamma: 0.5, ..half() };
        let (x, _) = moved(ipc1_remark56_step(&hist, &line(), &cfg, 0.0, 1.0, 1.0).unwrap());
        let (x_ref, _) = moved(pc1_step(&fresh, &line(), &cfg).unwrap());
        assert_eq!(x, x_ref);
        assert_ne!(x, base1);

        let (d, cap) = crate::perturbations::best_remark56_delta(0.79, 0.01).unwrap();
        let ok = SolverConfig { gamma: 0.9 * cap, ..half() };
        moved(ipc1_remark56_step(&hist, &line(), &ok, 0.79, 0.01, d).unwrap());
        let bad = SolverConfig { gamma: 1.0, ..half() };
        assert!(matches!(ipc1_remark56_step(&hist, &line(), &bad, 0.79, 0.01, d), Err(ViError::Config(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let s = StepState::new(vec![1.0, 2.0]);
        assert!(matches!(pc1_step(&s, &line(), &half()), Err(ViError::DimensionMismatch { .. })));
    }
}
