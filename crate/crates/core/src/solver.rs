//! The iterate driver: runs one method until the step length drops below
//! `ε`, the contraction direction vanishes, or the iteration cap is hit, and
//! audits the runtime invariants along the way.

use crate::algorithms::{
    extragradient_step, ipc1_1_step, ipc1_2_step, ipc2_1_step, ipc2_2_step, pc1_bp_step, pc1_op_step, pc1_step,
    pc2_bp_step, pc2_op_step, pc2_step, AlgorithmId, StepOutcome, StepState,
};
use crate::config::SolverConfig;
use crate::diagnostics::{rho_lower_bound_pc1, rho_lower_bound_pc2};
use crate::error::{check_dim, Result, ViError};
use crate::linalg::{dist, is_finite, norm};
use crate::perturbations::{bounded_at, outer_at, validate_remark56, PerturbationSchedule};
use crate::problem::ViProblem;
use crate::trace::{AuditResult, ErgodicPoint, IterationRecord, SolveReport, SolveStatus};

/// Absolute slack on the ρ bound.
const RHO_SLACK: f64 = 1e-10;
/// Relative slack on the other runtime audits.
const AUDIT_SLACK: f64 = 1e-12;

/// Runs `algorithm` from `x0`.
pub fn solve(
    problem: &dyn ViProblem,
    algorithm: AlgorithmId,
    config: &SolverConfig,
    schedule: &PerturbationSchedule,
    x0: &[f64],
) -> Result<SolveReport> {
    solve_with(problem, algorithm, config, schedule, x0, |_| {})
}

/// [`solve`] with a callback invoked on every record before points are
/// dropped (when `record_points` is off).
pub fn solve_with<O>(
    problem: &dyn ViProblem,
    algorithm: AlgorithmId,
    config: &SolverConfig,
    schedule: &PerturbationSchedule,
    x0: &[f64],
    mut observe: O,
) -> Result<SolveReport>
where
    O: FnMut(&IterationRecord),
{
    config.validate()?;
    schedule.validate()?;
    check_dim(problem.dim(), x0.len())?;
    if !is_finite(x0) {
        return Err(ViError::InvalidInput("x0 has non-finite entries".into()));
    }
    check_schedule(algorithm, schedule, config)?;

    let mut audits = Audits::new(algorithm, config, schedule);
    let mut state = StepState::new(x0.to_vec());
    let mut trace = Vec::new();
    let mut weighted = vec![0.0; x0.len()];
    let mut upsilon = 0.0;
    let mut status = SolveStatus::MaxIterations;
    let mut x_final = None;

    for k in 0..config.max_iter {
        let out = step(algorithm, &state, problem, config, schedule)?;
        let (x_next, mut rec) = match out {
            StepOutcome::Moved { x, record } => (x, record),
            StepOutcome::Degenerate { point } => {
                status = SolveStatus::DegenerateStep;
                x_final = Some(point);
                break;
            }
        };
        let rho_ok = rec.rho.is_finite() || algorithm == AlgorithmId::Extragradient;
        if !rho_ok || !is_finite(&x_next) || !is_finite(&rec.y) {
            return Err(ViError::NumericalDivergence { k });
        }
        rec.objective = problem.objective(&x_next);
        audits.observe(&state.x, &rec, config);
        let weight = rec.ergodic_weight();
        for (a, yi) in weighted.iter_mut().zip(&rec.y) {
            *a += weight * yi;
        }
        upsilon += weight;
        observe(&rec);
        let converged = rec.residual <= config.epsilon;
        if !config.record_points {
            rec.x = Vec::new();
            rec.y = Vec::new();
            rec.w = None;
            rec.e1 = None;
        }
        trace.push(rec);
        state = state.advance(x_next);
        if converged {
            status = SolveStatus::Converged;
            break;
        }
    }

    let audits = audits.finish();
    if config.strict_audits && audits.iter().any(|a| !a.passed) {
        status = SolveStatus::AuditFailure;
    }
    let ergodic = (upsilon > 0.0).then(|| ErgodicPoint { y: weighted.iter().map(|v| v / upsilon).collect(), upsilon });
    Ok(SolveReport {
        algorithm,
        status,
        x0: x0.to_vec(),
        x_final: x_final.unwrap_or(state.x),
        trace,
        ergodic,
        audits,
        gamma: config.gamma,
    })
}

fn check_schedule(alg: AlgorithmId, schedule: &PerturbationSchedule, config: &SolverConfig) -> Result<()> {
    use AlgorithmId as A;
    use PerturbationSchedule as S;
    let ok = match (alg, schedule) {
        (_, S::None) => true,
        (A::Pc1Op | A::Pc2Op, S::Outer(_)) => true,
        (A::Pc1Bp | A::Pc2Bp, S::Bounded(_)) => true,
        (A::Ipc1One | A::Ipc2One | A::Ipc1Two | A::Ipc2Two, S::Inertial(_)) => true,
        (A::Ipc1Remark56, S::Remark56(p)) => {
            let cap = validate_remark56(p.alpha, p.sigma, p.delta)?;
            if config.gamma > cap {
                return Err(ViError::Config(format!(
                    "gamma {} exceeds the admissible cap {cap} for alpha {}, sigma {}, delta {}",
                    config.gamma, p.alpha, p.sigma, p.delta
                )));
            }
            true
        }
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(ViError::Config(format!("algorithm {alg} does not accept a {} schedule", schedule.kind_name())))
    }
}

fn step(
    alg: AlgorithmId,
    state: &StepState,
    problem: &dyn ViProblem,
    cfg: &SolverConfig,
    schedule: &PerturbationSchedule,
) -> Result<StepOutcome> {
    use AlgorithmId as A;
    let k = state.k;
    let delta_norm = || state.x_prev.as_ref().map_or(0.0, |p| dist(&state.x, p));
    match alg {
        A::Extragradient => extragradient_step(state, problem, cfg),
        A::Pc1 => pc1_step(state, problem, cfg),
        A::Pc2 => pc2_step(state, problem, cfg),
        A::Pc1Op | A::Pc2Op => {
            let (e1, e2) = outer_at(schedule, k, &state.x)?;
            if alg == A::Pc1Op {
                pc1_op_step(state, problem, cfg, &e1, &e2)
            } else {
                pc2_op_step(state, problem, cfg, &e1, &e2)
            }
        }
        A::Pc1Bp | A::Pc2Bp => {
            let (lambda, v) = bounded_at(schedule, k, &state.x)?;
            if alg == A::Pc1Bp {
                pc1_bp_step(state, problem, cfg, lambda, &v)
            } else {
                pc2_bp_step(state, problem, cfg, lambda, &v)
            }
        }
        A::Ipc1One | A::Ipc2One | A::Ipc1Two | A::Ipc2Two => {
            let (a1, a2) = match schedule {
                PerturbationSchedule::Inertial(s) => s.weights(k, delta_norm()),
                _ => (0.0, 0.0),
            };
            match alg {
                A::Ipc1One => ipc1_1_step(state, problem, cfg, a1, a2),
                A::Ipc2One => ipc2_1_step(state, problem, cfg, a1, a2),
                A::Ipc1Two => ipc1_2_step(state, problem, cfg, a1),
                _ => ipc2_2_step(state, problem, cfg, a1),
            }
        }
        A::Ipc1Remark56 => {
            // Admissibility was checked once up front.
            let alpha = match schedule {
                PerturbationSchedule::Remark56(p) => p.alpha_at(k),
                _ => 0.0,
            };
            ipc1_2_step(state, problem, cfg, alpha)
        }
    }
}

/// Running maxima of the runtime audits.
struct Audits {
    rho: Option<(f64, f64)>,
    ratio: Option<(f64, f64)>,
    inner: Option<(f64, f64)>,
    budget: Option<(f64, f64, f64, f64)>,
    inertial: Option<(f64, f64, f64, f64)>,
}

impl Audits {
    fn new(alg: AlgorithmId, cfg: &SolverConfig, schedule: &PerturbationSchedule) -> Self {
        let line_search = cfg.fixed_beta.is_none() && alg != AlgorithmId::Extragradient;
        let rho_bound = if alg.has_inner_perturbation() {
            rho_lower_bound_pc2(cfg.nu, cfg.mu_effective())
        } else {
            rho_lower_bound_pc1(cfg.nu)
        }
        .unwrap_or(0.0);
        let budget = match schedule {
            PerturbationSchedule::Outer(o) => Some((o.budget_e1, o.budget_e2, 0.0, 0.0)),
            PerturbationSchedule::Bounded(b) => Some((b.lambda.budget() * b.v_norm, 0.0, 0.0, 0.0)),
            _ => None,
        };
        let inertial = match schedule {
            PerturbationSchedule::Inertial(s) if s.online => {
                let series = 1.0 + 1.0 / s.xi;
                let (a1, a2) = s.alpha_targets;
                let z1 = s.zeta.unwrap_or(a1);
                let z2 = s.zeta.unwrap_or(a2);
                Some((z1 * series, z2 * series, 0.0, 0.0))
            }
            _ => None,
        };
        Self {
            rho: line_search.then_some((rho_bound, f64::NEG_INFINITY)),
            ratio: (cfg.fixed_beta.is_none()).then_some((cfg.nu, f64::NEG_INFINITY)),
            inner: alg.has_inner_perturbation().then_some((cfg.mu_effective(), f64::NEG_INFINITY)),
            budget,
            inertial,
        }
    }

    fn observe(&mut self, x: &[f64], rec: &IterationRecord, _cfg: &SolverConfig) {
        if let Some((bound, worst)) = &mut self.rho {
            *worst = worst.max(*bound - rec.rho);
        }
        if let Some((nu, worst)) = &mut self.ratio {
            *worst = worst.max(rec.ls_ratio - *nu);
        }
        if let Some((mu, worst)) = &mut self.inner {
            let base = rec.w.as_deref().unwrap_or(x);
            let gap = dist(base, &rec.y);
            let e1 = rec.e1.as_deref().map_or(0.0, norm);
            *worst = worst.max((e1 - *mu * gap) / (1.0 + gap));
        }
        if let Some((_, _, s1, s2)) = &mut self.budget {
            *s1 += rec.perturbation_norms.0;
            *s2 += rec.perturbation_norms.1;
        }
        if let Some((_, _, s1, s2)) = &mut self.inertial {
            *s1 += rec.perturbation_norms.0;
            *s2 += rec.perturbation_norms.1;
        }
    }

    fn finish(self) -> Vec<AuditResult> {
        let mut out = Vec::new();
        let mut push = |name: &str, worst: f64, slack: f64| {
            let worst = if worst == f64::NEG_INFINITY { 0.0 } else { worst };
            out.push(AuditResult { name: name.to_string(), passed: worst <= slack, worst_violation: worst });
        };
        if let Some((_, w)) = self.rho {
            push("rho_lower_bound", w, RHO_SLACK);
        }
        if let Some((_, w)) = self.ratio {
            push("step_condition", w, AUDIT_SLACK);
        }
        if let Some((_, w)) = self.inner {
            push("inner_perturbation_bound", w, AUDIT_SLACK);
        }
        if let Some((b1, b2, s1, s2)) = self.budget {
            let w = (s1 - b1).max(s2 - b2);
            push("perturbation_budget", w, AUDIT_SLACK * (1.0 + b1.max(b2)));
        }
        if let Some((c1, c2, s1, s2)) = self.inertial {
            let w = (s1 - c1).max(s2 - c2);
            push("inertial_summability", w, AUDIT_SLACK * (1.0 + c1.max(c2)));
        }
        out
    }
}
