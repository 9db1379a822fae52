//! Post-hoc certificates computed from solve traces: ρ lower bounds, the
//! ergodic point, the `O(1/t)` dual-gap bound, and Fejér-type audits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, ViError};
use crate::linalg::{dist, dist_sq, dot, norm, norm_sq};
use crate::problem::ViProblem;
use crate::trace::{ErgodicPoint, IterationRecord, SolveReport};

/// Tolerance of the certificate comparison.
pub const CERTIFICATE_TOL: f64 = 1e-8;
/// Relative tolerance of the Fejér audits, scaled by `1 + ‖x^k‖²`.
pub const FEJER_TOL: f64 = 1e-9;

/// `(1 − ν)/(1 + ν²)`, the floor of ρ for the unperturbed contraction.
pub fn rho_lower_bound_pc1(nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(ViError::InvalidInput(format!("nu must lie in (0, 1), got {nu}")));
    }
    Ok((1.0 - nu) / (1.0 + nu * nu))
}

/// `(1 − ν − μ)/(1 + ν² + μ² + 2μ + 2νμ)`, the floor of ρ when the predictor
/// carries an inner perturbation bounded by `μ‖x − y‖`.
pub fn rho_lower_bound_pc2(nu: f64, mu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(ViError::InvalidInput(format!("nu must lie in (0, 1), got {nu}")));
    }
    if !(mu >= 0.0 && mu < 1.0 - nu) {
        return Err(ViError::InvalidInput(format!("mu must lie in [0, 1 - nu), got {mu}")));
    }
    Ok((1.0 - nu - mu) / (1.0 + nu * nu + mu * mu + 2.0 * mu + 2.0 * nu * mu))
}

fn require_points(trace: &[IterationRecord]) -> Result<()> {
    if trace.iter().any(|r| r.x.is_empty() || r.y.is_empty()) {
        return Err(ViError::InvalidInput("trace was recorded without points".into()));
    }
    Ok(())
}

/// `y_t = Σ ρ_kβ_k y^k / Υ_t` with `Υ_t = Σ ρ_kβ_k`.
pub fn ergodic_point(trace: &[IterationRecord]) -> Result<ErgodicPoint> {
    let first = trace.first().ok_or_else(|| ViError::InvalidInput("empty trace".into()))?;
    require_points(trace)?;
    let mut y = vec![0.0; first.y.len()];
    let mut upsilon = 0.0;
    for r in trace {
        let w = r.ergodic_weight();
        if !w.is_finite() {
            return Err(ViError::InvalidInput(format!("non-finite weight at k = {}", r.k)));
        }
        for (a, b) in y.iter_mut().zip(&r.y) {
            *a += w * b;
        }
        upsilon += w;
    }
    if !(upsilon > 0.0) {
        return Err(ViError::InvalidInput("ergodic weights sum to zero".into()));
    }
    y.iter_mut().for_each(|v| *v /= upsilon);
    Ok(ErgodicPoint { y, upsilon })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub x: Vec<f64>,
    /// `⟨F(x), y_t − x⟩`
    pub lhs: f64,
    /// `(‖x − x⁰‖² + 2M)/(2γΥ_t)`
    pub rhs: f64,
    /// `M` for this sample.
    pub m_bound: f64,
    /// Bound on the uncorrected average of the perturbed predictors,
    /// `(lhs, rhs)` with the extra `‖F(x)‖Σρβ‖e₁‖/Υ_t` term. Present when the
    /// trace carries inner errors of the first family.
    pub corrected: Option<(f64, f64)>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub t: usize,
    pub y_t: Vec<f64>,
    pub upsilon: f64,
    /// The sup in `M` only covers the recorded iterates.
    pub truncated: bool,
    pub checks: Vec<CertificateCheck>,
}

impl RateCertificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Evaluates the ergodic dual-gap bound over records `0..=t` at each sample.
///
/// `M = sup_k ‖x^k − x‖ · Σ_k (‖e₂^k‖ + ‖w^k − x^k‖)`, computed exactly per
/// sample from the stored iterates; both terms vanish for unperturbed runs.
pub fn rate_certificate(
    report: &SolveReport,
    t: usize,
    samples: &[Vec<f64>],
    problem: &dyn ViProblem,
) -> Result<RateCertificate> {
    if t >= report.trace.len() {
        return Err(ViError::InvalidInput(format!("t = {t} beyond a trace of length {}", report.trace.len())));
    }
    let trace = &report.trace[..=t];
    let erg = ergodic_point(trace)?;
    let gamma = report.gamma;

    let mut displacement = 0.0;
    let mut e1_mass = 0.0;
    let mut e1_avg = vec![0.0; erg.y.len()];
    let family_one = report.algorithm.is_family_one();
    for (k, r) in trace.iter().enumerate() {
        displacement += r.perturbation_norms.1;
        if let Some(w) = &r.w {
            displacement += dist(w, report.iterate(k));
        }
        if let (true, Some(e1)) = (family_one, &r.e1) {
            let wgt = r.ergodic_weight();
            e1_mass += wgt * norm(e1);
            for (a, b) in e1_avg.iter_mut().zip(e1) {
                *a += wgt * b;
            }
        }
    }
    let corrected_y: Option<Vec<f64>> = (e1_mass > 0.0)
        .then(|| erg.y.iter().zip(&e1_avg).map(|(y, e)| y + e / erg.upsilon).collect());

    let mut checks = Vec::with_capacity(samples.len());
    for x in samples {
        check_dim(problem.dim(), x.len())?;
        if !problem.contains(x) {
            return Err(ViError::InvalidInput("certificate sample lies outside the feasible set".into()));
        }
        let fx = problem.eval(x);
        let sup = (0..=t + 1).map(|k| dist(report.iterate(k), x)).fold(0.0, f64::max);
        let m_bound = sup * displacement;
        let gap: Vec<f64> = erg.y.iter().zip(x).map(|(a, b)| a - b).collect();
        let lhs = dot(&fx, &gap);
        let rhs = (dist_sq(x, &report.x0) + 2.0 * m_bound) / (2.0 * gamma * erg.upsilon);
        let mut passed = lhs <= rhs + CERTIFICATE_TOL;
        let corrected = corrected_y.as_ref().map(|yc| {
            let g: Vec<f64> = yc.iter().zip(x).map(|(a, b)| a - b).collect();
            let l = dot(&fx, &g);
            let r = rhs + norm(&fx) * e1_mass / erg.upsilon;
            (l, r)
        });
        if let Some((l, r)) = corrected {
            passed &= l <= r + CERTIFICATE_TOL;
        }
        checks.push(CertificateCheck { x: x.clone(), lhs, rhs, m_bound, corrected, passed });
    }
    Ok(RateCertificate {
        t,
        y_t: erg.y,
        upsilon: erg.upsilon,
        truncated: !report.status.is_converged() || t + 1 < report.trace.len(),
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FejerViolation {
    pub k: usize,
    /// Right side minus left side; negative means the inequality failed.
    pub slack: f64,
}

fn audit<G>(report: &SolveReport, mut slack: G) -> Result<Vec<FejerViolation>>
where
    G: FnMut(usize, &IterationRecord) -> f64,
{
    require_points(&report.trace)?;
    let mut out = Vec::new();
    for (k, r) in report.trace.iter().enumerate() {
        let s = slack(k, r);
        let tol = FEJER_TOL * (1.0 + norm_sq(report.iterate(k)));
        if !(s >= -tol) {
            out.push(FejerViolation { k, slack: s });
        }
    }
    Ok(out)
}

/// Checks `‖x^{k+1} − x*‖² ≤ ‖w^k − x*‖² − ((2 − γ)/γ)‖x^{k+1} − w^k‖²` at
/// every step, where `w^k` is the base point of the contraction (`x^k` for
/// unperturbed runs).
pub fn fejer_audit(report: &SolveReport, x_star: &[f64]) -> Result<Vec<FejerViolation>> {
    let gamma = report.gamma;
    let c = (2.0 - gamma) / gamma;
    audit(report, |k, r| {
        let w = r.w.as_deref().unwrap_or(report.iterate(k));
        dist_sq(w, x_star) - c * dist_sq(&r.x, w) - dist_sq(&r.x, x_star)
    })
}

/// Checks `‖x^{k+1} − x*‖² ≤ ‖w^k − x*‖² − γ(2 − γ)ρ_k²‖d_k‖²`, the descent
/// available to the projected update.
pub fn fejer_audit_projected(report: &SolveReport, x_star: &[f64]) -> Result<Vec<FejerViolation>> {
    let gamma = report.gamma;
    audit(report, |k, r| {
        let w = r.w.as_deref().unwrap_or(report.iterate(k));
        let gain = gamma * (2.0 - gamma) * (r.rho * r.d_norm).powi(2);
        dist_sq(w, x_star) - gain - dist_sq(&r.x, x_star)
    })
}

/// Quasi-Fejér inequality under additive update errors `e₂`:
/// `(1 + ‖e₂‖)‖x^k − x*‖² + ((2 + γ)/γ)‖e₂‖` for the contraction update and
/// `(1 + 2‖e₂‖)‖x^k − x*‖² + 2‖e₂‖` for the projected one.
pub fn quasi_fejer_audit(report: &SolveReport, x_star: &[f64]) -> Result<Vec<FejerViolation>> {
    let gamma = report.gamma;
    let family_one = report.algorithm.is_family_one();
    audit(report, |k, r| {
        let e2 = r.perturbation_norms.1;
        let prev = dist_sq(report.iterate(k), x_star);
        let bound = if family_one {
            (1.0 + e2) * prev + (2.0 + gamma) / gamma * e2
        } else {
            (1.0 + 2.0 * e2) * prev + 2.0 * e2
        };
        bound - dist_sq(&r.x, x_star)
    })
}

/// Smallest `⟨F(x) − F(y), x − y⟩` over `n_pairs` seeded standard-normal
/// pairs scaled by `scale`. Negative values exhibit non-monotonicity.
pub fn monotonicity_probe(problem: &dyn ViProblem, n_pairs: usize, scale: f64, seed: u64) -> f64 {
    let n = problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect()
    };
    let mut worst = f64::INFINITY;
    for _ in 0..n_pairs {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let fx = problem.eval(&x);
        let fy = problem.eval(&y);
        let df: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        worst = worst.min(dot(&df, &dx));
    }
    worst
}
