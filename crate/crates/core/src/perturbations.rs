//! Perturbation schedules: summable outer errors, bounded displacements
//! `λ_k v^k`, and inertial weights.
//!
//! Every generator is a pure function of `(seed, k)`, so two solves with the
//! same schedule see identical streams no matter how they are interleaved.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ViError};
use crate::linalg::norm;

/// Weight of term `k` in the Basel series, normalized to sum to one.
pub fn basel_weight(k: usize) -> f64 {
    let kk = (k + 1) as f64;
    6.0 / (PI * PI * kk * kk)
}

/// Unit vector drawn uniformly from the sphere, keyed by `(seed, stream)`.
pub fn sphere_direction(seed: u64, stream: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&v);
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Outer errors `e₁, e₂` with `‖e_i^k‖ = budget_i·6/(π²(k+1)²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OuterSchedule {
    pub budget_e1: f64,
    pub budget_e2: f64,
    pub seed: u64,
}

impl Default for OuterSchedule {
    fn default() -> Self {
        Self { budget_e1: 1.0, budget_e2: 1.0, seed: 0 }
    }
}

/// Summable step lengths for bounded perturbations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaSequence {
    /// `λ_k = c/(k+1)²`
    InverseSquare { c: f64 },
    /// `λ_k = c·r^k`
    Geometric { c: f64, ratio: f64 },
}

impl LambdaSequence {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            LambdaSequence::InverseSquare { c } => {
                let kk = (k + 1) as f64;
                c / (kk * kk)
            }
            LambdaSequence::Geometric { c, ratio } => c * ratio.powi(k.min(i32::MAX as usize) as i32),
        }
    }

    /// `Σ_k λ_k`
    pub fn budget(&self) -> f64 {
        match *self {
            LambdaSequence::InverseSquare { c } => c * PI * PI / 6.0,
            LambdaSequence::Geometric { c, ratio } => c / (1.0 - ratio),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LambdaSequence::InverseSquare { c } if c >= 0.0 && c.is_finite() => Ok(()),
            LambdaSequence::Geometric { c, ratio } if c >= 0.0 && c.is_finite() && (0.0..1.0).contains(&ratio) => {
                Ok(())
            }
            _ => Err(ViError::Config(format!("lambda sequence {self:?} is not summable and nonnegative"))),
        }
    }
}

/// User-supplied direction generator `(k, x^k) ↦ v^k`, e.g. a descent step of a
/// secondary objective. Its output is rescaled to norm at most `v_norm`.
#[derive(Clone)]
pub struct DirectionFn(pub Arc<dyn Fn(usize, &[f64]) -> Vec<f64> + Send + Sync>);

impl fmt::Debug for DirectionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DirectionFn(..)")
    }
}

impl PartialEq for DirectionFn {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// Bounded perturbations `λ_k v^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedSchedule {
    pub lambda: LambdaSequence,
    /// Norm of the seeded directions, and the cap applied to custom ones.
    pub v_norm: f64,
    pub seed: u64,
    #[serde(skip)]
    pub direction: Option<DirectionFn>,
}

impl Default for BoundedSchedule {
    fn default() -> Self {
        Self { lambda: LambdaSequence::InverseSquare { c: 1.0 }, v_norm: 1.0, seed: 0, direction: None }
    }
}

/// Inertial weights. The online rule is
/// `α_k^{(i)} = min{α^{(i)}, ζ^{(i)}/(k^{1+ξ}‖x^k − x^{k−1}‖)}`; with
/// `online` off the targets are used as they are from `k = 1` on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InertialSchedule {
    /// `(α⁽¹⁾, α⁽²⁾)`; the single-weight methods use the first entry.
    pub alpha_targets: (f64, f64),
    /// `ζ⁽ⁱ⁾`; `None` takes `ζ⁽ⁱ⁾ = α⁽ⁱ⁾`.
    pub zeta: Option<f64>,
    pub xi: f64,
    #[serde(default = "online_default")]
    pub online: bool,
}

fn online_default() -> bool {
    true
}

impl InertialSchedule {
    pub fn new(alpha1: f64, alpha2: f64) -> Self {
        Self { alpha_targets: (alpha1, alpha2), zeta: None, xi: 1.0, online: true }
    }

    pub fn single(alpha: f64) -> Self {
        Self::new(alpha, 0.0)
    }

    /// A constant weight with no displacement cap.
    pub fn constant(alpha: f64) -> Self {
        Self { online: false, ..Self::single(alpha) }
    }

    /// Weights `(α⁽¹⁾_k, α⁽²⁾_k)` at iteration `k` for displacement norm `delta_norm`.
    pub fn weights(&self, k: usize, delta_norm: f64) -> (f64, f64) {
        if k == 0 {
            return (0.0, 0.0);
        }
        let (a1, a2) = self.alpha_targets;
        if !self.online {
            return (a1, a2);
        }
        let w = |a: f64| inertial_alpha(k, a, delta_norm, self.zeta.unwrap_or(a), self.xi);
        (w(a1), w(a2))
    }
}

/// Constant inertia with the admissible triple of the nondecreasing regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Remark56Params {
    pub alpha: f64,
    pub sigma: f64,
    pub delta: f64,
}

impl Remark56Params {
    /// `α_k`: zero for the first two steps (no history, then `α_1 = 0`),
    /// constant afterwards.
    pub fn alpha_at(&self, k: usize) -> f64 {
        if k < 2 {
            0.0
        } else {
            self.alpha
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationSchedule {
    #[default]
    None,
    Outer(OuterSchedule),
    Bounded(BoundedSchedule),
    Inertial(InertialSchedule),
    Remark56(Remark56Params),
}

impl PerturbationSchedule {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PerturbationSchedule::None => "none",
            PerturbationSchedule::Outer(_) => "outer",
            PerturbationSchedule::Bounded(_) => "bounded",
            PerturbationSchedule::Inertial(_) => "inertial",
            PerturbationSchedule::Remark56(_) => "remark56",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PerturbationSchedule::None => Ok(()),
            PerturbationSchedule::Outer(o) => {
                if o.budget_e1 >= 0.0 && o.budget_e2 >= 0.0 && o.budget_e1.is_finite() && o.budget_e2.is_finite() {
                    Ok(())
                } else {
                    Err(ViError::Config("outer budgets must be finite and nonnegative".into()))
                }
            }
            PerturbationSchedule::Bounded(b) => {
                b.lambda.validate()?;
                if b.v_norm >= 0.0 && b.v_norm.is_finite() {
                    Ok(())
                } else {
                    Err(ViError::Config("v_norm must be finite and nonnegative".into()))
                }
            }
            PerturbationSchedule::Inertial(s) => {
                let (a1, a2) = s.alpha_targets;
                if !((0.0..=1.0).contains(&a1) && (0.0..=1.0).contains(&a2)) {
                    return Err(ViError::Config(format!("inertial targets must lie in [0, 1], got ({a1}, {a2})")));
                }
                if !(s.xi > 0.0) {
                    return Err(ViError::Config(format!("xi must be positive, got {}", s.xi)));
                }
                if let Some(z) = s.zeta {
                    if !(z > 0.0) {
                        return Err(ViError::Config(format!("zeta must be positive, got {z}")));
                    }
                }
                Ok(())
            }
            PerturbationSchedule::Remark56(p) => validate_remark56(p.alpha, p.sigma, p.delta).map(|_| ()),
        }
    }
}

/// Outer errors `(e₁^k, e₂^k)` at iterate `x`.
///
/// `None` yields zeros. Norms follow the Basel weights, so the series of
/// each error sums to at most its budget.
pub fn outer_at(schedule: &PerturbationSchedule, k: usize, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.len();
    match schedule {
        PerturbationSchedule::None => Ok((vec![0.0; n], vec![0.0; n])),
        PerturbationSchedule::Outer(o) => {
            let w = basel_weight(k);
            let gen = |budget: f64, i: u64| {
                if budget == 0.0 {
                    vec![0.0; n]
                } else {
                    let s = budget * w;
                    sphere_direction(o.seed, 2 * k as u64 + i, n).into_iter().map(|v| s * v).collect()
                }
            };
            Ok((gen(o.budget_e1, 0), gen(o.budget_e2, 1)))
        }
        other => Err(ViError::WrongScheduleKind { expected: "outer or none", got: other.kind_name() }),
    }
}

/// Bounded perturbation `(λ_k, v^k)` at iterate `x`, with `‖v^k‖ ≤ v_norm`.
pub fn bounded_at(schedule: &PerturbationSchedule, k: usize, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = x.len();
    match schedule {
        PerturbationSchedule::None => Ok((0.0, vec![0.0; n])),
        PerturbationSchedule::Bounded(b) => {
            let lambda = b.lambda.at(k);
            let v = match &b.direction {
                Some(f) => {
                    let mut v = (f.0)(k, x);
                    if v.len() != n {
                        return Err(ViError::DimensionMismatch { expected: n, got: v.len() });
                    }
                    let nv = norm(&v);
                    if nv > b.v_norm {
                        let s = b.v_norm / nv;
                        v.iter_mut().for_each(|e| *e *= s);
                    }
                    v
                }
                None => sphere_direction(b.seed, k as u64, n).into_iter().map(|e| b.v_norm * e).collect(),
            };
            Ok((lambda, v))
        }
        other => Err(ViError::WrongScheduleKind { expected: "bounded or none", got: other.kind_name() }),
    }
}

/// `min(α, ζ/(k^{1+ξ}·‖Δ‖))`, with the cap inactive at zero displacement.
pub fn inertial_alpha(k: usize, alpha_target: f64, delta_norm: f64, zeta: f64, xi: f64) -> f64 {
    if delta_norm <= 0.0 || k == 0 {
        return alpha_target;
    }
    let cap = zeta / ((k as f64).powf(1.0 + xi) * delta_norm);
    alpha_target.min(cap)
}

/// Checks the admissibility of `(α, σ, δ)` for constant inertia and returns
/// the largest admissible relaxation γ.
pub fn validate_remark56(alpha: f64, sigma_r: f64, delta_r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(ViError::Config(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if !(sigma_r > 0.0) || !(delta_r > 0.0) {
        return Err(ViError::Config(format!("sigma and delta must be positive, got ({sigma_r}, {delta_r})")));
    }
    let a = alpha;
    let delta_min = (a * a * (1.0 + a) + a * sigma_r) / (1.0 - a * a);
    if !(delta_r > delta_min) {
        return Err(ViError::Config(format!(
            "inadmissible triple: need delta > (a^2(1+a) + a*sigma)/(1-a^2) = {delta_min}, got {delta_r}"
        )));
    }
    let num = 2.0 * (delta_r - a * ((1.0 + a) + a * delta_r + sigma_r));
    let den = delta_r * (1.0 + a * (1.0 + a) + a * delta_r + sigma_r);
    let gamma_max = num / den;
    if !(gamma_max > 0.0) {
        return Err(ViError::Config(format!(
            "inadmissible triple: gamma cap 2[delta - a((1+a) + a*delta + sigma)] / (delta[1 + a(1+a) + a*delta + sigma]) = {gamma_max} is not positive"
        )));
    }
    Ok(gamma_max.min(2.0))
}

/// The δ maximizing the γ cap for given `(α, σ)`, found by golden-section
/// search, together with that cap.
pub fn best_remark56_delta(alpha: f64, sigma_r: f64) -> Result<(f64, f64)> {
    let cap = |d: f64| validate_remark56(alpha, sigma_r, d).unwrap_or(f64::NEG_INFINITY);
    // The cap is positive only beyond this point.
    let a = alpha;
    let lo0 = ((a * (1.0 + a) + a * sigma_r) / (1.0 - a * a)).max((a * a * (1.0 + a) + a * sigma_r) / (1.0 - a * a));
    let (mut lo, mut hi) = (lo0.max(1e-12), lo0.max(1.0) * 1e3 + 1.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if cap(m1) < cap(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let d = 0.5 * (lo + hi);
    Ok((d, validate_remark56(alpha, sigma_r, d)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn none_yields_zero_errors() {
        let (e1, e2) = outer_at(&PerturbationSchedule::None, 7, &[1.0, 2.0]).unwrap();
        assert_eq!(e1, vec![0.0, 0.0]);
        assert_eq!(e2, vec![0.0, 0.0]);
        let (l, v) = bounded_at(&PerturbationSchedule::None, 3, &[1.0]).unwrap();
        assert_eq!((l, v), (0.0, vec![0.0]));
    }

    #[test]
    fn first_outer_error_has_basel_norm() {
        let s = PerturbationSchedule::Outer(OuterSchedule { budget_e1: 1.0, budget_e2: 1.0, seed: 3 });
        let (e1, e2) = outer_at(&s, 0, &[0.0; 5]).unwrap();
        assert!((norm(&e1) - 0.607_927_101_854_026_7).abs() < 1e-12);
        assert!((norm(&e2) - 6.0 / (PI * PI)).abs() < 1e-12);
        assert_ne!(e1, e2);
    }

    #[test]
    fn outer_rejects_other_kinds() {
        let s = PerturbationSchedule::Inertial(InertialSchedule::new(0.4, 0.4));
        assert!(matches!(outer_at(&s, 0, &[0.0]), Err(ViError::WrongScheduleKind { .. })));
        assert!(matches!(bounded_at(&s, 0, &[0.0]), Err(ViError::WrongScheduleKind { .. })));
    }

    #[test]
    fn lambda_defaults() {
        let l = LambdaSequence::InverseSquare { c: 1.0 };
        assert_eq!(l.at(0), 1.0);
        assert_eq!(l.at(1), 0.25);
        assert_eq!(l.at(2), 1.0 / 9.0);
        assert!(l.at(100_000) < 1e-9);
    }

    #[test]
    fn bounded_directions_are_unit_and_deterministic() {
        let s = PerturbationSchedule::Bounded(BoundedSchedule { seed: 11, ..Default::default() });
        let (l, v) = bounded_at(&s, 4, &[0.0; 6]).unwrap();
        assert_eq!(l, 1.0 / 25.0);
        assert!((norm(&v) - 1.0).abs() < 1e-12);
        assert_eq!(bounded_at(&s, 4, &[9.0; 6]).unwrap().1, v);
    }

    #[test]
    fn custom_direction_is_capped() {
        let f = DirectionFn(Arc::new(|_k, x: &[f64]| x.iter().map(|v| 10.0 * v).collect()));
        let s = PerturbationSchedule::Bounded(BoundedSchedule { direction: Some(f), ..Default::default() });
        let (_, v) = bounded_at(&s, 0, &[1.0, 1.0]).unwrap();
        assert!((norm(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inertial_alpha_examples() {
        assert_eq!(inertial_alpha(3, 0.4, 0.0, 0.4, 1.0), 0.4);
        assert!((inertial_alpha(2, 0.4, 10.0, 0.4, 1.0) - 0.01).abs() < 1e-15);
        assert_eq!(inertial_alpha(2, 0.4, 1e-9, 0.4, 1.0), 0.4);
    }

    #[test]
    fn remark56_examples() {
        assert!((validate_remark56(0.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(validate_remark56(0.99, 1.0, 1.0), Err(ViError::Config(_))));
        assert!(validate_remark56(1.0, 1.0, 100.0).is_err());
        assert!(validate_remark56(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn remark56_best_delta_is_admissible() {
        let (d, g) = best_remark56_delta(0.79, 0.01).unwrap();
        assert!(g > 0.0 && g < 0.1, "gamma cap {g} at delta {d}");
        for dd in [d * 0.8, d * 1.25] {
            assert!(validate_remark56(0.79, 0.01, dd).unwrap() <= g + 1e-12);
        }
    }

    #[test]
    fn weights_zero_at_start() {
        let s = InertialSchedule::new(0.4, 0.4);
        assert_eq!(s.weights(0, 1.0), (0.0, 0.0));
        let (a1, a2) = s.weights(1, 0.1);
        assert_eq!((a1, a2), (0.4, 0.4));
    }
}
