//! Slow, independent reference computations used to validate the solvers.
//!
//! Nothing here calls into the contraction methods or the sort-based ℓ1
//! projector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ViError};
use crate::linalg::{dot, norm};
use crate::problem::ViProblem;
use crate::projections::{ProjectorSpec, SetKind};

/// Minty validation threshold.
pub const MINTY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Extragradient step as a fraction of `1/L`.
    pub step_scale: f64,
    /// Feasible samples used for the Minty check.
    pub minty_samples: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 10_000_000, step_scale: 0.1, minty_samples: 1000, seed: 0x5eed }
    }
}

/// Projection onto the ℓ1 ball of radius `t` by bisection on the threshold.
pub fn oracle_project_l1(v: &[f64], t: f64, cfg: &OracleConfig) -> Vec<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= t {
        return v.to_vec();
    }
    let mass = |theta: f64| v.iter().map(|x| (x.abs() - theta).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0f64, v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let s = mass(mid);
        if (s - t).abs() <= cfg.tol || mid <= lo || mid >= hi {
            lo = mid;
            hi = mid;
            break;
        }
        if s > t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    v.iter().map(|x| x.signum() * (x.abs() - theta).max(0.0)).collect()
}

/// Draws feasible points spread over `set`: uniform in boxes and balls,
/// scattered over the ℓ1 ball, projected Gaussians for half-spaces and
/// `scale`-wide Gaussians for the whole space.
pub fn feasible_samples(set: &ProjectorSpec, count: usize, scale: f64, seed: u64) -> Vec<Vec<f64>> {
    let n = set.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect()
    };
    (0..count)
        .map(|_| match set.kind() {
            SetKind::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| {
                    let (l, h) = (l.max(-scale), h.min(scale));
                    if l >= h {
                        l
                    } else {
                        rng.random_range(l..=h)
                    }
                })
                .collect(),
            SetKind::Ball { center, radius } => {
                let g = gauss(&mut rng);
                let r = radius * rng.random::<f64>().powf(1.0 / n as f64) / norm(&g).max(1e-300);
                center.iter().zip(&g).map(|(c, gi)| c + r * gi).collect()
            }
            SetKind::L1Ball { radius } => {
                // A point of the simplex with a slack coordinate, signed at random.
                let e: Vec<f64> = (0..=n).map(|_| <Exp1 as Distribution<f64>>::sample(&Exp1, &mut rng)).collect();
                let s: f64 = e.iter().sum();
                e[..n]
                    .iter()
                    .map(|ei| {
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        sign * radius * ei / s
                    })
                    .collect()
            }
            SetKind::Halfspace { .. } => {
                let g: Vec<f64> = gauss(&mut rng).into_iter().map(|v| scale * v).collect();
                set.project(&g).expect("dimension matches")
            }
            SetKind::FullSpace => gauss(&mut rng).into_iter().map(|v| scale * v).collect(),
        })
        .collect()
}

/// Smallest `⟨F(x), x − x*⟩` over `samples`; nonnegative values are
/// consistent with `x*` solving the VI.
pub fn minty_gap(problem: &dyn ViProblem, x_star: &[f64], samples: &[Vec<f64>]) -> f64 {
    samples
        .iter()
        .map(|x| {
            let fx = problem.eval(x);
            let d: Vec<f64> = x.iter().zip(x_star).map(|(a, b)| a - b).collect();
            dot(&fx, &d)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Natural residual `‖x − P_C(x − F(x))‖`.
pub fn natural_residual(problem: &dyn ViProblem, x: &[f64]) -> f64 {
    let fx = problem.eval(x);
    let mut p: Vec<f64> = x.iter().zip(&fx).map(|(a, b)| a - b).collect();
    problem.project_in_place(&mut p);
    x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Long-horizon extragradient with the constant step `step_scale/L`, run
/// until the natural residual drops below `tol`, then checked against Minty
/// samples drawn from `set`.
///
/// Requires a Lipschitz hint on the problem.
pub fn oracle_solve_vi(problem: &dyn ViProblem, set: &ProjectorSpec, cfg: &OracleConfig) -> Result<Vec<f64>> {
    let n = problem.dim();
    if set.dim() != n {
        return Err(ViError::DimensionMismatch { expected: n, got: set.dim() });
    }
    let lip = problem
        .lipschitz_hint()
        .ok_or_else(|| ViError::Oracle("the oracle needs a Lipschitz hint".into()))?;
    let beta = if lip > 0.0 { cfg.step_scale / lip } else { cfg.step_scale };

    let mut x = vec![0.0; n];
    problem.project_in_place(&mut x);
    let mut fx = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut fy = vec![0.0; n];
    let mut converged = false;
    let check_every = 64;
    for it in 0..cfg.max_iter {
        problem.eval_into(&x, &mut fx);
        for ((yi, xi), fi) in y.iter_mut().zip(&x).zip(&fx) {
            *yi = xi - beta * fi;
        }
        problem.project_in_place(&mut y);
        problem.eval_into(&y, &mut fy);
        for (xi, fi) in x.iter_mut().zip(&fy) {
            *xi -= beta * fi;
        }
        problem.project_in_place(&mut x);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ViError::Oracle(format!("extragradient diverged at iteration {it}")));
        }
        if it % check_every == 0 && natural_residual(problem, &x) <= cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(ViError::Oracle(format!("no convergence to {} within {} iterations", cfg.tol, cfg.max_iter)));
    }
    let scale = 2.0 * (1.0 + norm(&x));
    let samples = feasible_samples(set, cfg.minty_samples, scale, cfg.seed);
    let gap = minty_gap(problem, &x, &samples);
    if gap < -MINTY_TOL {
        return Err(ViError::Oracle(format!("Minty check failed: min <F(x), x - x*> = {gap}")));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{scaled_identity, FnProblem};

    #[test]
    fn l1_oracle_examples() {
        let cfg = OracleConfig::default();
        assert_eq!(oracle_project_l1(&[0.2, -0.3], 1.0, &cfg), vec![0.2, -0.3]);
        let p = oracle_project_l1(&[2.0, 1.0], 1.0, &cfg);
        assert!((p[0] - 1.0).abs() < 1e-10 && p[1].abs() < 1e-10, "{p:?}");
    }

    #[test]
    fn identity_solution_is_origin() {
        let p = scaled_identity(ProjectorSpec::full_space(3).unwrap(), 1.0);
        let set = ProjectorSpec::full_space(3).unwrap();
        let x = oracle_solve_vi(&p, &set, &OracleConfig::default()).unwrap();
        assert!(norm(&x) < 1e-12);
    }

    #[test]
    fn halfline_kkt() {
        let set = ProjectorSpec::boxed(vec![0.0], vec![f64::INFINITY]).unwrap();
        let p = FnProblem::new(set.clone(), |x: &[f64], o: &mut [f64]| o[0] = x[0] + 1.0).with_lipschitz(1.0);
        let x = oracle_solve_vi(&p, &set, &OracleConfig::default()).unwrap();
        assert!(x[0].abs() < 1e-12);
    }

    #[test]
    fn samples_are_feasible() {
        for set in [
            ProjectorSpec::cube(4, -1.0, 1.0).unwrap(),
            ProjectorSpec::ball(vec![1.0; 4], 2.0).unwrap(),
            ProjectorSpec::l1_ball(4, 3.0).unwrap(),
            ProjectorSpec::halfspace(vec![1.0, 0.0, 0.0, 1.0], 0.5).unwrap(),
        ] {
            for s in feasible_samples(&set, 200, 3.0, 1) {
                assert!(set.contains(&s), "{s:?} not in {set:?}");
            }
        }
    }
}
