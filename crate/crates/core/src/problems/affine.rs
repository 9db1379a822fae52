//! Affine monotone VIs `F(x) = Mx + q` with reference solutions, used as a
//! test bed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, ViError};
use crate::linalg::DenseMatrix;
use crate::oracle::{oracle_solve_vi, OracleConfig};
use crate::problem::ViProblem;
use crate::projections::ProjectorSpec;

/// Largest dimension the reference solver is trusted with.
pub const MAX_ORACLE_DIM: usize = 50;

/// `F(x) = Mx + q` on a simple set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineVi {
    pub m: DenseMatrix,
    pub q: Vec<f64>,
    pub set: ProjectorSpec,
    lipschitz: f64,
}

impl AffineVi {
    pub fn new(m: DenseMatrix, q: Vec<f64>, set: ProjectorSpec) -> Result<Self> {
        check_dim(m.rows(), m.cols())?;
        check_dim(m.rows(), q.len())?;
        check_dim(m.rows(), set.dim())?;
        let lipschitz = m.spectral_norm_sq(2000).sqrt();
        Ok(Self { m, q, set, lipschitz })
    }
}

impl ViProblem for AffineVi {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.m.mul_vec_into(x, out);
        for (o, qi) in out.iter_mut().zip(&self.q) {
            *o += qi;
        }
    }

    fn project_in_place(&self, v: &mut [f64]) {
        self.set.project_in_place(v)
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.set.contains(x)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        // Power iteration slightly underestimates; pad it.
        Some(1.01 * self.lipschitz)
    }
}

/// Feasible set of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AffineSet {
    /// The cube `[lo, hi]^n`.
    Box { lo: f64, hi: f64 },
    /// The ball of the given radius about the origin.
    Ball { radius: f64 },
    FullSpace,
}

impl AffineSet {
    pub fn build(self, n: usize) -> Result<ProjectorSpec> {
        match self {
            AffineSet::Box { lo, hi } => ProjectorSpec::cube(n, lo, hi),
            AffineSet::Ball { radius } => ProjectorSpec::ball(vec![0.0; n], radius),
            AffineSet::FullSpace => ProjectorSpec::full_space(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineViInstance {
    pub problem: AffineVi,
    pub x_star: Vec<f64>,
    pub seed: u64,
}

/// `M = PᵀP + w(S − Sᵀ)` with Gaussian `P` (2n×n, scaled by `1/√(2n)`) and
/// `S` (n×n, scaled by `1/√n`); `q ~ N(0, q_scale²)`.
pub fn random_affine_vi(n: usize, skew_weight: f64, q_scale: f64, set: AffineSet, seed: u64) -> Result<AffineVi> {
    if n == 0 {
        return Err(ViError::InvalidInput("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = DenseMatrix::gaussian(2 * n, n, &mut rng).scaled(1.0 / ((2 * n) as f64).sqrt());
    let s = DenseMatrix::gaussian(n, n, &mut rng).scaled(1.0 / (n as f64).sqrt());
    let psd = p.transpose().matmul(&p);
    let skew = s.add(&s.transpose().scaled(-1.0)).scaled(skew_weight);
    let m = if skew_weight == 0.0 { psd } else { psd.add(&skew) };
    let q = (0..n).map(|_| q_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect();
    AffineVi::new(m, q, set.build(n)?)
}

/// A random monotone affine VI together with its reference solution.
pub fn gen_affine_vi(n: usize, skew_weight: f64, set: AffineSet, seed: u64) -> Result<AffineViInstance> {
    gen_affine_vi_with(n, skew_weight, set, seed, &OracleConfig::default())
}

pub fn gen_affine_vi_with(
    n: usize,
    skew_weight: f64,
    set: AffineSet,
    seed: u64,
    oracle: &OracleConfig,
) -> Result<AffineViInstance> {
    if n > MAX_ORACLE_DIM {
        return Err(ViError::InvalidInput(format!("n = {n} exceeds the oracle limit {MAX_ORACLE_DIM}")));
    }
    let problem = random_affine_vi(n, skew_weight, 1.0, set, seed)?;
    let x_star = solve_reference(&problem, oracle)?;
    Ok(AffineViInstance { problem, x_star, seed })
}

/// Reference solution of an explicit affine VI.
pub fn solve_reference(problem: &AffineVi, oracle: &OracleConfig) -> Result<Vec<f64>> {
    oracle_solve_vi(problem, &problem.set, oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    #[test]
    fn unconstrained_instance_solves_linear_system() {
        let inst = gen_affine_vi(6, 0.0, AffineSet::FullSpace, 4).unwrap();
        let f = inst.problem.eval(&inst.x_star);
        assert!(norm(&f) < 1e-10);
    }

    #[test]
    fn halfline_boundary_solution() {
        let set = ProjectorSpec::boxed(vec![0.0], vec![f64::INFINITY]).unwrap();
        let p = AffineVi::new(DenseMatrix::identity(1), vec![1.0], set).unwrap();
        let x = solve_reference(&p, &OracleConfig::default()).unwrap();
        assert!(x[0].abs() < 1e-12);
    }

    #[test]
    fn generated_matrix_is_monotone() {
        let p = random_affine_vi(10, 1.0, 1.0, AffineSet::Box { lo: -1.0, hi: 1.0 }, 3).unwrap();
        let sym = p.m.add(&p.m.transpose()).scaled(0.5);
        // xᵀMx equals xᵀ((M + Mᵀ)/2)x; check it on many directions.
        let min = crate::diagnostics::monotonicity_probe(&p, 500, 1.0, 7);
        assert!(min >= -1e-10);
        let _ = sym;
    }

    #[test]
    fn oversized_instances_are_rejected() {
        assert!(gen_affine_vi(51, 0.0, AffineSet::FullSpace, 0).is_err());
    }
}
