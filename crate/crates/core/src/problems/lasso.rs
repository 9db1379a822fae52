//! Constrained sparse recovery: minimize `½‖Ax − b‖²` over `‖x‖₁ ≤ t`,
//! posed as the VI with `F(x) = Aᵀ(Ax − b)`.

use std::sync::Mutex;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result, ViError};
use crate::linalg::{axpy, dist, dot, norm_l1, norm_sq, DenseMatrix};
use crate::problem::ViProblem;
use crate::projections::{ProjectorSpec, SetKind};

/// Power iterations used for the Lipschitz estimate.
const POWER_ITERS: usize = 500;

/// Radius of the ℓ1 constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", content = "t", rename_all = "snake_case")]
pub enum TPolicy {
    /// `t = ‖x_true‖₁`
    ExactL1,
    Scalar(f64),
}

/// How the noise level is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Entries are `N(0, β²)`.
    #[default]
    StdDev,
    /// Entries are `N(0, β)`.
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoSpec {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub noise_beta: f64,
    pub noise_mode: NoiseMode,
    pub t_policy: TPolicy,
    /// Scale each ±1 amplitude by a uniform draw from [0.5, 1.5].
    pub jitter: bool,
    pub seed: u64,
}

impl Default for LassoSpec {
    fn default() -> Self {
        Self {
            m: 240,
            n: 1024,
            k: 20,
            noise_beta: 0.0,
            noise_mode: NoiseMode::StdDev,
            t_policy: TPolicy::ExactL1,
            jitter: false,
            seed: 0,
        }
    }
}

impl LassoSpec {
    pub fn new(m: usize, n: usize, k: usize) -> Self {
        Self { m, n, k, ..Default::default() }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn noise(mut self, beta: f64) -> Self {
        self.noise_beta = beta;
        self
    }

    pub fn noise_std(&self) -> f64 {
        match self.noise_mode {
            NoiseMode::StdDev => self.noise_beta,
            NoiseMode::Variance => self.noise_beta.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoInstance {
    pub spec: LassoSpec,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub x_true: Vec<f64>,
    pub t: f64,
    /// `‖A‖₂²` by power iteration.
    pub lipschitz: f64,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Draws `A`, the sparse signal and the noise from independent streams of
/// `seed`, so instances that differ only in noise share `A` and `x_true`.
pub fn gen_lasso(spec: &LassoSpec) -> Result<LassoInstance> {
    let LassoSpec { m, n, k, .. } = *spec;
    if n == 0 || m == 0 {
        return Err(ViError::InvalidInput("m and n must be positive".into()));
    }
    if k > n {
        return Err(ViError::InvalidInput(format!("sparsity K = {k} exceeds n = {n}")));
    }
    if m >= n {
        return Err(ViError::InvalidInput(format!("need m < n, got m = {m}, n = {n}")));
    }
    if !(spec.noise_beta >= 0.0 && spec.noise_beta.is_finite()) {
        return Err(ViError::InvalidInput(format!("noise level must be nonnegative, got {}", spec.noise_beta)));
    }

    let a = DenseMatrix::gaussian(m, n, &mut stream(spec.seed, 0));

    let mut sig = stream(spec.seed, 1);
    let mut x_true = vec![0.0; n];
    for i in sample(&mut sig, n, k).into_iter() {
        let sign = if sig.random::<bool>() { 1.0 } else { -1.0 };
        let mag = if spec.jitter { sig.random_range(0.5..1.5) } else { 1.0 };
        x_true[i] = sign * mag;
    }

    let mut b = a.mul_vec(&x_true);
    let std = spec.noise_std();
    if std > 0.0 {
        let mut noise = stream(spec.seed, 2);
        for bi in b.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut noise);
            *bi += std * z;
        }
    }

    let t = match spec.t_policy {
        TPolicy::ExactL1 => norm_l1(&x_true),
        TPolicy::Scalar(t) => t,
    };
    let lipschitz = a.spectral_norm_sq(POWER_ITERS);
    Ok(LassoInstance { spec: spec.clone(), a, b, x_true, t, lipschitz })
}

impl LassoInstance {
    /// `Ax − b`
    pub fn residual_into(&self, x: &[f64], r: &mut [f64]) {
        self.a.mul_vec_into(x, r);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
    }

    /// The VI posed on the ℓ1 ball. Fails for a non-positive radius (for
    /// example `K = 0` under [`TPolicy::ExactL1`]).
    pub fn problem(&self) -> Result<LassoProblem<'_>> {
        let set = ProjectorSpec::l1_ball(self.a.cols(), self.t)?;
        let columns = self.a.transpose();
        let gram = self.a.matmul(&columns);
        let m = gram.rows();
        let g = DMatrix::from_row_slice(m, m, gram.as_slice());
        let eigs = g.clone().symmetric_eigenvalues();
        let min_eig = eigs.min().max(0.0);
        // Padded so rounding in the eigensolver cannot make it an underestimate.
        let op_norm = eigs.max() * (1.0 + 1e-10);
        // Row i of Lᵀ is column i of the Cholesky factor L, zero before i.
        let factor = g.cholesky().map(|c| {
            let lt = c.l().transpose();
            let mut out = DenseMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    out.set(i, j, lt[(i, j)]);
                }
            }
            out
        });
        Ok(LassoProblem {
            inst: self,
            set,
            columns,
            gram,
            factor,
            min_eig,
            op_norm,
            cache: Mutex::new(ApplyCache::default()),
            trials: Mutex::new(TrialMemory::default()),
        })
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }
}

/// `F(x) = Aᵀ(Ax − b)` as an evaluator.
pub fn lasso_mapping(inst: &LassoInstance) -> impl Fn(&[f64], &mut [f64]) + Send + Sync + '_ {
    move |x: &[f64], out: &mut [f64]| {
        let mut r = vec![0.0; inst.a.rows()];
        inst.residual_into(x, &mut r);
        inst.a.mul_t_vec_into(&r, out);
    }
}

/// `½‖Ax − b‖²`
pub fn lasso_objective(inst: &LassoInstance, x: &[f64]) -> Result<f64> {
    check_dim(inst.dim(), x.len())?;
    let mut r = vec![0.0; inst.a.rows()];
    inst.residual_into(x, &mut r);
    Ok(0.5 * norm_sq(&r))
}

/// A [`LassoInstance`] viewed as a [`ViProblem`].
///
/// Keeps the columns of `A` and the Gram matrix `AAᵀ` so that
/// `‖F(x) − F(y)‖ = ‖AᵀA(x − y)‖` costs a sparse product and an `m×m` one.
pub struct LassoProblem<'a> {
    inst: &'a LassoInstance,
    set: ProjectorSpec,
    /// `Aᵀ`, row `j` holding column `j` of `A`.
    columns: DenseMatrix,
    gram: DenseMatrix,
    /// `Lᵀ` with `AAᵀ = LLᵀ`, absent when the factorization breaks down.
    factor: Option<DenseMatrix>,
    /// Smallest eigenvalue of `AAᵀ`.
    min_eig: f64,
    /// Upper bound on `‖AᵀA‖`.
    op_norm: f64,
    cache: Mutex<ApplyCache>,
    trials: Mutex<TrialMemory>,
}

#[derive(Default)]
struct ApplyCache {
    x: Vec<f64>,
    ax: Vec<f64>,
    nnz: usize,
}

/// Step-size trials seen at the current and the previous base point, each
/// with the bound found for it.
#[derive(Default)]
struct TrialMemory {
    base: Vec<f64>,
    prev_base: Vec<f64>,
    cur: Vec<(Vec<f64>, f64)>,
    prev: Vec<(Vec<f64>, f64)>,
    used: usize,
}

impl TrialMemory {
    fn rebase(&mut self, x: &[f64]) {
        std::mem::swap(&mut self.base, &mut self.prev_base);
        self.base.clear();
        self.base.extend_from_slice(x);
        std::mem::swap(&mut self.cur, &mut self.prev);
        self.prev.truncate(self.used);
        self.used = 0;
    }

    fn record(&mut self, y: &[f64], bound: f64) {
        match self.cur.get_mut(self.used) {
            Some(slot) => {
                slot.0.clear();
                slot.0.extend_from_slice(y);
                slot.1 = bound;
            }
            None => self.cur.push((y.to_vec(), bound)),
        }
        self.used += 1;
    }
}

impl LassoProblem<'_> {
    pub fn instance(&self) -> &LassoInstance {
        self.inst
    }

    pub fn set(&self) -> &ProjectorSpec {
        &self.set
    }

    /// `Ax`, summing columns when `x` is sparse.
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let nnz = x.iter().filter(|v| **v != 0.0).count();
        if 4 * nnz < x.len() {
            out.iter_mut().for_each(|o| *o = 0.0);
            for (j, xj) in x.iter().enumerate() {
                if *xj != 0.0 {
                    axpy(*xj, self.columns.row(j), out);
                }
            }
        } else {
            self.inst.a.mul_vec_into(x, out);
        }
    }

    /// `(Ax, nnz(x))`, remembering the last input. The solver evaluates the
    /// objective, the mapping and every step-size trial at the same point.
    fn apply_cached(&self, x: &[f64]) -> (Vec<f64>, usize) {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if cache.x != x {
            cache.x.clear();
            cache.x.extend_from_slice(x);
            cache.ax.resize(self.inst.a.rows(), 0.0);
            cache.nnz = x.iter().filter(|v| **v != 0.0).count();
            let c = &mut *cache;
            self.apply_into(x, &mut c.ax);
        }
        (cache.ax.clone(), cache.nnz)
    }

    /// `‖AᵀA(x − y)‖`, or a lower bound once it is known to exceed `cutoff`.
    fn difference_norm_direct(&self, x: &[f64], y: &[f64], cutoff: f64) -> f64 {
        let m = self.inst.a.rows();
        let mut v = vec![0.0; m];
        let nnz_y = y.iter().filter(|v| **v != 0.0).count();
        let (ax, nnz_x) = self.apply_cached(x);
        // At least nnz_x − nnz_y coordinates differ.
        let use_cache = nnz_y <= nnz_x.saturating_sub(nnz_y)
            || nnz_y <= x.iter().zip(y).filter(|(a, b)| a != b).count();
        if use_cache {
            // A(x − y) = Ax − Ay.
            v = ax;
            for (j, yj) in y.iter().enumerate() {
                if *yj != 0.0 {
                    axpy(-yj, self.columns.row(j), &mut v);
                }
            }
        } else {
            for (j, (xj, yj)) in x.iter().zip(y).enumerate() {
                let u = xj - yj;
                if u != 0.0 {
                    axpy(u, self.columns.row(j), &mut v);
                }
            }
        }
        // With u = Ad: ‖Aᵀu‖ ≥ ‖u‖²/‖d‖ and ‖Aᵀu‖² ≥ λ_min‖u‖².
        let u_sq = norm_sq(&v);
        let lower = (u_sq / dist(x, y)).max((self.min_eig * u_sq).sqrt());
        if lower > cutoff {
            return lower;
        }
        let Some(factor) = &self.factor else {
            let mut gv = vec![0.0; m];
            self.gram.mul_vec_into(&v, &mut gv);
            return dot(&v, &gv).max(0.0).sqrt();
        };
        // ‖Aᵀu‖² = ‖Lᵀu‖², summed from the short rows up; every partial
        // sum is a lower bound.
        let cutoff_sq = cutoff * cutoff;
        let mut acc = 0.0;
        for i in (0..m).rev() {
            let r = dot(&factor.row(i)[i..], &v[i..]);
            acc += r * r;
            if acc > cutoff_sq {
                return acc.sqrt();
            }
        }
        acc.sqrt()
    }

    pub fn radius(&self) -> f64 {
        match self.set.kind() {
            SetKind::L1Ball { radius } => *radius,
            _ => unreachable!("lasso constraint is an l1 ball"),
        }
    }
}

impl ViProblem for LassoProblem<'_> {
    fn dim(&self) -> usize {
        self.inst.dim()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let (mut r, _) = self.apply_cached(x);
        for (ri, bi) in r.iter_mut().zip(&self.inst.b) {
            *ri -= bi;
        }
        self.inst.a.mul_t_vec_into(&r, out);
    }

    fn project_in_place(&self, v: &mut [f64]) {
        self.set.project_in_place(v)
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.set.contains(x)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.inst.lipschitz)
    }

    fn mapping_difference_norm(&self, x: &[f64], y: &[f64], cutoff: f64) -> Option<f64> {
        let mut mem = self.trials.lock().unwrap_or_else(|e| e.into_inner());
        let mem = &mut *mem;
        if mem.base != x {
            mem.rebase(x);
        }
        // `F(x) − F(y)` is linear in `d = x − y`, so a bound `b` on the
        // previous trial's `d'` gives `‖M d‖ ≥ s·b − ‖M‖·‖d − s d'‖` for any
        // `s ≥ 0`. Taking `s` as the least-squares fit keeps the bound useful
        // while `d` shrinks.
        let slot = mem.used;
        if let Some((py, bound)) = mem.prev.get(slot) {
            let (mut dd, mut dp, mut pp) = (0.0, 0.0, 0.0);
            for ((a, b), (c, e)) in x.iter().zip(y).zip(mem.prev_base.iter().zip(py)) {
                let (d, q) = (a - b, c - e);
                dd += d * d;
                dp += d * q;
                pp += q * q;
            }
            if dp > 0.0 && pp > 0.0 {
                let s = dp / pp;
                let residual = (dd - s * dp).max(0.0).sqrt();
                let carried = s * bound - self.op_norm * residual;
                if carried > cutoff {
                    mem.record(y, carried);
                    return Some(carried);
                }
            }
        }
        // Ask for some headroom so the bound stays useful at the next base point.
        let value = self.difference_norm_direct(x, y, cutoff * 1.5);
        mem.record(y, value);
        Some(value)
    }

    fn objective(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.dim() {
            return None;
        }
        let (r, _) = self.apply_cached(x);
        Some(0.5 * r.iter().zip(&self.inst.b).map(|(ri, bi)| (ri - bi) * (ri - bi)).sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    fn small(k: usize, noise: f64, seed: u64) -> LassoInstance {
        gen_lasso(&LassoSpec::new(20, 64, k).noise(noise).seed(seed)).unwrap()
    }

    #[test]
    fn support_and_radius() {
        let inst = small(5, 0.0, 1);
        assert_eq!(inst.x_true.iter().filter(|v| **v != 0.0).count(), 5);
        assert!(inst.x_true.iter().all(|v| *v == 0.0 || v.abs() == 1.0));
        assert_eq!(inst.t, 5.0);
        let p = inst.problem().unwrap();
        assert_eq!(p.project(&inst.x_true), inst.x_true);
    }

    #[test]
    fn deterministic_and_noise_independent() {
        let a = small(5, 0.0, 9);
        let b = small(5, 0.0, 9);
        assert_eq!(a, b);
        let noisy = small(5, 0.01, 9);
        assert_eq!(noisy.a, a.a);
        assert_eq!(noisy.x_true, a.x_true);
        assert_ne!(noisy.b, a.b);
        assert_ne!(small(5, 0.0, 10).a, a.a);
    }

    #[test]
    fn mapping_and_objective_examples() {
        let inst = small(5, 0.0, 2);
        let p = inst.problem().unwrap();
        assert!(norm(&p.eval(&inst.x_true)) < 1e-10);
        assert!(lasso_objective(&inst, &inst.x_true).unwrap() < 1e-20);
        let f0 = p.eval(&vec![0.0; 64]);
        let atb = inst.a.mul_t_vec(&inst.b);
        assert!(f0.iter().zip(&atb).all(|(a, b)| (a + b).abs() < 1e-12));
        assert!((lasso_objective(&inst, &vec![0.0; 64]).unwrap() - 0.5 * norm_sq(&inst.b)).abs() < 1e-12);
        let mut via_closure = vec![0.0; 64];
        lasso_mapping(&inst)(&inst.x_true, &mut via_closure);
        // Sparse inputs take a column-sum path inside the problem.
        let direct = p.eval(&inst.x_true);
        assert!(via_closure.iter().zip(&direct).all(|(a, b)| (a - b).abs() <= 1e-12));
    }

    #[test]
    fn fast_difference_norm_matches_evaluation() {
        let inst = small(5, 0.01, 4);
        let p = inst.problem().unwrap();
        let x = inst.x_true.clone();
        let mut y = x.clone();
        y[3] += 0.25;
        y[7] -= 1.0;
        let direct = crate::linalg::dist(&p.eval(&x), &p.eval(&y));
        let fast = p.mapping_difference_norm(&x, &y, f64::INFINITY).unwrap();
        assert!((direct - fast).abs() <= 1e-10 * direct, "{direct} vs {fast}");
        // Dense x against sparse y takes the cached path.
        let dense: Vec<f64> = (0..64).map(|i| 0.01 * i as f64).collect();
        let direct = crate::linalg::dist(&p.eval(&dense), &p.eval(&y));
        for _ in 0..2 {
            let fast = p.mapping_difference_norm(&dense, &y, f64::INFINITY).unwrap();
            assert!((direct - fast).abs() <= 1e-10 * direct, "{direct} vs {fast}");
        }
    }

    #[test]
    fn carried_bounds_stay_below_the_true_norm() {
        let inst = small(5, 0.0, 6);
        let p = inst.problem().unwrap();
        let fx_of = |x: &[f64]| p.eval(x);
        for step in 0..6 {
            let x: Vec<f64> = (0..64).map(|i| 0.02 * ((i + step) % 7) as f64 - 0.06 + 1e-4 * step as f64).collect();
            let fx = fx_of(&x);
            for trial in 0..8 {
                let beta = 0.9f64.powi(trial);
                let y = p.project(&x.iter().zip(&fx).map(|(a, f)| a - beta * f).collect::<Vec<_>>());
                let truth = crate::linalg::dist(&fx, &p.eval(&y));
                for cutoff in [0.0, 0.5 * truth, 2.0 * truth] {
                    let b = p.mapping_difference_norm(&x, &y, cutoff).unwrap();
                    assert!(b <= truth * (1.0 + 1e-9) + 1e-12, "bound {b} above {truth}");
                    assert_eq!(b > cutoff, truth > cutoff, "cutoff {cutoff}, bound {b}, truth {truth}");
                }
            }
        }
    }

    #[test]
    fn empty_signal() {
        let inst = small(0, 0.0, 3);
        assert!(inst.x_true.iter().all(|v| *v == 0.0));
        assert!(inst.b.iter().all(|v| *v == 0.0));
        let scalar = gen_lasso(&LassoSpec { t_policy: TPolicy::Scalar(1.0), ..LassoSpec::new(20, 64, 0) }).unwrap();
        assert_eq!(scalar.t, 1.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(gen_lasso(&LassoSpec::new(20, 64, 65)).is_err());
        assert!(gen_lasso(&LassoSpec::new(64, 64, 5)).is_err());
    }

    #[test]
    fn variance_reading() {
        let s = LassoSpec { noise_mode: NoiseMode::Variance, ..LassoSpec::new(20, 64, 2).noise(0.04) };
        assert!((s.noise_std() - 0.2).abs() < 1e-15);
    }
}
