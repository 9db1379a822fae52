//! Experiment configuration read by `vipc bench`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vipc::perturbations::{
    validate_remark56, BoundedSchedule, InertialSchedule, OuterSchedule, Remark56Params,
};
use vipc::problems::{LassoSpec, NoiseMode, TPolicy};
use vipc::{AlgorithmId, PerturbationSchedule, SolverConfig};

use crate::CliError;

/// Sparse-recovery instances: every combination of `k`, `noise_beta` and
/// `seeds` is generated once and shared by all algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    pub k: Vec<usize>,
    #[serde(default = "default_noise")]
    pub noise_beta: Vec<f64>,
    #[serde(default)]
    pub noise_mode: NoiseMode,
    #[serde(default = "default_t_policy")]
    pub t_policy: TPolicy,
    #[serde(default)]
    pub jitter: bool,
    pub seeds: Vec<u64>,
}

fn default_m() -> usize {
    240
}

fn default_n() -> usize {
    1024
}

fn default_noise() -> Vec<f64> {
    vec![0.0]
}

fn default_t_policy() -> TPolicy {
    TPolicy::ExactL1
}

/// One algorithm column. Unset fields take the library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub id: AlgorithmId,
    /// Distinguishes two entries with the same id in run ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_ls: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backtrack: Option<f64>,
    /// Inertial weights for `ipc*-1` and `ipc*-2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<InertialSchedule>,
    /// `(α, σ, δ)` for `ipc1-r56`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remark56: Option<Remark56Params>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<OuterSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounded: Option<BoundedSchedule>,
}

impl AlgorithmConfig {
    pub fn new(id: AlgorithmId) -> Self {
        Self {
            id,
            label: None,
            gamma: None,
            nu: None,
            mu: None,
            sigma_ls: None,
            backtrack: None,
            inertia: None,
            remark56: None,
            outer: None,
            bounded: None,
        }
    }

    pub fn name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.id.as_str().to_string())
    }

    /// Solver settings for this column at tolerance `epsilon`.
    pub fn solver_config(&self, epsilon: f64, max_iter: usize) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            gamma: self.gamma.unwrap_or(d.gamma),
            nu: self.nu.unwrap_or(d.nu),
            mu: self.mu.or(d.mu),
            sigma_ls: self.sigma_ls.unwrap_or(d.sigma_ls),
            rho_ls: self.backtrack.unwrap_or(d.rho_ls),
            epsilon,
            max_iter,
            record_points: false,
            ..d
        }
    }

    /// The perturbation schedule, seeded from the instance seed unless the
    /// entry fixes one.
    pub fn schedule(&self, seed: u64) -> Result<PerturbationSchedule, CliError> {
        use AlgorithmId as A;
        let missing = |what: &str| CliError::Config(format!("{} needs `{what}`", self.id));
        Ok(match self.id {
            A::Pc1 | A::Pc2 | A::Extragradient => PerturbationSchedule::None,
            A::Pc1Op | A::Pc2Op => PerturbationSchedule::Outer(
                self.outer.clone().unwrap_or(OuterSchedule { seed, ..Default::default() }),
            ),
            A::Pc1Bp | A::Pc2Bp => PerturbationSchedule::Bounded(
                self.bounded.clone().unwrap_or(BoundedSchedule { seed, ..Default::default() }),
            ),
            A::Ipc1One | A::Ipc2One => {
                PerturbationSchedule::Inertial(self.inertia.clone().unwrap_or(InertialSchedule::new(0.4, 0.4)))
            }
            A::Ipc1Two | A::Ipc2Two => {
                PerturbationSchedule::Inertial(self.inertia.clone().unwrap_or(InertialSchedule::constant(0.8)))
            }
            A::Ipc1Remark56 => PerturbationSchedule::Remark56(self.remark56.ok_or_else(|| missing("remark56"))?),
        })
    }

    /// Checks the column at every tolerance without running anything.
    pub fn validate(&self, epsilon: &[f64], max_iter: usize) -> Result<(), CliError> {
        let schedule = self.schedule(0)?;
        schedule.validate().map_err(config_err)?;
        for eps in epsilon {
            self.solver_config(*eps, max_iter).validate().map_err(config_err)?;
        }
        if let PerturbationSchedule::Remark56(p) = schedule {
            let cap = validate_remark56(p.alpha, p.sigma, p.delta).map_err(config_err)?;
            let gamma = self.gamma.unwrap_or(SolverConfig::default().gamma);
            if gamma > cap {
                return Err(CliError::Config(format!(
                    "ipc1-r56: gamma {gamma} exceeds the admissible cap {cap} for (alpha, sigma, delta) = ({}, {}, {})",
                    p.alpha, p.sigma, p.delta
                )));
            }
        }
        Ok(())
    }
}

fn config_err(e: vipc::ViError) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub algorithms: Vec<AlgorithmConfig>,
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Relative paths are resolved against the config file's directory.
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Write one per-iteration CSV per run.
    #[serde(default = "yes")]
    pub series: bool,
    /// Mark runs whose runtime audits fail.
    #[serde(default = "yes")]
    pub audits: bool,
}

fn default_epsilon() -> Vec<f64> {
    vec![1e-6]
}

fn default_max_iter() -> usize {
    100_000
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.algorithms.is_empty() {
            return bad("algorithm list is empty");
        }
        if self.instance.seeds.is_empty() {
            return bad("seed list is empty");
        }
        if self.instance.k.is_empty() || self.instance.noise_beta.is_empty() || self.epsilon.is_empty() {
            return bad("k, noise_beta and epsilon lists must be nonempty");
        }
        let mut names: Vec<String> = self.algorithms.iter().map(|a| a.name()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("two algorithm entries share a name; set `label` to tell them apart");
        }
        for a in &self.algorithms {
            a.validate(&self.epsilon, self.max_iter)?;
        }
        for spec in self.instance_specs() {
            if spec.k > spec.n || spec.m >= spec.n || spec.m == 0 {
                return Err(CliError::Config(format!(
                    "instance shape m = {}, n = {}, K = {} is not supported (need 0 < m < n, K <= n)",
                    spec.m, spec.n, spec.k
                )));
            }
        }
        Ok(())
    }

    /// Instances in output order: K, then noise level, then seed.
    pub fn instance_specs(&self) -> Vec<LassoSpec> {
        let i = &self.instance;
        let mut out = Vec::new();
        for &k in &i.k {
            for &noise_beta in &i.noise_beta {
                for &seed in &i.seeds {
                    out.push(LassoSpec {
                        m: i.m,
                        n: i.n,
                        k,
                        noise_beta,
                        noise_mode: i.noise_mode,
                        t_policy: i.t_policy,
                        jitter: i.jitter,
                        seed,
                    });
                }
            }
        }
        out
    }
}
