//! `vipc`: batch runner for the sparse-recovery benchmarks.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vipc::perturbations::{best_remark56_delta, validate_remark56, InertialSchedule, Remark56Params};
use vipc::problems::{gen_lasso, LassoSpec};
use vipc::{project_l1_ball, AlgorithmId};

use config::{AlgorithmConfig, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "vipc", version, about = "Projection and contraction solvers on sparse-recovery benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of a JSON experiment config.
    Bench {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance and print its summary row.
    Solve(SolveArgs),
    /// Project a whitespace- or comma-separated vector from stdin.
    Project {
        /// Radius of the l1 ball.
        #[arg(long)]
        l1: f64,
    },
    /// Check an (alpha, sigma, delta) triple for `ipc1-r56` and print the
    /// largest admissible gamma. Without --delta, prints the best delta.
    #[command(name = "validate-r56")]
    ValidateR56 {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        delta: Option<f64>,
        /// Also check this relaxation against the cap.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Rebuild `plot_series.csv` from a bench output directory.
    #[command(name = "plot-series")]
    PlotSeries { run_dir: PathBuf },
}

#[derive(Args)]
struct SolveArgs {
    /// Algorithm id (pc1, pc2, eg, pc1-op, pc2-op, pc1-bp, pc2-bp, ipc1-1,
    /// ipc2-1, ipc1-2, ipc2-2, ipc1-r56).
    #[arg(long)]
    alg: String,
    /// `lasso-k<K>`: 240x1024 instance with K nonzeros.
    #[arg(long, default_value = "lasso-k20")]
    preset: String,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Defaults to 1, or to the admissible cap for ipc1-r56.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    sigma_ls: Option<f64>,
    #[arg(long)]
    backtrack: Option<f64>,
    /// Inertial weight (first weight for ipc*-1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Second weight for ipc*-1; defaults to --alpha.
    #[arg(long)]
    alpha2: Option<f64>,
    /// Cap ipc*-2 weights with the online rule instead of keeping them constant.
    #[arg(long)]
    online: bool,
    #[arg(long)]
    sigma_r: Option<f64>,
    #[arg(long)]
    delta_r: Option<f64>,
    /// Write the per-iteration series to this CSV file.
    #[arg(long)]
    series: Option<PathBuf>,
}

fn parse_preset(preset: &str) -> Result<LassoSpec, CliError> {
    preset
        .strip_prefix("lasso-k")
        .and_then(|k| k.parse().ok())
        .map(|k| LassoSpec::new(240, 1024, k))
        .ok_or_else(|| CliError::Config(format!("unknown preset {preset:?}; expected lasso-k<K>")))
}

fn solve_cmd(a: SolveArgs) -> Result<(), CliError> {
    let id: AlgorithmId = a.alg.parse().map_err(|e: vipc::ViError| CliError::Config(e.to_string()))?;
    let mut spec = parse_preset(&a.preset)?;
    spec.m = a.m.unwrap_or(spec.m);
    spec.n = a.n.unwrap_or(spec.n);
    spec.k = a.k.unwrap_or(spec.k);
    spec.seed = a.seed;
    spec.noise_beta = a.noise;

    let mut alg = AlgorithmConfig::new(id);
    alg.gamma = a.gamma;
    alg.nu = a.nu;
    alg.mu = a.mu;
    alg.sigma_ls = a.sigma_ls;
    alg.backtrack = a.backtrack;
    use AlgorithmId as A;
    match id {
        A::Ipc1One | A::Ipc2One => {
            let a1 = a.alpha.unwrap_or(0.4);
            alg.inertia = Some(InertialSchedule::new(a1, a.alpha2.unwrap_or(a1)));
        }
        A::Ipc1Two | A::Ipc2Two => {
            let w = a.alpha.unwrap_or(0.8);
            alg.inertia = Some(if a.online { InertialSchedule::single(w) } else { InertialSchedule::constant(w) });
        }
        A::Ipc1Remark56 => {
            let alpha = a.alpha.unwrap_or(0.79);
            let (Some(sigma), Some(delta)) = (a.sigma_r, a.delta_r) else {
                return Err(CliError::Config(format!(
                    "ipc1-r56 needs --sigma-r and --delta-r admissible for alpha {alpha} (see `vipc validate-r56`)"
                )));
            };
            let cap = validate_remark56(alpha, sigma, delta).map_err(|e| CliError::Config(e.to_string()))?;
            alg.gamma = Some(a.gamma.unwrap_or(cap.min(1.0)));
            alg.remark56 = Some(Remark56Params { alpha, sigma, delta });
        }
        _ => {}
    }
    alg.validate(&[a.eps], a.max_iter)?;

    let inst = gen_lasso(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    let problem = inst.problem().map_err(|e| CliError::Config(e.to_string()))?;
    let (row, series) = run::run_cell(&inst, &problem, &alg, a.eps, a.max_iter, true)?;
    if let Some(path) = &a.series {
        run::write_series(path, &series)?;
    }
    run::write_summary(std::io::stdout().lock(), std::slice::from_ref(&row))?;
    if row.failed() {
        return Err(CliError::Runtime(format!("{} ended with status {}", row.run_id, row.status)));
    }
    Ok(())
}

fn bench_cmd(config: PathBuf, out: Option<PathBuf>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&config)
        .map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    cfg.output_dir = match out {
        Some(o) => o,
        None if cfg.output_dir.is_relative() => {
            config.parent().unwrap_or_else(|| std::path::Path::new(".")).join(&cfg.output_dir)
        }
        None => cfg.output_dir,
    };
    let outcome = run::run_bench(&cfg)?;
    let failed = outcome.rows.iter().filter(|r| r.failed()).count();
    eprintln!("{} runs written to {}", outcome.rows.len(), outcome.output_dir.display());
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} runs ended with a solver error")));
    }
    Ok(())
}

fn project_cmd(t: f64) -> Result<(), CliError> {
    let mut input = String::new();
    std::io::stdin()
        .read_to_string(&mut input)
        .map_err(|e| CliError::Runtime(format!("stdin: {e}")))?;
    let v = input
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| CliError::Config(format!("not a number: {s:?}"))))
        .collect::<Result<Vec<f64>, _>>()?;
    let p = project_l1_ball(&v, t).map_err(|e| CliError::Config(e.to_string()))?;
    let line: Vec<String> = p.iter().map(|x| run::num(*x)).collect();
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", line.join(" ")).map_err(|e| CliError::Runtime(format!("stdout: {e}")))
}

fn validate_r56_cmd(alpha: f64, sigma: f64, delta: Option<f64>, gamma: Option<f64>) -> Result<(), CliError> {
    let cfg = |e: vipc::ViError| CliError::Config(e.to_string());
    let (delta, cap) = match delta {
        Some(d) => (d, validate_remark56(alpha, sigma, d).map_err(cfg)?),
        None => best_remark56_delta(alpha, sigma).map_err(cfg)?,
    };
    println!("alpha {alpha} sigma {sigma} delta {delta} gamma_max {cap}");
    if let Some(g) = gamma {
        if !(g > 0.0 && g <= cap) {
            return Err(CliError::Config(format!("gamma {g} is outside (0, {cap}]")));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Bench { config, out } => bench_cmd(config, out),
        Command::Solve(a) => solve_cmd(a),
        Command::Project { l1 } => project_cmd(l1),
        Command::ValidateR56 { alpha, sigma, delta, gamma } => validate_r56_cmd(alpha, sigma, delta, gamma),
        Command::PlotSeries { run_dir } => run::emit_plot_series(&run_dir).map(|p| println!("{}", p.display())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
