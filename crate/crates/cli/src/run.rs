//! Running cells and writing the CSV and JSON outputs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use vipc::linalg::dist;
use vipc::problems::{gen_lasso, LassoInstance, LassoProblem, LassoSpec};
use vipc::{solve_with, ViError, ViProblem};

use crate::config::{AlgorithmConfig, ExperimentConfig};
use crate::CliError;

pub const SUMMARY_HEADER: [&str; 13] = [
    "run_id",
    "algorithm",
    "K",
    "noise_beta",
    "epsilon",
    "seed",
    "iters",
    "obj_final",
    "err_final",
    "wall_ms",
    "status",
    "min_rho",
    "audits_passed",
];

pub const SERIES_HEADER: [&str; 7] = ["k", "residual", "objective", "err", "beta", "rho", "alpha"];

pub const PLOT_HEADER: [&str; 3] = ["algorithm", "k", "objective"];

/// Shortest decimal that reads back to the same value; empty for
/// non-finite values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        String::new()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub run_id: String,
    pub algorithm: String,
    pub k: usize,
    pub noise_beta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub iters: usize,
    pub obj_final: Option<f64>,
    pub err_final: Option<f64>,
    pub wall_ms: u128,
    pub status: String,
    pub min_rho: Option<f64>,
    pub audits_passed: bool,
}

impl SummaryRow {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.run_id.clone(),
            self.algorithm.clone(),
            self.k.to_string(),
            num(self.noise_beta),
            num(self.epsilon),
            self.seed.to_string(),
            self.iters.to_string(),
            opt(self.obj_final),
            opt(self.err_final),
            self.wall_ms.to_string(),
            self.status.clone(),
            opt(self.min_rho),
            self.audits_passed.to_string(),
        ]
    }

    /// Solver errors are reported as a status instead of aborting the batch.
    pub fn failed(&self) -> bool {
        self.status.starts_with("error")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub k: usize,
    pub residual: f64,
    pub objective: Option<f64>,
    pub err: f64,
    pub beta: f64,
    pub rho: f64,
    pub alpha: f64,
}

impl SeriesRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            num(self.residual),
            opt(self.objective),
            num(self.err),
            num(self.beta),
            num(self.rho),
            num(self.alpha),
        ]
    }
}

pub fn run_id(alg: &AlgorithmConfig, spec: &LassoSpec, epsilon: f64) -> String {
    format!("{}_K{}_beta{}_eps{:e}_seed{}", alg.name(), spec.k, spec.noise_beta, epsilon, spec.seed)
}

fn error_status(e: &ViError) -> String {
    match e {
        ViError::NumericalDivergence { .. } => "error_diverged".into(),
        ViError::StepSizeFailure { .. } => "error_step_size".into(),
        _ => "error".into(),
    }
}

/// One solve on a prepared instance.
pub fn run_cell(
    inst: &LassoInstance,
    problem: &LassoProblem<'_>,
    alg: &AlgorithmConfig,
    epsilon: f64,
    max_iter: usize,
    audits: bool,
) -> Result<(SummaryRow, Vec<SeriesRow>), CliError> {
    let mut cfg = alg.solver_config(epsilon, max_iter);
    cfg.strict_audits = audits;
    let schedule = alg.schedule(inst.spec.seed)?;
    let x0 = vec![0.0; problem.dim()];
    let mut series = Vec::new();
    let start = Instant::now();
    let result = solve_with(problem, alg.id, &cfg, &schedule, &x0, |rec| {
        series.push(SeriesRow {
            k: rec.k,
            residual: rec.residual,
            objective: rec.objective,
            err: dist(&rec.x, &inst.x_true),
            beta: rec.beta,
            rho: rec.rho,
            alpha: rec.alpha,
        });
    });
    let wall_ms = start.elapsed().as_millis();
    let spec = &inst.spec;
    let mut row = SummaryRow {
        run_id: run_id(alg, spec, epsilon),
        algorithm: alg.id.as_str().to_string(),
        k: spec.k,
        noise_beta: spec.noise_beta,
        epsilon,
        seed: spec.seed,
        iters: series.len(),
        obj_final: None,
        err_final: None,
        wall_ms,
        status: String::new(),
        min_rho: None,
        audits_passed: false,
    };
    match result {
        Ok(report) => {
            row.iters = report.iterations();
            row.obj_final = problem.objective(&report.x_final);
            row.err_final = Some(dist(&report.x_final, &inst.x_true));
            row.status = report.status.as_str().to_string();
            row.min_rho = report.min_rho();
            row.audits_passed = report.audits_passed();
        }
        Err(ViError::Config(msg)) => return Err(CliError::Config(msg)),
        Err(e) => {
            eprintln!("{}: {e}", row.run_id);
            row.status = error_status(&e);
        }
    }
    Ok((row, series))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Runtime(format!("csv: {e}"))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn write_series(path: &Path, rows: &[SeriesRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(SERIES_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_summary<W: std::io::Write>(out: W, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.fields()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Runtime(format!("summary: {e}")))
}

#[derive(Serialize)]
struct Manifest<'a> {
    vipc_version: &'a str,
    config: &'a ExperimentConfig,
    summary: &'a str,
    series_dir: Option<&'a str>,
    plot_series: Option<&'a str>,
    runs: Vec<&'a str>,
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("VI_PC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("VI_PC_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

/// Outcome of a batch: the rows in output order.
pub struct BenchOutcome {
    pub rows: Vec<SummaryRow>,
    pub output_dir: PathBuf,
}

/// Runs every (instance, algorithm, tolerance) cell of `cfg` and writes
/// `summary.csv`, `series/<run_id>.csv`, `plot_series.csv` and
/// `manifest.json` under `cfg.output_dir`.
pub fn run_bench(cfg: &ExperimentConfig) -> Result<BenchOutcome, CliError> {
    let out = cfg.output_dir.clone();
    let series_dir = out.join("series");
    fs::create_dir_all(if cfg.series { &series_dir } else { &out }).map_err(io_err(&out))?;
    let specs = cfg.instance_specs();
    let pool = thread_pool()?;
    // Instances run in parallel; the algorithms on one instance share its
    // caches and run in turn.
    let per_instance: Vec<Result<Vec<SummaryRow>, CliError>> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let inst = gen_lasso(spec).map_err(|e| CliError::Runtime(format!("instance: {e}")))?;
                let problem = inst.problem().map_err(|e| CliError::Runtime(format!("instance: {e}")))?;
                let mut rows = Vec::new();
                for eps in &cfg.epsilon {
                    for alg in &cfg.algorithms {
                        let (row, series) = run_cell(&inst, &problem, alg, *eps, cfg.max_iter, cfg.audits)?;
                        if cfg.series {
                            write_series(&series_dir.join(format!("{}.csv", row.run_id)), &series)?;
                        }
                        rows.push(row);
                    }
                }
                Ok(rows)
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in per_instance {
        rows.extend(r?);
    }
    let summary_path = out.join("summary.csv");
    let file = fs::File::create(&summary_path).map_err(io_err(&summary_path))?;
    write_summary(std::io::BufWriter::new(file), &rows)?;
    if cfg.series {
        emit_plot_series(&out)?;
    }
    let manifest = Manifest {
        vipc_version: vipc::VERSION,
        config: cfg,
        summary: "summary.csv",
        series_dir: cfg.series.then_some("series"),
        plot_series: cfg.series.then_some("plot_series.csv"),
        runs: rows.iter().map(|r| r.run_id.as_str()).collect(),
    };
    let manifest_path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(format!("manifest: {e}")))?;
    fs::write(&manifest_path, text + "\n").map_err(io_err(&manifest_path))?;
    Ok(BenchOutcome { rows, output_dir: out })
}

/// Merges `series/<run_id>.csv` of every run listed in `summary.csv` into a
/// long table `plot_series.csv` with columns `algorithm, k, objective`.
///
/// The group key is the algorithm id when each id occurs once, the run id
/// otherwise. Runs without objective values are left out with a notice.
pub fn emit_plot_series(run_dir: &Path) -> Result<PathBuf, CliError> {
    let summary_path = run_dir.join("summary.csv");
    let mut reader = csv::Reader::from_path(&summary_path).map_err(|e| CliError::Runtime(format!("{}: {e}", summary_path.display())))?;
    let mut runs: Vec<(String, String)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        runs.push((rec.get(0).unwrap_or_default().to_string(), rec.get(1).unwrap_or_default().to_string()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for (_, alg) in &runs {
        *counts.entry(alg.as_str()).or_default() += 1;
    }
    let out_path = run_dir.join("plot_series.csv");
    let mut w = csv::Writer::from_path(&out_path).map_err(csv_err)?;
    w.write_record(PLOT_HEADER).map_err(csv_err)?;
    for (run_id, alg) in &runs {
        let path = run_dir.join("series").join(format!("{run_id}.csv"));
        let mut r = csv::Reader::from_path(&path)
            .map_err(|e| CliError::Runtime(format!("missing series {}: {e}", path.display())))?;
        let key = if counts[alg.as_str()] == 1 { alg } else { run_id };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let objective = rec.get(2).unwrap_or_default();
            if !objective.is_empty() {
                rows.push([key.clone(), rec.get(0).unwrap_or_default().to_string(), objective.to_string()]);
            }
        }
        if rows.is_empty() {
            eprintln!("note: {run_id} has no objective values; left out of plot_series.csv");
        }
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err(&out_path))?;
    Ok(out_path)
}
