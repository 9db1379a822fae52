use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn vipc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vipc")).args(args).output().expect("spawn vipc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"{
  "instance": { "m": 20, "n": 64, "k": [4], "seeds": [0, 1] },
  "algorithms": [
    { "id": "pc1" },
    { "id": "pc2" },
    { "id": "ipc2-2", "inertia": { "alpha_targets": [0.8, 0.0], "zeta": null, "xi": 1.0, "online": false } }
  ],
  "epsilon": [1e-5],
  "max_iter": 5000
}"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    fs::write(&p, text).unwrap();
    p
}

fn bench(dir: &Path, out: &str) -> Output {
    let cfg = write_config(dir, SMALL);
    vipc(&["bench", cfg.to_str().unwrap(), "--out", dir.join(out).to_str().unwrap()])
}

/// Drops the wall-clock column so runs can be compared byte for byte.
fn without_wall_ms(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(9);
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn bench_writes_golden_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(dir.path(), "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(
        summary.lines().next().unwrap(),
        "run_id,algorithm,K,noise_beta,epsilon,seed,iters,obj_final,err_final,wall_ms,status,min_rho,audits_passed"
    );
    assert_eq!(summary.lines().count(), 1 + 2 * 3);
    for line in summary.lines().skip(1) {
        assert!(line.contains(",converged,"), "{line}");
        assert!(line.ends_with(",true"), "{line}");
    }
    let series = fs::read_dir(out.join("series")).unwrap().count();
    assert_eq!(series, 6);
    let one = fs::read_to_string(out.join("series").join("pc1_K4_beta0_eps1e-5_seed0.csv")).unwrap();
    assert_eq!(one.lines().next().unwrap(), "k,residual,objective,err,beta,rho,alpha");
    let plot = fs::read_to_string(out.join("plot_series.csv")).unwrap();
    assert_eq!(plot.lines().next().unwrap(), "algorithm,k,objective");
    // Two seeds per algorithm, so rows are keyed by run id.
    assert!(plot.lines().nth(1).unwrap().starts_with("pc1_K4_beta0_eps1e-5_seed0,"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 6);
    assert_eq!(manifest["summary"], "summary.csv");
}

#[test]
fn bench_is_deterministic_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bench(dir.path(), "a").status.success());
    assert!(bench(dir.path(), "b").status.success());
    let read = |d: &str, f: &str| fs::read_to_string(dir.path().join(d).join(f)).unwrap();
    assert_eq!(without_wall_ms(&read("a", "summary.csv")), without_wall_ms(&read("b", "summary.csv")));
    assert_eq!(read("a", "plot_series.csv"), read("b", "plot_series.csv"));
    for entry in fs::read_dir(dir.path().join("a/series")).unwrap() {
        let name = entry.unwrap().file_name();
        let name = name.to_str().unwrap();
        assert_eq!(read("a/series", name), read("b/series", name), "{name}");
    }
}

#[test]
fn relative_output_dir_follows_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("\"max_iter\": 5000", "\"max_iter\": 5000, \"output_dir\": \"rel\", \"series\": false");
    let cfg = write_config(dir.path(), &text);
    let o = Command::new(env!("CARGO_BIN_EXE_vipc"))
        .args(["bench", cfg.to_str().unwrap()])
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("rel/summary.csv").exists());
    assert!(!dir.path().join("rel/series").exists());
}

#[test]
fn empty_algorithm_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "instance": { "k": [4], "seeds": [0] }, "algorithms": [] }"#);
    let o = vipc(&["bench", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("algorithm list is empty"));
}

#[test]
fn unknown_fields_and_algorithms_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "instance": { "k": [4], "seeds": [0] }, "algorithms": [{ "id": "pc3" }] }"#);
    assert_eq!(vipc(&["bench", cfg.to_str().unwrap()]).status.code(), Some(1));
    let cfg = write_config(dir.path(), r#"{ "instance": { "k": [4], "seeds": [0], "z": 1 }, "algorithms": [{ "id": "pc1" }] }"#);
    assert_eq!(vipc(&["bench", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn inadmissible_remark56_gamma_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{ "instance": { "k": [4], "seeds": [0] },
             "algorithms": [{ "id": "ipc1-r56", "gamma": 1.0,
                              "remark56": { "alpha": 0.79, "sigma": 0.01, "delta": 8.873924090053759 } }] }"#,
    );
    let o = vipc(&["bench", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds the admissible cap"));

    let cfg = write_config(dir.path(), r#"{ "instance": { "k": [4], "seeds": [0] }, "algorithms": [{ "id": "ipc1-r56" }] }"#);
    assert_eq!(vipc(&["bench", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(vipc(&["solve", "--alg", "ipc1-r56", "--m", "20", "--n", "64", "--k", "4"]).status.code(), Some(1));
}

#[test]
fn solve_prints_one_summary_row() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("s.csv");
    let o = vipc(&[
        "solve", "--alg", "pc2", "--m", "20", "--n", "64", "--k", "4", "--eps", "1e-6", "--series",
        series.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("run_id,algorithm,K,"));
    assert!(lines[1].starts_with("pc2_K4_beta0_eps1e-6_seed0,pc2,4,"));
    assert!(lines[1].contains(",converged,"));
    let rows = fs::read_to_string(series).unwrap().lines().count() - 1;
    let iters: usize = lines[1].split(',').nth(6).unwrap().parse().unwrap();
    assert_eq!(rows, iters);
}

#[test]
fn project_matches_a_hand_computed_case() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_vipc"))
        .args(["project", "--l1", "1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"3, -1 0.5\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let p: Vec<f64> = stdout(&o).split_whitespace().map(|s| s.parse().unwrap()).collect();
    assert_eq!(p, vec![1.0, 0.0, 0.0]);

    let o = vipc(&["project", "--l1", "-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_r56_reports_the_cap() {
    let o = vipc(&["validate-r56", "--alpha", "0.79", "--sigma", "0.01"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let cap: f64 = text.split_whitespace().last().unwrap().parse().unwrap();
    assert!((cap - 0.0457163).abs() < 1e-6, "{text}");

    let ok = vipc(&["validate-r56", "--alpha", "0.79", "--sigma", "0.01", "--delta", "8.873924090053759", "--gamma", "0.045"]);
    assert!(ok.status.success());
    let too_big = vipc(&["validate-r56", "--alpha", "0.79", "--sigma", "0.01", "--delta", "8.873924090053759", "--gamma", "0.5"]);
    assert_eq!(too_big.status.code(), Some(1));
}

#[test]
fn bad_arguments_exit_with_one() {
    assert_eq!(vipc(&["solve"]).status.code(), Some(1));
    assert_eq!(vipc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(vipc(&["--help"]).status.code(), Some(0));
    assert_eq!(vipc(&["solve", "--alg", "pc1", "--preset", "ridge"]).status.code(), Some(1));
}

#[test]
fn thread_count_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = Command::new(env!("CARGO_BIN_EXE_vipc"))
        .args(["bench", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .env("VI_PC_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
