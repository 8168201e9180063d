use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn phi4() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_phi4"));
    cmd.env_remove("PHI4_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    phi4().args(args).output().expect("binary runs")
}

fn graph(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../phi4-graph/graphs").join(name).display().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn checksums(dir: &Path) -> Vec<(String, String)> {
    manifest(dir)["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| (o["path"].as_str().unwrap().to_string(), o["sha256"].as_str().unwrap().to_string()))
        .collect()
}

const SMALL_SIM: &[&str] = &[
    "simulate", "--dim", "2", "--n", "16", "--r", "0.05", "--dt", "0.002", "--horizon", "0.04", "--snapshot-every", "5",
    "--diagnostics-every", "4",
];

#[test]
fn renorm_constants_sweep_has_eight_rows() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let res = run(&["renorm-constants", "--r", "1e-4:1e-2:8", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out.join("renorm_constants.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest=manifest.json"));
    assert_eq!(lines.next().unwrap(), "r,a_closed,a_numeric,b_closed,b_numeric");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0][0], 1e-4);
    assert_eq!(rows[7][0], 1e-2);
    for row in &rows {
        assert_eq!(row.len(), 5);
        assert!(row[1] > 0.0 && row[2] > 0.0 && row[3] > 0.0 && row[4] > 0.0);
    }
}

#[test]
fn powercount_table_ends_with_gamma_max() {
    let tmp = TempDir::new().unwrap();
    let res = run(&["powercount", "--file", &graph("g24.fg"), "--out", tmp.path().to_str().unwrap()]);
    assert!(res.status.success());
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert_eq!(stdout.trim_end().lines().last().unwrap(), "gamma_max = 0");
    let saved = std::fs::read_to_string(tmp.path().join("powercount.txt")).unwrap();
    assert!(saved.starts_with("# manifest=manifest.json"));
    assert!(saved.trim_end().ends_with("gamma_max = 0"));
}

#[test]
fn powercount_json_and_combined_files() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("j");
    let res = run(&["powercount", "--json", "--file", &graph("tau4.fg"), "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let v: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["gamma_max"], "-1/2");
    assert!(v["graphs"].as_array().unwrap().len() >= 2);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(out.join("powercount.json")).unwrap()).unwrap();
    assert_eq!(saved["manifest"], "manifest.json");
    let res = run(&["powercount", "--file", &graph("tau4.fg"), "--out", tmp.path().join("t").to_str().unwrap()]);
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("combined over"));
    assert_eq!(stdout.trim_end().lines().last().unwrap(), "gamma_max = -1/2");
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let tmp = TempDir::new().unwrap();
    let mut sums = Vec::new();
    for name in ["a", "b", "c"] {
        let out = tmp.path().join(name);
        let seed = if name == "c" { "8" } else { "7" };
        let mut args = SMALL_SIM.to_vec();
        args.extend(["--seed", seed, "--out", out.to_str().unwrap()]);
        let res = run(&args);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        sums.push(checksums(&out));
    }
    assert_eq!(sums[0], sums[1]);
    assert!(sums[0].iter().any(|(p, _)| p.ends_with(".fld")));
    assert_ne!(sums[0], sums[2]);
    let header = std::fs::read_to_string(tmp.path().join("a/diagnostics.csv")).unwrap();
    assert!(header.starts_with("# manifest=manifest.json command=simulate seed=7 stream=0"));
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    let mut args = SMALL_SIM.to_vec();
    args.extend(["--seed", "11", "--stream", "3", "--initial", "random:2", "--out", first.to_str().unwrap()]);
    assert!(run(&args).status.success());
    let second = tmp.path().join("second");
    let m = first.join("manifest.json");
    let res = run(&["simulate", "--config", m.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(checksums(&first), checksums(&second));
    assert_eq!(manifest(&second)["resolved"], manifest(&first)["resolved"]);
    // a manifest only replays its own subcommand
    let res = run(&["trees", "--config", m.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn flags_override_config_and_both_are_recorded() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.ini");
    std::fs::write(&cfg, "seed = 1\n[simulate]\nn = 8\ndim = 2\nhorizon = 0.01\ndt = 0.002\nr = 0.1\nno_noise = true\n[trees]\nn = 64\n").unwrap();
    let out = tmp.path().join("o");
    let res = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "2", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let m = manifest(&out);
    assert_eq!(m["resolved"]["seed"], 2);
    assert_eq!(m["resolved"]["n"], 8);
    assert_eq!(m["resolved"]["no-noise"], true);
    assert_eq!(m["seed"], 2);
    let entries = m["config"]["entries"].as_array().unwrap();
    assert!(entries.iter().any(|e| e[0] == "seed" && e[1] == "1"));
    assert!(m["flags"].as_array().unwrap().iter().any(|f| f == "--seed"));
}

#[test]
fn json_config_is_accepted() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{"renorm-constants": {"r": "1e-3:1e-2:3"}}"#).unwrap();
    let out = tmp.path().join("o");
    let res = run(&["renorm-constants", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out.join("renorm_constants.csv")).unwrap();
    assert_eq!(text.lines().count(), 2 + 3);
}

#[test]
fn output_directory_from_environment() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("env-out");
    let res = phi4()
        .env("PHI4_OUT_DIR", &out)
        .args(["powercount", "--file", &graph("tau1.fg")])
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(out.join("manifest.json").exists());
    assert!(out.join("powercount.txt").exists());
}

#[test]
fn distinct_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let o = |name: &str| tmp.path().join(name).display().to_string();

    // unknown flag
    assert_eq!(run(&["simulate", "--frobnicate"]).status.code(), Some(2));

    // invalid config: unknown key, syntax error, parameters rejected by validation
    let bad_key = tmp.path().join("bad.ini");
    std::fs::write(&bad_key, "[simulate]\nbogus = 3\n").unwrap();
    assert_eq!(run(&["simulate", "--config", bad_key.to_str().unwrap(), "--out", &o("a")]).status.code(), Some(3));
    let bad_syntax = tmp.path().join("syntax.ini");
    std::fs::write(&bad_syntax, "[simulate\n").unwrap();
    assert_eq!(run(&["simulate", "--config", bad_syntax.to_str().unwrap(), "--out", &o("b")]).status.code(), Some(3));
    assert_eq!(run(&["simulate", "--r=-1", "--out", &o("c")]).status.code(), Some(3));

    // refused preconditions
    assert_eq!(run(&["trees", "--burn-in", "1", "--out", &o("d")]).status.code(), Some(4));
    assert_eq!(run(&["renorm-constants", "--r", "1e-4:1e-2:3", "--n", "16", "--out", &o("e")]).status.code(), Some(4));

    // blow-up: a huge initial condition against a tiny threshold
    let res = run(&[
        "simulate", "--dim", "2", "--n", "8", "--horizon", "0.01", "--initial", "random:100", "--blowup", "1", "--out", &o("f"),
    ]);
    assert_eq!(res.status.code(), Some(5));
    assert!(manifest(&tmp.path().join("f"))["incomplete"].is_string());

    // malformed graph
    let g = tmp.path().join("bad.fg");
    std::fs::write(&g, "graph X\nvertex a\nedge L a b\n").unwrap();
    let res = run(&["powercount", "--file", g.to_str().unwrap(), "--out", &o("g")]);
    assert_eq!(res.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));
}

#[test]
fn help_documents_exit_codes() {
    let res = run(&["--help"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    for needle in ["Exit codes", "refused experiment precondition", "invalid configuration", "renorm-constants"] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn regularity_reads_field_files() {
    let tmp = TempDir::new().unwrap();
    let trees_out = tmp.path().join("trees");
    let res = run(&[
        "trees", "--dim", "2", "--n", "32", "--r", "0.001", "--dt", "0.01", "--count", "16", "--stride", "0.05",
        "--components", "X", "--out", trees_out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let files: Vec<String> =
        (0..16).map(|i| trees_out.join(format!("trees/X_{i:04}.fld")).display().to_string()).collect();
    let out = tmp.path().join("reg");
    let res = run(&["regularity", "--fields", &files.join(","), "--window", "1:4", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(out.join("regularity.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    let gamma: f64 = row[1].parse().unwrap();
    // the planar free field has regularity 0 minus
    assert!(gamma.abs() < 0.35, "gamma = {gamma}");
}
