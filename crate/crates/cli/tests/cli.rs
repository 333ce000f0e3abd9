use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schroeder-tails"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const EX1: &str = "0,0.1,0.5,0.4";
const EX2: &str = "0,0.1,0.1,0.5,0.3";

#[test]
fn validate_reports_derived_quantities() {
    let o = run(&["validate", "--probs", EX1]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("key,value\n"));
    let alpha: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("alpha,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((alpha - 1.764509).abs() < 1e-6);
}

#[test]
fn invalid_input_exits_with_two() {
    let o = run(&["validate", "--probs", "0.2,0.3,0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NonZeroP0"));
    assert_eq!(run(&["phi"]).status.code(), Some(2));
    assert_eq!(run(&["phi", "--probs", EX1, "--order", "1"]).status.code(), Some(2));
}

#[test]
fn numerical_guard_exits_with_three() {
    // 3^16 coefficients exceed the table cap
    let o = run(&["density", "--probs", EX1, "--t", "16", "--xmax", "1e6"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("CapExceeded"));
}

#[test]
fn io_failure_exits_with_four() {
    let o = run(&["validate", "--probs", EX1, "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn k0_table_is_periodic() {
    let o = run(&["k0", "--probs", EX2, "--samples", "512"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let rows: Vec<(f64, f64)> = s
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 512);
    assert_eq!(rows[0].0, 0.0);
    assert_eq!(rows[511].0, 1.0);
    assert!((rows[0].1 - rows[511].1).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.1 > 0.0));
}

#[test]
fn phi_and_theta_tables() {
    let s = stdout(&run(&["phi", "--probs", EX1, "--order", "8", "--precision", "f64"]));
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "n,phi_n");
    assert_eq!(lines.len(), 10);
    let phi2: f64 = lines[3].split_once(',').unwrap().1.parse().unwrap();
    assert!((phi2 - 0.5 / 0.09).abs() < 1e-12);

    let s = stdout(&run(&["theta", "--probs", EX1, "--grid", "256"]));
    assert!(s.starts_with("m,theta_re,theta_im\n"));
    assert!(s.lines().any(|l| l.starts_with("0,")));
}

#[test]
fn pi_grid_with_oracle() {
    let o = run(&["pi", "--probs", EX1, "--grid", "imag:0:20:11", "--oracle", "--precision", "f64"]);
    assert!(o.status.success());
    for l in stdout(&o).lines().skip(1) {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[2] - v[4]).abs() < 1e-7 && (v[3] - v[5]).abs() < 1e-7);
    }
    assert_eq!(run(&["pi", "--probs", EX1, "--grid", "diag:0:1:2"]).status.code(), Some(2));
}

#[test]
fn v_is_multiplicatively_periodic() {
    let s = stdout(&run(&["v", "--probs", EX1, "--x", "0.01,0.023"]));
    let v: Vec<f64> = s
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    assert!((v[0] - v[1]).abs() < 1e-12);
    assert_eq!(run(&["v", "--probs", EX1, "--x", "-1"]).status.code(), Some(2));
}

#[test]
fn compare_writes_sidecar_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.csv");
    let o = run(&[
        "compare",
        "--probs",
        EX1,
        "--points",
        "20",
        "--out",
        out.to_str().unwrap(),
        "--emit-plot",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("x,p_iter,p_fourier,p_asym,ratio\n"));
    assert_eq!(csv.lines().count(), 21);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(meta["command"], "compare");
    assert_eq!(meta["config"]["t_iter"], 12);
    assert!(meta["diagnostics"]["m_f"].as_u64().unwrap() > 0);
    assert!(meta["tolerances"]["aliasing_threshold"].is_number());
    let gp = std::fs::read_to_string(out.with_extension("gp")).unwrap();
    assert!(gp.contains("logscale") && gp.contains("fig1.csv"));
}

#[test]
fn config_file_and_saved_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "probs = [0, 0.1, 0.1, 0.5, 0.3]\nseed = 7\nn = 300\nt_sim = 6\n").unwrap();
    let saved = dir.path().join("saved.toml");
    let a = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--save-config",
        saved.to_str().unwrap(),
    ]);
    assert!(a.status.success());
    let b = run(&["simulate", "--config", saved.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 301);
}

#[test]
fn output_is_deterministic() {
    let args = ["simulate", "--probs", EX1, "--t", "10", "--n", "2000", "--seed", "42"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let s = stdout(&run(&["simulate", "--probs", EX1, "--t", "10", "--n", "2000", "--summary"]));
    assert!(s.starts_with("n,mean,std,min,max\n2000,"));
}

#[test]
fn density_methods() {
    let s = stdout(&run(&["density", "--probs", EX1, "--t", "8", "--xmin", "0.5", "--xmax", "0.6"]));
    assert!(s.starts_with("x,p\n"));
    let s = stdout(&run(&[
        "density", "--probs", EX1, "--method", "fourier", "--xmin", "0.2", "--xmax", "1", "--points", "3",
    ]));
    assert_eq!(s.lines().count(), 4);
    assert!(Path::new(env!("CARGO_BIN_EXE_schroeder-tails")).exists());
}
