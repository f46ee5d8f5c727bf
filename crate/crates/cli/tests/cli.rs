use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lorentz-lab"))
        .args(args)
        .env("LORENTZ_LAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_lines(o: &Output) -> Vec<serde_json::Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn scatter_reports_reference_angle() {
    let o = lab(&["scatter", "--n-eps", "0.8", "--rho", "0.4,-0.9"]);
    assert!(o.status.success());
    let rows = json_lines(&o);
    assert_eq!(rows.len(), 2);
    let theta = rows[0]["theta"].as_f64().unwrap();
    assert!((theta - 0.224_163_859_061_621_7).abs() < 1e-14);
    assert_eq!(rows[1]["mode"], "reflected");
    assert!(rows[1]["theta"].as_f64().unwrap() < 0.0);
}

#[test]
fn seed_makes_random_output_reproducible() {
    let a = lab(&["scatter", "--samples", "5", "--seed", "9", "--format", "csv"]);
    let b = lab(&["scatter", "--samples", "5", "--seed", "9", "--format", "csv"]);
    let c = lab(&["scatter", "--samples", "5", "--seed", "10", "--format", "csv"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
    assert_eq!(stdout(&a).lines().count(), 6);
}

#[test]
fn invalid_model_exits_with_one() {
    // n_ε² = 1 − 2ε^α is negative for ε = 10⁻³, α = 0.1, φ₀ = 1.
    let o = lab(&["coeff", "--epsilon", "1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn scatter_table_and_coeff_columns() {
    let o = lab(&["scatter", "--n-eps", "0.9", "--table", "5"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("rho,theta,mode,psi"));
    assert_eq!(lines.count(), 5);

    let o = lab(&["coeff", "--alpha", "0.1", "--eps-list", "1e-4,1e-6", "--emit-terms"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let header: Vec<&str> = out.lines().next().unwrap().split(',').collect();
    assert_eq!(
        &header[..8],
        [
            "epsilon",
            "b_tilde",
            "b_renorm",
            "A1",
            "A2",
            "Bterm",
            "reflected",
            "quad_err"
        ]
    );
    assert_eq!(out.lines().count(), 3);
}

#[test]
fn markov_histogram_and_moments() {
    let o = lab(&[
        "markov",
        "--samples",
        "200",
        "--bins-x",
        "4",
        "--bins-theta",
        "8",
        "--log-density",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 1 + 4 * 4 * 8);
    let o = lab(&["markov", "--samples", "200"]);
    let rows = json_lines(&o);
    assert_eq!(rows.len(), 1);
    assert!(rows[0]["monte_carlo"].is_object());
}

#[test]
fn simulate_writes_pathology_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let o = lab(&[
        "simulate",
        "--epsilon",
        "1e-2",
        "--alpha",
        "0.05",
        "--phi0",
        "0.25",
        "--samples",
        "4",
        "--t",
        "0.1",
        "--horizon-mode",
        "log",
        "--table",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(&path).unwrap();
    assert!(table.starts_with("flag,fraction,std_error"));
    assert_eq!(table.lines().count(), 6);
}

#[test]
fn markov_and_simulate_emit_one_line_per_sample() {
    let o = lab(&["markov", "--samples", "3", "--seed", "1", "--paths"]);
    assert!(o.status.success());
    assert_eq!(json_lines(&o).len(), 3);
    let o = lab(&[
        "simulate",
        "--epsilon",
        "1e-2",
        "--alpha",
        "0.05",
        "--phi0",
        "0.25",
        "--samples",
        "2",
        "--t",
        "0.2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for row in json_lines(&o) {
        // Inside a barrier the speed is n_ε|v|; outside it is |v|.
        if row["pathologies"]["chi1_violation"].as_bool().unwrap() {
            continue;
        }
        let v = row["velocity"].as_array().unwrap();
        let speed = v[0].as_f64().unwrap().hypot(v[1].as_f64().unwrap());
        assert!((speed - 1.0).abs() < 1e-12);
    }
}

#[test]
fn pde_conserves_mass_and_rejects_unstable_steps() {
    let o = lab(&[
        "pde", "--kind", "landau", "--nx", "16", "--K", "4", "--t", "0.2", "--dt", "1e-3",
    ]);
    assert!(o.status.success());
    let row = &json_lines(&o)[0];
    let m0 = row["initial_mass"].as_f64().unwrap();
    assert!((row["mass"].as_f64().unwrap() - m0).abs() < 1e-12);
    let o = lab(&["pde", "--nx", "16", "--K", "4", "--dt", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn pde_snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("f.llkf");
    let s = snap.to_str().unwrap();
    let common = ["pde", "--nx", "16", "--K", "4", "--t", "0.1", "--dt", "1e-3"];
    let o = lab(&[&common[..], &["--out", s]].concat());
    assert!(o.status.success());
    let o = lab(&[&common[..], &["--init", "file", "--init-file", s, "--marginal"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 16 * 16 + 1);
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SWEEP: &str = r#"
experiment = "coefficient_sweep"
ladder = [1e-5, 1e-7, 1e-9]
[physics]
alpha = 0.1
mu = 1.0
phi0 = 1.0
speed = 1.0
[numerics]
L = 1.0
nx = 2
K = 1
dt = 0.1
samples = 1
seed = 0
"#;

#[test]
fn missed_tolerance_exits_with_two_and_still_writes_outputs() {
    // B̃/|log ε| at ε = 10⁻⁹ is about 0.42, far from the 0.2 limit.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    let out = dir.path().join("out");
    let o = lab(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    assert!(table.contains("# passed=false"));
    assert!(out.join("config.echo.toml").exists());
}

#[test]
fn replay_checks_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    lab(&["experiment", "--config", &cfg, "--out", out_s]);
    let table = out.join("table.csv");
    let t = table.to_str().unwrap();
    let o = lab(&["experiment", "--config", &cfg, "--out", out_s, "--replay", t]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("identical"));
    let o = lab(&[
        "experiment",
        "--config",
        &cfg,
        "--out",
        out_s,
        "--replay",
        t,
        "--seed",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hash mismatch"));
}

#[test]
fn item1_experiment_passes_and_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
experiment = "item1"
ladder = [1.0, 2.0, 4.0]
[physics]
alpha = 0.1
mu = 1.0
phi0 = 1.0
speed = 1.0
[numerics]
L = 8.0
nx = 16
K = 4
dt = 0.01
t = 0.5
samples = 1
seed = 0
[io]
output_dir = "unused"
snapshots = true
"#;
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join("out");
    let o = lab(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for i in 0..3 {
        assert!(out.join(format!("field_{i}.llkf")).exists());
    }
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SWEEP.replace("[1e-5, 1e-7, 1e-9]", "[1e-5, 1e-5]"));
    let o = lab(&["experiment", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn thread_cap_must_be_positive() {
    let o = Command::new(env!("CARGO_BIN_EXE_lorentz-lab"))
        .args(["scatter", "--rho", "0.1"])
        .env("LORENTZ_LAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
