use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lrinv::cli::output::{read_csv, schema_errors};
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn lrinv(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrinv"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(schema: &str, path: &Path) {
    let errors = schema_errors(schema, &json(path));
    assert!(errors.is_empty(), "{}: {errors:?}", path.display());
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

#[test]
fn classify_ising_and_so5() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrinv(dir.path(), &["--config", &cfg("ising.json"), "classify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = json(&dir.path().join("classification.json"));
    assert_valid("classification", &dir.path().join("classification.json"));
    assert_eq!(doc["subalgebra"]["name"], "so(4)⊕u(1)");
    assert_eq!(doc["blockSizes"], serde_json::json!([6, 1, 4, 4]));
    assert_eq!(doc["su3"]["feasible"], false);

    let o = lrinv(dir.path(), &["--config", &cfg("so5.json"), "classify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = json(&dir.path().join("classification.json"));
    assert_eq!(doc["subalgebra"]["name"], "so(5)");
    assert_eq!(doc["blockSizes"], serde_json::json!([10, 5]));
}

#[test]
fn config_errors_exit_2_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write_config(dir.path(), "zero.json", r#"{"hamiltonian":{"h1_z":1.0}}"#);
    let o = lrinv(dir.path(), &["--config", &zero, "classify"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/hamiltonian"), "{}", stderr(&o));

    let quoted = write_config(
        dir.path(),
        "quoted.json",
        r#"{"hamiltonian":{"J_x":1},"timeGrid":{"t0":"0","tf":1,"steps":10}}"#,
    );
    let o = lrinv(dir.path(), &["--config", &quoted, "solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/timeGrid/t0"), "{}", stderr(&o));

    let o = lrinv(dir.path(), &["--config", &dir.path().join("missing.json").display().to_string(), "solve"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let o = lrinv(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn integration_failure_reports_time() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"hamiltonian":{"J_x":"1/(t-0.55)"},"timeGrid":{"t0":0,"tf":1,"steps":10}}"#,
    );
    let o = lrinv(dir.path(), &["--config", &c, "solve"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("t = 0.55"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = lrinv(&blocker, &["--config", &cfg("ising.json"), "solve"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn two_step_grid_warns_but_runs() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"hamiltonian":{"J_x":1,"h2_z":0.3},"timeGrid":{"t0":0,"tf":0.1,"steps":2}}"#,
    );
    let o = lrinv(dir.path(), &["--config", &c, "solve"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("2 grid steps"), "{}", stderr(&o));
}

#[test]
fn solve_outputs_validate_and_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = lrinv(d.path(), &["--config", &cfg("ising.json"), "solve"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["ising_g.csv", "ising_residuals.csv", "ising_populations.csv", "ising_propagator.json", "summary.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between identical runs");
        assert!(!x.contains(&b'\r'));
    }
    assert_valid("summary", &a.path().join("summary.json"));
    assert_valid("propagator", &a.path().join("ising_propagator.json"));

    let (header, rows) = read_csv(&a.path().join("ising_g.csv")).unwrap();
    assert_eq!(header, ["t", "g_1", "g_2", "g_3", "g_4"]);
    assert_eq!(rows.len(), 2001);
    let (header, rows) = read_csv(&a.path().join("ising_populations.csv")).unwrap();
    assert_eq!(header, ["t", "p_0", "p_1", "p_2", "p_3"]);
    for r in rows {
        assert!((r[1..].iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
    let snaps = json(&a.path().join("ising_propagator.json"));
    assert_eq!(snaps["snapshots"].as_array().unwrap().len(), 5);
}

#[test]
fn nmr_exact_mode_residuals_are_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"nmr":{"J":0.5,"hx":1.0,"B":0.4,"omega":1.0},"mode":"exact",
            "outputs":[{"kind":"residuals","path":"r.csv"}]}"#,
    );
    let o = lrinv(dir.path(), &["--config", &c, "solve"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, rows) = read_csv(&dir.path().join("r.csv")).unwrap();
    assert!(rows.iter().all(|r| r[1] < 1e-10));

    let o = lrinv(dir.path(), &["--config", &cfg("nmr.json"), "--tol", "1e-6", "nmr"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_valid("nmr_report", &dir.path().join("nmr.json"));
}

#[test]
fn iec_runs_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrinv(dir.path(), &["--tol", "1e-4", "iec"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_valid("iec_report", &dir.path().join("iec.json"));
    let (header, _) = read_csv(&dir.path().join("iec_hamiltonian.csv")).unwrap();
    assert_eq!(header, ["t", "gamma", "beta", "omega_x", "omega_z"]);
}

#[test]
fn verify_round_trip_and_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let so5 = cfg("so5.json");
    let o = lrinv(dir.path(), &["--config", &so5, "solve"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let good = dir.path().join("so5_g.csv");
    let o = lrinv(dir.path(), &["--config", &so5, "--tol", "1e-7", "verify", "--trajectory", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_valid("verify_report", &dir.path().join("verify_report.json"));

    let text = std::fs::read_to_string(&good).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let row = 1500;
    let mut cells: Vec<String> = lines[row + 1].split(',').map(str::to_string).collect();
    cells[3] = (cells[3].parse::<f64>().unwrap() + 1e-3).to_string();
    lines[row + 1] = cells.join(",");
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = lrinv(dir.path(), &["--config", &so5, "--tol", "1e-7", "verify", "--trajectory", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    let report = json(&dir.path().join("verify_report.json"));
    assert_eq!(report["pass"], false);
    let failing: Vec<u64> = report["failingRows"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert!(failing.contains(&(row as u64)), "{failing:?}");
    // the five-point stencil spreads one bad row over its neighbours only
    assert!(failing.iter().all(|&k| (k as i64 - row as i64).abs() <= 2), "{failing:?}");
    assert!((report["worstRow"].as_i64().unwrap() - row as i64).abs() <= 2);

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = lrinv(dir.path(), &["--config", &so5, "verify", "--trajectory", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    std::fs::write(&empty, "t,g_1\n0,abc\n").unwrap();
    let o = lrinv(dir.path(), &["--config", &so5, "verify", "--trajectory", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn sweep_preserves_order_and_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let so5 = cfg("so5.json");
    let o = lrinv(
        dir.path(),
        &["--config", &so5, "--jobs", "3", "--steps", "1000", "sweep", "--parameter", "J_x", "--values", "4e-3,1e-3,2e-3"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, rows) = read_csv_lenient(&dir.path().join("sweep.csv"));
    assert_eq!(header[0], "J_x");
    assert_eq!(rows.iter().map(|r| r[0].clone()).collect::<Vec<_>>(), ["0.004", "0.001", "0.002"]);
    let drift: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(drift[1] < drift[2] && drift[2] < drift[0], "{drift:?}");

    let o = lrinv(dir.path(), &["--config", &so5, "--steps", "1000", "sweep", "--parameter", "J_x", "--values", "0.001"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, single) = read_csv_lenient(&dir.path().join("sweep.csv"));
    let o = lrinv(dir.path(), &["--config", &so5, "--steps", "1000", "solve"]);
    assert_eq!(o.status.code(), Some(0));
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(single[0][1], summary["maxDiResidual"].as_f64().unwrap().to_string());
    assert_eq!(single[0][4], summary["conservationDrift"].as_f64().unwrap().to_string());

    let o = lrinv(dir.path(), &["--config", &so5, "sweep", "--parameter", "J_x"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = lrinv(dir.path(), &["--config", &so5, "sweep", "--parameter", "h2_y", "--values", "0.1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

fn read_csv_lenient(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines().map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>());
    (lines.next().unwrap(), lines.collect())
}
