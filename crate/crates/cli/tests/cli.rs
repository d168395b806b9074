use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use helmtrial::oracle::FieldGrid;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_helmtrial"));
    c.env_remove("HELMTRIAL_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field(path: &Path) -> FieldGrid {
    FieldGrid::read_csv(fs::read(path).unwrap().as_slice()).unwrap()
}

const TINY: &str = r#"
frequencies = [300.0]
speed_of_sound = 340.0

[domain]
kind = "rect"
half_width = 1.0
half_height = 1.0
values = [-1.0, 0.0, 1.0, 0.0]

[sampling]
interior = 200
boundary = 40
seed = 3

[network]
hidden_layers = 2
width = 10
seed = 1

[train]
max_iters = 30
grad_tolerance = 1e-3
history = 20
c1 = 1e-4
c2 = 0.9
max_line_search = 25

[output]
grid = 41
"#;

fn tiny_config(dir: &Path) -> PathBuf {
    let p = dir.join("tiny.toml");
    fs::write(&p, TINY).unwrap();
    p
}

#[test]
fn zero_frequency_is_rejected() {
    let out = run(&["solve", "--freq", "0"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("frequency"));
}

#[test]
fn trial_solve_writes_artifacts_with_exact_boundary_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("runs");
    ok(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let dir = out.join("trial-rect-300Hz");
    for f in ["report.csv", "params.ckpt", "field.csv", "config.toml"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    assert!(!dir.join("FAILED").exists());
    let g = field(&dir.join("field.csv"));
    let n = g.nx;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64 * 2.0 - 1.0;
        if t.abs() > 0.95 {
            continue;
        }
        assert!((g.values[i] - 0.0).abs() < 1e-6, "bottom");
        assert!((g.values[(n - 1) * n + i] - 0.0).abs() < 1e-6, "top");
        assert!((g.values[i * n] - 1.0).abs() < 1e-6, "left");
        assert!((g.values[i * n + n - 1] + 1.0).abs() < 1e-6, "right");
    }

    // same configuration, same bytes
    let again = tmp.path().join("again");
    ok(&["solve", "--config", cfg.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(
        fs::read(dir.join("field.csv")).unwrap(),
        fs::read(again.join("trial-rect-300Hz/field.csv")).unwrap()
    );
}

#[test]
fn soft_solve_reports_boundary_loss_and_uses_env_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = bin()
        .env("HELMTRIAL_OUT", tmp.path().join("env"))
        .args(["solve", "--config", cfg.to_str().unwrap(), "--method", "soft-fixed", "--lambda", "1", "--freq", "750"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(tmp.path().join("env/soft-fixed-rect-750Hz/report.csv")).unwrap();
    let mut lines = report.lines().skip(1);
    assert_eq!(lines.next().unwrap(), "iteration,L_d,L_b,L_total,lambda,grad_norm");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(row[2].parse::<f64>().unwrap() > 0.0);
    assert_eq!(row[4], "1");
}

#[test]
fn diagnose_writes_histograms() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("diag");
    ok(&[
        "diagnose",
        "--config",
        cfg.to_str().unwrap(),
        "--method",
        "soft-dynamic",
        "--alpha",
        "0.1",
        "--lambda-grad-scope",
        "last-hidden",
        "--out",
        out.to_str().unwrap(),
        "--bins",
        "20",
    ]);
    let dir = out.join("soft-dynamic-rect-300Hz");
    let h = fs::read_to_string(dir.join("histogram_grad_boundary.csv")).unwrap();
    assert_eq!(h.lines().count(), 21);
    let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("diagnostics.json")).unwrap()).unwrap();
    let lambda_hat = diag["lambda_hat"].as_array().unwrap();
    assert!(!lambda_hat.is_empty());
    assert!(lambda_hat.iter().all(|v| v.as_f64().unwrap() >= 1.0));
    assert!(diag["std_ratio_last_hidden"].as_f64().unwrap() > 0.0);
}

#[test]
fn flags_for_the_wrong_method_are_rejected() {
    let out = run(&["solve", "--alpha", "0.1"]);
    assert!(!out.status.success());
}

#[test]
fn adf_rasters() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("adf");
    ok(&["adf", "--grid", "101", "--out", dir.to_str().unwrap()]);
    let phi = field(&dir.join("phi.csv"));
    assert!((phi.values[50 * 101 + 50] - 0.279508).abs() < 1e-6);
    assert!(phi.values[..101].iter().all(|v| v.abs() < 1e-10));
    let w: f64 = (0..4).map(|i| field(&dir.join(format!("w_{i}.csv"))).values[50 * 101 + 50]).sum();
    assert!((w - 1.0).abs() < 1e-12);

    let circle = tmp.path().join("circle.toml");
    fs::write(
        &circle,
        "frequencies = [600.0]\nspeed_of_sound = 340.0\n[domain]\nkind = \"circle\"\nradius = 1.0\nvalue = 1.0\n",
    )
    .unwrap();
    let cdir = tmp.path().join("cadf");
    ok(&["adf", "--config", circle.to_str().unwrap(), "--grid", "101", "--out", cdir.to_str().unwrap()]);
    let w = field(&cdir.join("w_0.csv"));
    assert!((w.values[50 * 101 + 50] - 0.5).abs() < 1e-12);
}

#[test]
fn oracle_cross_checks_and_resonance() {
    let tmp = tempfile::tempdir().unwrap();
    let circle = tmp.path().join("circle.toml");
    fs::write(
        &circle,
        "frequencies = [600.0]\nspeed_of_sound = 340.0\n[domain]\nkind = \"circle\"\nradius = 1.0\nvalue = 1.0\n[oracle]\nmethod = \"auto\"\nrefine = 8.0\ncrosscheck = true\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    ok(&["oracle", "--config", circle.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let dir = out.join("oracle-circle-600Hz");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("oracle.json")).unwrap()).unwrap();
    assert!(summary["crosscheck"]["relative_l2"].as_f64().unwrap() < 0.01);
    assert!(dir.join("mesh.txt").exists() && dir.join("fem_field.csv").exists());

    let rect = tmp.path().join("rect");
    ok(&["oracle", "--freq", "300", "--out", rect.to_str().unwrap()]);
    let g = field(&rect.join("oracle-rect-300Hz/field.csv"));
    assert_eq!(g.values[50 * 101], 1.0);

    // first zero of J0 puts k R on a Dirichlet eigenvalue of the disk
    let f = 2.404825557695773 * 340.0 / std::f64::consts::TAU;
    let out = bin()
        .args(["oracle", "--config", circle.to_str().unwrap(), "--freq", &format!("{f:.17}")])
        .args(["--out", tmp.path().join("res").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("resonant"));
    assert!(fs::read_dir(tmp.path().join("res")).unwrap().any(|e| e.unwrap().path().join("FAILED").exists()));
}

#[test]
fn compare_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let shape = helmtrial::domains::Shape::unit_circle();
    let b = FieldGrid::sample(&shape, 21, 21, |p| Ok(1.0 + p.x)).unwrap();
    let a = FieldGrid {
        values: b.values.iter().map(|v| 1.1 * v).collect(),
        ..b.clone()
    };
    let other = FieldGrid::sample(&shape, 11, 11, |_| Ok(1.0)).unwrap();
    for (name, g) in [("a.csv", &a), ("b.csv", &b), ("c.csv", &other)] {
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        fs::write(tmp.path().join(name), buf).unwrap();
    }
    let p = |n: &str| tmp.path().join(n).to_str().unwrap().to_string();
    let out = p("cmp");
    ok(&["compare", &p("a.csv"), &p("b.csv"), "--out", &out]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("cmp/metrics.json")).unwrap()).unwrap();
    assert!((m["relative_l2"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert!(tmp.path().join("cmp/error.csv").exists());
    ok(&["compare", &p("b.csv"), &p("b.csv"), "--out", &out]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("cmp/metrics.json")).unwrap()).unwrap();
    assert_eq!(m["relative_l2"].as_f64().unwrap(), 0.0);
    assert!(!run(&["compare", &p("a.csv"), &p("c.csv"), "--out", &out]).status.success());
}
