use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn edpconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edpconv"))
        .args(args)
        .env_remove("EDPCONV_THREADS")
        .output()
        .unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL_CLASSIFY: &str = r#"
kind = "classify"
v_grid = { min = -2.0, max = 2.0, points = 17 }
xi_grid = { min = -2.0, max = 2.0, points = 17 }

[cell]
model = "wiggly-dissipation"
q = 0.0
coefficient = { shape = "cosine", base = 1.0, amplitude = 0.8 }
"#;

#[test]
fn list_prints_the_catalog() {
    let out = edpconv(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().any(|l| l.starts_with("membrane") && l.contains("transmission")));
    assert!(text.lines().any(|l| l.starts_with("nonconvexity")));
}

#[test]
fn every_shipped_config_validates() {
    let mut n = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let out = edpconv(&["validate", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        n += 1;
    }
    assert!(n >= 10);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(dir.path(), "empty.toml", "");
    let out = edpconv(&["run", &empty, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
    assert!(!dir.path().join("o").exists());

    let unknown = write_config(
        dir.path(),
        "unknown.toml",
        "kind = \"distances\"\nq0 = 0.0\nq1 = 1.0\ntypo = 3\ncoefficient = { shape = \"constant\", value = 1.0 }\n",
    );
    assert_eq!(edpconv(&["validate", &unknown]).status.code(), Some(2));

    let range = write_config(
        dir.path(),
        "range.toml",
        "kind = \"distances\"\nq0 = 0.0\nq1 = 1.0\ncoefficient = { shape = \"constant\", value = -1.0 }\n",
    );
    assert_eq!(edpconv(&["run", &range, "--out", dir.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "coarse.toml",
        &SMALL_CLASSIFY
            .replace("min = -2.0, max = 2.0, points = 17 }\nxi", "min = 0.5, max = 1.0, points = 3 }\nxi")
            .replace("xi_grid = { min = -2.0, max = 2.0, points = 17 }", "xi_grid = { min = -2.0, max = -1.0, points = 3 }"),
    );
    let out_dir = dir.path().join("out");
    let out = edpconv(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("classify_bipotential"));
    assert!(!out_dir.exists());
}

#[test]
fn classify_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "classify.toml", SMALL_CLASSIFY);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out = edpconv(&["run", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = Command::new(env!("CARGO_BIN_EXE_edpconv"))
        .args(["run", &cfg, "--out", b.to_str().unwrap(), "--threads", "1"])
        .env("EDPCONV_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());

    let report = fs::read_to_string(a.join("report.txt")).unwrap();
    assert!(report.starts_with("ContactEquivalent; DualSum: NO"), "{report}");
    for name in ["m0.csv", "contact_potential.csv", "report.txt", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "classify");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["parameter_hash"].as_str().unwrap().len(), 64);
    assert!(!manifest["anchor"].as_str().unwrap().is_empty());
    assert_eq!(manifest["files"].as_array().unwrap().len(), 3);
}

#[test]
fn legendre_check_reports_the_cosine_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let out = edpconv(&[
        "run",
        configs().join("legendre-check.toml").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = fs::read_to_string(out_dir.join("report.txt")).unwrap();
    let dev: f64 = report.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((dev - 2.0).abs() < 1e-3);
    let csv = fs::read_to_string(out_dir.join("conjugate.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("xi,conjugate"));
    assert_eq!(csv.lines().count(), 42);
}
